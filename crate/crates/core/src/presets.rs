//! Reference models used by the validation suite and the default configs.

use crate::dependence::{ClippedAffine, DependenceSpec, WeightLaw};
use crate::levy_returns::{InterArrivalLaw, LevyModel};
use crate::mrv_claims::{Atom, ClaimModel};
use crate::rare_sets::{preset_a2, RareSet, RuinKind, RuinSetPreset};
use crate::risk_engine::{ModelBundle, PremiumSpec, Regime};
use crate::tail_laws::TailLaw;

pub const PARETO2: TailLaw = TailLaw::Pareto { alpha: 2.0, scale: 1.0 };

/// `R(t) = 0.1 t` with unit-rate Poisson arrivals: `W ~ Beta(10, 1)`.
pub fn drift_weights() -> WeightLaw {
    WeightLaw::Discount { levy: LevyModel::Drift { r: 0.1 }, arrival: InterArrivalLaw::Exponential { rate: 1.0 } }
}

/// Spectral MRV(2) heavy claims: mass 1/2 on the diagonal, 1/4 on each axis.
pub fn heavy_claims() -> ClaimModel {
    ClaimModel::spectral(2.0, PARETO2, vec![(0.5, vec![1.0, 1.0]), (0.25, vec![1.0, 0.0]), (0.25, vec![0.0, 1.0])])
        .expect("valid preset")
}

pub fn light_claims() -> ClaimModel {
    ClaimModel::IndependentComponents { components: vec![TailLaw::Exponential { rate: 1.0 }; 2] }
}

/// Weak-dependence bundle: heavy claims drawn with probability `q(W) = W`.
pub fn theorem31_bundle() -> ModelBundle {
    let dependence = DependenceSpec::HMixture { q: ClippedAffine { a: 0.0, b: 1.0 }, light: light_claims() };
    ModelBundle::new(Some(heavy_claims()), drift_weights(), dependence, Regime::Theorem31).expect("valid preset")
}

/// Comonotone pair `X = U^{−1/2}(1,1)`, `W = 0.2·U^{−1/2}`.
pub fn comonotone_dependence() -> DependenceSpec {
    DependenceSpec::Comonotone { alpha: 2.0, beta: 2.0, s0: 0.2, atoms: vec![Atom { w: 1.0, theta: vec![1.0, 1.0] }] }
}

pub fn comonotone_bundle() -> ModelBundle {
    ModelBundle::new(None, drift_weights(), comonotone_dependence(), Regime::Theorem41 { p: 1.5, j_plus: 1.0 }).expect("valid preset")
}

/// `A₂` with `l = (1/2, 1/2)`, `b = 1`.
pub fn reference_set() -> RareSet {
    preset_a2(&[0.5, 0.5], 1.0).expect("valid preset")
}

pub fn reference_premium() -> PremiumSpec {
    PremiumSpec { rates: vec![0.5, 0.5] }
}

pub fn reference_ruin_set(kind: RuinKind) -> RuinSetPreset {
    RuinSetPreset::new(kind, vec![0.5, 0.5]).expect("valid preset")
}

/// Spectral MRV(2) with equal mass on the two axes.
pub fn axis_claims() -> ClaimModel {
    ClaimModel::spectral(2.0, PARETO2, vec![(0.5, vec![1.0, 0.0]), (0.5, vec![0.0, 1.0])]).expect("valid preset")
}

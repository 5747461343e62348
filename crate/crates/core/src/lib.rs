pub mod asymptotics;
pub mod dependence;
pub mod error;
pub mod levy_returns;
pub mod mc;
pub mod mrv_claims;
pub mod presets;
pub mod rare_sets;
pub mod risk_engine;
pub mod rng;
pub mod tail_laws;

pub use error::{Error, Result};

pub use asymptotics::{
    closed_form_for, corollary51_eval, corollary52_eval, per_epoch_series, per_epoch_series_grid, ruin_asymptotic_eval,
    validation_report, ClosedFormInputs, SeriesEstimate, SeriesEstimator, SeriesOptions, ValidationReport,
};
pub use dependence::{ClippedAffine, DependenceSpec, WeightLaw};
pub use levy_returns::{InterArrivalLaw, LevyModel};
pub use mc::Proportion;
pub use mrv_claims::{Atom, ClaimModel, SpectralMrv};
pub use rare_sets::{RareSet, RareSetSpec, RuinKind, RuinSetPreset};
pub use risk_engine::{
    simulate, simulate_surplus_ruin, tail_curve, ModelBundle, PremiumSpec, Regime, TailCurveEstimate, TruncationPolicy,
};
pub use tail_laws::TailLaw;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

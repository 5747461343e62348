//! Multivariate claim vectors and the limit measure `μ`.
//!
//! The spectral model draws a radial amplitude `R` and an atom `θ_k` of a
//! discrete spectral measure, returning `R·θ_k`. With a Pareto radial law
//! `P(R·c > x) = c^α Ḡ(x)` for large `x`, so `μ(A) = Σ_k w_k X_A(θ_k)^α`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::mc::{map_chunks, Proportion};
use crate::rare_sets::RareSet;
use crate::rng::StreamFamily;
use crate::tail_laws::{hill_estimate, IndexEstimate, TailLaw};

const WEIGHT_TOL: f64 = 1e-12;

/// Exceedance count below which an empirical `μ` estimate is flagged.
pub const MIN_EXCEEDANCES: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub w: f64,
    pub theta: Vec<f64>,
}

/// Discrete spectral measure with a regularly varying radial law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralMrv {
    pub alpha: f64,
    pub radial: TailLaw,
    pub atoms: Vec<Atom>,
}

impl SpectralMrv {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(input(format!("alpha must be positive, got {}", self.alpha)));
        }
        self.radial.validate()?;
        match self.radial.regular_variation_index() {
            Some(a) if (a - self.alpha).abs() <= 1e-12 => {}
            Some(a) => return Err(input(format!("radial law has index {a} but alpha is {}", self.alpha))),
            None => return Err(input(format!("radial law {:?} is not regularly varying", self.radial))),
        }
        validate_atoms(&self.atoms)
    }

    pub fn dim(&self) -> usize {
        self.atoms.first().map_or(0, |a| a.theta.len())
    }

    #[inline]
    fn pick_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> &[f64] {
        if self.atoms.len() == 1 {
            return &self.atoms[0].theta;
        }
        let mut u: f64 = rng.random();
        for atom in &self.atoms {
            if u < atom.w {
                return &atom.theta;
            }
            u -= atom.w;
        }
        &self.atoms[self.atoms.len() - 1].theta
    }
}

/// Checks a spectral atom list: weights sum to one, directions non-negative
/// with max-norm one, common dimension.
pub fn validate_atoms(atoms: &[Atom]) -> Result<()> {
    let first = atoms.first().ok_or_else(|| input("spectral measure needs at least one atom"))?;
    let d = first.theta.len();
    if d == 0 {
        return Err(input("atom direction is empty"));
    }
    let mut total = 0.0;
    for (k, atom) in atoms.iter().enumerate() {
        if !(atom.w >= 0.0 && atom.w.is_finite()) {
            return Err(input(format!("atom {k}: weight {} is negative", atom.w)));
        }
        total += atom.w;
        if atom.theta.len() != d {
            return Err(input(format!("atom {k}: dimension {} differs from {d}", atom.theta.len())));
        }
        if atom.theta.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(input(format!("atom {k}: direction {:?} has a negative coordinate", atom.theta)));
        }
        let norm = atom.theta.iter().copied().fold(0.0, f64::max);
        if (norm - 1.0).abs() > WEIGHT_TOL {
            return Err(input(format!("atom {k}: direction {:?} has max-norm {norm}, expected 1", atom.theta)));
        }
    }
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(input(format!("atom weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// Claim-vector generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClaimModel {
    Spectral(SpectralMrv),
    /// Independent coordinates with arbitrary catalog laws (MRV not required).
    IndependentComponents { components: Vec<TailLaw> },
    /// Coordinate-wise scaling of a base model.
    Scaled { base: Box<ClaimModel>, scale: Vec<f64> },
}

impl ClaimModel {
    pub fn spectral(alpha: f64, radial: TailLaw, atoms: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let spec = SpectralMrv { alpha, radial, atoms: atoms.into_iter().map(|(w, theta)| Atom { w, theta }).collect() };
        let model = ClaimModel::Spectral(spec);
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClaimModel::Spectral(spec) => spec.validate(),
            ClaimModel::IndependentComponents { components } => {
                if components.is_empty() {
                    return Err(input("independent components model has no components"));
                }
                for law in components {
                    law.validate()?;
                    if law.lower_support() < 0.0 {
                        return Err(input(format!("component {law:?} can be negative")));
                    }
                }
                Ok(())
            }
            ClaimModel::Scaled { base, scale } => {
                base.validate()?;
                if scale.len() != base.dim() {
                    return Err(input(format!("scale vector has dimension {} but the base has {}", scale.len(), base.dim())));
                }
                if let Some(bad) = scale.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                    return Err(input(format!("scale factors must be positive, got {bad}")));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ClaimModel::Spectral(spec) => spec.dim(),
            ClaimModel::IndependentComponents { components } => components.len(),
            ClaimModel::Scaled { base, .. } => base.dim(),
        }
    }

    /// Writes one claim vector into `out` (length `dim`).
    #[inline]
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            ClaimModel::Spectral(spec) => {
                let r = spec.radial.sample(rng);
                let theta = spec.pick_atom(rng);
                for (o, t) in out.iter_mut().zip(theta) {
                    *o = r * t;
                }
            }
            ClaimModel::IndependentComponents { components } => {
                for (o, law) in out.iter_mut().zip(components) {
                    *o = law.sample(rng);
                }
            }
            ClaimModel::Scaled { base, scale } => {
                base.sample_into(rng, out);
                for (o, s) in out.iter_mut().zip(scale) {
                    *o *= s;
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }

    /// Flattened MRV structure `(alpha, radial, atoms)` with any coordinate
    /// scaling folded into the atom vectors. `None` for non-MRV models.
    pub fn mrv_structure(&self) -> Option<(f64, &TailLaw, Vec<(f64, Vec<f64>)>)> {
        match self {
            ClaimModel::Spectral(spec) => {
                Some((spec.alpha, &spec.radial, spec.atoms.iter().map(|a| (a.w, a.theta.clone())).collect()))
            }
            ClaimModel::Scaled { base, scale } => base.mrv_structure().map(|(alpha, radial, atoms)| {
                let atoms = atoms
                    .into_iter()
                    .map(|(w, theta)| (w, theta.iter().zip(scale).map(|(t, s)| t * s).collect()))
                    .collect();
                (alpha, radial, atoms)
            }),
            ClaimModel::IndependentComponents { .. } => None,
        }
    }

    /// Regular-variation index of an MRV model.
    pub fn alpha(&self) -> Option<f64> {
        self.mrv_structure().map(|(a, _, _)| a)
    }

    /// Tail `Ḡ` of the radial law of an MRV model.
    pub fn radial(&self) -> Option<&TailLaw> {
        self.mrv_structure().map(|(_, r, _)| r)
    }

    /// `lim P(X_j > x)/Ḡ(x) = Σ_k w_k θ_{k,j}^α`.
    pub fn marginal_limit(&self, j: usize) -> Result<f64> {
        let (alpha, _, atoms) = self.mrv_structure().ok_or_else(|| input("marginal limit needs an MRV model"))?;
        if j >= self.dim() {
            return Err(input(format!("coordinate {j} out of range for dimension {}", self.dim())));
        }
        Ok(atoms.iter().map(|(w, t)| w * t[j].powf(alpha)).sum())
    }
}

/// How to evaluate `μ(A)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMethod {
    Analytic,
    Empirical { x_ref: f64, n: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuEstimate {
    pub value: f64,
    /// Set for the empirical method.
    pub exceedances: Option<Proportion>,
    pub warning: Option<String>,
}

/// `μ(A)` for an MRV claim model.
pub fn mu_limit(model: &ClaimModel, set: &RareSet, method: MuMethod) -> Result<MuEstimate> {
    model.validate()?;
    check_dims(model, set)?;
    let (alpha, radial, atoms) = model.mrv_structure().ok_or_else(|| input("mu is defined for spectral MRV models only"))?;
    match method {
        MuMethod::Analytic => {
            if !matches!(radial, TailLaw::Pareto { .. }) {
                return Err(input("analytic mu needs a Pareto radial law; use the empirical method"));
            }
            let value = atoms.iter().map(|(w, theta)| w * set.support(theta).powf(alpha)).sum();
            Ok(MuEstimate { value, exceedances: None, warning: None })
        }
        MuMethod::Empirical { x_ref, n, seed } => {
            let counts = count_projection_exceedances(model, set, &[x_ref], n, seed)?;
            let prop = Proportion::wilson(counts[0], n);
            let value = prop.p_hat / radial.tail(x_ref);
            Ok(MuEstimate { value, exceedances: Some(prop), warning: starvation_warning(counts[0]) })
        }
    }
}

fn starvation_warning(hits: u64) -> Option<String> {
    (hits < MIN_EXCEEDANCES).then(|| format!("only {hits} exceedances (< {MIN_EXCEEDANCES}); confidence interval is wide"))
}

fn check_dims(model: &ClaimModel, set: &RareSet) -> Result<()> {
    if model.dim() != set.dim() {
        return Err(input(format!("claim dimension {} does not match set dimension {}", model.dim(), set.dim())));
    }
    Ok(())
}

/// `#{X_A > x}` for each threshold, over `n` claims from path streams of `seed`.
pub fn count_projection_exceedances(model: &ClaimModel, set: &RareSet, xs: &[f64], n: u64, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(input("sample count must be positive"));
    }
    check_dims(model, set)?;
    let family = StreamFamily::new(seed).fork(0x4d55);
    let parts = map_chunks(n, |range| {
        let mut z = vec![0.0; model.dim()];
        let mut counts = vec![0u64; xs.len()];
        for i in range {
            let mut rng = family.path(i);
            model.sample_into(&mut rng, &mut z);
            let v = set.support(&z);
            for (c, x) in counts.iter_mut().zip(xs) {
                *c += u64::from(v > *x);
            }
        }
        counts
    });
    Ok(crate::mc::merge_counts(parts, xs.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityCheck {
    pub lambda: f64,
    pub ratio: f64,
    pub expected: f64,
    pub base: Proportion,
    pub scaled: Proportion,
    pub warning: Option<String>,
}

/// Empirical `μ̂(λA)/μ̂(A)` from one sample at `x_ref`; the target is `λ^{-α}`.
pub fn homogeneity_check(model: &ClaimModel, set: &RareSet, lambda: f64, x_ref: f64, n: u64, seed: u64) -> Result<HomogeneityCheck> {
    model.validate()?;
    let alpha = model.alpha().ok_or_else(|| input("homogeneity check needs an MRV model"))?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(input(format!("lambda must be positive, got {lambda}")));
    }
    // z ∈ x·λA ⟺ X_A(z) > λx.
    let (xs, flip) = if lambda >= 1.0 { (vec![x_ref, lambda * x_ref], false) } else { (vec![lambda * x_ref, x_ref], true) };
    let counts = count_projection_exceedances(model, set, &xs, n, seed)?;
    let (base_hits, scaled_hits) = if flip { (counts[1], counts[0]) } else { (counts[0], counts[1]) };
    let ratio = if base_hits == 0 { f64::NAN } else { scaled_hits as f64 / base_hits as f64 };
    Ok(HomogeneityCheck {
        lambda,
        ratio,
        expected: lambda.powf(-alpha),
        base: Proportion::wilson(base_hits, n),
        scaled: Proportion::wilson(scaled_hits, n),
        warning: starvation_warning(base_hits.min(scaled_hits)),
    })
}

/// Hill estimate of the projection `X_A` over `n` sampled claims.
///
/// Zero projections (claims orthogonal to every direction) sit below any
/// reasonable threshold and are dropped before estimation.
pub fn projection_law_check(model: &ClaimModel, set: &RareSet, n: u64, k: usize, seed: u64) -> Result<IndexEstimate> {
    model.validate()?;
    check_dims(model, set)?;
    let family = StreamFamily::new(seed).fork(0x504c);
    let parts = map_chunks(n, |range| {
        let mut z = vec![0.0; model.dim()];
        range
            .map(|i| {
                let mut rng = family.path(i);
                model.sample_into(&mut rng, &mut z);
                set.support(&z)
            })
            .collect::<Vec<f64>>()
    });
    let values: Vec<f64> = parts.into_iter().flatten().filter(|v| *v > 0.0).collect();
    if values.len() <= k {
        return Err(Error::Input(format!("only {} positive projections for k = {k}", values.len())));
    }
    hill_estimate(&values, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rare_sets::{preset_a1, preset_a2, RareSet};
    use proptest::prelude::*;

    const PARETO2: TailLaw = TailLaw::Pareto { alpha: 2.0, scale: 1.0 };

    fn axis_model() -> ClaimModel {
        ClaimModel::spectral(2.0, PARETO2, vec![(0.5, vec![1.0, 0.0]), (0.5, vec![0.0, 1.0])]).unwrap()
    }

    #[test]
    fn spectral_sample_is_radius_times_atom() {
        let model = ClaimModel::spectral(2.0, PARETO2, vec![(1.0, vec![1.0, 1.0])]).unwrap();
        let mut rng = StreamFamily::new(1).path(0);
        for _ in 0..100 {
            let z = model.sample(&mut rng);
            assert_eq!(z[0], z[1]);
            assert!(z[0] >= 1.0);
        }
    }

    #[test]
    fn scaled_doubles_first_coordinate() {
        let base = axis_model();
        let scaled = ClaimModel::Scaled { base: Box::new(base.clone()), scale: vec![2.0, 1.0] };
        scaled.validate().unwrap();
        let (mut r1, mut r2) = (StreamFamily::new(4).path(3), StreamFamily::new(4).path(3));
        for _ in 0..100 {
            let (a, b) = (base.sample(&mut r1), scaled.sample(&mut r2));
            assert_eq!(b[0], 2.0 * a[0]);
            assert_eq!(b[1], a[1]);
        }
    }

    #[test]
    fn validation_rejects_bad_models() {
        assert!(ClaimModel::spectral(2.0, PARETO2, vec![(0.5, vec![1.0, 0.0])]).is_err());
        assert!(ClaimModel::spectral(2.0, PARETO2, vec![(1.0, vec![0.5, 0.5])]).is_err());
        assert!(ClaimModel::spectral(2.0, PARETO2, vec![(1.0, vec![1.0, -0.1])]).is_err());
        assert!(ClaimModel::spectral(3.0, PARETO2, vec![(1.0, vec![1.0])]).is_err());
        assert!(ClaimModel::spectral(2.0, TailLaw::Lognormal { mu: 0.0, sigma: 1.0 }, vec![(1.0, vec![1.0])]).is_err());
        let bad = ClaimModel::Scaled { base: Box::new(axis_model()), scale: vec![1.0] };
        assert!(bad.validate().is_err());
        assert!(ClaimModel::IndependentComponents { components: vec![] }.validate().is_err());
    }

    #[test]
    fn analytic_mu_examples() {
        let a2 = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        let diag = ClaimModel::spectral(2.0, PARETO2, vec![(1.0, vec![1.0, 1.0])]).unwrap();
        assert!((mu_limit(&diag, &a2, MuMethod::Analytic).unwrap().value - 1.0).abs() < 1e-15);
        assert!((mu_limit(&axis_model(), &a2, MuMethod::Analytic).unwrap().value - 0.25).abs() < 1e-15);
        let first = RareSet::new(vec![vec![1.0, 0.0]], "e1").unwrap();
        assert!((mu_limit(&axis_model(), &first, MuMethod::Analytic).unwrap().value - 0.5).abs() < 1e-15);
        let indep = ClaimModel::IndependentComponents { components: vec![PARETO2, PARETO2] };
        assert!(mu_limit(&indep, &a2, MuMethod::Analytic).is_err());
    }

    #[test]
    fn empirical_mu_matches_analytic() {
        // Each atom projects to 0.5, so X_A > 1e3 iff R > 2e3: P = 2.5e-7, μ = 0.25.
        // 1e7 samples give ~2.5 hits at 1e3; use x_ref = 20 for >= 1e3 expected hits.
        let a2 = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        let n = 10_000_000;
        let est = mu_limit(&axis_model(), &a2, MuMethod::Empirical { x_ref: 20.0, n, seed: 7 }).unwrap();
        let prop = est.exceedances.unwrap();
        assert!(prop.hits >= 1000);
        let se = prop.std_error() / PARETO2.tail(20.0);
        assert!((est.value - 0.25).abs() <= 3.0 * se, "{} ± {se}", est.value);
        assert!(est.warning.is_none());
        let starved = mu_limit(&axis_model(), &a2, MuMethod::Empirical { x_ref: 1e3, n: 10_000, seed: 7 }).unwrap();
        assert!(starved.warning.is_some());
    }

    #[test]
    fn homogeneity_examples() {
        let a2 = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        let n = 10_000_000;
        let h = homogeneity_check(&axis_model(), &a2, 2.0, 10.0, n, 3).unwrap();
        assert!((0.225..=0.275).contains(&h.ratio), "{}", h.ratio);
        assert_eq!(h.expected, 0.25);
        let one = homogeneity_check(&axis_model(), &a2, 1.0, 10.0, 100_000, 3).unwrap();
        assert_eq!(one.ratio, 1.0);

        let alpha1 = ClaimModel::spectral(
            1.0,
            TailLaw::Pareto { alpha: 1.0, scale: 1.0 },
            vec![(0.5, vec![1.0, 0.0]), (0.5, vec![0.0, 1.0])],
        )
        .unwrap();
        let h = homogeneity_check(&alpha1, &a2, 4.0, 10.0, 1_000_000, 5).unwrap();
        assert_eq!(h.expected, 0.25);
        assert!((0.225..=0.275).contains(&h.ratio), "{}", h.ratio);
    }

    #[test]
    fn projection_law_examples() {
        let a2 = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        let h = projection_law_check(&axis_model(), &a2, 1_000_000, 10_000, 11).unwrap();
        assert!((1.9..=2.1).contains(&h.value), "{}", h.value);

        let mixed = ClaimModel::IndependentComponents {
            components: vec![TailLaw::Pareto { alpha: 1.0, scale: 1.0 }, PARETO2],
        };
        let h = projection_law_check(&mixed, &a2, 1_000_000, 10_000, 12).unwrap();
        assert!((0.9..=1.1).contains(&h.value), "{}", h.value);

        let det = ClaimModel::IndependentComponents {
            components: vec![TailLaw::Deterministic { value: 2.0 }, TailLaw::Deterministic { value: 2.0 }],
        };
        let h = projection_law_check(&det, &a2, 10_000, 100, 13).unwrap();
        assert_eq!(h.status, crate::tail_laws::IndexStatus::Infinite);
    }

    #[test]
    fn marginal_tail_identity() {
        let model = ClaimModel::spectral(2.0, PARETO2, vec![(0.3, vec![1.0, 0.5]), (0.7, vec![0.2, 1.0])]).unwrap();
        let a1 = preset_a1(&[1.0, 1.0]).unwrap();
        let e1 = RareSet::new(vec![vec![1.0, 0.0]], "e1").unwrap();
        let expected = model.marginal_limit(0).unwrap();
        assert!((expected - (0.3 + 0.7 * 0.04)).abs() < 1e-15);
        let n = 4_000_000;
        let x = 30.0;
        let hits = count_projection_exceedances(&model, &e1, &[x], n, 21).unwrap()[0];
        let ratio = hits as f64 / n as f64 / PARETO2.tail(x);
        assert!((ratio - expected).abs() < 0.03, "{ratio} vs {expected}");
        assert!(mu_limit(&model, &a1, MuMethod::Analytic).unwrap().value > 0.0);
    }

    #[test]
    fn config_shape() {
        let json = r#"{"variant":"spectral","alpha":2.0,"radial":{"kind":"pareto","alpha":2.0,"scale":1.0},
                       "atoms":[{"w":0.5,"theta":[1,0]},{"w":0.5,"theta":[0,1]}]}"#;
        let model: ClaimModel = serde_json::from_str(json).unwrap();
        assert_eq!(model, axis_model());
        let back: ClaimModel = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
        assert_eq!(back, model);
        assert!(serde_json::from_str::<ClaimModel>(r#"{"variant":"spectral","alpha":2.0}"#).is_err());
    }

    fn arb_spectral() -> impl Strategy<Value = ClaimModel> {
        (0.5f64..4.0, prop::collection::vec((0.01f64..1.0, 0.0f64..1.0, 0usize..2), 1..5)).prop_map(|(alpha, raw)| {
            let total: f64 = raw.iter().map(|r| r.0).sum();
            let atoms = raw
                .into_iter()
                .map(|(w, t, axis)| {
                    let mut theta = vec![t, t];
                    theta[axis] = 1.0;
                    (w / total, theta)
                })
                .collect::<Vec<_>>();
            let sum: f64 = atoms.iter().map(|a| a.0).sum();
            let mut atoms = atoms;
            atoms[0].0 += 1.0 - sum;
            ClaimModel::spectral(alpha, TailLaw::Pareto { alpha, scale: 1.0 }, atoms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn mu_positive_and_scales(model in arb_spectral(), c in 0.1f64..10.0, b0 in 0.1f64..5.0, b1 in 0.1f64..5.0) {
            let set = preset_a1(&[b0, b1]).unwrap();
            let mu = mu_limit(&model, &set, MuMethod::Analytic).unwrap().value;
            prop_assert!(mu > 0.0 && mu.is_finite());
            let alpha = model.alpha().unwrap();
            let scaled = ClaimModel::Scaled { base: Box::new(model), scale: vec![c, c] };
            let mu_c = mu_limit(&scaled, &set, MuMethod::Analytic).unwrap().value;
            prop_assert!((mu_c - c.powf(alpha) * mu).abs() <= 1e-9 * mu_c.max(1.0));
        }

        #[test]
        fn mu_homogeneous_in_set(model in arb_spectral(), lambda in 0.1f64..10.0) {
            let set = preset_a2(&[0.3, 0.7], 1.0).unwrap();
            let mu = mu_limit(&model, &set, MuMethod::Analytic).unwrap().value;
            let mu_l = mu_limit(&model, &set.scaled(lambda).unwrap(), MuMethod::Analytic).unwrap().value;
            prop_assert!((mu_l - lambda.powf(-model.alpha().unwrap()) * mu).abs() <= 1e-9 * mu.max(1.0));
        }
    }
}

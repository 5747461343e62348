//! Right-hand sides of the big-jump asymptotics: the per-epoch series
//! `Σ_i P(X^{(i)}Π_i ∈ xA)`, its closed forms for MRV claims, and
//! empirical/asymptotic comparison tables.

use serde::{Deserialize, Serialize};

use crate::dependence::{mean_q, tilted_moment, DependenceSpec, WeightLaw};
use crate::error::{condition, input, Error, Result};
use crate::mc::{check_grid, map_chunks, Proportion};
use crate::mrv_claims::{mu_limit, ClaimModel, MuMethod};
use crate::rare_sets::RareSet;
use crate::risk_engine::{tail_curve, ModelBundle, TailCurveEstimate, TruncationDiagnostics, TruncationPolicy};
use crate::rng::StreamFamily;
use crate::tail_laws::TailLaw;

const SERIES_LABEL: u64 = 0x7365_7269;

/// Consecutive small terms required before the series stops.
pub const SMALL_TERM_RUN: u32 = 3;
/// Epoch after which a series whose second half is not smaller than its first
/// half is declared divergent.
pub const DIVERGENCE_EPOCHS: u64 = 50;
/// A series is flagged coarse when its residual bound exceeds this share of its value.
pub const COARSE_FRACTION: f64 = 1e-2;
/// Report rows with fewer empirical exceedances are flagged as starved.
pub const MIN_REPORT_HITS: u64 = 25;

/// How a single epoch term is estimated from a sampled path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeriesEstimator {
    /// Exceedance indicator of the sampled term.
    Indicator,
    /// Given the sampled discount factors, the claim's projection tail is
    /// evaluated exactly where the claim law allows (Pareto-type radial
    /// parts); other parts fall back to indicators. Unbiased, lower variance.
    #[default]
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesOptions {
    pub n_per_epoch: u64,
    pub tol: f64,
    pub max_epochs: u64,
    pub estimator: SeriesEstimator,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { n_per_epoch: 100_000, tol: 1e-3, max_epochs: 2_000, estimator: SeriesEstimator::Conditional }
    }
}

impl SeriesOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_epoch < 2 {
            return Err(input("n_per_epoch must be at least 2"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(input(format!("series tolerance must lie in (0, 1), got {}", self.tol)));
        }
        if self.max_epochs < SMALL_TERM_RUN as u64 {
            return Err(input(format!("max_epochs must be at least {SMALL_TERM_RUN}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEstimate {
    pub x: f64,
    /// `Σ terms`.
    pub value: f64,
    pub std_error: f64,
    pub terms: Vec<f64>,
    pub term_std_errors: Vec<f64>,
    pub truncated_at: u64,
    /// Geometric bound on the discarded terms; infinite without a ratio below 1.
    pub tail_bound: f64,
    pub ratio: Option<f64>,
    /// Residual bound above [`COARSE_FRACTION`] of the value, or epoch cap hit.
    pub coarse: bool,
}

/// Exact projection tail `P(X_A > t) = Σ w·Ḡ(t/s)` when the claim law has one.
fn projection_parts(model: &ClaimModel, set: &RareSet) -> Option<Vec<(f64, f64, TailLaw)>> {
    match model {
        ClaimModel::IndependentComponents { components } if components.len() == 1 => {
            Some(vec![(1.0, set.support(&[1.0]), components[0].clone())])
        }
        _ => {
            let (_, radial, atoms) = model.mrv_structure()?;
            Some(atoms.iter().map(|(w, theta)| (*w, set.support(theta), radial.clone())).collect())
        }
    }
}

#[inline]
fn parts_tail(parts: &[(f64, f64, TailLaw)], t: f64) -> f64 {
    parts.iter().filter(|(_, s, _)| *s > 0.0).map(|(w, s, law)| w * law.tail(t / s)).sum()
}

#[derive(Clone, Copy)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

/// Adds one path's contribution `g(x)` for every `x` of the grid.
struct EpochSampler<'a> {
    bundle: &'a ModelBundle,
    set: &'a RareSet,
    x_grid: &'a [f64],
    estimator: SeriesEstimator,
    heavy: Option<Vec<(f64, f64, TailLaw)>>,
    light: Option<Vec<(f64, f64, TailLaw)>>,
    comonotone: Option<(f64, f64, Vec<(f64, f64)>)>,
}

impl<'a> EpochSampler<'a> {
    fn new(bundle: &'a ModelBundle, set: &'a RareSet, x_grid: &'a [f64], estimator: SeriesEstimator) -> Self {
        let conditional = estimator == SeriesEstimator::Conditional;
        let heavy = conditional.then(|| projection_parts(&bundle.claims, set)).flatten();
        let light = match (&bundle.dependence, conditional) {
            (DependenceSpec::HMixture { light, .. }, true) => projection_parts(light, set),
            _ => None,
        };
        let comonotone = match (&bundle.dependence, conditional) {
            (DependenceSpec::Comonotone { alpha, beta, s0, atoms }, true) => {
                Some((alpha * beta / (alpha + beta), *s0, atoms.iter().map(|a| (a.w, set.support(&a.theta))).collect()))
            }
            _ => None,
        };
        Self { bundle, set, x_grid, estimator, heavy, light, comonotone }
    }

    fn add_path(&self, epoch: u64, rng: &mut crate::rng::Stream, z: &mut [f64], acc: &mut [Moments]) {
        let b = self.bundle;
        let mut pi = 1.0;
        for _ in 1..epoch {
            pi *= b.dependence.sample_weight(&b.weights, rng);
        }
        let mut record = |g: &dyn Fn(f64) -> f64| {
            for (m, &x) in acc.iter_mut().zip(self.x_grid) {
                let v = g(x);
                m.sum += v;
                m.sum_sq += v * v;
            }
        };
        if let Some((kappa, s0, atoms)) = &self.comonotone {
            // X_A·W = s·s0·U^{−1/κ} given the atom.
            record(&|x| atoms.iter().map(|(w, s)| w * (s * s0 * pi / x).powf(*kappa).min(1.0)).sum());
            return;
        }
        if self.estimator == SeriesEstimator::Indicator || matches!(b.dependence, DependenceSpec::Comonotone { .. }) {
            let pair = b.dependence.sample_pair(&b.claims, &b.weights, rng, None, z);
            let v = self.set.support(z) * pi * pair.weight;
            record(&|x| f64::from(u8::from(v > x)));
            return;
        }
        let (w, _) = b.weights.sample(rng, None);
        let pw = pi * w;
        let (p_heavy, light) = match &b.dependence {
            DependenceSpec::HMixture { q, light } => (q.eval(w), Some(light)),
            _ => (1.0, None),
        };
        // Heavy population: exact conditional tail, else an indicator draw.
        let heavy_v = match &self.heavy {
            Some(_) => None,
            None => {
                b.claims.sample_into(rng, z);
                Some(self.set.support(z) * pw)
            }
        };
        let light_v = match (light, &self.light) {
            (Some(model), None) => {
                model.sample_into(rng, z);
                Some(self.set.support(z) * pw)
            }
            _ => None,
        };
        let part = |parts: &Option<Vec<(f64, f64, TailLaw)>>, v: Option<f64>, x: f64| match (parts, v) {
            (Some(p), _) if pw > 0.0 => parts_tail(p, x / pw),
            (Some(_), _) => 0.0,
            (None, Some(v)) => f64::from(u8::from(v > x)),
            (None, None) => 0.0,
        };
        record(&|x| {
            let h = p_heavy * part(&self.heavy, heavy_v, x);
            if light.is_some() {
                h + (1.0 - p_heavy) * part(&self.light, light_v, x)
            } else {
                h
            }
        });
    }
}

/// Per-epoch series on a whole grid. Each epoch uses `n_per_epoch` fresh
/// paths (independent weights before the epoch, the coupled pair at it).
/// Stops once, at every `x` with a nonzero sum, the last [`SMALL_TERM_RUN`]
/// terms were below `tol·sum` and the geometric residual bound is below
/// `tol·sum`.
pub fn per_epoch_series_grid(bundle: &ModelBundle, set: &RareSet, x_grid: &[f64], opts: &SeriesOptions, seed: u64) -> Result<Vec<SeriesEstimate>> {
    opts.validate()?;
    check_grid(x_grid)?;
    if x_grid[0] <= 0.0 {
        return Err(input("x grid must be positive"));
    }
    if bundle.dim() != set.dim() {
        return Err(input(format!("claim dimension {} does not match set dimension {}", bundle.dim(), set.dim())));
    }
    let ratio = bundle.geometric_ratio();
    let geometric = match ratio {
        Some(r) if r < 1.0 => r / (1.0 - r),
        _ => f64::INFINITY,
    };
    let sampler = EpochSampler::new(bundle, set, x_grid, opts.estimator);
    let family = StreamFamily::new(seed).fork(SERIES_LABEL);
    let n = opts.n_per_epoch;
    let nf = n as f64;
    let k = x_grid.len();
    let mut terms: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut ses: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut sums = vec![0.0f64; k];
    let mut small_run = vec![0u32; k];
    let mut epoch = 0u64;
    let bound = |term: f64, se: f64| (term + 2.0 * se) * geometric * (1.0 + 1e-9);
    loop {
        epoch += 1;
        let epoch_family = family.fork(epoch);
        let parts = map_chunks(n, |range| {
            let mut z = vec![0.0; bundle.dim()];
            let mut acc = vec![Moments { sum: 0.0, sum_sq: 0.0 }; k];
            for j in range {
                sampler.add_path(epoch, &mut epoch_family.path(j), &mut z, &mut acc);
            }
            acc
        });
        for j in 0..k {
            let (s, s2) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p[j].sum, a.1 + p[j].sum_sq));
            let mean = s / nf;
            let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
            terms[j].push(mean);
            ses[j].push((var / nf).sqrt());
            sums[j] += mean;
            if mean < opts.tol * sums[j] {
                small_run[j] += 1;
            } else {
                small_run[j] = 0;
            }
        }
        let done = (0..k).all(|j| {
            if sums[j] == 0.0 {
                return epoch >= SMALL_TERM_RUN as u64;
            }
            let last = *terms[j].last().unwrap();
            small_run[j] >= SMALL_TERM_RUN && bound(last, *ses[j].last().unwrap()) <= opts.tol * sums[j]
        });
        if done || epoch >= opts.max_epochs {
            break;
        }
        if epoch == DIVERGENCE_EPOCHS {
            let half = (DIVERGENCE_EPOCHS / 2) as usize;
            for t in &terms {
                let first: f64 = t[..half].iter().sum();
                let second: f64 = t[half..].iter().sum();
                if first > 0.0 && second >= first {
                    let moment = ratio.map_or_else(|| "unavailable".to_string(), |r| format!("{r}"));
                    return Err(condition(format!(
                        "per-epoch series does not converge (terms {}–{} sum to {second:e} vs {first:e} for terms 1–{half}); \
                         the moment condition E[W^p] < 1 is violated (E[W^p] = {moment})",
                        half + 1,
                        DIVERGENCE_EPOCHS
                    )));
                }
            }
        }
    }
    Ok((0..k)
        .map(|j| {
            let value: f64 = terms[j].iter().sum();
            let std_error = ses[j].iter().map(|s| s * s).sum::<f64>().sqrt();
            let tail_bound = if value == 0.0 { 0.0 } else { bound(*terms[j].last().unwrap(), *ses[j].last().unwrap()) };
            SeriesEstimate {
                x: x_grid[j],
                value,
                std_error,
                terms: terms[j].clone(),
                term_std_errors: ses[j].clone(),
                truncated_at: epoch,
                tail_bound,
                ratio,
                coarse: tail_bound > COARSE_FRACTION * value || (epoch >= opts.max_epochs && value > 0.0 && !tail_bound.is_finite()),
            }
        })
        .collect())
}

/// Per-epoch series at a single `x`.
pub fn per_epoch_series(bundle: &ModelBundle, set: &RareSet, x: f64, opts: &SeriesOptions, seed: u64) -> Result<SeriesEstimate> {
    Ok(per_epoch_series_grid(bundle, set, &[x], opts, seed)?.remove(0))
}

/// Constants of the closed-form asymptotics
/// `μ(A)·Ḡ(x)·h_term/(1 − q)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormInputs {
    pub mu_a: f64,
    pub alpha: f64,
    /// Weight index of the comonotone form.
    pub beta: Option<f64>,
    pub aux_tail: TailLaw,
    pub h_term: f64,
    pub q: f64,
}

impl ClosedFormInputs {
    /// Refuses when `q ≥ 1` (the series of discount moments diverges).
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(self.q < 1.0) {
            return Err(condition(format!(
                "closed form needs a geometric discount moment below 1, got {} (E[e^(-pR(θ))] ≥ 1, i.e. φ(p) ≥ 0)",
                self.q
            )));
        }
        if !(x > 0.0) {
            return Err(input(format!("x must be positive, got {x}")));
        }
        Ok(self.mu_a * self.aux_tail.tail(x) * self.h_term / (1.0 - self.q))
    }
}

fn moment_condition(what: &str, law: &WeightLaw, dep: &DependenceSpec, p: f64) -> Result<f64> {
    let m = dep.weight_moment(law, p).map_err(|e| match e {
        Error::Domain { .. } => condition(format!("{what}: E[W^{p}] is infinite ({e})")),
        other => other,
    })?;
    if !(m < 1.0) {
        return Err(condition(format!("{what} needs E[W^{p}] < 1, got {m}")));
    }
    Ok(m)
}

/// Weak-dependence closed form: `T_h = E[W^α h(W)]`, `q = E[W^α]`.
pub fn corollary51_inputs(mu_a: f64, gbar: &TailLaw, alpha: f64, law: &WeightLaw, dep: &DependenceSpec) -> Result<ClosedFormInputs> {
    if matches!(dep, DependenceSpec::Comonotone { .. }) {
        return Err(input("the weak-dependence closed form needs independent or h-mixture dependence"));
    }
    if !(mu_a >= 0.0 && alpha > 0.0) {
        return Err(input(format!("need mu(A) ≥ 0 and alpha > 0, got {mu_a} and {alpha}")));
    }
    gbar.validate()?;
    let q = moment_condition("the weak-dependence closed form", law, dep, alpha)?;
    let h_term = tilted_moment(dep, law, alpha)?;
    Ok(ClosedFormInputs { mu_a, alpha, beta: None, aux_tail: gbar.clone(), h_term, q })
}

pub fn corollary51_eval(mu_a: f64, gbar: &TailLaw, alpha: f64, law: &WeightLaw, dep: &DependenceSpec, x: f64) -> Result<f64> {
    corollary51_inputs(mu_a, gbar, alpha, law, dep)?.evaluate(x)
}

/// Comonotone closed form with index `κ = αβ/(α+β)`: `μ̂(A)·Ḡ*(x)/(1 − E[W^κ])`.
pub fn corollary52_inputs(mu_hat_a: f64, gstar: &TailLaw, alpha: f64, beta: f64, law: &WeightLaw, dep: &DependenceSpec) -> Result<ClosedFormInputs> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(input(format!("need alpha, beta > 0, got {alpha} and {beta}")));
    }
    gstar.validate()?;
    let kappa = alpha * beta / (alpha + beta);
    let q = moment_condition("the strong-dependence closed form", law, dep, kappa)?;
    if q == 0.0 {
        return Err(input("E[W^κ] = 0: degenerate zero discount"));
    }
    Ok(ClosedFormInputs { mu_a: mu_hat_a, alpha, beta: Some(beta), aux_tail: gstar.clone(), h_term: 1.0, q })
}

pub fn corollary52_eval(mu_hat_a: f64, gstar: &TailLaw, alpha: f64, beta: f64, law: &WeightLaw, dep: &DependenceSpec, x: f64) -> Result<f64> {
    corollary52_inputs(mu_hat_a, gstar, alpha, beta, law, dep)?.evaluate(x)
}

/// Ruin probability asymptotic: the same series as the tail of `D(∞)`; the
/// premium rates do not enter.
pub fn ruin_asymptotic_eval(inputs: &ClosedFormInputs, x: f64) -> Result<f64> {
    inputs.evaluate(x)
}

/// Closed-form inputs implied by a bundle, when its claims are Pareto-type MRV.
pub fn closed_form_for(bundle: &ModelBundle, set: &RareSet) -> Result<Option<ClosedFormInputs>> {
    match &bundle.dependence {
        DependenceSpec::Comonotone { alpha, beta, s0, atoms } => {
            let kappa = alpha * beta / (alpha + beta);
            let mu_hat = atoms.iter().map(|a| a.w * set.support(&a.theta).powf(kappa)).sum();
            let gstar = TailLaw::Pareto { alpha: kappa, scale: *s0 };
            corollary52_inputs(mu_hat, &gstar, *alpha, *beta, &bundle.weights, &bundle.dependence).map(Some)
        }
        dep => {
            let Some((alpha, radial, _)) = bundle.claims.mrv_structure() else { return Ok(None) };
            if !matches!(radial, TailLaw::Pareto { .. }) {
                return Ok(None);
            }
            let mut mu = mu_limit(&bundle.claims, set, MuMethod::Analytic)?.value;
            if let DependenceSpec::HMixture { q, .. } = dep {
                mu *= mean_q(q, &bundle.weights)?;
            }
            let radial = radial.clone();
            corollary51_inputs(mu, &radial, alpha, &bundle.weights, dep).map(Some)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub x: f64,
    pub emp: Proportion,
    pub p_series: f64,
    pub series_std_error: f64,
    pub p_closed: Option<f64>,
    pub ratio_emp_series: f64,
    pub ratio_emp_closed: Option<f64>,
    /// Fewer than [`MIN_REPORT_HITS`] exceedances.
    pub starved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rows: Vec<ReportRow>,
    pub tail: TruncationDiagnostics,
    pub series_epochs: u64,
    pub series_coarse: bool,
    pub closed_form: Option<ClosedFormInputs>,
}

/// Empirical tail, per-epoch series and (for MRV bundles) closed form on one grid.
#[allow(clippy::too_many_arguments)]
pub fn validation_report(
    bundle: &ModelBundle,
    set: &RareSet,
    x_grid: &[f64],
    n: u64,
    policy: &TruncationPolicy,
    series: &SeriesOptions,
    seed: u64,
) -> Result<ValidationReport> {
    let tail = tail_curve(bundle, set, x_grid, n, policy, seed)?;
    report_from_tail(bundle, set, tail, series, seed)
}

/// As [`validation_report`] for an already simulated tail curve.
pub fn report_from_tail(bundle: &ModelBundle, set: &RareSet, tail: TailCurveEstimate, series: &SeriesOptions, seed: u64) -> Result<ValidationReport> {
    let est = per_epoch_series_grid(bundle, set, &tail.x_grid, series, seed)?;
    let closed = closed_form_for(bundle, set)?;
    let mut rows = Vec::with_capacity(est.len());
    for (emp, s) in tail.points.iter().zip(&est) {
        let p_closed = closed.as_ref().map(|c| c.evaluate(s.x)).transpose()?;
        rows.push(ReportRow {
            x: s.x,
            emp: *emp,
            p_series: s.value,
            series_std_error: s.std_error,
            p_closed,
            ratio_emp_series: emp.p_hat / s.value,
            ratio_emp_closed: p_closed.map(|c| emp.p_hat / c),
            starved: emp.hits < MIN_REPORT_HITS,
        });
    }
    Ok(ValidationReport {
        rows,
        tail: tail.diagnostics,
        series_epochs: est.first().map_or(0, |e| e.truncated_at),
        series_coarse: est.iter().any(|e| e.coarse),
        closed_form: closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::ClippedAffine;
    use crate::levy_returns::{InterArrivalLaw, LevyModel};
    use crate::mrv_claims::Atom;
    use crate::rare_sets::preset_a2;
    use crate::risk_engine::Regime;

    const PARETO2: TailLaw = TailLaw::Pareto { alpha: 2.0, scale: 1.0 };

    fn drift() -> WeightLaw {
        WeightLaw::Discount { levy: LevyModel::Drift { r: 0.1 }, arrival: InterArrivalLaw::Exponential { rate: 1.0 } }
    }

    fn toy(estimator_claims: ClaimModel) -> ModelBundle {
        ModelBundle::new(Some(estimator_claims), WeightLaw::Constant { value: 0.5 }, DependenceSpec::Independent, Regime::Unrestricted).unwrap()
    }

    fn half_line() -> RareSet {
        RareSet::new(vec![vec![1.0]], "half-line").unwrap()
    }

    fn hmix() -> ModelBundle {
        let heavy = ClaimModel::spectral(2.0, PARETO2, vec![(0.5, vec![1.0, 1.0]), (0.25, vec![1.0, 0.0]), (0.25, vec![0.0, 1.0])]).unwrap();
        let light = ClaimModel::IndependentComponents { components: vec![TailLaw::Exponential { rate: 1.0 }; 2] };
        ModelBundle::new(Some(heavy), drift(), DependenceSpec::HMixture { q: ClippedAffine { a: 0.0, b: 1.0 }, light }, Regime::Theorem31).unwrap()
    }

    #[test]
    fn geometric_toy_is_exact() {
        let bundle = toy(ClaimModel::IndependentComponents { components: vec![PARETO2] });
        let x = 10.0;
        let s = per_epoch_series(&bundle, &half_line(), x, &SeriesOptions { n_per_epoch: 2, ..Default::default() }, 0).unwrap();
        for (i, t) in s.terms.iter().enumerate() {
            let exact = 0.25f64.powi(i as i32 + 1) / (x * x);
            assert!((t - exact).abs() <= 1e-15 * exact, "term {i}: {t} vs {exact}");
        }
        let exact = 1.0 / (3.0 * x * x);
        let discarded = exact - s.value;
        assert!(s.tail_bound >= discarded, "{} < {discarded}", s.tail_bound);
        assert!(s.tail_bound <= 1e-3 * s.value);
        assert!(!s.coarse);
        assert_eq!(s.value, s.terms.iter().sum::<f64>());
    }

    #[test]
    fn coarse_tolerance_is_flagged() {
        let set = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        let opts = SeriesOptions { n_per_epoch: 2_000, tol: 0.5, ..Default::default() };
        let s = per_epoch_series(&hmix(), &set, 50.0, &opts, 0).unwrap();
        assert!(s.truncated_at <= 15, "{}", s.truncated_at);
        assert!(s.coarse);
        let fine = per_epoch_series(&hmix(), &set, 50.0, &SeriesOptions { n_per_epoch: 2_000, ..Default::default() }, 0).unwrap();
        assert!(!fine.coarse && fine.truncated_at > s.truncated_at);
    }

    #[test]
    fn indicator_toy_matches() {
        let bundle = toy(ClaimModel::IndependentComponents { components: vec![PARETO2] });
        let opts = SeriesOptions { n_per_epoch: 400_000, estimator: SeriesEstimator::Indicator, tol: 1e-2, ..Default::default() };
        let s = per_epoch_series(&bundle, &half_line(), 2.0, &opts, 1).unwrap();
        let exact = 1.0 / 12.0;
        assert!((s.value - exact).abs() < 4.0 * s.std_error, "{} vs {exact} ± {}", s.value, s.std_error);
    }

    #[test]
    fn divergent_series_is_refused() {
        let bundle = ModelBundle::new(
            Some(ClaimModel::IndependentComponents { components: vec![PARETO2] }),
            WeightLaw::Constant { value: 1.0 },
            DependenceSpec::Independent,
            Regime::Unrestricted,
        )
        .unwrap();
        let err = per_epoch_series(&bundle, &half_line(), 10.0, &SeriesOptions { n_per_epoch: 2, ..Default::default() }, 0).unwrap_err();
        assert!(matches!(err, Error::Condition(ref m) if m.contains("E[W^p]")), "{err}");
    }

    #[test]
    fn corollary51_examples() {
        let law = drift();
        let dep = DependenceSpec::HMixture {
            q: ClippedAffine { a: 0.0, b: 1.0 },
            light: ClaimModel::IndependentComponents { components: vec![TailLaw::Exponential { rate: 1.0 }] },
        };
        let inputs = corollary51_inputs(1.0, &PARETO2, 2.0, &law, &dep).unwrap();
        assert!((inputs.h_term - 1.1 / 1.3).abs() < 1e-12);
        assert!((1.0 / (1.0 - inputs.q) - 6.0).abs() < 1e-12);
        let v = inputs.evaluate(100.0).unwrap();
        assert!((v - 1.1 / 1.3 * 6e-4).abs() < 1e-15, "{v}");
        assert!((v - 5.0769e-4).abs() < 1e-8);
        assert_eq!(ruin_asymptotic_eval(&inputs, 100.0).unwrap(), v);
        let ind = corollary51_eval(1.0, &PARETO2, 2.0, &law, &DependenceSpec::Independent, 100.0).unwrap();
        assert!((ind - 5e-4).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for x in [10.0, 100.0, 1e3, 1e6] {
            let v = inputs.evaluate(x).unwrap();
            assert!(v < last);
            last = v;
        }
        // φ(2) ≥ 0 for a negative drift: refused.
        let bad = WeightLaw::Discount { levy: LevyModel::BrownianDrift { r: 0.01, sigma: 1.0 }, arrival: InterArrivalLaw::Exponential { rate: 1.0 } };
        assert!(matches!(corollary51_eval(1.0, &PARETO2, 2.0, &bad, &DependenceSpec::Independent, 100.0), Err(Error::Condition(_))));
    }

    #[test]
    fn corollary52_examples() {
        let dep = DependenceSpec::Comonotone { alpha: 2.0, beta: 2.0, s0: 0.2, atoms: vec![Atom { w: 1.0, theta: vec![1.0] }] };
        let gstar = TailLaw::Pareto { alpha: 1.0, scale: 0.2 };
        let v = corollary52_eval(1.0, &gstar, 2.0, 2.0, &drift(), &dep, 2000.0).unwrap();
        assert!((v - 1.0 / 6000.0).abs() < 1e-16, "{v}");
        let inputs = corollary52_inputs(1.0, &gstar, 2.0, 3.0, &drift(), &dep).unwrap();
        assert!((inputs.q - 0.2f64.powf(1.2) * 2.0 / 0.8).abs() < 1e-12);
        let heavy = DependenceSpec::Comonotone { alpha: 2.0, beta: 2.0, s0: 0.6, atoms: vec![Atom { w: 1.0, theta: vec![1.0] }] };
        assert!(matches!(corollary52_eval(1.0, &gstar, 2.0, 2.0, &drift(), &heavy, 2000.0), Err(Error::Condition(_))));
    }

    #[test]
    fn series_matches_closed_form_theorem31() {
        let bundle = hmix();
        let set = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        let closed = closed_form_for(&bundle, &set).unwrap().unwrap();
        assert!((closed.mu_a - 0.625 / 1.1).abs() < 1e-12);
        let x = 50.0;
        let s = per_epoch_series(&bundle, &set, x, &SeriesOptions { n_per_epoch: 20_000, ..Default::default() }, 3).unwrap();
        let c = closed.evaluate(x).unwrap();
        assert!((s.value / c - 1.0).abs() < 0.02, "{} vs {c}", s.value);
        // Terms decay by about E[W^α] = 1/1.2 per epoch.
        let r = s.terms[6] / s.terms[5];
        assert!((r - 1.0 / 1.2).abs() < 0.05, "{r}");
    }

    #[test]
    fn series_matches_closed_form_comonotone() {
        let dep = DependenceSpec::Comonotone { alpha: 2.0, beta: 2.0, s0: 0.2, atoms: vec![Atom { w: 1.0, theta: vec![1.0, 1.0] }] };
        let bundle = ModelBundle::new(None, drift(), dep, Regime::Theorem41 { p: 1.5, j_plus: 1.0 }).unwrap();
        let set = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        let x = 2000.0;
        let s = per_epoch_series(&bundle, &set, x, &SeriesOptions { n_per_epoch: 20_000, ..Default::default() }, 4).unwrap();
        let c = closed_form_for(&bundle, &set).unwrap().unwrap().evaluate(x).unwrap();
        assert!((c - 1.0 / 6000.0).abs() < 1e-15);
        assert!((s.value / c - 1.0).abs() < 0.03, "{} vs {c}", s.value);
        assert!((s.terms[0] - 0.2 / x).abs() < 1e-15);
    }

    #[test]
    fn report_shapes() {
        let bundle = hmix();
        let set = preset_a2(&[0.5, 0.5], 1.0).unwrap();
        let rep = validation_report(
            &bundle,
            &set,
            &[5.0, 20.0],
            20_000,
            &TruncationPolicy::default(),
            &SeriesOptions { n_per_epoch: 5_000, ..Default::default() },
            5,
        )
        .unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert!(rep.rows.iter().all(|r| r.p_closed.is_some()));
        assert!(validation_report(&bundle, &set, &[], 10, &TruncationPolicy::default(), &SeriesOptions::default(), 5).is_err());
    }
}

//! Monte Carlo engine for the discounted claim sum
//! `D(∞) = Σ_i X^{(i)} Π_i`, `Π_i = W_1⋯W_i`, and the discounted surplus.
//!
//! Path `i` of a run always uses stream `i` of the run's family, and partial
//! results are merged in fixed chunk order, so outputs are bit-identical for
//! any worker count. Premium integrals draw any bridge randomness from a
//! separate family, which keeps tail and ruin runs on identical claim paths.

use serde::{Deserialize, Serialize};

use crate::dependence::{DependenceSpec, WeightLaw};
use crate::error::{condition, input, Result};
use crate::levy_returns::InterArrivalLaw;
use crate::mc::{check_grid, map_chunks, ExceedanceCounter, Proportion};
use crate::mrv_claims::ClaimModel;
use crate::rare_sets::{from_ruin_set, RareSet, RuinSetPreset};
use crate::rng::{Stream, StreamFamily};
use crate::tail_laws::TailLaw;

const PATH_LABEL: u64 = 0x7061_7468;
const BRIDGE_LABEL: u64 = 0x6272_6467;
const SUM_LABEL: u64 = 0x7375_6d6e;

/// Hypothesis set the bundle is checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regime {
    /// Non-negative Lévy discounting with weak (h-function) dependence.
    Theorem31,
    /// General Lévy discounting: `E[W^p] < 1` at a declared `p` above the
    /// upper Matuszewska bound `j_plus` of the product law.
    Theorem41 { p: f64, j_plus: f64 },
    /// No asymptotic hypotheses; for harness models only.
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelBundle {
    pub claims: ClaimModel,
    pub weights: WeightLaw,
    pub dependence: DependenceSpec,
    pub regime: Regime,
}

impl ModelBundle {
    /// Validates the parts and the regime hypotheses. Hypothesis failures are
    /// reported as [`crate::Error::Condition`].
    pub fn new(claims: Option<ClaimModel>, weights: WeightLaw, dependence: DependenceSpec, regime: Regime) -> Result<Self> {
        let claims = match (claims, dependence.comonotone_claims()) {
            (_, Some(derived)) => derived,
            (Some(c), None) => c,
            (None, None) => return Err(input("claims model is required unless the dependence is comonotone")),
        };
        claims.validate()?;
        weights.validate()?;
        dependence.validate(&claims)?;
        let bundle = Self { claims, weights, dependence, regime };
        bundle.check_regime()?;
        Ok(bundle)
    }

    fn check_regime(&self) -> Result<()> {
        match &self.regime {
            Regime::Theorem31 => {
                match &self.weights {
                    WeightLaw::Discount { levy, .. } if levy.is_subordinator() => {}
                    WeightLaw::Discount { levy, .. } => {
                        return Err(condition(format!(
                            "theorem31 regime requires a subordinator (non-negative, non-degenerate Lévy process); {levy:?} is not"
                        )))
                    }
                    other => return Err(condition(format!("theorem31 regime requires Lévy discounting, got {other:?}"))),
                }
                if let DependenceSpec::Comonotone { .. } = self.dependence {
                    return Err(condition("theorem31 regime requires independent or h-mixture dependence, not comonotone"));
                }
                Ok(())
            }
            Regime::Theorem41 { p, j_plus } => {
                if !(*p > *j_plus) {
                    return Err(condition(format!("theorem41 regime requires p > J+ bound, got p = {p}, J+ = {j_plus}")));
                }
                let m = self.dependence.weight_moment(&self.weights, *p).map_err(|e| condition(format!("E[W^{p}] is not finite: {e}")))?;
                if !(m < 1.0) {
                    return Err(condition(format!("theorem41 regime requires E[W^p] < 1; E[W^{p}] = {m}")));
                }
                Ok(())
            }
            Regime::Unrestricted => Ok(()),
        }
    }

    /// Claim dimension.
    pub fn dim(&self) -> usize {
        self.claims.dim()
    }

    /// `E[W^s]` under the bundle's coupling.
    pub fn weight_moment(&self, s: f64) -> Result<f64> {
        self.dependence.weight_moment(&self.weights, s)
    }

    /// Per-epoch geometric decay rate of the series terms: the largest of
    /// `E[W^κ]` (κ the tail index of the epoch product) and, for the general
    /// regime, the declared `E[W^p]`. `None` when no index is known or a
    /// moment is infinite.
    pub fn geometric_ratio(&self) -> Option<f64> {
        let kappa = match &self.dependence {
            DependenceSpec::Comonotone { alpha, beta, .. } => alpha * beta / (alpha + beta),
            _ => claim_tail_index(&self.claims)?,
        };
        let mut rho = self.weight_moment(kappa).ok()?;
        if let Regime::Theorem41 { p, .. } = self.regime {
            rho = rho.max(self.weight_moment(p).ok()?);
        }
        Some(rho)
    }

    /// Upper bound on `E[X_A]`, infinite when a claim component has no mean.
    pub fn mean_projection_bound(&self, set: &RareSet) -> f64 {
        let mut bound = claim_mean_bound(&self.claims, set);
        if let DependenceSpec::HMixture { light, .. } = &self.dependence {
            bound = bound.max(claim_mean_bound(light, set));
        }
        bound
    }
}

/// Regular-variation index of the claim projections, if known.
pub fn claim_tail_index(model: &ClaimModel) -> Option<f64> {
    match model {
        ClaimModel::IndependentComponents { components } => components
            .iter()
            .map(TailLaw::regular_variation_index)
            .try_fold(f64::INFINITY, |m, a| a.map(|a| m.min(a)))
            .filter(|a| a.is_finite()),
        _ => model.alpha(),
    }
}

fn claim_mean_bound(model: &ClaimModel, set: &RareSet) -> f64 {
    match model {
        ClaimModel::Spectral(spec) => {
            spec.radial.mean() * spec.atoms.iter().map(|a| a.w * set.support(&a.theta)).sum::<f64>()
        }
        ClaimModel::IndependentComponents { components } => {
            let means: Vec<f64> = components.iter().map(TailLaw::mean).collect();
            set.directions().iter().map(|d| d.dot(&means)).sum()
        }
        ClaimModel::Scaled { base, scale } => scale.iter().copied().fold(0.0, f64::max) * claim_mean_bound(base, set),
    }
}

/// When to stop summing epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationPolicy {
    pub eps_discount: f64,
    pub n_min: u64,
    pub n_max: u64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { eps_discount: 1e-8, n_min: 10, n_max: 10_000 }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_discount > 0.0 && self.eps_discount < 1.0) {
            return Err(input(format!("eps_discount must lie in (0, 1), got {}", self.eps_discount)));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(input(format!("need 1 ≤ n_min ≤ n_max, got {} and {}", self.n_min, self.n_max)));
        }
        Ok(())
    }
}

/// Premium rates per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PremiumSpec {
    pub rates: Vec<f64>,
}

impl PremiumSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.rates.len() != dim {
            return Err(input(format!("premium rates have dimension {} but claims have {dim}", self.rates.len())));
        }
        if let Some(bad) = self.rates.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
            return Err(input(format!("premium rates must be non-negative and finite, got {bad}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationDiagnostics {
    pub mean_epochs: f64,
    pub max_epochs: u64,
    /// Largest `Π` at which any path stopped.
    pub max_residual_discount: f64,
    /// Paths that hit `n_max` with `Π ≥ eps`; kept in the estimate.
    pub truncation_suspect: u64,
    /// `eps·E[X_A]/(1 − E[W])` when finite.
    pub residual_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCurveEstimate {
    pub x_grid: Vec<f64>,
    pub points: Vec<Proportion>,
    pub n_samples: u64,
    pub diagnostics: TruncationDiagnostics,
}

impl TailCurveEstimate {
    pub fn p_hat(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p_hat).collect()
    }
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub d: Vec<f64>,
    pub epochs: u64,
    pub final_discount: f64,
    pub truncation_suspect: bool,
}

struct RuinState<'a> {
    rates: &'a [f64],
    set: &'a RareSet,
    bridge: Stream,
    c_hat: Vec<f64>,
    deficit: Vec<f64>,
    max_deficit: f64,
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn run_path(
    bundle: &ModelBundle,
    policy: &TruncationPolicy,
    rng: &mut Stream,
    z: &mut [f64],
    d: &mut [f64],
    mut ruin: Option<&mut RuinState<'_>>,
) -> (u64, f64, bool) {
    d.iter_mut().for_each(|v| *v = 0.0);
    let mut pi = 1.0;
    let mut i = 0;
    while i < policy.n_max {
        i += 1;
        let bridge = ruin.as_deref_mut().map(|r| &mut r.bridge);
        let pair = bundle.dependence.sample_pair(&bundle.claims, &bundle.weights, rng, bridge, z);
        if let Some(r) = ruin.as_deref_mut() {
            for (c, rate) in r.c_hat.iter_mut().zip(r.rates) {
                *c += rate * pi * pair.premium_factor;
            }
        }
        pi *= pair.weight;
        for (dv, zv) in d.iter_mut().zip(z.iter()) {
            *dv += zv * pi;
        }
        if let Some(r) = ruin.as_deref_mut() {
            for ((def, dv), c) in r.deficit.iter_mut().zip(d.iter()).zip(&r.c_hat) {
                *def = dv - c;
            }
            r.max_deficit = r.max_deficit.max(r.set.support(&r.deficit));
        }
        if pi < policy.eps_discount && i >= policy.n_min {
            return (i, pi, false);
        }
    }
    (i, pi, pi >= policy.eps_discount)
}

/// One path of `D(∞)` (truncated per `policy`) from `stream`.
pub fn simulate_discounted_claims(bundle: &ModelBundle, policy: &TruncationPolicy, stream: &mut Stream) -> PathOutcome {
    let mut z = vec![0.0; bundle.dim()];
    let mut d = vec![0.0; bundle.dim()];
    let (epochs, final_discount, truncation_suspect) = run_path(bundle, policy, stream, &mut z, &mut d, None);
    PathOutcome { d, epochs, final_discount, truncation_suspect }
}

/// Result of a joint tail/ruin run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    /// `P(D(∞) ∈ xA)`.
    pub tail: TailCurveEstimate,
    /// `ψ(x)`, present when premiums were given.
    pub ruin: Option<Vec<Proportion>>,
}

struct ChunkStats {
    tail: ExceedanceCounter,
    ruin: Option<ExceedanceCounter>,
    epochs: u64,
    max_epochs: u64,
    max_pi: f64,
    suspect: u64,
}

fn check_run(bundle: &ModelBundle, set: &RareSet, x_grid: &[f64], n: u64, policy: &TruncationPolicy) -> Result<()> {
    if n == 0 {
        return Err(input("sample count must be positive"));
    }
    check_grid(x_grid)?;
    if x_grid[0] <= 0.0 {
        return Err(input("x grid must be positive"));
    }
    policy.validate()?;
    if bundle.dim() != set.dim() {
        return Err(input(format!("claim dimension {} does not match set dimension {}", bundle.dim(), set.dim())));
    }
    Ok(())
}

/// Simulates `n` paths once and reads the tail curve of `X_A(D(∞))` and,
/// with premiums, the ruin curve `P(max_i X_A(D(τ_i) − Ĉ(τ_i)) > x)`.
pub fn simulate(
    bundle: &ModelBundle,
    set: &RareSet,
    x_grid: &[f64],
    n: u64,
    policy: &TruncationPolicy,
    seed: u64,
    premium: Option<&PremiumSpec>,
) -> Result<SimulationResult> {
    check_run(bundle, set, x_grid, n, policy)?;
    if let Some(p) = premium {
        p.validate(bundle.dim())?;
    }
    let root = StreamFamily::new(seed);
    let paths = root.fork(PATH_LABEL);
    let bridges = root.fork(BRIDGE_LABEL);
    let dim = bundle.dim();
    let parts = map_chunks(n, |range| {
        let mut z = vec![0.0; dim];
        let mut d = vec![0.0; dim];
        let mut stats = ChunkStats {
            tail: ExceedanceCounter::new(x_grid),
            ruin: premium.map(|_| ExceedanceCounter::new(x_grid)),
            epochs: 0,
            max_epochs: 0,
            max_pi: 0.0,
            suspect: 0,
        };
        let mut ruin_state = premium.map(|p| RuinState {
            rates: &p.rates,
            set,
            bridge: bridges.path(0),
            c_hat: vec![0.0; dim],
            deficit: vec![0.0; dim],
            max_deficit: f64::NEG_INFINITY,
        });
        for i in range {
            let mut rng = paths.path(i);
            if let Some(r) = ruin_state.as_mut() {
                r.bridge = bridges.path(i);
                r.c_hat.iter_mut().for_each(|c| *c = 0.0);
                r.max_deficit = f64::NEG_INFINITY;
            }
            let (epochs, pi, suspect) = run_path(bundle, policy, &mut rng, &mut z, &mut d, ruin_state.as_mut());
            stats.tail.push(set.support(&d));
            if let (Some(counter), Some(r)) = (stats.ruin.as_mut(), ruin_state.as_ref()) {
                counter.push(r.max_deficit);
            }
            stats.epochs += epochs;
            stats.max_epochs = stats.max_epochs.max(epochs);
            stats.max_pi = stats.max_pi.max(pi);
            stats.suspect += u64::from(suspect);
        }
        stats
    });

    let mut tail = ExceedanceCounter::new(x_grid);
    let mut ruin = premium.map(|_| ExceedanceCounter::new(x_grid));
    let (mut epochs, mut max_epochs, mut max_pi, mut suspect) = (0u64, 0u64, 0.0f64, 0u64);
    for part in &parts {
        tail.merge(&part.tail);
        if let (Some(r), Some(pr)) = (ruin.as_mut(), part.ruin.as_ref()) {
            r.merge(pr);
        }
        epochs += part.epochs;
        max_epochs = max_epochs.max(part.max_epochs);
        max_pi = max_pi.max(part.max_pi);
        suspect += part.suspect;
    }
    let residual_bound = match bundle.weight_moment(1.0) {
        Ok(mw) if mw < 1.0 => {
            let b = policy.eps_discount * bundle.mean_projection_bound(set) / (1.0 - mw);
            b.is_finite().then_some(b)
        }
        _ => None,
    };
    let to_props = |c: &ExceedanceCounter| c.exceedances().into_iter().map(|h| Proportion::wilson(h, n)).collect::<Vec<_>>();
    Ok(SimulationResult {
        tail: TailCurveEstimate {
            x_grid: x_grid.to_vec(),
            points: to_props(&tail),
            n_samples: n,
            diagnostics: TruncationDiagnostics {
                mean_epochs: epochs as f64 / n as f64,
                max_epochs,
                max_residual_discount: max_pi,
                truncation_suspect: suspect,
                residual_bound,
            },
        },
        ruin: ruin.as_ref().map(to_props),
    })
}

/// Empirical tail of `X_A(D(∞))` on `x_grid` from `n` paths.
pub fn tail_curve(bundle: &ModelBundle, set: &RareSet, x_grid: &[f64], n: u64, policy: &TruncationPolicy, seed: u64) -> Result<TailCurveEstimate> {
    Ok(simulate(bundle, set, x_grid, n, policy, seed, None)?.tail)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuinCurve {
    pub x_grid: Vec<f64>,
    pub psi: Vec<Proportion>,
    /// Tail of `D(∞)` on the same paths and set.
    pub tail: TailCurveEstimate,
}

/// Infinite-horizon ruin probabilities for the ruin set `ruin_set`, checked
/// at claim epochs (between claims the discounted surplus only improves).
#[allow(clippy::too_many_arguments)]
pub fn simulate_surplus_ruin(
    bundle: &ModelBundle,
    premium: &PremiumSpec,
    ruin_set: &RuinSetPreset,
    x_grid: &[f64],
    n: u64,
    policy: &TruncationPolicy,
    seed: u64,
) -> Result<RuinCurve> {
    let set = from_ruin_set(ruin_set);
    let res = simulate(bundle, &set, x_grid, n, policy, seed, Some(premium))?;
    Ok(RuinCurve { x_grid: x_grid.to_vec(), psi: res.ruin.expect("premiums were given"), tail: res.tail })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteSumEstimate {
    pub x_grid: Vec<f64>,
    /// `P(S_n ∈ xA)`.
    pub p_sum: Vec<Proportion>,
    /// `P(X^{(i)}Π_i ∈ xA)` for `i = 1..n_terms`.
    pub per_term: Vec<Vec<Proportion>>,
    /// `p_sum / Σ_i per_term`.
    pub ratio: Vec<f64>,
}

/// Exact `S_n = Σ_{i≤n} X^{(i)}Π_i` and each term's exceedance, on the same paths.
pub fn finite_horizon_sum(bundle: &ModelBundle, n_terms: usize, set: &RareSet, x_grid: &[f64], n: u64, seed: u64) -> Result<FiniteSumEstimate> {
    if n_terms == 0 {
        return Err(input("n_terms must be at least 1"));
    }
    check_run(bundle, set, x_grid, n, &TruncationPolicy::default())?;
    let family = StreamFamily::new(seed).fork(SUM_LABEL);
    let dim = bundle.dim();
    let parts = map_chunks(n, |range| {
        let mut z = vec![0.0; dim];
        let mut s = vec![0.0; dim];
        let mut sum = ExceedanceCounter::new(x_grid);
        let mut terms: Vec<ExceedanceCounter> = (0..n_terms).map(|_| ExceedanceCounter::new(x_grid)).collect();
        for i in range {
            let mut rng = family.path(i);
            s.iter_mut().for_each(|v| *v = 0.0);
            let mut pi = 1.0;
            for term in terms.iter_mut() {
                let pair = bundle.dependence.sample_pair(&bundle.claims, &bundle.weights, &mut rng, None, &mut z);
                pi *= pair.weight;
                for (sv, zv) in s.iter_mut().zip(z.iter()) {
                    *sv += zv * pi;
                }
                term.push(set.support(&z) * pi);
            }
            sum.push(set.support(&s));
        }
        (sum, terms)
    });
    let mut sum = ExceedanceCounter::new(x_grid);
    let mut terms: Vec<ExceedanceCounter> = (0..n_terms).map(|_| ExceedanceCounter::new(x_grid)).collect();
    for (ps, pt) in &parts {
        sum.merge(ps);
        for (t, p) in terms.iter_mut().zip(pt) {
            t.merge(p);
        }
    }
    let sum_counts = sum.exceedances();
    let term_counts: Vec<Vec<u64>> = terms.iter().map(ExceedanceCounter::exceedances).collect();
    let ratio = (0..x_grid.len())
        .map(|j| {
            let denom: u64 = term_counts.iter().map(|t| t[j]).sum();
            if denom == 0 {
                f64::NAN
            } else {
                sum_counts[j] as f64 / denom as f64
            }
        })
        .collect();
    Ok(FiniteSumEstimate {
        x_grid: x_grid.to_vec(),
        p_sum: sum_counts.into_iter().map(|h| Proportion::wilson(h, n)).collect(),
        per_term: term_counts.into_iter().map(|t| t.into_iter().map(|h| Proportion::wilson(h, n)).collect()).collect(),
        ratio,
    })
}

/// Survival probabilities `#{v > x}/n` with Wilson intervals.
pub fn empirical_tail(values: &[f64], x_grid: &[f64]) -> Result<Vec<Proportion>> {
    if values.is_empty() {
        return Err(input("no values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(input("values must be finite"));
    }
    check_grid(x_grid)?;
    let mut counter = ExceedanceCounter::new(x_grid);
    for &v in values {
        counter.push(v);
    }
    let n = values.len() as u64;
    Ok(counter.exceedances().into_iter().map(|h| Proportion::wilson(h, n)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenewalEstimate {
    pub value: f64,
    /// Zero for closed forms.
    pub std_error: f64,
}

/// Draws used for the gamma renewal function.
pub const RENEWAL_DRAWS: u64 = 200_000;

/// `λ(t) = E[N(t)]`, the expected number of arrivals in `[0, t]`.
pub fn renewal_function(arrival: &InterArrivalLaw, t: f64, seed: u64) -> Result<RenewalEstimate> {
    arrival.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(input(format!("t must be non-negative and finite, got {t}")));
    }
    match *arrival {
        InterArrivalLaw::Exponential { rate } => Ok(RenewalEstimate { value: rate * t, std_error: 0.0 }),
        InterArrivalLaw::Deterministic { delta } => Ok(RenewalEstimate { value: (t / delta).floor(), std_error: 0.0 }),
        InterArrivalLaw::Gamma { .. } => {
            if t == 0.0 {
                return Ok(RenewalEstimate { value: 0.0, std_error: 0.0 });
            }
            let family = StreamFamily::new(seed).fork(0x726e);
            let parts = map_chunks(RENEWAL_DRAWS, |range| {
                let (mut s, mut s2) = (0.0f64, 0.0f64);
                for i in range {
                    let mut rng = family.path(i);
                    let (mut clock, mut count) = (0.0, 0u64);
                    loop {
                        clock += arrival.sample(&mut rng);
                        if clock > t {
                            break;
                        }
                        count += 1;
                    }
                    s += count as f64;
                    s2 += (count * count) as f64;
                }
                (s, s2)
            });
            let (s, s2) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            let n = RENEWAL_DRAWS as f64;
            let mean = s / n;
            let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
            Ok(RenewalEstimate { value: mean, std_error: (var / n).sqrt() })
        }
    }
}

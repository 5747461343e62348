//! Couplings between claims and the per-epoch discount factor `W`.
//!
//! * `Independent`: the claim ignores `W`.
//! * `HMixture`: after drawing `W = y`, the claim comes from the heavy model
//!   with probability `q(y)` and from the light model otherwise. The heavy
//!   tail dominates, so `P(X ∈ xA | W = y) ∼ h(y) P(X ∈ xA)` with
//!   `h = q / E[q(W)]`.
//! * `Comonotone`: one uniform `U` drives both the claim radius `U^{−1/α}` and
//!   `W = s0·U^{−1/β}`; the product is regularly varying with index
//!   `αβ/(α+β)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::levy_returns::{discount_moment, InterArrivalLaw, LevyModel};
use crate::mc::{map_chunks, ExceedanceCounter, Proportion};
use crate::mrv_claims::{validate_atoms, Atom, ClaimModel};
use crate::rare_sets::RareSet;
use crate::rng::{open_unit, Stream, StreamFamily};
use crate::tail_laws::{hill_estimate, IndexEstimate};

/// Draws used when `E[q(W)]` has no closed form.
pub const MEAN_Q_DRAWS: u64 = 1_000_000;
const MEAN_Q_SEED: u64 = 0x6d65_616e_715f;

/// `y ↦ min(1, max(0, a + b·y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClippedAffine {
    pub a: f64,
    pub b: f64,
}

impl ClippedAffine {
    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        (self.a + self.b * y).clamp(0.0, 1.0)
    }

    fn unclipped_on(&self, lo: f64, hi: f64) -> bool {
        let ends = [self.a + self.b * lo, self.a + self.b * hi];
        hi.is_finite() && ends.iter().all(|v| (0.0..=1.0).contains(v))
    }

    fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        let at_hi = if hi.is_finite() { self.eval(hi) } else if self.b > 0.0 { 1.0 } else { self.eval(lo) };
        self.eval(lo).max(at_hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum DependenceSpec {
    Independent,
    /// The bundle's claim model is the heavy population; `light` is the other.
    HMixture { q: ClippedAffine, light: ClaimModel },
    Comonotone { alpha: f64, beta: f64, s0: f64, atoms: Vec<Atom> },
}

/// Law of the per-epoch discount factor `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightLaw {
    /// `W = e^{−(R(τ_i) − R(τ_{i−1}))}`.
    Discount { levy: LevyModel, arrival: InterArrivalLaw },
    /// Test harness: `W ~ Uniform(lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// Test harness: `W ≡ value`.
    Constant { value: f64 },
}

/// One epoch's draw: the claim is written to a caller buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledPair {
    pub weight: f64,
    /// `∫` of the within-epoch discount over the inter-arrival time, relative
    /// to the discount at the epoch start; NaN unless requested.
    pub premium_factor: f64,
}

impl WeightLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightLaw::Discount { levy, arrival } => {
                levy.validate()?;
                arrival.validate()
            }
            WeightLaw::Uniform { lo, hi } => {
                if !(*lo >= 0.0 && hi > lo && hi.is_finite()) {
                    return Err(input(format!("uniform weight law needs 0 ≤ lo < hi, got [{lo}, {hi}]")));
                }
                Ok(())
            }
            WeightLaw::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(input(format!("constant weight must be positive, got {value}")));
                }
                Ok(())
            }
        }
    }

    /// `E[W^k]`.
    pub fn moment(&self, k: f64) -> Result<f64> {
        match self {
            WeightLaw::Discount { levy, arrival } => discount_moment(levy, arrival, k),
            WeightLaw::Uniform { lo, hi } => Ok((hi.powf(k + 1.0) - lo.powf(k + 1.0)) / ((k + 1.0) * (hi - lo))),
            WeightLaw::Constant { value } => Ok(value.powf(k)),
        }
    }

    /// Closed interval containing the support of `W`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            WeightLaw::Discount { levy, .. } if levy.is_subordinator() => (0.0, 1.0),
            WeightLaw::Discount { .. } => (0.0, f64::INFINITY),
            WeightLaw::Uniform { lo, hi } => (*lo, *hi),
            WeightLaw::Constant { value } => (*value, *value),
        }
    }

    /// Draws `W` and, with a bridge stream, the within-epoch premium factor.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, bridge: Option<&mut Stream>) -> (f64, f64) {
        match self {
            WeightLaw::Discount { levy, arrival } => {
                let theta = arrival.sample(rng);
                let (inc, factor) = levy.sample_interval(theta, rng, bridge);
                ((-inc).exp(), factor)
            }
            WeightLaw::Uniform { lo, hi } => {
                let u: f64 = rng.random();
                (lo + (hi - lo) * u, if bridge.is_some() { 1.0 } else { f64::NAN })
            }
            WeightLaw::Constant { value } => (*value, if bridge.is_some() { 1.0 } else { f64::NAN }),
        }
    }
}

impl DependenceSpec {
    pub fn validate(&self, claims: &ClaimModel) -> Result<()> {
        match self {
            DependenceSpec::Independent => Ok(()),
            DependenceSpec::HMixture { q, light } => {
                if !(q.a.is_finite() && q.b.is_finite()) {
                    return Err(input("q coefficients must be finite"));
                }
                if q.a <= 0.0 && q.b <= 0.0 {
                    return Err(input("q vanishes on (0, ∞): the heavy population is never drawn"));
                }
                light.validate()?;
                if light.dim() != claims.dim() {
                    return Err(input(format!("light model has dimension {} but claims have {}", light.dim(), claims.dim())));
                }
                if light.alpha().is_some_and(|la| claims.alpha().is_some_and(|ha| la <= ha)) {
                    return Err(input("light model must have a strictly lighter tail than the heavy model"));
                }
                Ok(())
            }
            DependenceSpec::Comonotone { alpha, beta, s0, atoms } => {
                if !(*alpha > 0.0 && *beta > 0.0 && *s0 > 0.0 && alpha.is_finite() && beta.is_finite() && s0.is_finite()) {
                    return Err(input(format!("comonotone coupling needs alpha, beta, s0 > 0, got {alpha}, {beta}, {s0}")));
                }
                validate_atoms(atoms)
            }
        }
    }

    /// Claim dimension implied by the dependence alone (comonotone only).
    pub fn own_dim(&self) -> Option<usize> {
        match self {
            DependenceSpec::Comonotone { atoms, .. } => atoms.first().map(|a| a.theta.len()),
            _ => None,
        }
    }

    /// Writes the claim into `out` and returns the coupled discount factor.
    ///
    /// For the comonotone coupling the Lévy model is bypassed: the epoch pair is
    /// drawn directly, and the premium factor is an inter-arrival time drawn
    /// from the bridge stream (discount flat within the epoch).
    #[inline]
    pub fn sample_pair<R: Rng + ?Sized>(
        &self,
        claims: &ClaimModel,
        law: &WeightLaw,
        rng: &mut R,
        bridge: Option<&mut Stream>,
        out: &mut [f64],
    ) -> CoupledPair {
        match self {
            DependenceSpec::Independent => {
                let (weight, premium_factor) = law.sample(rng, bridge);
                claims.sample_into(rng, out);
                CoupledPair { weight, premium_factor }
            }
            DependenceSpec::HMixture { q, light } => {
                let (weight, premium_factor) = law.sample(rng, bridge);
                let u: f64 = rng.random();
                if u < q.eval(weight) {
                    claims.sample_into(rng, out);
                } else {
                    light.sample_into(rng, out);
                }
                CoupledPair { weight, premium_factor }
            }
            DependenceSpec::Comonotone { alpha, beta, s0, atoms } => {
                let u = open_unit(rng);
                let radius = u.powf(-1.0 / alpha);
                let theta = pick(atoms, rng);
                for (o, t) in out.iter_mut().zip(theta) {
                    *o = radius * t;
                }
                let premium_factor = match (bridge, law) {
                    (Some(b), WeightLaw::Discount { arrival, .. }) => arrival.sample(b),
                    (Some(_), _) => 1.0,
                    (None, _) => f64::NAN,
                };
                CoupledPair { weight: s0 * u.powf(-1.0 / beta), premium_factor }
            }
        }
    }

    /// Draws only the discount factor of an epoch whose claim is not needed.
    #[inline]
    pub fn sample_weight<R: Rng + ?Sized>(&self, law: &WeightLaw, rng: &mut R) -> f64 {
        match self {
            DependenceSpec::Comonotone { beta, s0, .. } => s0 * open_unit(rng).powf(-1.0 / beta),
            _ => law.sample(rng, None).0,
        }
    }

    /// Marginal claim model of the comonotone pair: Pareto(α) radius on the atoms.
    pub fn comonotone_claims(&self) -> Option<ClaimModel> {
        match self {
            DependenceSpec::Comonotone { alpha, atoms, .. } => Some(ClaimModel::Spectral(crate::mrv_claims::SpectralMrv {
                alpha: *alpha,
                radial: crate::tail_laws::TailLaw::Pareto { alpha: *alpha, scale: 1.0 },
                atoms: atoms.clone(),
            })),
            _ => None,
        }
    }

    /// `E[W^p]` under the coupling (`s0^p β/(β − p)` for the comonotone pair).
    pub fn weight_moment(&self, law: &WeightLaw, p: f64) -> Result<f64> {
        match self {
            DependenceSpec::Comonotone { beta, s0, .. } => {
                if p >= *beta {
                    return Err(Error::Domain { what: "comonotone weight moment", bound: format!("p < beta = {beta}"), value: p });
                }
                Ok(s0.powf(p) * beta / (beta - p))
            }
            _ => law.moment(p),
        }
    }
}

fn pick<'a, R: Rng + ?Sized>(atoms: &'a [Atom], rng: &mut R) -> &'a [f64] {
    if atoms.len() == 1 {
        return &atoms[0].theta;
    }
    let mut u: f64 = rng.random();
    for atom in atoms {
        if u < atom.w {
            return &atom.theta;
        }
        u -= atom.w;
    }
    &atoms[atoms.len() - 1].theta
}

/// `E[q(W)]`: closed form when `q` is unclipped on the support, otherwise a
/// fixed-seed Monte Carlo mean over [`MEAN_Q_DRAWS`] draws.
pub fn mean_q(q: &ClippedAffine, law: &WeightLaw) -> Result<f64> {
    let (lo, hi) = law.support();
    let closed = if q.b == 0.0 {
        Some(q.eval(0.0))
    } else if q.unclipped_on(lo, hi) {
        Some(q.a + q.b * law.moment(1.0)?)
    } else {
        None
    };
    let value = match closed {
        Some(v) => v,
        None => {
            let family = StreamFamily::new(MEAN_Q_SEED);
            let sums = map_chunks(MEAN_Q_DRAWS, |range| {
                range
                    .map(|i| {
                        let mut rng = family.path(i);
                        q.eval(law.sample(&mut rng, None).0)
                    })
                    .sum::<f64>()
            });
            sums.iter().sum::<f64>() / MEAN_Q_DRAWS as f64
        }
    };
    if value <= 0.0 {
        return Err(input("E[q(W)] = 0: the heavy population is never drawn"));
    }
    Ok(value)
}

/// `h(y) = q(y)/E[q(W)]`; identically 1 for independence.
pub fn h_function(spec: &DependenceSpec, law: &WeightLaw, y: f64) -> Result<f64> {
    match spec {
        DependenceSpec::Independent => Ok(1.0),
        DependenceSpec::HMixture { q, .. } => Ok(q.eval(y) / mean_q(q, law)?),
        DependenceSpec::Comonotone { .. } => Err(input("the comonotone coupling has no h-function representation")),
    }
}

/// `T_h = E[W^α h(W)]` for an affine `q`: `(a E[W^α] + b E[W^{α+1}])/E[q(W)]`
/// when `q` is unclipped on the support.
pub fn tilted_moment(spec: &DependenceSpec, law: &WeightLaw, alpha: f64) -> Result<f64> {
    match spec {
        DependenceSpec::Independent => law.moment(alpha),
        DependenceSpec::HMixture { q, .. } => {
            let (lo, hi) = law.support();
            if !(q.b == 0.0 || q.unclipped_on(lo, hi)) {
                return Err(input("closed-form E[W^α h(W)] needs q unclipped on the support of W"));
            }
            Ok((q.a * law.moment(alpha)? + q.b * law.moment(alpha + 1.0)?) / mean_q(q, law)?)
        }
        DependenceSpec::Comonotone { .. } => Err(input("the comonotone coupling has no h-function representation")),
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

/// Monte Carlo `E[h(W)]`; equals 1 by construction.
pub fn verify_h_normalization(spec: &DependenceSpec, law: &WeightLaw, n: u64, seed: u64) -> Result<MeanEstimate> {
    if n < 2 {
        return Err(input("need at least two draws"));
    }
    if let DependenceSpec::Independent = spec {
        return Ok(MeanEstimate { mean: 1.0, std_error: 0.0, n });
    }
    let DependenceSpec::HMixture { q, .. } = spec else {
        return Err(input("the comonotone coupling has no h-function representation"));
    };
    let mq = mean_q(q, law)?;
    let family = StreamFamily::new(seed).fork(0x686e);
    let parts = map_chunks(n, |range| {
        let (mut s, mut s2) = (0.0, 0.0);
        for i in range {
            let mut rng = family.path(i);
            let h = q.eval(law.sample(&mut rng, None).0) / mq;
            s += h;
            s2 += h * h;
        }
        (s, s2)
    });
    let (s, s2) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(MeanEstimate { mean, std_error: (var / nf).sqrt(), n })
}

/// Rejection sampler for `W_h` with law `h(y) P(W ∈ dy)`.
#[derive(Debug, Clone)]
pub struct TiltedWeightSampler {
    law: WeightLaw,
    q: ClippedAffine,
    sup_q: f64,
    mean_q: f64,
}

impl TiltedWeightSampler {
    pub fn new(spec: &DependenceSpec, law: &WeightLaw) -> Result<Self> {
        let q = match spec {
            DependenceSpec::Independent => ClippedAffine { a: 1.0, b: 0.0 },
            DependenceSpec::HMixture { q, .. } => *q,
            DependenceSpec::Comonotone { .. } => {
                return Err(input("the comonotone coupling has no h-function representation"));
            }
        };
        let (lo, hi) = law.support();
        let sup_q = q.sup_on(lo, hi);
        let mean_q = mean_q(&q, law)?;
        if !(sup_q > 0.0) {
            return Err(input("h is not bounded away from zero anywhere on the support"));
        }
        Ok(Self { law: law.clone(), q, sup_q, mean_q })
    }

    /// `1/sup h`.
    pub fn acceptance_rate(&self) -> f64 {
        self.mean_q / self.sup_q
    }

    pub fn sup_h(&self) -> f64 {
        self.sup_q / self.mean_q
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let (w, _) = self.law.sample(rng, None);
            let u: f64 = rng.random();
            if u * self.sup_q < self.q.eval(w) {
                return w;
            }
        }
    }
}

/// Hill estimate of `X_A·W` over `n` single-epoch pairs.
pub fn product_tail_index(
    spec: &DependenceSpec,
    claims: &ClaimModel,
    law: &WeightLaw,
    set: &RareSet,
    n: u64,
    k: usize,
    seed: u64,
) -> Result<IndexEstimate> {
    let values = product_samples(spec, claims, law, set, n, seed)?;
    let positive: Vec<f64> = values.into_iter().filter(|v| *v > 0.0).collect();
    if positive.len() <= k {
        return Err(input(format!("only {} positive products for k = {k}", positive.len())));
    }
    hill_estimate(&positive, k)
}

fn claim_dim(spec: &DependenceSpec, claims: &ClaimModel) -> usize {
    spec.own_dim().unwrap_or_else(|| claims.dim())
}

/// `X_A·W` for `n` independent single-epoch pairs.
pub fn product_samples(spec: &DependenceSpec, claims: &ClaimModel, law: &WeightLaw, set: &RareSet, n: u64, seed: u64) -> Result<Vec<f64>> {
    let d = claim_dim(spec, claims);
    if d != set.dim() {
        return Err(input(format!("claim dimension {d} does not match set dimension {}", set.dim())));
    }
    let family = StreamFamily::new(seed).fork(0x7072);
    let parts = map_chunks(n, |range| {
        let mut z = vec![0.0; d];
        range
            .map(|i| {
                let mut rng = family.path(i);
                let pair = spec.sample_pair(claims, law, &mut rng, None, &mut z);
                set.support(&z) * pair.weight
            })
            .collect::<Vec<f64>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// Exceedance probabilities of `X_A·W` and of `X_A·W_h` on an x-grid, from
/// `n` draws each; the two curves are asymptotically equivalent.
pub fn tilt_equivalence(
    spec: &DependenceSpec,
    claims: &ClaimModel,
    law: &WeightLaw,
    set: &RareSet,
    x_grid: &[f64],
    n: u64,
    seed: u64,
) -> Result<(Vec<Proportion>, Vec<Proportion>)> {
    crate::mc::check_grid(x_grid)?;
    if claims.dim() != set.dim() {
        return Err(input("claim dimension does not match the set"));
    }
    let tilted = TiltedWeightSampler::new(spec, law)?;
    let family = StreamFamily::new(seed).fork(0x746c);
    let parts = map_chunks(n, |range| {
        let mut z = vec![0.0; claims.dim()];
        let (mut plain, mut tilt) = (ExceedanceCounter::new(x_grid), ExceedanceCounter::new(x_grid));
        for i in range {
            let mut rng = family.path(i);
            claims.sample_into(&mut rng, &mut z);
            let xa = set.support(&z);
            let (w, _) = law.sample(&mut rng, None);
            plain.push(xa * w);
            tilt.push(xa * tilted.sample(&mut rng));
        }
        (plain, tilt)
    });
    let (mut plain, mut tilt) = (ExceedanceCounter::new(x_grid), ExceedanceCounter::new(x_grid));
    for (p, t) in &parts {
        plain.merge(p);
        tilt.merge(t);
    }
    let to_props = |c: &ExceedanceCounter| c.exceedances().into_iter().map(|h| Proportion::wilson(h, n)).collect();
    Ok((to_props(&plain), to_props(&tilt)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalTailPoint {
    pub y: f64,
    pub ratio: f64,
    pub expected: f64,
    pub in_bin: u64,
    pub hits: u64,
}

/// `P̂(X_A > x | W ∈ [y − δ, y + δ]) / P̂(X_A > x)` for each bin centre `y`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_tail_ratio(
    spec: &DependenceSpec,
    claims: &ClaimModel,
    law: &WeightLaw,
    set: &RareSet,
    x: f64,
    bins: &[f64],
    delta: f64,
    n: u64,
    seed: u64,
) -> Result<Vec<ConditionalTailPoint>> {
    if claims.dim() != set.dim() {
        return Err(input("claim dimension does not match the set"));
    }
    let family = StreamFamily::new(seed).fork(0x6374);
    let nb = bins.len();
    // Layout: [total hits, (in_bin, hits) per bin].
    let parts = map_chunks(n, |range| {
        let mut z = vec![0.0; claims.dim()];
        let mut c = vec![0u64; 1 + 2 * nb];
        for i in range {
            let mut rng = family.path(i);
            let pair = spec.sample_pair(claims, law, &mut rng, None, &mut z);
            let hit = set.support(&z) > x;
            c[0] += u64::from(hit);
            for (b, y) in bins.iter().enumerate() {
                if (pair.weight - y).abs() <= delta {
                    c[1 + 2 * b] += 1;
                    c[2 + 2 * b] += u64::from(hit);
                }
            }
        }
        c
    });
    let c = crate::mc::merge_counts(parts, 1 + 2 * nb);
    let p_all = c[0] as f64 / n as f64;
    bins.iter()
        .enumerate()
        .map(|(b, &y)| {
            let (in_bin, hits) = (c[1 + 2 * b], c[2 + 2 * b]);
            let ratio = if in_bin == 0 || p_all == 0.0 { f64::NAN } else { hits as f64 / in_bin as f64 / p_all };
            Ok(ConditionalTailPoint { y, ratio, expected: h_function(spec, law, y)?, in_bin, hits })
        })
        .collect()
}

/// Minimum joint-denominator count for a point of the TAI curve.
pub const TAI_MIN_DENOMINATOR: u64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaiCurve {
    /// `(x, P̂(P_i > x | P_j > x), #{P_j > x})`.
    pub points: Vec<(f64, f64, u64)>,
    /// Levels dropped for lack of exceedances.
    pub truncated: bool,
    /// The conditional probability never drops below one: the pair is
    /// perfectly dependent in the tail.
    pub degenerate: bool,
}

/// Conditional exceedance curve of paired samples.
pub fn tai_diagnostic(p_i: &[f64], p_j: &[f64], x_levels: &[f64]) -> Result<TaiCurve> {
    if p_i.len() != p_j.len() || p_i.is_empty() {
        return Err(input("TAI diagnostic needs two non-empty samples of equal length"));
    }
    crate::mc::check_grid(x_levels)?;
    let mut points = Vec::new();
    let mut truncated = false;
    for &x in x_levels {
        let (mut den, mut num) = (0u64, 0u64);
        for (a, b) in p_i.iter().zip(p_j) {
            if *b > x {
                den += 1;
                num += u64::from(*a > x);
            }
        }
        if den < TAI_MIN_DENOMINATOR {
            truncated = true;
            break;
        }
        points.push((x, num as f64 / den as f64, den));
    }
    let degenerate = !points.is_empty() && points.iter().all(|p| p.1 >= 1.0);
    Ok(TaiCurve { points, truncated, degenerate })
}

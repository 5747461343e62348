//! Univariate heavy-tailed laws and the tail-index machinery.
//!
//! The catalog laws have closed-form survival functions, so the Matuszewska
//! and lower Karamata indexes can be probed directly from tail ratios
//! `tail(vx)/tail(x)`. Limits superior and inferior are approximated by
//! extrema over the upper half of a finite x-window; comparing with the lower
//! half tells whether the estimate has settled or is still growing.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{input, Error, Result};
use crate::rng::open_unit;

/// Univariate law from the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailLaw {
    /// `tail(x) = (x/scale)^-alpha` for `x ≥ scale`.
    Pareto { alpha: f64, scale: f64 },
    Lognormal { mu: f64, sigma: f64 },
    /// Heavy-tailed Weibull, `0 < shape < 1`.
    Weibull { shape: f64, scale: f64 },
    /// `tail(x) = 1/(1 + ln(1 + x))`: slowly varying, lower Karamata index 0.
    SlowLog,
    Exponential { rate: f64 },
    Deterministic { value: f64 },
}

/// Known index values of a catalog law; `f64::INFINITY` where the index is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticIndexes {
    pub alpha: Option<f64>,
    pub j_plus: f64,
    pub j_minus: f64,
    pub k_minus: f64,
}

/// Anything with a survival function.
pub trait Survival {
    fn tail(&self, x: f64) -> f64;
}

impl Survival for TailLaw {
    fn tail(&self, x: f64) -> f64 {
        TailLaw::tail(self, x)
    }
}

/// The law of `factor·X` for `X` with survival `inner`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<'a, S: ?Sized> {
    pub inner: &'a S,
    pub factor: f64,
}

impl<S: Survival + ?Sized> Survival for Scaled<'_, S> {
    fn tail(&self, x: f64) -> f64 {
        self.inner.tail(x / self.factor)
    }
}

impl TailLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TailLaw::Pareto { alpha, scale } => alpha > 0.0 && scale > 0.0 && alpha.is_finite() && scale.is_finite(),
            TailLaw::Lognormal { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            TailLaw::Weibull { shape, scale } => shape > 0.0 && shape < 1.0 && scale > 0.0 && scale.is_finite(),
            TailLaw::SlowLog => true,
            TailLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            TailLaw::Deterministic { value } => value >= 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(input(format!("invalid law parameters: {self:?}")))
        }
    }

    /// `P(X > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        match *self {
            TailLaw::Pareto { alpha, scale } => {
                if x < scale {
                    1.0
                } else {
                    (x / scale).powf(-alpha)
                }
            }
            TailLaw::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    0.5 * erfc((x.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
                }
            }
            TailLaw::Weibull { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-(x / scale).powf(shape)).exp()
                }
            }
            TailLaw::SlowLog => {
                if x <= 0.0 {
                    1.0
                } else {
                    1.0 / (1.0 + x.ln_1p())
                }
            }
            TailLaw::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            TailLaw::Deterministic { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Density, `None` for the point mass.
    pub fn density(&self, x: f64) -> Option<f64> {
        let d = match *self {
            TailLaw::Pareto { alpha, scale } => {
                if x < scale {
                    0.0
                } else {
                    alpha / scale * (x / scale).powf(-alpha - 1.0)
                }
            }
            TailLaw::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = (x.ln() - mu) / sigma;
                    (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
                }
            }
            TailLaw::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let r = x / scale;
                    shape / scale * r.powf(shape - 1.0) * (-r.powf(shape)).exp()
                }
            }
            TailLaw::SlowLog => {
                if x < 0.0 {
                    0.0
                } else {
                    let l = 1.0 + x.ln_1p();
                    1.0 / ((1.0 + x) * l * l)
                }
            }
            TailLaw::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            TailLaw::Deterministic { .. } => return None,
        };
        Some(d)
    }

    /// Left end of the support.
    pub fn lower_support(&self) -> f64 {
        match *self {
            TailLaw::Pareto { scale, .. } => scale,
            TailLaw::Deterministic { value } => value,
            _ => 0.0,
        }
    }

    /// `inf{y : tail(y) ≤ u}` for `u ∈ (0, 1]`. `tail_quantile(1/x)` is the
    /// normalization function `U_G(x)`.
    pub fn tail_quantile(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u <= 1.0);
        match *self {
            TailLaw::Pareto { alpha, scale } => {
                if alpha == 2.0 {
                    scale / u.sqrt()
                } else if alpha == 1.0 {
                    scale / u
                } else {
                    scale * u.powf(-1.0 / alpha)
                }
            }
            TailLaw::Lognormal { mu, sigma } => {
                let z = std::f64::consts::SQRT_2 * erfc_inv(2.0 * u);
                (mu + sigma * z).exp()
            }
            TailLaw::Weibull { shape, scale } => scale * (-u.ln()).powf(1.0 / shape),
            TailLaw::SlowLog => (1.0 / u - 1.0).exp_m1().min(f64::MAX),
            TailLaw::Exponential { rate } => -u.ln() / rate,
            TailLaw::Deterministic { value } => value,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            TailLaw::Lognormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
            TailLaw::Deterministic { value } => value,
            _ => self.tail_quantile(open_unit(rng)),
        }
    }

    /// `E[X]`, infinite where the mean does not exist.
    pub fn mean(&self) -> f64 {
        match *self {
            TailLaw::Pareto { alpha, scale } => {
                if alpha > 1.0 {
                    alpha * scale / (alpha - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            TailLaw::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            TailLaw::Weibull { shape, scale } => scale * statrs::function::gamma::gamma(1.0 + 1.0 / shape),
            TailLaw::SlowLog => f64::INFINITY,
            TailLaw::Exponential { rate } => 1.0 / rate,
            TailLaw::Deterministic { value } => value,
        }
    }

    pub fn analytic_indexes(&self) -> Option<AnalyticIndexes> {
        let inf = f64::INFINITY;
        match *self {
            TailLaw::Pareto { alpha, .. } => Some(AnalyticIndexes { alpha: Some(alpha), j_plus: alpha, j_minus: alpha, k_minus: alpha }),
            TailLaw::Lognormal { .. } | TailLaw::Weibull { .. } | TailLaw::Exponential { .. } => {
                Some(AnalyticIndexes { alpha: None, j_plus: inf, j_minus: inf, k_minus: inf })
            }
            TailLaw::SlowLog => Some(AnalyticIndexes { alpha: Some(0.0), j_plus: 0.0, j_minus: 0.0, k_minus: 0.0 }),
            TailLaw::Deterministic { .. } => None,
        }
    }

    /// Regular-variation index, when the law is regularly varying with positive index.
    pub fn regular_variation_index(&self) -> Option<f64> {
        match *self {
            TailLaw::Pareto { alpha, .. } => Some(alpha),
            _ => None,
        }
    }
}

/// Whether an index estimate settled within the probed window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexStatus {
    Finite,
    /// The estimator saw an exactly infinite value (e.g. zero log-excess).
    Infinite,
    /// Still growing along the x-window; `value` is the last finite estimate.
    Diverging,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexEstimate {
    pub value: f64,
    pub status: IndexStatus,
    pub standard_error: Option<f64>,
    pub method: String,
}

impl IndexEstimate {
    fn finite(value: f64, method: String) -> Self {
        Self { value, status: IndexStatus::Finite, standard_error: None, method }
    }

    pub fn is_finite(&self) -> bool {
        self.status == IndexStatus::Finite
    }

    /// Treats diverging and infinite estimates as exceeding every threshold.
    pub fn exceeds(&self, threshold: f64) -> bool {
        self.status != IndexStatus::Finite || self.value > threshold
    }
}

/// Hill estimator from the `k` largest of `samples`.
pub fn hill_estimate(samples: &[f64], k: usize) -> Result<IndexEstimate> {
    let n = samples.len();
    if k == 0 || k >= n {
        return Err(input(format!("Hill needs 0 < k < n, got k={k}, n={n}")));
    }
    if let Some(bad) = samples.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(input(format!("Hill needs positive finite samples, got {bad}")));
    }
    let mut buf = samples.to_vec();
    let (top, threshold, _) = buf.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = *threshold;
    let log_excess: f64 = top.iter().map(|v| (v / threshold).ln()).sum();
    let method = format!("hill(k={k}, n={n})");
    if log_excess <= 0.0 {
        return Ok(IndexEstimate { value: f64::INFINITY, status: IndexStatus::Infinite, standard_error: None, method });
    }
    let value = k as f64 / log_excess;
    Ok(IndexEstimate { value, status: IndexStatus::Finite, standard_error: Some(value / (k as f64).sqrt()), method })
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Default x-window for the index estimators: 32 log-spaced points on `[1e2, 1e6]`.
pub fn default_x_window() -> Vec<f64> {
    log_grid(1e2, 1e6, 32)
}

pub const DEFAULT_V_GRID: [f64; 6] = [1.02, 1.05, 1.1, 2.0, 4.0, 8.0];

/// The part of [`DEFAULT_V_GRID`] close enough to 1 for the Karamata estimator.
pub const KARAMATA_V_GRID: [f64; 3] = [1.02, 1.05, 1.1];

/// Relative growth along the window above which an index is reported as diverging.
const DIVERGENCE_GROWTH: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatuszewskaEstimate {
    pub j_plus: IndexEstimate,
    pub j_minus: IndexEstimate,
    /// Fraction of (v, x) grid points where both tails were representable.
    pub coverage: f64,
}

/// Extremes of `tail(vx)/tail(x)` over the lower and upper halves of the
/// usable window, as `(min_lo, max_lo, min_hi, max_hi)`.
fn ratio_extremes<S: Survival + ?Sized>(law: &S, v: f64, x_grid: &[f64]) -> (Option<[f64; 4]>, usize) {
    let ratios: Vec<f64> = x_grid
        .iter()
        .filter_map(|&x| {
            let (a, b) = (law.tail(x), law.tail(v * x));
            (a > f64::MIN_POSITIVE && b > f64::MIN_POSITIVE).then(|| b / a)
        })
        .collect();
    let used = ratios.len();
    if ratios.is_empty() {
        return (None, 0);
    }
    let mid = ratios.len() / 2;
    let (lo, hi) = if ratios.len() == 1 { (&ratios[..], &ratios[..]) } else { (&ratios[..mid], &ratios[mid..]) };
    let min = |s: &[f64]| s.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (Some([min(lo), max(lo), min(hi), max(hi)]), used)
}

fn exponent(ratio: f64, v: f64) -> f64 {
    -ratio.ln() / v.ln()
}

fn grows(early: f64, late: f64) -> bool {
    late > early * (1.0 + DIVERGENCE_GROWTH) + 1e-3
}

fn check_grids(v_grid: &[f64], x_grid: &[f64]) -> Result<()> {
    if v_grid.is_empty() || x_grid.is_empty() {
        return Err(input("index estimators need non-empty v and x grids"));
    }
    if v_grid.iter().any(|v| !(*v > 1.0)) {
        return Err(input("v grid must be strictly greater than 1"));
    }
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) || x_grid[0] <= 0.0 {
        return Err(input("x grid must be positive and increasing"));
    }
    Ok(())
}

/// Upper and lower Matuszewska indexes at the largest `v` of the grid.
///
/// `J⁺` uses the liminf of the ratio (its minimum over the tail window) and
/// `J⁻` the limsup (maximum), so `J⁻ ≤ J⁺` by construction.
pub fn matuszewska_estimate<S: Survival + ?Sized>(law: &S, v_grid: &[f64], x_grid: &[f64]) -> Result<MatuszewskaEstimate> {
    check_grids(v_grid, x_grid)?;
    let total = (v_grid.len() * x_grid.len()) as f64;
    let used: usize = v_grid.iter().map(|&w| ratio_extremes(law, w, x_grid).1).sum();
    // Largest v whose ratios are representable somewhere on the window.
    let mut vs = v_grid.to_vec();
    vs.sort_by(|a, b| b.total_cmp(a));
    let Some((v, [min_lo, max_lo, min_hi, max_hi])) =
        vs.iter().find_map(|&v| ratio_extremes(law, v, x_grid).0.map(|e| (v, e)))
    else {
        return Err(Error::Numerical(format!(
            "tail underflows on the whole x-window [{:e}, {:e}]",
            x_grid[0],
            x_grid[x_grid.len() - 1]
        )));
    };
    let method = format!("matuszewska(v={v}, x=[{:.3e}, {:.3e}])", x_grid[0], x_grid[x_grid.len() - 1]);
    let build = |early: f64, late: f64| {
        let mut est = IndexEstimate::finite(late.max(0.0), method.clone());
        if grows(early, late) {
            est.status = IndexStatus::Diverging;
        }
        est
    };
    Ok(MatuszewskaEstimate {
        j_plus: build(exponent(min_lo, v), exponent(min_hi, v)),
        j_minus: build(exponent(max_lo, v), exponent(max_hi, v)),
        coverage: used as f64 / total,
    })
}

/// Lower Karamata index: `-ln Ḡ*(v)/ln v` for each `v ∈ (1, 1.2]`,
/// extrapolated to `v ↓ 1` by a least-squares line in `ln v`.
pub fn karamata_lower_estimate<S: Survival + ?Sized>(law: &S, v_grid: &[f64], x_window: &[f64]) -> Result<IndexEstimate> {
    check_grids(v_grid, x_window)?;
    if v_grid.iter().any(|v| *v > 1.2) {
        return Err(input("Karamata v grid must lie in (1, 1.2]"));
    }
    let mut early = Vec::with_capacity(v_grid.len());
    let mut late = Vec::with_capacity(v_grid.len());
    for &v in v_grid {
        let (ext, _) = ratio_extremes(law, v, x_window);
        let [_, max_lo, _, max_hi] =
            ext.ok_or_else(|| Error::Numerical(format!("tail underflows on the whole x-window at v={v}")))?;
        early.push((v.ln(), exponent(max_lo, v)));
        late.push((v.ln(), exponent(max_hi, v)));
    }
    let (k_early, k_late) = (intercept(&early), intercept(&late));
    let method = format!(
        "karamata(v={v_grid:?}, x=[{:.3e}, {:.3e}])",
        x_window[0],
        x_window[x_window.len() - 1]
    );
    let mut est = IndexEstimate::finite(k_late.max(0.0), method);
    if grows(k_early, k_late) {
        est.status = IndexStatus::Diverging;
    }
    Ok(est)
}

fn intercept(points: &[(f64, f64)]) -> f64 {
    if points.len() == 1 {
        return points[0].1;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return my;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    my - sxy / sxx * mx
}

const QUADRATURE_POINTS: usize = 4096;

/// `P(X₁ + X₂ > x)` for independent `X₁ ~ law1`, `X₂ ~ law2`.
///
/// Uses `tail1(x) + ∫ tail2(x − t) dF₁(t)` with a composite trapezoid on a
/// mesh graded geometrically toward every breakpoint, and refuses the answer
/// when halving the mesh moves it by more than 1e-3 relative.
pub fn convolution_tail(law1: &TailLaw, law2: &TailLaw, x: f64) -> Result<f64> {
    if let TailLaw::Deterministic { value } = *law1 {
        return Ok(law2.tail(x - value));
    }
    if let TailLaw::Deterministic { value } = *law2 {
        return Ok(law1.tail(x - value));
    }
    let fine = convolution_quadrature(law1, law2, x, QUADRATURE_POINTS);
    let coarse = convolution_quadrature(law1, law2, x, QUADRATURE_POINTS / 2);
    let scale = fine.abs().max(f64::MIN_POSITIVE);
    if (fine - coarse).abs() / scale > 1e-3 {
        return Err(Error::Numerical(format!(
            "convolution quadrature at x={x} not converged: {fine:e} with {QUADRATURE_POINTS} points vs {coarse:e} with {}",
            QUADRATURE_POINTS / 2
        )));
    }
    Ok(fine)
}

fn convolution_quadrature(law1: &TailLaw, law2: &TailLaw, x: f64, points: usize) -> f64 {
    let lo = law1.lower_support();
    let head = law1.tail(x);
    if x <= lo {
        return head;
    }
    let mut breaks = vec![lo, x];
    let kink = x - law2.lower_support();
    if kink > lo && kink < x {
        breaks.push(kink);
    }
    breaks.sort_by(f64::total_cmp);
    let per_segment = (points / (breaks.len() - 1)).max(8);
    let integrand = |t: f64| law2.tail(x - t) * law1.density(t).unwrap_or(0.0);
    let integral: f64 = breaks.windows(2).map(|w| graded_trapezoid(&integrand, w[0], w[1], per_segment)).sum();
    head + integral
}

/// Trapezoid on `[a, b]` with nodes graded geometrically toward both ends.
fn graded_trapezoid(f: &impl Fn(f64) -> f64, a: f64, b: f64, points: usize) -> f64 {
    let mid = 0.5 * (a + b);
    let half = mid - a;
    let m = points / 2;
    let h_min = half * 1e-9;
    let ratio = (half / h_min).powf(1.0 / (m - 1) as f64);
    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0.0);
    let mut h = h_min;
    for _ in 0..m - 1 {
        offsets.push(h);
        h *= ratio;
    }
    offsets.push(half);
    let mut nodes: Vec<f64> = offsets.iter().map(|o| a + o).collect();
    nodes.extend(offsets.iter().rev().skip(1).map(|o| b - o));
    let mut sum = 0.0;
    let mut prev = (nodes[0], f(nodes[0]));
    for &t in &nodes[1..] {
        let ft = f(t);
        sum += 0.5 * (t - prev.0) * (ft + prev.1);
        prev = (t, ft);
    }
    sum
}

/// Ratio `tail²*(x)/tail(x)` at each grid point; tends to 2 for subexponential laws.
pub fn subexp_convolution_ratio(law: &TailLaw, x_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    x_grid
        .iter()
        .map(|&x| {
            let t = law.tail(x);
            if t <= 0.0 {
                return Err(input(format!("tail vanishes at x={x}")));
            }
            Ok((x, convolution_tail(law, law, x)? / t))
        })
        .collect()
}

/// Ratio `P(X₁ + X₂ > x)/(tail₁(x) + tail₂(x))`; tends to 1 under convolution equivalence.
pub fn convolution_equivalence_check(law1: &TailLaw, law2: &TailLaw, x_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    x_grid
        .iter()
        .map(|&x| {
            let denom = law1.tail(x) + law2.tail(x);
            if denom <= 0.0 {
                return Err(input(format!("both tails vanish at x={x}")));
            }
            Ok((x, convolution_tail(law1, law2, x)? / denom))
        })
        .collect()
}

/// Three-valued membership verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassThresholds {
    /// `J⁻` above this means positively decreasing.
    pub pd: f64,
    /// `K⁻` above this (with subexponentiality) means class `A*`.
    pub a_star: f64,
}

impl Default for ClassThresholds {
    fn default() -> Self {
        Self { pd: 0.1, a_star: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub in_d: Verdict,
    pub in_l: Verdict,
    pub in_pd: Verdict,
    pub in_s: Verdict,
    pub in_a_star: Verdict,
    pub j_plus: Option<IndexEstimate>,
    pub j_minus: Option<IndexEstimate>,
    pub k_minus: Option<IndexEstimate>,
    /// `tail(x − 1)/tail(x)` at the 1e-4 and 1e-12 tail quantiles.
    pub long_tail_ratios: Vec<(f64, f64)>,
    /// Two-fold convolution ratios at two tail levels.
    pub convolution_ratios: Vec<(f64, f64)>,
}

/// Heuristic class membership from the estimators above, on the default grids.
pub fn class_diagnostics(law: &TailLaw, thresholds: ClassThresholds) -> Result<ClassReport> {
    law.validate()?;
    if let TailLaw::Deterministic { .. } = law {
        return Ok(ClassReport {
            in_d: Verdict::No,
            in_l: Verdict::No,
            in_pd: Verdict::No,
            in_s: Verdict::No,
            in_a_star: Verdict::No,
            j_plus: None,
            j_minus: None,
            k_minus: None,
            long_tail_ratios: vec![],
            convolution_ratios: vec![],
        });
    }
    let window = default_x_window();
    let mat = matuszewska_estimate(law, &DEFAULT_V_GRID, &window)?;
    let k_minus = karamata_lower_estimate(law, &KARAMATA_V_GRID, &window)?;

    let in_d = Verdict::from_bool(mat.j_plus.is_finite());
    let in_pd = Verdict::from_bool(mat.j_minus.exceeds(thresholds.pd));

    // Probe long-tailedness at fixed tail levels so light tails stay representable.
    let long_tail_ratios: Vec<(f64, f64)> = [1e-4, 1e-12]
        .iter()
        .map(|&u| {
            let x = law.tail_quantile(u).min(1e12);
            (x, law.tail(x - 1.0) / law.tail(x))
        })
        .collect();
    let (dev_mid, dev_end) = ((long_tail_ratios[0].1 - 1.0).abs(), (long_tail_ratios[1].1 - 1.0).abs());
    let in_l = if dev_end < 0.01 && dev_end <= dev_mid {
        Verdict::Yes
    } else if dev_end > 0.05 && dev_end >= 0.9 * dev_mid {
        Verdict::No
    } else {
        Verdict::Inconclusive
    };

    // Two tail levels; capped so the quadrature interval stays representable.
    let levels = [1e-4, 1e-8].map(|u| law.tail_quantile(u).min(1e12));
    let convolution_ratios = subexp_convolution_ratio(law, &levels)?;
    let (dev_a, dev_b) = ((convolution_ratios[0].1 - 2.0).abs(), (convolution_ratios[1].1 - 2.0).abs());
    let in_s = match in_l {
        Verdict::No => Verdict::No,
        _ if convolution_ratios[1].1 > 3.0 && dev_b >= dev_a => Verdict::No,
        Verdict::Yes if dev_b < 0.3 && dev_b <= dev_a + 1e-3 => Verdict::Yes,
        _ => Verdict::Inconclusive,
    };
    let in_a_star = match in_s {
        Verdict::No => Verdict::No,
        _ if !k_minus.exceeds(thresholds.a_star) => Verdict::No,
        Verdict::Yes => Verdict::Yes,
        _ => Verdict::Inconclusive,
    };
    Ok(ClassReport {
        in_d,
        in_l,
        in_pd,
        in_s,
        in_a_star,
        j_plus: Some(mat.j_plus),
        j_minus: Some(mat.j_minus),
        k_minus: Some(k_minus),
        long_tail_ratios,
        convolution_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFamily;

    const PARETO2: TailLaw = TailLaw::Pareto { alpha: 2.0, scale: 1.0 };
    const LOGNORMAL: TailLaw = TailLaw::Lognormal { mu: 0.0, sigma: 1.0 };

    fn catalog() -> Vec<TailLaw> {
        vec![
            PARETO2,
            TailLaw::Pareto { alpha: 0.7, scale: 3.0 },
            LOGNORMAL,
            TailLaw::Weibull { shape: 0.5, scale: 2.0 },
            TailLaw::SlowLog,
            TailLaw::Exponential { rate: 1.5 },
        ]
    }

    #[test]
    fn tail_examples() {
        assert!((PARETO2.tail(10.0) - 0.01).abs() < 1e-15);
        assert_eq!(TailLaw::Exponential { rate: 1.0 }.tail(0.0), 1.0);
        assert_eq!(TailLaw::SlowLog.tail(0.0), 1.0);
        assert_eq!(TailLaw::Deterministic { value: 5.0 }.tail(4.999), 1.0);
        assert_eq!(TailLaw::Deterministic { value: 5.0 }.tail(5.0), 0.0);
        assert!((LOGNORMAL.tail(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn means() {
        assert_eq!(PARETO2.mean(), 2.0);
        assert!(TailLaw::Pareto { alpha: 1.0, scale: 1.0 }.mean().is_infinite());
        assert!((TailLaw::Weibull { shape: 0.5, scale: 2.0 }.mean() - 4.0).abs() < 1e-12);
        assert!((LOGNORMAL.mean() - 0.5f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(TailLaw::Pareto { alpha: 0.0, scale: 1.0 }.validate().is_err());
        assert!(TailLaw::Weibull { shape: 1.5, scale: 1.0 }.validate().is_err());
        assert!(TailLaw::Exponential { rate: -1.0 }.validate().is_err());
        for law in catalog() {
            law.validate().unwrap();
        }
    }

    #[test]
    fn quantile_round_trip() {
        for law in catalog() {
            for k in 1..=8 {
                let u = 10f64.powi(-k);
                if matches!(law, TailLaw::SlowLog) && k > 2 {
                    // exp(1/u) overflows beyond u = 1e-2
                    continue;
                }
                let back = law.tail(law.tail_quantile(u));
                assert!((back - u).abs() < 1e-9, "{law:?} u={u} back={back}");
            }
        }
    }

    #[test]
    fn tail_is_monotone_and_vanishes() {
        for law in catalog() {
            let grid = log_grid(1e-3, 1e12, 400);
            for w in grid.windows(2) {
                assert!(law.tail(w[1]) <= law.tail(w[0]));
            }
            assert!(law.tail(1e300) < 0.01, "{law:?}");
        }
    }

    #[test]
    fn sampler_hits_quantile_level() {
        let n = 10_000_000u64;
        for (i, law) in catalog().into_iter().enumerate() {
            // SlowLog cannot reach 1e-3 in double precision: tail(f64::MAX) ≈ 1.4e-3.
            let level = if matches!(law, TailLaw::SlowLog) { 1e-2 } else { 1e-3 };
            let q = law.tail_quantile(level);
            let mut rng = StreamFamily::new(11).path(i as u64);
            let hits = (0..n).filter(|_| law.sample(&mut rng) > q).count() as f64;
            let p = hits / n as f64 / level;
            assert!((0.9..=1.1).contains(&p), "{law:?}: {p}");
        }
    }

    #[test]
    fn density_integrates_to_tail() {
        // trapezoid of the density over [a, b] against tail(a) - tail(b)
        for law in catalog() {
            let (a, b) = (law.lower_support() + 0.5, law.lower_support() + 20.0);
            let grid = log_grid(a, b, 20_001);
            let integral: f64 = grid
                .windows(2)
                .map(|w| 0.5 * (w[1] - w[0]) * (law.density(w[0]).unwrap() + law.density(w[1]).unwrap()))
                .sum();
            let exact = law.tail(a) - law.tail(b);
            assert!((integral - exact).abs() < 1e-6, "{law:?}: {integral} vs {exact}");
        }
    }

    #[test]
    fn hill_pareto_oracle() {
        for (alpha, lo, hi) in [(2.0, 1.94, 2.06), (1.0, 0.97, 1.03)] {
            let law = TailLaw::Pareto { alpha, scale: 1.0 };
            let mut rng = StreamFamily::new(5).path(alpha as u64);
            let xs: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
            let est = hill_estimate(&xs, 10_000).unwrap();
            assert!(est.value > lo && est.value < hi, "alpha={alpha}: {}", est.value);
            assert!((est.standard_error.unwrap() - est.value / 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hill_degenerate_and_errors() {
        let est = hill_estimate(&[3.0; 50], 10).unwrap();
        assert_eq!(est.status, IndexStatus::Infinite);
        assert!(hill_estimate(&[1.0, 2.0], 2).is_err());
        assert!(hill_estimate(&[1.0, -2.0, 3.0], 1).is_err());
        assert!(hill_estimate(&[1.0, 0.0, 3.0], 1).is_err());
    }

    #[test]
    fn hill_matches_hand_computation() {
        // top two of {1, 2, 4, 8} over threshold 2: ln 2 + ln 4 = 3 ln 2
        let est = hill_estimate(&[1.0, 8.0, 2.0, 4.0], 2).unwrap();
        assert!((est.value - 2.0 / (3.0 * 2f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn matuszewska_pareto_exact() {
        let est = matuszewska_estimate(&PARETO2, &[2.0], &[1e3]).unwrap();
        assert!((est.j_plus.value - 2.0).abs() < 1e-12);
        assert!((est.j_minus.value - 2.0).abs() < 1e-12);
        assert_eq!(est.j_plus.status, IndexStatus::Finite);
        let est = matuszewska_estimate(&PARETO2, &DEFAULT_V_GRID, &default_x_window()).unwrap();
        assert!((est.j_plus.value - 2.0).abs() < 1e-12 && (est.j_minus.value - 2.0).abs() < 1e-12);
        assert_eq!(est.coverage, 1.0);
    }

    #[test]
    fn matuszewska_lognormal_diverges() {
        // -ln r(2, x)/ln 2 ≈ ln x + ln 2 / 2 for the standard lognormal: ~14.2 at x = 1e6
        let est = matuszewska_estimate(&LOGNORMAL, &[2.0], &default_x_window()).unwrap();
        assert_eq!(est.j_plus.status, IndexStatus::Diverging);
        assert!(est.j_plus.value > 13.0 && est.j_plus.value < 15.5, "{}", est.j_plus.value);
    }

    #[test]
    fn matuszewska_slowlog_near_zero() {
        let est = matuszewska_estimate(&TailLaw::SlowLog, &[2.0], &default_x_window()).unwrap();
        // -ln((1 + ln(1+1e6))/(1 + ln(1+2e6)))/ln 2 = 0.0660
        assert!((est.j_minus.value - 0.0660).abs() < 5e-4, "{}", est.j_minus.value);
        assert!(est.j_minus.value < 0.1);
        let wide = matuszewska_estimate(&TailLaw::SlowLog, &[2.0], &log_grid(1e2, 1e12, 32)).unwrap();
        assert!(wide.j_minus.value < 0.05);
    }

    #[test]
    fn matuszewska_underflow_is_reported() {
        let law = TailLaw::Exponential { rate: 1.0 };
        assert!(matuszewska_estimate(&law, &[2.0], &[1e4, 1e5]).is_err());
        let partial = matuszewska_estimate(&law, &[2.0], &[10.0, 100.0, 1e4]).unwrap();
        assert!(partial.coverage < 1.0);
        // v = 8 is unusable on the default window; the estimate falls back to smaller v.
        let fallback = matuszewska_estimate(&law, &DEFAULT_V_GRID, &default_x_window()).unwrap();
        assert!(fallback.j_plus.method.contains("v=4"));
        assert_eq!(fallback.j_plus.status, IndexStatus::Diverging);
    }

    #[test]
    fn karamata_examples() {
        let k = karamata_lower_estimate(&PARETO2, &[1.05], &default_x_window()).unwrap();
        assert!((k.value - 2.0).abs() < 1e-12);
        let k = karamata_lower_estimate(&PARETO2, &[1.02, 1.05, 1.1], &default_x_window()).unwrap();
        assert!((k.value - 2.0).abs() < 1e-9);

        let slow = karamata_lower_estimate(&TailLaw::SlowLog, &[1.02, 1.05, 1.1], &default_x_window()).unwrap();
        assert!(slow.value < 0.1, "{}", slow.value);
        let slow = karamata_lower_estimate(&TailLaw::SlowLog, &[1.02, 1.05, 1.1], &log_grid(1e2, 1e10, 32)).unwrap();
        assert!(slow.value < 0.05, "{}", slow.value);

        let ln = karamata_lower_estimate(&LOGNORMAL, &[1.02, 1.05, 1.1], &log_grid(1e2, 1e4, 16)).unwrap();
        assert!(ln.value > 1.0);
        assert_eq!(ln.status, IndexStatus::Diverging);
        assert!(karamata_lower_estimate(&PARETO2, &[1.5], &[10.0]).is_err());
    }

    #[test]
    fn index_ordering_and_scale_invariance() {
        let window = default_x_window();
        for law in catalog() {
            let m = matuszewska_estimate(&law, &DEFAULT_V_GRID, &window);
            let Ok(m) = m else { continue };
            let k = karamata_lower_estimate(&law, &[1.02, 1.05, 1.1], &window).unwrap();
            assert!(k.value <= m.j_minus.value + 0.05 || k.status != IndexStatus::Finite, "{law:?}");
            assert!(m.j_minus.value <= m.j_plus.value + 1e-12, "{law:?}");

            if matches!(law, TailLaw::Pareto { .. } | TailLaw::SlowLog) {
                let scaled = Scaled { inner: &law, factor: 3.0 };
                let ks = karamata_lower_estimate(&scaled, &[1.02, 1.05, 1.1], &window).unwrap();
                assert!((ks.value - k.value).abs() < 0.01, "{law:?}: {} vs {}", ks.value, k.value);
            }
        }
    }

    #[test]
    fn convolution_pareto_two_fold() {
        // Closed form for Pareto(2, 1): tail²*(x) = x^-2 + ∫_1^{x-1} 2 t^-3 (x-t)^-2 dt + ∫_{x-1}^x 2 t^-3 dt,
        // evaluated with mpmath at 50 digits: 2.00807888e-6 at x = 1000.
        let r = subexp_convolution_ratio(&PARETO2, &[1e3]).unwrap()[0].1;
        assert!((r - 2.008_078_88).abs() < 1e-4, "{r}");
        assert!((1.99..=2.01).contains(&r));
    }

    #[test]
    fn convolution_exponential_closed_form() {
        let law = TailLaw::Exponential { rate: 1.0 };
        let r = subexp_convolution_ratio(&law, &[30.0]).unwrap()[0].1;
        assert!((r - 31.0).abs() < 31.0 * 1e-6, "{r}");
        let r0 = subexp_convolution_ratio(&law, &[0.0]).unwrap()[0].1;
        assert!((r0 - 1.0).abs() < 1e-12);
        let r0 = subexp_convolution_ratio(&PARETO2, &[0.0]).unwrap()[0].1;
        assert_eq!(r0, 1.0);
    }

    #[test]
    fn convolution_equivalence_examples() {
        let pp = convolution_equivalence_check(&PARETO2, &PARETO2, &[1e3]).unwrap()[0].1;
        assert!((0.98..=1.02).contains(&pp));
        let det = TailLaw::Deterministic { value: 5.0 };
        let pd = convolution_equivalence_check(&PARETO2, &det, &[1e3]).unwrap()[0].1;
        assert!((pd - (995.0f64 / 1000.0).powi(-2)).abs() < 1e-12);
        let pe = convolution_equivalence_check(&PARETO2, &TailLaw::Exponential { rate: 1.0 }, &[1e3, 1e5]).unwrap();
        assert!((pe[0].1 - 1.0).abs() < 0.01 && (pe[1].1 - 1.0).abs() < (pe[0].1 - 1.0).abs());
    }

    #[test]
    fn convolution_mc_cross_check() {
        // Moderate level where plain sampling resolves the two-fold tail.
        let x = 10.0;
        let quad = convolution_tail(&PARETO2, &PARETO2, x).unwrap();
        let mut rng = StreamFamily::new(9).path(0);
        let n = 4_000_000;
        let hits = (0..n).filter(|_| PARETO2.sample(&mut rng) + PARETO2.sample(&mut rng) > x).count() as f64;
        let p = hits / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p - quad).abs() < 4.0 * se, "{p} vs {quad}");
    }

    #[test]
    fn class_diagnostics_examples() {
        let t = ClassThresholds::default();
        let p = class_diagnostics(&PARETO2, t).unwrap();
        for v in [p.in_d, p.in_l, p.in_pd, p.in_s, p.in_a_star] {
            assert_eq!(v, Verdict::Yes, "{p:?}");
        }
        let s = class_diagnostics(&TailLaw::SlowLog, t).unwrap();
        assert_eq!(s.in_pd, Verdict::No);
        assert_eq!(s.in_a_star, Verdict::No);
        let e = class_diagnostics(&TailLaw::Exponential { rate: 1.0 }, t).unwrap();
        assert_eq!(e.in_l, Verdict::No);
        assert!((e.long_tail_ratios[1].1 - std::f64::consts::E).abs() < 1e-9);
        assert_eq!(e.in_s, Verdict::No);
        let l = class_diagnostics(&LOGNORMAL, t).unwrap();
        assert_eq!(l.in_d, Verdict::No);
        assert_eq!(l.in_l, Verdict::Yes);
        let d = class_diagnostics(&TailLaw::Deterministic { value: 1.0 }, t).unwrap();
        assert_eq!(d.in_s, Verdict::No);
    }

    #[test]
    fn law_config_round_trip() {
        for law in catalog() {
            let json = serde_json::to_string(&law).unwrap();
            assert_eq!(serde_json::from_str::<TailLaw>(&json).unwrap(), law);
        }
        let law: TailLaw = serde_json::from_str(r#"{"kind":"pareto","alpha":2.0,"scale":1.0}"#).unwrap();
        assert_eq!(law, PARETO2);
        assert!(serde_json::from_str::<TailLaw>(r#"{"kind":"pareto","alpha":2.0}"#).is_err());
    }
}

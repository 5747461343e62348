//! Lévy log-return models and renewal inter-arrival laws.
//!
//! `R` has Laplace exponent `φ`, `E[e^{−sR(t)}] = e^{tφ(s)}`. The per-epoch
//! discount multiplier is `W = e^{−(R(τ_i) − R(τ_{i−1}))}`, so
//! `E[W^s] = M_θ(φ(s))` with `M_θ` the inter-arrival moment generating function.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::rng::{open_unit, Stream};

/// Sub-grid size for premium integrals of models with a diffusive or
/// infinite-activity part.
pub const PREMIUM_SUBGRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevyModel {
    Drift { r: f64 },
    BrownianDrift { r: f64, sigma: f64 },
    /// Gamma process with `shape·t` shape per unit time and rate `rate`, plus drift.
    GammaSubordinator { shape: f64, rate: f64, r: f64 },
    /// Poisson(`jump_rate`) jumps of size Exp(`jump_size_rate`), plus drift.
    CompoundPoissonSubordinator { jump_rate: f64, jump_size_rate: f64, r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityCheck {
    pub ok: bool,
    pub phi_p: f64,
}

impl LevyModel {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        match *self {
            LevyModel::Drift { r } => {
                if !finite(r) || r == 0.0 {
                    return Err(input(format!("drift must be finite and non-zero, got {r} (R ≡ 0 is degenerate)")));
                }
            }
            LevyModel::BrownianDrift { r, sigma } => {
                if !finite(r) || !(sigma >= 0.0 && finite(sigma)) {
                    return Err(input(format!("Brownian model needs finite r and sigma ≥ 0, got r={r}, sigma={sigma}")));
                }
                if r == 0.0 && sigma == 0.0 {
                    return Err(input("Brownian model with r = 0 and sigma = 0 is degenerate"));
                }
            }
            LevyModel::GammaSubordinator { shape, rate, r } => {
                if !(shape > 0.0 && rate > 0.0 && r >= 0.0 && finite(shape) && finite(rate) && finite(r)) {
                    return Err(input(format!("gamma subordinator needs shape, rate > 0 and r ≥ 0, got {self:?}")));
                }
            }
            LevyModel::CompoundPoissonSubordinator { jump_rate, jump_size_rate, r } => {
                if !(jump_rate >= 0.0 && jump_size_rate > 0.0 && r >= 0.0 && finite(jump_rate) && finite(r)) {
                    return Err(input(format!("compound Poisson subordinator needs rates > 0 and r ≥ 0, got {self:?}")));
                }
                if jump_rate == 0.0 && r == 0.0 {
                    return Err(input("compound Poisson subordinator without jumps or drift is degenerate"));
                }
            }
        }
        Ok(())
    }

    /// `φ(s)`.
    pub fn laplace_exponent(&self, s: f64) -> Result<f64> {
        match *self {
            LevyModel::Drift { r } => Ok(-s * r),
            LevyModel::BrownianDrift { r, sigma } => Ok(-s * r + 0.5 * s * s * sigma * sigma),
            LevyModel::GammaSubordinator { shape, rate, r } => {
                if s <= -rate {
                    return Err(Error::Domain { what: "gamma subordinator Laplace exponent", bound: format!("s > {}", -rate), value: s });
                }
                Ok(-s * r - shape * (s / rate).ln_1p())
            }
            LevyModel::CompoundPoissonSubordinator { jump_rate, jump_size_rate, r } => {
                if s <= -jump_size_rate {
                    return Err(Error::Domain {
                        what: "compound Poisson Laplace exponent",
                        bound: format!("s > {}", -jump_size_rate),
                        value: s,
                    });
                }
                Ok(-s * r - jump_rate * s / (jump_size_rate + s))
            }
        }
    }

    /// `φ(p) < 0`; by convexity and `φ(0) = 0` this gives `φ < 0` on `(0, p]`.
    pub fn check_negativity(&self, p: f64) -> Result<NegativityCheck> {
        if !(p > 0.0) {
            return Err(input(format!("p must be positive, got {p}")));
        }
        let phi_p = self.laplace_exponent(p)?;
        Ok(NegativityCheck { ok: phi_p < 0.0, phi_p })
    }

    /// Non-decreasing and not identically zero.
    pub fn is_subordinator(&self) -> bool {
        match *self {
            LevyModel::Drift { r } => r > 0.0,
            LevyModel::BrownianDrift { r, sigma } => sigma == 0.0 && r > 0.0,
            LevyModel::GammaSubordinator { shape, rate, r } => shape > 0.0 && rate > 0.0 && r >= 0.0,
            LevyModel::CompoundPoissonSubordinator { jump_rate, jump_size_rate, r } => {
                jump_size_rate > 0.0 && r >= 0.0 && (jump_rate > 0.0 || r > 0.0)
            }
        }
    }

    /// Deterministic drift `r`.
    pub fn drift(&self) -> f64 {
        match *self {
            LevyModel::Drift { r }
            | LevyModel::BrownianDrift { r, .. }
            | LevyModel::GammaSubordinator { r, .. }
            | LevyModel::CompoundPoissonSubordinator { r, .. } => r,
        }
    }

    /// `R(t)` increment over a window of length `t`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        self.sample_interval(t, rng, None).0
    }

    /// Increment over `[0, t]` and, when `bridge` is given, the premium factor
    /// `∫₀ᵗ e^{−(R(u) − R(0))} du`.
    ///
    /// `rng` is consumed identically whether or not the factor is requested;
    /// any extra randomness needed to fill in the path between the endpoints
    /// is drawn from `bridge` only. This keeps claim-side simulation
    /// bit-identical between tail and ruin runs.
    pub fn sample_interval<R: Rng + ?Sized>(&self, t: f64, rng: &mut R, bridge: Option<&mut Stream>) -> (f64, f64) {
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        match *self {
            LevyModel::Drift { r } => (r * t, bridge.map_or(f64::NAN, |_| drift_segment(r, t))),
            LevyModel::BrownianDrift { r, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                let inc = r * t + sigma * t.sqrt() * z;
                let factor = match bridge {
                    None => f64::NAN,
                    Some(_) if sigma == 0.0 => drift_segment(r, t),
                    Some(b) => brownian_bridge_factor(r, sigma, t, inc, b),
                };
                (inc, factor)
            }
            LevyModel::GammaSubordinator { shape, rate, r } => {
                let g = gamma_draw(shape * t, rate, rng);
                let factor = bridge.map_or(f64::NAN, |b| gamma_bridge_factor(shape, rate, r, t, g, b));
                (r * t + g, factor)
            }
            LevyModel::CompoundPoissonSubordinator { jump_rate, jump_size_rate, r } => {
                // Jump times are drawn sequentially, so the path is fully known and
                // the premium factor is exact without extra randomness.
                let want = bridge.is_some();
                let mut level = 0.0;
                let mut factor = 0.0;
                let mut last = 0.0;
                if jump_rate > 0.0 {
                    let mut s = 0.0;
                    loop {
                        s += -open_unit(rng).ln() / jump_rate;
                        if s > t {
                            break;
                        }
                        if want {
                            factor += (-(level + r * last)).exp() * drift_segment(r, s - last);
                        }
                        level += -open_unit(rng).ln() / jump_size_rate;
                        last = s;
                    }
                }
                if want {
                    factor += (-(level + r * last)).exp() * drift_segment(r, t - last);
                } else {
                    factor = f64::NAN;
                }
                (r * t + level, factor)
            }
        }
    }
}

/// `∫₀^Δ e^{−r u} du`, with the `r = 0` limit `Δ`.
#[inline]
fn drift_segment(r: f64, dt: f64) -> f64 {
    if r == 0.0 {
        dt
    } else {
        -(-r * dt).exp_m1() / r
    }
}

fn gamma_draw<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    if shape <= 0.0 {
        return 0.0;
    }
    Gamma::new(shape, 1.0 / rate).expect("validated gamma parameters").sample(rng)
}

fn trapezoid_exp_neg(values: &[f64], dt: f64) -> f64 {
    let mut sum = 0.0;
    for w in values.windows(2) {
        sum += 0.5 * dt * ((-w[0]).exp() + (-w[1]).exp());
    }
    sum
}

/// Brownian bridge from 0 to `inc` on a uniform sub-grid, trapezoid rule.
fn brownian_bridge_factor(r: f64, sigma: f64, t: f64, inc: f64, rng: &mut Stream) -> f64 {
    let m = PREMIUM_SUBGRID;
    let dt = t / m as f64;
    let sd = sigma * dt.sqrt();
    // Free walk, then pinned to the endpoint: B(u) − (u/t)(B(t) − inc).
    let mut walk = Vec::with_capacity(m + 1);
    walk.push(0.0);
    let mut acc = 0.0;
    for _ in 0..m {
        let z: f64 = rng.sample(StandardNormal);
        acc += r * dt + sd * z;
        walk.push(acc);
    }
    let end = walk[m];
    for (k, v) in walk.iter_mut().enumerate() {
        *v -= (k as f64 / m as f64) * (end - inc);
    }
    trapezoid_exp_neg(&walk, dt)
}

/// Gamma bridge: the jump mass `g` split over the sub-grid with Dirichlet
/// weights, then a trapezoid over the resulting path.
fn gamma_bridge_factor(shape: f64, rate: f64, r: f64, t: f64, g: f64, rng: &mut Stream) -> f64 {
    let m = PREMIUM_SUBGRID;
    let dt = t / m as f64;
    let parts: Vec<f64> = (0..m).map(|_| gamma_draw(shape * dt, rate, rng)).collect();
    let total: f64 = parts.iter().sum();
    let mut path = Vec::with_capacity(m + 1);
    path.push(0.0);
    let mut jumps = 0.0;
    for (k, p) in parts.iter().enumerate() {
        jumps += if total > 0.0 { g * p / total } else { g / m as f64 };
        path.push(r * dt * (k + 1) as f64 + jumps);
    }
    trapezoid_exp_neg(&path, dt)
}

/// Inter-arrival law of the renewal claim-arrival process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterArrivalLaw {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Deterministic { delta: f64 },
}

impl InterArrivalLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            InterArrivalLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            InterArrivalLaw::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            InterArrivalLaw::Deterministic { delta } => delta > 0.0 && delta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(input(format!("invalid inter-arrival law {self:?}")))
        }
    }

    /// `E[e^{uθ}]`; finite for `u < rate` (exponential, gamma) and every `u` (deterministic).
    pub fn mgf(&self, u: f64) -> Result<f64> {
        match *self {
            InterArrivalLaw::Exponential { rate } => {
                if u >= rate {
                    return Err(Error::Domain { what: "exponential inter-arrival mgf", bound: format!("u < {rate}"), value: u });
                }
                Ok(rate / (rate - u))
            }
            InterArrivalLaw::Gamma { shape, rate } => {
                if u >= rate {
                    return Err(Error::Domain { what: "gamma inter-arrival mgf", bound: format!("u < {rate}"), value: u });
                }
                Ok((rate / (rate - u)).powf(shape))
            }
            InterArrivalLaw::Deterministic { delta } => Ok((u * delta).exp()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            InterArrivalLaw::Exponential { rate } => 1.0 / rate,
            InterArrivalLaw::Gamma { shape, rate } => shape / rate,
            InterArrivalLaw::Deterministic { delta } => delta,
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InterArrivalLaw::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            InterArrivalLaw::Gamma { shape, rate } => gamma_draw(shape, rate, rng),
            InterArrivalLaw::Deterministic { delta } => delta,
        }
    }
}

/// `E[e^{−sR(θ)}] = M_θ(φ(s))`, the `s`-th moment of the per-epoch discount `W`.
pub fn discount_moment(model: &LevyModel, arrival: &InterArrivalLaw, s: f64) -> Result<f64> {
    arrival.mgf(model.laplace_exponent(s)?)
}

/// Piecewise-linear-plus-jumps log-return path on `[0, horizon]`:
/// `R(t) = r·t + Σ_{t_k ≤ t} J_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath {
    pub horizon: f64,
    pub times: Vec<f64>,
    pub sizes: Vec<f64>,
}

/// `∫₀ᵀ c·e^{−R(s)} ds` along a drift-plus-jumps path, exact per segment.
pub fn discounted_premium_integral(model: &LevyModel, path: &JumpPath, c: f64) -> Result<f64> {
    if let LevyModel::BrownianDrift { sigma, .. } = *model {
        if sigma > 0.0 {
            return Err(input("Brownian paths are not piecewise linear; premiums use the sub-grid bridge"));
        }
    }
    if path.times.len() != path.sizes.len() {
        return Err(input("jump path needs one size per jump time"));
    }
    if path.times.windows(2).any(|w| w[1] < w[0]) || path.times.iter().any(|t| *t < 0.0 || *t > path.horizon) {
        return Err(input("jump times must be sorted within [0, horizon]"));
    }
    if c == 0.0 || path.horizon <= 0.0 {
        return Ok(0.0);
    }
    let r = model.drift();
    let mut total = 0.0;
    let mut level = 0.0;
    let mut last = 0.0;
    for (&t, &j) in path.times.iter().zip(&path.sizes) {
        total += (-(level + r * last)).exp() * drift_segment(r, t - last);
        level += j;
        last = t;
    }
    total += (-(level + r * last)).exp() * drift_segment(r, path.horizon - last);
    Ok(c * total)
}

//! Deterministic parallel Monte Carlo plumbing.
//!
//! Paths are grouped into fixed chunks of [`CHUNK`] consecutive indices. Each
//! chunk produces a partial result from the per-path streams of its indices,
//! and partials are merged in chunk order. Integer counts make the merge
//! exact; floating-point sums are merged in the same fixed order, so the
//! output does not depend on the rayon pool size.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{input, Result};

pub const CHUNK: u64 = 4096;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Runs `f` on every chunk of `0..n` in parallel and returns the partials in chunk order.
pub fn map_chunks<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect()
}

/// Element-wise sum of per-chunk count vectors.
pub fn merge_counts(partials: Vec<Vec<u64>>, len: usize) -> Vec<u64> {
    let mut total = vec![0u64; len];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// Binomial proportion with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub hits: u64,
    pub n: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    /// With zero hits the interval is `[0, 3/n]` (rule of three).
    pub fn wilson(hits: u64, n: u64) -> Self {
        assert!(n > 0 && hits <= n, "invalid proportion {hits}/{n}");
        let nf = n as f64;
        let p = hits as f64 / nf;
        if hits == 0 {
            return Self { hits, n, p_hat: 0.0, ci_low: 0.0, ci_high: (3.0 / nf).min(1.0) };
        }
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / nf;
        let centre = (p + z2 / (2.0 * nf)) / denom;
        let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
        Self { hits, n, p_hat: p, ci_low: (centre - half).max(0.0).min(p), ci_high: (centre + half).min(1.0).max(p) }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    /// Binomial standard error `sqrt(p(1-p)/n)`.
    pub fn std_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.n as f64).sqrt()
    }
}

/// Strict exceedance counts `#{v > x}` for each `x` of an increasing grid.
///
/// `counts` is a histogram over the grid: a value lands in bucket `j` when it
/// exceeds exactly the first `j` grid points. Cumulating from the top turns it
/// into exceedance counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceCounter {
    grid: Vec<f64>,
    buckets: Vec<u64>,
}

impl ExceedanceCounter {
    pub fn new(grid: &[f64]) -> Self {
        Self { grid: grid.to_vec(), buckets: vec![0; grid.len() + 1] }
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        let j = self.grid.partition_point(|&x| x < v);
        self.buckets[j] += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.buckets.iter_mut().zip(&other.buckets) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.buckets.iter().sum()
    }

    /// `#{v > grid[j]}` for every `j`.
    pub fn exceedances(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.grid.len()];
        let mut acc = 0;
        for j in (0..self.grid.len()).rev() {
            acc += self.buckets[j + 1];
            out[j] = acc;
        }
        out
    }
}

pub(crate) fn check_grid(x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() {
        return Err(input("x grid is empty"));
    }
    if x_grid.iter().any(|x| !x.is_finite()) {
        return Err(input("x grid has a non-finite value"));
    }
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(input("x grid must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        let p = Proportion::wilson(100, 1_000_000);
        assert!(p.ci_low < 1e-4 && p.ci_high > 1e-4);
        assert!((p.half_width() - 1.96e-5).abs() < 1e-6);
        let zero = Proportion::wilson(0, 1000);
        assert_eq!((zero.p_hat, zero.ci_low, zero.ci_high), (0.0, 0.0, 0.003));
        let all = Proportion::wilson(10, 10);
        assert_eq!((all.p_hat, all.ci_high), (1.0, 1.0));
    }

    #[test]
    fn counter_is_strict() {
        let mut c = ExceedanceCounter::new(&[1.0, 2.5, 4.0]);
        for v in [1.0, 2.0, 3.0, 4.0] {
            c.push(v);
        }
        assert_eq!(c.exceedances(), vec![3, 2, 0]);
        assert_eq!(c.total(), 4);
    }

    #[test]
    fn chunks_cover_range_in_order() {
        let parts = map_chunks(10_000, |r| (r.start, r.end));
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0], (0, 4096));
        assert_eq!(parts[2], (8192, 10_000));
        assert!(map_chunks(0, |r| r.start).is_empty());
    }
}

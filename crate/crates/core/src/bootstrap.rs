//! Nonparametric bootstrap: standard errors and percentile intervals.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed::{derive_path, rng, STREAM_BOOTSTRAP};

/// Attempts per replicate before it is counted as failed.
pub const MAX_ATTEMPTS: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    /// Requested number of replicates.
    pub b: usize,
    pub alpha: f64,
    pub se: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    /// Estimates of the successful replicates, in replicate order.
    pub replicates: Vec<Vec<f64>>,
    /// Replicate index of each row of `replicates`.
    pub replicate_index: Vec<usize>,
    pub n_failed: usize,
}

/// Order-statistic position `ceil(q * b)` (1-based), clamped to `[1, b]`.
/// A small allowance absorbs rounding in `q * b`.
fn order_index(q: f64, b: usize) -> usize {
    let r = (q * b as f64 - 1e-9).ceil();
    (r.max(1.0) as usize).min(b)
}

/// `(alpha/2, 1 - alpha/2)` percentile interval: the `ceil(q B)`-th smallest
/// values.
pub fn percentile_interval(values: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidData("no replicates".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let b = v.len();
    let lo = v[order_index(alpha / 2.0, b) - 1];
    let hi = v[order_index(1.0 - alpha / 2.0, b) - 1];
    Ok((lo, hi))
}

/// Sample standard deviation (divisor `B - 1`).
pub fn sample_sd(values: &[f64]) -> f64 {
    let b = values.len();
    if b < 2 {
        return 0.0;
    }
    // shifted by the first value so identical inputs give exactly 0
    let shift = values[0];
    let mean = values.iter().map(|v| v - shift).sum::<f64>() / b as f64;
    let ss: f64 = values.iter().map(|v| (v - shift - mean).powi(2)).sum();
    (ss / (b - 1) as f64).sqrt()
}

/// Resamples `n` rows with replacement.
pub fn resample(data: &Dataset, seed: u64) -> Result<Dataset> {
    let n = data.n();
    let mut r = rng(seed);
    let idx: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
    data.select_rows(&idx)
}

/// Summarizes already collected replicate estimates.
pub fn summarize(replicates: Vec<Vec<f64>>, replicate_index: Vec<usize>, b: usize, alpha: f64, n_failed: usize) -> Result<BootstrapSummary> {
    if replicates.len() < 2 {
        return Err(Error::InvalidData(format!(
            "only {} of {b} bootstrap replicates succeeded",
            replicates.len()
        )));
    }
    let p = replicates[0].len();
    let mut se = Vec::with_capacity(p);
    let mut ci_lower = Vec::with_capacity(p);
    let mut ci_upper = Vec::with_capacity(p);
    for k in 0..p {
        let col: Vec<f64> = replicates.iter().map(|r| r[k]).collect();
        se.push(sample_sd(&col));
        let (lo, hi) = percentile_interval(&col, alpha)?;
        ci_lower.push(lo);
        ci_upper.push(hi);
    }
    Ok(BootstrapSummary {
        b,
        alpha,
        se,
        ci_lower,
        ci_upper,
        replicates,
        replicate_index,
        n_failed,
    })
}

/// Runs `b` bootstrap replicates of `fit`. Replicate `r`, attempt `a` uses the
/// stream derived from `(seed, r, a)`, so results do not depend on scheduling.
/// A replicate whose fit fails is redrawn up to [`MAX_ATTEMPTS`] times.
pub fn bootstrap<F>(data: &Dataset, b: usize, alpha: f64, seed: u64, fit: F) -> Result<BootstrapSummary>
where
    F: Fn(&Dataset) -> Result<Vec<f64>> + Sync,
{
    if b < 2 {
        return Err(Error::Config("the bootstrap needs at least 2 replicates".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let draws: Vec<Option<Vec<f64>>> = (0..b)
        .into_par_iter()
        .map(|r| {
            (0..MAX_ATTEMPTS).find_map(|a| {
                let s = derive_path(seed, &[STREAM_BOOTSTRAP, r as u64, a]);
                resample(data, s).and_then(|d| fit(&d)).ok()
            })
        })
        .collect();
    let mut replicates = Vec::with_capacity(b);
    let mut index = Vec::with_capacity(b);
    let mut n_failed = 0;
    for (r, d) in draws.into_iter().enumerate() {
        match d {
            Some(v) => {
                replicates.push(v);
                index.push(r);
            }
            None => n_failed += 1,
        }
    }
    summarize(replicates, index, b, alpha, n_failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistics_rule() {
        let v: Vec<f64> = (1..=200).map(|k| k as f64 / 200.0).collect();
        assert_eq!(percentile_interval(&v, 0.05).unwrap(), (0.025, 0.975));
        assert_eq!(order_index(0.025, 200), 5);
        assert_eq!(order_index(0.975, 200), 195);
        assert_eq!(order_index(0.001, 10), 1);
    }

    #[test]
    fn constant_replicates() {
        let s = summarize(vec![vec![0.3]; 10], (0..10).collect(), 10, 0.05, 0).unwrap();
        assert_eq!(s.se, vec![0.0]);
        assert_eq!((s.ci_lower[0], s.ci_upper[0]), (0.3, 0.3));
    }
}

//! Accuracy metrics across Monte Carlo replicates.

use pairrank::{StepCdf, UnitBeta};
use serde::{Deserialize, Serialize};

pub const ISE_LOWER: f64 = -8.0;
pub const ISE_UPPER: f64 = 8.0;
pub const ISE_POINTS: usize = 1001;

/// The `ISE_POINTS` equally spaced evaluation points on `[ISE_LOWER, ISE_UPPER]`.
pub fn ise_grid() -> impl Iterator<Item = f64> {
    let dt = (ISE_UPPER - ISE_LOWER) / (ISE_POINTS - 1) as f64;
    (0..ISE_POINTS).map(move |k| ISE_LOWER + k as f64 * dt)
}

/// `int (f_hat - f0)^2` over `[ISE_LOWER, ISE_UPPER]` by the trapezoidal rule
/// on [`ise_grid`].
pub fn ise(f_hat: &StepCdf, f0: impl Fn(f64) -> f64) -> f64 {
    ise_values(ise_grid().map(|t| f_hat.eval(t)), f0)
}

/// [`ise`] for a curve already evaluated on [`ise_grid`].
pub fn ise_values(curve: impl IntoIterator<Item = f64>, f0: impl Fn(f64) -> f64) -> f64 {
    let dt = (ISE_UPPER - ISE_LOWER) / (ISE_POINTS - 1) as f64;
    let last = ISE_POINTS - 1;
    curve
        .into_iter()
        .zip(ise_grid())
        .enumerate()
        .map(|(k, (v, t))| {
            let w = if k == 0 || k == last { 0.5 } else { 1.0 };
            w * (v - f0(t)).powi(2)
        })
        .sum::<f64>()
        * dt
}

/// Replicate moments of one coordinate. `var` and `mse` divide by the number
/// of replicates, so `mse = var + bias^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub bias: f64,
    pub var: f64,
    pub mse: f64,
}

impl Moments {
    /// `bias / truth`.
    pub fn relative_bias(&self, truth: f64) -> f64 {
        self.bias / truth
    }
}

pub fn moments(values: &[f64], truth: f64) -> Moments {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r;
    let mse = values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / r;
    Moments {
        mean,
        bias: mean - truth,
        var,
        mse,
    }
}

/// `beta` flipped onto the half-sphere of `truth`.
pub fn align(beta: UnitBeta, truth: &UnitBeta) -> UnitBeta {
    if beta.dot(truth) < 0.0 {
        beta.negated()
    } else {
        beta
    }
}

//! Unit-sphere coefficients and the hyperspherical angle chart.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient vector with unit Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitBeta(Vec<f64>);

impl UnitBeta {
    /// Normalizes `v` to unit length.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidData(
                "coefficient vector must be finite and nonzero".into(),
            ));
        }
        Ok(Self(v.into_iter().map(|a| a / norm).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &UnitBeta) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|a| -a).collect())
    }

    pub fn distance(&self, other: &UnitBeta) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Angles `theta_1..theta_{p-1}` of the polar chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolarAngles(Vec<f64>);

impl PolarAngles {
    /// Wraps every component into `[-pi, pi]`; the chart is `2 pi`-periodic
    /// in each angle, so the image on the sphere is unchanged.
    pub fn new(theta: Vec<f64>) -> Self {
        Self(theta.into_iter().map(wrap_angle).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Maps `a` into `[-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) {
        a
    } else {
        a - 2.0 * PI * (a / (2.0 * PI)).round()
    }
}

/// `beta_1 = cos t1, beta_2 = sin t1 cos t2, ..., beta_p = sin t1 ... sin t_{p-1}`.
pub fn to_beta(theta: &PolarAngles) -> UnitBeta {
    UnitBeta(beta_from_angles(theta.as_slice()))
}

/// Chart evaluation on raw angles (any real values).
pub fn beta_from_angles(theta: &[f64]) -> Vec<f64> {
    let mut beta = Vec::with_capacity(theta.len() + 1);
    let mut sin_prod = 1.0;
    for &t in theta {
        beta.push(sin_prod * t.cos());
        sin_prod *= t.sin();
    }
    beta.push(sin_prod);
    beta
}

/// Inverse chart. Leading angles come from `acos` (in `[0, pi]`), the last from
/// `atan2` (in `(-pi, pi]`). When a trailing sub-vector vanishes its angles are 0.
pub fn to_angles(beta: &UnitBeta) -> PolarAngles {
    let b = beta.as_slice();
    let p = b.len();
    if p < 2 {
        return PolarAngles(Vec::new());
    }
    // tail[k] = ||b[k..]||
    let mut tail = vec![0.0; p + 1];
    for k in (0..p).rev() {
        tail[k] = b[k].hypot(tail[k + 1]);
    }
    let mut theta = Vec::with_capacity(p - 1);
    for k in 0..p - 2 {
        if tail[k] == 0.0 {
            theta.push(0.0);
        } else {
            theta.push((b[k] / tail[k]).clamp(-1.0, 1.0).acos());
        }
    }
    theta.push(b[p - 1].atan2(b[p - 2]));
    PolarAngles(theta)
}

//! Simulation designs: `X1 ~ chi^2_1`, `X2 ~ N(X1, 1)`, `H(Y) = X'beta + e`.

use crate::error::{Result, SimError};
use crate::truth::true_f0;
use pairrank::pairs::MAX_ROWS;
use pairrank::{seed, Dataset, UnitBeta};
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Common variance of every error law.
pub const ERROR_VARIANCE: f64 = PI * PI / 6.0;

const STREAM_DATA: u64 = 101;
const STREAM_CENSORING: u64 = 102;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorLaw {
    /// `F(t) = 1 - exp(-exp(t))`.
    #[serde(rename = "extreme_value")]
    ExtremeValue,
    /// `N(0, pi^2/6)`.
    #[serde(rename = "normal_pi2_6")]
    Normal,
    /// Logistic with location 0 and scale `1/sqrt(2)`.
    #[serde(rename = "logistic_inv_sqrt2")]
    Logistic,
}

impl ErrorLaw {
    pub const ALL: [ErrorLaw; 3] = [Self::ExtremeValue, Self::Normal, Self::Logistic];

    pub fn name(self) -> &'static str {
        match self {
            Self::ExtremeValue => "extreme_value",
            Self::Normal => "normal_pi2_6",
            Self::Logistic => "logistic_inv_sqrt2",
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Self::ExtremeValue => {
                let u: f64 = rng.sample(Open01);
                (-(-u).ln_1p()).ln()
            }
            Self::Normal => ERROR_VARIANCE.sqrt() * rng.sample::<f64, _>(StandardNormal),
            Self::Logistic => {
                let u: f64 = rng.sample(Open01);
                (u / (1.0 - u)).ln() / 2f64.sqrt()
            }
        }
    }
}

impl std::fmt::Display for ErrorLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ErrorLaw {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| SimError::Design(format!("unknown error law `{s}`")))
    }
}

/// Inverse transformation applied to `X'beta + e`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HLaw {
    #[default]
    Identity,
    /// `H = log`, so `Y = exp(X'beta + e)`.
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDesign {
    pub n: usize,
    pub error_law: ErrorLaw,
    #[serde(default)]
    pub h_law: HLaw,
    /// Unnormalized coefficients used to generate the responses.
    #[serde(default = "default_beta_raw")]
    pub beta_raw: Vec<f64>,
    #[serde(default = "default_reps")]
    pub n_reps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Rate of an independent exponential censoring time on the response scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub censoring_rate: Option<f64>,
}

fn default_beta_raw() -> Vec<f64> {
    vec![1.0, 1.0]
}

pub const DEFAULT_REPS: usize = 200;

fn default_reps() -> usize {
    DEFAULT_REPS
}

impl SimDesign {
    pub fn new(n: usize, error_law: ErrorLaw, n_reps: usize, seed: u64) -> Self {
        Self {
            n,
            error_law,
            h_law: HLaw::Identity,
            beta_raw: default_beta_raw(),
            n_reps,
            seed,
            censoring_rate: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n > MAX_ROWS {
            return Err(SimError::Design(format!("n = {} outside [2, {MAX_ROWS}]", self.n)));
        }
        if self.n_reps == 0 {
            return Err(SimError::Design("n_reps must be positive".into()));
        }
        if self.beta_raw.len() != 2 || self.beta_raw.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Design("beta_raw must hold two finite values".into()));
        }
        if self.beta_norm() == 0.0 {
            return Err(SimError::Design("beta_raw must be nonzero".into()));
        }
        if let Some(r) = self.censoring_rate {
            if !(r.is_finite() && r > 0.0) {
                return Err(SimError::Design(format!("censoring_rate {r} must be positive and finite")));
            }
        }
        Ok(())
    }

    pub fn beta_norm(&self) -> f64 {
        self.beta_raw.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The normalized true coefficient.
    pub fn beta0(&self) -> UnitBeta {
        UnitBeta::new(self.beta_raw.clone()).expect("validated design")
    }

    /// C.d.f. estimated by the profile fit at the unit-norm truth:
    /// `t -> F0(||beta_raw|| t)`, since `(X_i - X_j)'beta_raw = ||beta_raw|| v_ij`.
    pub fn target_cdf(&self) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
        let f0 = true_f0(self.error_law);
        let s = self.beta_norm();
        move |t| f0(s * t)
    }

    /// Replicate `rep`. The covariates and errors depend only on
    /// `(seed, rep)`, so designs differing in `h_law` share them.
    pub fn generate(&self, rep: usize) -> Result<Dataset> {
        self.validate()?;
        let mut r = seed::rng(seed::derive_path(self.seed, &[STREAM_DATA, rep as u64]));
        let mut rows = Vec::with_capacity(self.n);
        let mut y = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let z: f64 = r.sample(StandardNormal);
            let x1 = z * z;
            let x2 = x1 + r.sample::<f64, _>(StandardNormal);
            let eta = self.beta_raw[0] * x1 + self.beta_raw[1] * x2 + self.error_law.sample(&mut r);
            y.push(match self.h_law {
                HLaw::Identity => eta,
                HLaw::Log => eta.exp(),
            });
            rows.push(vec![x1, x2]);
        }
        let delta = match self.censoring_rate {
            None => None,
            Some(rate) => {
                let mut c = seed::rng(seed::derive_path(self.seed, &[STREAM_CENSORING, rep as u64]));
                let law = Exp::new(rate).map_err(|e| SimError::Design(e.to_string()))?;
                let mut delta = Vec::with_capacity(self.n);
                for t in y.iter_mut() {
                    let ci: f64 = law.sample(&mut c);
                    delta.push((*t <= ci) as u8);
                    *t = t.min(ci);
                }
                Some(delta)
            }
        };
        Ok(Dataset::from_rows(&rows, y, delta)?)
    }
}

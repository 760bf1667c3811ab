//! Right-censored responses: Kaplan-Meier estimate of the censoring survival
//! function and inverse-probability-of-censoring weighted (IPW) fits.
//!
//! The weighted likelihood replaces `I(T_i > T_j)` by
//! `D_j I(Y_i > Y_j) / G^2(Y_j)` and `I(T_i <= T_j)` by
//! `D_i I(Y_i <= Y_j) / G^2(Y_i)`. For the profile step each ordered pair is
//! turned into one isotonic observation with response `w_gt / (w_gt + w_le)`
//! and weight `w_gt + w_le`; that pair-level problem has the same maximizer
//! over monotone `F` as the two-term weighted likelihood.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::isotonic::StepCdf;
use crate::pairs::WeightMode;
use crate::polar::UnitBeta;
use crate::prl::{fit_prl_with, FitReport, PrlConfig};
use crate::score::{find_zero_crossing_with, ScoreConfig, ZeroCrossReport};

/// Lower bound applied to `G` before it is inverted.
pub const G_FLOOR: f64 = 1e-6;

/// Event fraction below which censored fits carry a warning.
pub const LOW_EVENT_FRACTION: f64 = 0.25;

/// Right-continuous nonincreasing step function with value 1 before the first
/// time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalStep {
    times: Vec<f64>,
    surv: Vec<f64>,
}

impl SurvivalStep {
    pub fn new(times: Vec<f64>, surv: Vec<f64>) -> Result<Self> {
        if times.len() != surv.len() {
            return Err(Error::InvalidData("times and survival values differ in length".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidData("survival times must be finite and strictly increasing".into()));
        }
        let mut prev = 1.0;
        for &s in &surv {
            if !(0.0..=prev).contains(&s) {
                return Err(Error::InvalidData("survival values must be nonincreasing in [0, 1]".into()));
            }
            prev = s;
        }
        Ok(Self { times, surv })
    }

    /// A survival function equal to 1 everywhere.
    pub fn constant_one() -> Self {
        Self {
            times: Vec::new(),
            surv: Vec::new(),
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn surv(&self) -> &[f64] {
        &self.surv
    }

    /// `G(t)`, right-continuous.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            1.0
        } else {
            self.surv[k - 1]
        }
    }

    /// `max(G(t), G_FLOOR)`.
    pub fn eval_floored(&self, t: f64) -> f64 {
        self.eval(t).max(G_FLOOR)
    }
}

/// Product-limit estimate of the censoring survival function `P(C > t)`.
///
/// Censorings (`delta = 0`) are the events here. At a time shared by
/// failures and censorings the failures are taken to occur first, so they
/// leave the risk set before the censorings at that time are counted.
pub fn km_censoring(data: &Dataset) -> Result<SurvivalStep> {
    let delta = data.delta().ok_or(Error::MissingDelta)?;
    let y = data.y();
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));

    let mut times = Vec::new();
    let mut surv = Vec::new();
    let mut s = 1.0;
    let mut at_risk = y.len();
    let mut pos = 0;
    while pos < order.len() {
        let t = y[order[pos]];
        let mut end = pos;
        let (mut failures, mut censorings) = (0usize, 0usize);
        while end < order.len() && y[order[end]] == t {
            if delta[order[end]] == 1 {
                failures += 1;
            } else {
                censorings += 1;
            }
            end += 1;
        }
        if censorings > 0 {
            let risk = at_risk - failures;
            s *= 1.0 - censorings as f64 / risk as f64;
            times.push(t);
            surv.push(s);
        }
        at_risk -= failures + censorings;
        pos = end;
    }
    Ok(SurvivalStep { times, surv })
}

/// IPW weights of the ordered pair `(i, j)`: the `>` term
/// `D_j I(Y_i > Y_j) / G^2(Y_j)` and the `<=` term `D_i I(Y_i <= Y_j) / G^2(Y_i)`.
/// `g_i`, `g_j` are the (floored) censoring survival values at `Y_i`, `Y_j`.
#[inline]
pub fn ipw_pair_weights(y_i: f64, y_j: f64, delta_i: u8, delta_j: u8, g_i: f64, g_j: f64) -> (f64, f64) {
    if y_i > y_j {
        let w = if delta_j == 1 { 1.0 / (g_j * g_j) } else { 0.0 };
        (w, 0.0)
    } else {
        let w = if delta_i == 1 { 1.0 / (g_i * g_i) } else { 0.0 };
        (0.0, w)
    }
}

/// The weighted pairwise rank log-likelihood over unordered pairs `i < j`,
/// with `G` floored at [`G_FLOOR`]. Zero-weight terms are skipped; a term with
/// positive weight and probability 0 makes the result `-inf`.
pub fn censored_loglik(data: &Dataset, beta: &UnitBeta, f: &StepCdf, g: &SurvivalStep) -> Result<f64> {
    let delta = data.delta().ok_or(Error::MissingDelta)?;
    check_dim(data, beta)?;
    let y = data.y();
    let mut z = Vec::new();
    data.project(beta.as_slice(), &mut z);
    let g_at: Vec<f64> = y.iter().map(|&t| g.eval_floored(t)).collect();
    let n = data.n();
    let mut ll = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (w_gt, w_le) = ipw_pair_weights(y[i], y[j], delta[i], delta[j], g_at[i], g_at[j]);
            let prob = f.eval(z[i] - z[j]);
            if w_gt > 0.0 {
                ll += w_gt * prob.ln();
            }
            if w_le > 0.0 {
                ll += w_le * (1.0 - prob).ln();
            }
        }
    }
    Ok(ll)
}

pub(crate) fn check_dim(data: &Dataset, beta: &UnitBeta) -> Result<()> {
    if beta.len() != data.p() {
        return Err(Error::InvalidData(format!(
            "coefficient has length {}, data has {} covariates",
            beta.len(),
            data.p()
        )));
    }
    Ok(())
}

fn censoring_warnings(data: &Dataset) -> Vec<String> {
    let delta = data.delta().unwrap_or(&[]);
    let events = delta.iter().filter(|&&d| d == 1).count();
    let frac = events as f64 / data.n() as f64;
    if frac < LOW_EVENT_FRACTION {
        vec![format!(
            "low effective sample: only {events} of {} responses are uncensored",
            data.n()
        )]
    } else {
        Vec::new()
    }
}

/// Weighted pairwise rank likelihood fit with `G` estimated by Kaplan-Meier.
pub fn fit_prl_censored(data: &Dataset, config: &PrlConfig) -> Result<FitReport> {
    let g = km_censoring(data)?;
    let mut report = fit_prl_with(data, &WeightMode::Ipw(&g), config)?;
    report.warnings.extend(censoring_warnings(data));
    Ok(report)
}

/// Zero-crossing of the weighted score with `G` estimated by Kaplan-Meier.
pub fn fit_score_censored(data: &Dataset, config: &ScoreConfig) -> Result<ZeroCrossReport> {
    let g = km_censoring(data)?;
    let mut report = find_zero_crossing_with(data, &WeightMode::Ipw(&g), config)?;
    report.warnings.extend(censoring_warnings(data));
    Ok(report)
}

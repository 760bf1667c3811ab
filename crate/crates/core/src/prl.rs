//! Maximum pairwise rank likelihood estimation.

use serde::{Deserialize, Serialize};

use crate::censored::check_dim;
use crate::data::Dataset;
use crate::error::Result;
use crate::isotonic::StepCdf;
use crate::optim::{argmax_first, multistart_maximize, random_starts, NelderMeadOptions, StartOutcome};
use crate::pairs::{PairTable, TieMode, WeightMode};
use crate::polar::{beta_from_angles, to_angles, PolarAngles, UnitBeta};
use crate::profile::ProfileEngine;
use crate::seed::STREAM_STARTS;

/// Probability bounds used by [`loglik_clamped`].
pub const CLAMP_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrlConfig {
    pub n_starts: usize,
    pub seed: u64,
    pub nm_tol: f64,
    pub nm_max_iter: usize,
    pub tie_mode: TieMode,
}

impl Default for PrlConfig {
    fn default() -> Self {
        Self {
            n_starts: 25,
            seed: 0,
            nm_tol: 1e-8,
            nm_max_iter: 2000,
            tie_mode: TieMode::Strict,
        }
    }
}

impl PrlConfig {
    pub(crate) fn nm_options(&self) -> NelderMeadOptions {
        NelderMeadOptions {
            tol: self.nm_tol,
            max_iter: self.nm_max_iter,
            initial_step: None,
        }
    }
}

/// Result of a multi-start fit over the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub beta_hat: UnitBeta,
    pub theta_hat: PolarAngles,
    /// Profile c.d.f. at `beta_hat`.
    pub f_hat: StepCdf,
    /// Profile log-likelihood at `beta_hat`.
    pub loglik: f64,
    /// The maximized criterion at `beta_hat` (equal to `loglik` for the
    /// likelihood fit).
    pub objective: f64,
    pub n_starts: usize,
    /// Final criterion value of each start.
    pub start_values: Vec<f64>,
    /// Per-start convergence of the simplex search.
    pub converged: Vec<bool>,
    /// The criterion took the same value at every start and at the optimum,
    /// or the fit separates every comparable pair (log-likelihood 0), so the
    /// direction is not identified.
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

fn pair_log_term(ind: bool, prob: f64) -> f64 {
    let q = if ind { prob } else { 1.0 - prob };
    q.ln()
}

fn loglik_impl(data: &Dataset, beta: &UnitBeta, f: &StepCdf, tie_mode: TieMode, clamp: bool) -> Result<f64> {
    check_dim(data, beta)?;
    let mut z = Vec::new();
    data.project(beta.as_slice(), &mut z);
    let y = data.y();
    let n = data.n();
    let mut ll = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let ind = match tie_mode {
                TieMode::Strict => y[i] > y[j],
                TieMode::TieAware => y[i] >= y[j],
            };
            let mut prob = f.eval(z[i] - z[j]);
            if clamp {
                prob = prob.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
            }
            ll += pair_log_term(ind, prob);
        }
    }
    Ok(ll)
}

/// `l(beta, F)` summed over ordered pairs `i != j`. A pair whose observed
/// outcome has probability 0 under `F` makes the value `-inf`.
///
/// In tie-aware mode a tied pair contributes `log F(v_ij) + log F(v_ji)`.
pub fn loglik(data: &Dataset, beta: &UnitBeta, f: &StepCdf, tie_mode: TieMode) -> Result<f64> {
    loglik_impl(data, beta, f, tie_mode, false)
}

/// [`loglik`] with probabilities clamped to `[CLAMP_EPS, 1 - CLAMP_EPS]`,
/// which keeps the value finite for arbitrary `F`.
pub fn loglik_clamped(data: &Dataset, beta: &UnitBeta, f: &StepCdf, tie_mode: TieMode) -> Result<f64> {
    loglik_impl(data, beta, f, tie_mode, true)
}

/// `(l(beta, F_hat_beta), F_hat_beta)`.
pub fn profile_loglik(data: &Dataset, beta: &UnitBeta, tie_mode: TieMode) -> Result<(f64, StepCdf)> {
    check_dim(data, beta)?;
    let mut eng = ProfileEngine::new(data, &WeightMode::Uniform(tie_mode))?;
    let ll = eng.loglik(beta.as_slice())?;
    let f = eng.cdf(beta.as_slice())?;
    Ok((ll, f))
}

/// Maximizes the profile pairwise rank likelihood over the unit sphere.
pub fn fit_prl(data: &Dataset, config: &PrlConfig) -> Result<FitReport> {
    fit_prl_with(data, &WeightMode::Uniform(config.tie_mode), config)
}

pub(crate) fn fit_prl_with(data: &Dataset, mode: &WeightMode<'_>, config: &PrlConfig) -> Result<FitReport> {
    let table = PairTable::new(data, mode)?;
    let make = || {
        let mut eng = ProfileEngine::from_table(data, table.clone());
        Ok(move |b: &[f64]| eng.loglik(b))
    };
    fit_sphere(data, config, &make, &table)
}

/// Shared multi-start driver: `make` builds a criterion on coefficient
/// vectors; the profile c.d.f. and log-likelihood are reported at the winner.
pub(crate) fn fit_sphere<M, F>(data: &Dataset, config: &PrlConfig, make: &M, table: &PairTable) -> Result<FitReport>
where
    M: Fn() -> Result<F> + Sync,
    F: FnMut(&[f64]) -> Result<f64>,
{
    let p = data.p();
    let mut eng = ProfileEngine::from_table(data, table.clone());
    let mut warnings = Vec::new();

    let (beta_hat, outcomes) = if p == 1 {
        let mut obj = make()?;
        let plus = obj(&[1.0])?;
        let minus = obj(&[-1.0])?;
        let beta = if minus > plus { -1.0 } else { 1.0 };
        let value = plus.max(minus);
        let outcomes = vec![StartOutcome {
            theta: Vec::new(),
            initial: plus,
            value,
            iterations: 0,
            converged: true,
        }];
        (UnitBeta::new(vec![beta])?, outcomes)
    } else {
        let starts = random_starts(p - 1, config.n_starts.max(1), config.seed, &[STREAM_STARTS]);
        let outcomes = multistart_maximize(&starts, &config.nm_options(), || {
            let mut obj = make()?;
            Ok(move |theta: &[f64]| obj(&beta_from_angles(theta)))
        })?;
        let best = argmax_first(outcomes.iter().map(|o| o.value)).unwrap_or(0);
        let theta = PolarAngles::new(outcomes[best].theta.clone());
        (crate::polar::to_beta(&theta), outcomes)
    };

    let unconverged = outcomes.iter().filter(|o| !o.converged).count();
    if unconverged > 0 {
        warnings.push(format!(
            "{unconverged} of {} starts hit the iteration cap",
            outcomes.len()
        ));
    }
    let mut obj = make()?;
    let objective = obj(beta_hat.as_slice())?;
    let loglik = eng.loglik(beta_hat.as_slice())?;
    let degenerate = p > 1
        && (loglik == 0.0
            || outcomes
                .iter()
                .all(|o| o.initial == objective && o.value == objective));
    let f_hat = eng.cdf(beta_hat.as_slice())?;
    Ok(FitReport {
        theta_hat: to_angles(&beta_hat),
        beta_hat,
        f_hat,
        loglik,
        objective,
        n_starts: outcomes.len(),
        start_values: outcomes.iter().map(|o| o.value).collect(),
        converged: outcomes.iter().map(|o| o.converged).collect(),
        degenerate,
        warnings,
    })
}

//! Uniform entry point over all estimators.

use serde::{Deserialize, Serialize};

use crate::baselines::{fit_cox, fit_pdr4, CoxConfig, CoxFit, Pdr4Config, DEFAULT_PDR4_CAP};
use crate::censored::{fit_prl_censored, fit_score_censored};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::pairs::TieMode;
use crate::polar::UnitBeta;
use crate::prl::{fit_prl, FitReport, PrlConfig};
use crate::score::{find_zero_crossing, ScoreConfig, ZeroCrossReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Prl,
    Score,
    Pdr4,
    Cox,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [Self::Prl, Self::Score, Self::Pdr4, Self::Cox];

    pub fn name(self) -> &'static str {
        match self {
            Self::Prl => "prl",
            Self::Score => "score",
            Self::Pdr4 => "pdr4",
            Self::Cox => "cox",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator `{s}` (expected prl, score, pdr4 or cox)")))
    }
}

/// Settings shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSettings {
    pub n_starts: usize,
    pub seed: u64,
    pub tie_mode: TieMode,
    pub nm_tol: f64,
    pub nm_max_iter: usize,
    pub grid_points: usize,
    pub bisect_tol: f64,
    pub pdr4_cap: usize,
    pub cox_tol: f64,
    pub cox_max_iter: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        let prl = PrlConfig::default();
        let score = ScoreConfig::default();
        let cox = CoxConfig::default();
        Self {
            n_starts: prl.n_starts,
            seed: prl.seed,
            tie_mode: prl.tie_mode,
            nm_tol: prl.nm_tol,
            nm_max_iter: prl.nm_max_iter,
            grid_points: score.grid_points,
            bisect_tol: score.bisect_tol,
            pdr4_cap: DEFAULT_PDR4_CAP,
            cox_tol: cox.tol,
            cox_max_iter: cox.max_iter,
        }
    }
}

impl FitSettings {
    pub fn prl(&self) -> PrlConfig {
        PrlConfig {
            n_starts: self.n_starts,
            seed: self.seed,
            nm_tol: self.nm_tol,
            nm_max_iter: self.nm_max_iter,
            tie_mode: self.tie_mode,
        }
    }

    pub fn score(&self) -> ScoreConfig {
        ScoreConfig {
            n_starts: self.n_starts,
            seed: self.seed,
            grid_points: self.grid_points,
            nm_tol: self.nm_tol,
            nm_max_iter: self.nm_max_iter,
            bisect_tol: self.bisect_tol,
            tie_mode: self.tie_mode,
        }
    }

    pub fn pdr4(&self) -> Pdr4Config {
        Pdr4Config {
            search: self.prl(),
            cap: self.pdr4_cap,
        }
    }

    pub fn cox(&self) -> CoxConfig {
        CoxConfig {
            tol: self.cox_tol,
            max_iter: self.cox_max_iter,
        }
    }
}

/// Estimator-specific output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitDetail {
    Sphere(FitReport),
    ZeroCross(ZeroCrossReport),
    Cox(CoxFit),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimator: EstimatorKind,
    /// Whether the censored (IPW) variant was used.
    pub censored: bool,
    pub beta: UnitBeta,
    pub detail: FitDetail,
}

/// Fits `kind`. With a `delta` column the likelihood and score estimators
/// switch to their IPW variants and Cox uses the censoring indicators; the
/// quadruple estimator has no censored form.
pub fn fit(kind: EstimatorKind, data: &Dataset, settings: &FitSettings) -> Result<Estimate> {
    let censored = data.is_censored();
    let (beta, detail) = match kind {
        EstimatorKind::Prl => {
            let r = if censored {
                fit_prl_censored(data, &settings.prl())?
            } else {
                fit_prl(data, &settings.prl())?
            };
            (r.beta_hat.clone(), FitDetail::Sphere(r))
        }
        EstimatorKind::Score => {
            let r = if censored {
                fit_score_censored(data, &settings.score())?
            } else {
                find_zero_crossing(data, &settings.score())?
            };
            (r.beta_tilde.clone(), FitDetail::ZeroCross(r))
        }
        EstimatorKind::Pdr4 => {
            if censored {
                return Err(Error::Unsupported {
                    what: "pdr4",
                    requirement: "uncensored responses".into(),
                });
            }
            let r = fit_pdr4(data, &settings.pdr4())?;
            (r.beta_hat.clone(), FitDetail::Sphere(r))
        }
        EstimatorKind::Cox => {
            let r = fit_cox(data, &settings.cox())?;
            let beta = r.beta_hat.clone().ok_or_else(|| {
                Error::InvalidData("partial likelihood is maximized at b = 0; direction undefined".into())
            })?;
            (beta, FitDetail::Cox(r))
        }
    };
    Ok(Estimate {
        estimator: kind,
        censored,
        beta,
        detail,
    })
}

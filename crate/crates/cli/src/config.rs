//! Flat TOML configuration files. Command-line flags override file values.

use crate::error::{CliError, Result};
use pairrank::{EstimatorKind, FitSettings, TieMode};
use pairrank_simlab::{ErrorLaw, HLaw, Method, SimDesign, StudyConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_ties(s: &str) -> Result<TieMode> {
    match s {
        "strict" => Ok(TieMode::Strict),
        "tie_aware" | "tie-aware" => Ok(TieMode::TieAware),
        other => Err(CliError::Config(format!("unknown tie mode `{other}` (expected strict or tie_aware)"))),
    }
}

/// Effective settings of `fit` and `bootstrap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub estimators: Vec<EstimatorKind>,
    pub seed: u64,
    pub starts: usize,
    pub ties: TieMode,
    /// Bootstrap replicates; 0 disables the bootstrap.
    pub bootstrap: usize,
    pub alpha: f64,
    pub grid_points: usize,
    pub nm_tol: f64,
    pub nm_max_iter: usize,
    pub bisect_tol: f64,
    pub pdr4_cap: usize,
    pub cox_tol: f64,
    pub cox_max_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        let s = FitSettings::default();
        Self {
            estimators: vec![EstimatorKind::Prl, EstimatorKind::Score],
            seed: s.seed,
            starts: s.n_starts,
            ties: s.tie_mode,
            bootstrap: 0,
            alpha: 0.05,
            grid_points: s.grid_points,
            nm_tol: s.nm_tol,
            nm_max_iter: s.nm_max_iter,
            bisect_tol: s.bisect_tol,
            pdr4_cap: s.pdr4_cap,
            cox_tol: s.cox_tol,
            cox_max_iter: s.cox_max_iter,
        }
    }
}

impl FitConfig {
    pub fn settings(&self) -> FitSettings {
        FitSettings {
            n_starts: self.starts,
            seed: self.seed,
            tie_mode: self.ties,
            nm_tol: self.nm_tol,
            nm_max_iter: self.nm_max_iter,
            grid_points: self.grid_points,
            bisect_tol: self.bisect_tol,
            pdr4_cap: self.pdr4_cap,
            cox_tol: self.cox_tol,
            cox_max_iter: self.cox_max_iter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() {
            return Err(CliError::Config("no estimator selected".into()));
        }
        if self.starts == 0 {
            return Err(CliError::Config("starts must be positive".into()));
        }
        if self.bootstrap == 1 {
            return Err(CliError::Config("bootstrap needs at least 2 replicates".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

/// Paper-scale replicate count selected by `--full-scale`.
pub const FULL_SCALE_REPS: usize = 1000;

/// Effective settings of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub error_law: ErrorLaw,
    pub h_law: HLaw,
    pub beta1: f64,
    pub beta2: f64,
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Exponential censoring rate; 0 means no censoring.
    pub censoring_rate: f64,
    pub starts: usize,
    pub ties: TieMode,
    pub grid_points: usize,
    /// Bootstrap replicates per fit; 0 disables intervals.
    pub bootstrap: usize,
    pub alpha: f64,
    pub pdr4_max_n: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        let s = FitSettings::default();
        let d = StudyConfig::new(vec![]);
        Self {
            n: 100,
            error_law: ErrorLaw::ExtremeValue,
            h_law: HLaw::Identity,
            beta1: 1.0,
            beta2: 1.0,
            reps: pairrank_simlab::design::DEFAULT_REPS,
            seed: 1,
            methods: vec![Method::Prl, Method::Score, Method::Pdr4, Method::Cox],
            censoring_rate: 0.0,
            starts: s.n_starts,
            ties: s.tie_mode,
            grid_points: s.grid_points,
            bootstrap: 0,
            alpha: 0.05,
            pdr4_max_n: d.pdr4_max_n,
        }
    }
}

impl SimConfig {
    pub fn design(&self) -> Result<SimDesign> {
        if self.censoring_rate < 0.0 {
            return Err(CliError::Config("censoring_rate must be nonnegative".into()));
        }
        let d = SimDesign {
            n: self.n,
            error_law: self.error_law,
            h_law: self.h_law,
            beta_raw: vec![self.beta1, self.beta2],
            n_reps: self.reps,
            seed: self.seed,
            censoring_rate: (self.censoring_rate > 0.0).then_some(self.censoring_rate),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn study(&self) -> Result<StudyConfig> {
        let mut c = StudyConfig::new(self.methods.clone());
        c.settings.n_starts = self.starts;
        c.settings.tie_mode = self.ties;
        c.settings.grid_points = self.grid_points;
        c.pdr4_max_n = self.pdr4_max_n;
        if self.bootstrap > 0 {
            c = c.with_bootstrap(self.bootstrap, self.alpha);
        }
        c.validate()?;
        Ok(c)
    }
}

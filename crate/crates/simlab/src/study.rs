//! Replication engine.

use crate::design::SimDesign;
use crate::error::{Result, SimError};
use crate::metrics::{align, ise_grid, ise_values};
use crate::report::{aggregate, Interval, ReplicateRecord, SimReport};
use pairrank::bootstrap::bootstrap;
use pairrank::estimator::{fit, FitDetail};
use pairrank::prl::profile_loglik;
use pairrank::{seed, Dataset, EstimatorKind, FitSettings, StepCdf, UnitBeta};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

const STREAM_FIT: u64 = 201;
const STREAM_BOOTSTRAP: u64 = 202;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Prl,
    Score,
    Pdr4,
    Cox,
    /// Always returns the true coefficient, with the profile c.d.f. at it
    /// for uncensored data. A check on the metric pipeline and a reference
    /// for the c.d.f. error.
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [Self::Prl, Self::Score, Self::Pdr4, Self::Cox, Self::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Prl => "prl",
            Self::Score => "score",
            Self::Pdr4 => "pdr4",
            Self::Cox => "cox",
            Self::Oracle => "oracle",
        }
    }

    pub fn estimator(self) -> Option<EstimatorKind> {
        match self {
            Self::Prl => Some(EstimatorKind::Prl),
            Self::Score => Some(EstimatorKind::Score),
            Self::Pdr4 => Some(EstimatorKind::Pdr4),
            Self::Cox => Some(EstimatorKind::Cox),
            Self::Oracle => None,
        }
    }

    fn stream(self) -> u64 {
        self as u64
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SimError::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    pub b: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.05
}

pub const DEFAULT_PDR4_MAX_N: usize = 100;

fn default_pdr4_max_n() -> usize {
    DEFAULT_PDR4_MAX_N
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub methods: Vec<Method>,
    /// Estimator settings. The fit seed of replicate `r` is derived from
    /// `settings.seed`, the design seed and `r`.
    #[serde(default)]
    pub settings: FitSettings,
    /// Percentile intervals for every method and replicate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapConfig>,
    /// The quadruple estimator is skipped above this sample size.
    #[serde(default = "default_pdr4_max_n")]
    pub pdr4_max_n: usize,
}

impl StudyConfig {
    pub fn new(methods: Vec<Method>) -> Self {
        Self {
            methods,
            settings: FitSettings::default(),
            bootstrap: None,
            pdr4_max_n: DEFAULT_PDR4_MAX_N,
        }
    }

    pub fn with_bootstrap(mut self, b: usize, alpha: f64) -> Self {
        self.bootstrap = Some(BootstrapConfig { b, alpha });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(SimError::Config("at least one method is required".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(SimError::Config("methods must be distinct".into()));
        }
        if let Some(bc) = &self.bootstrap {
            if bc.b < 2 || !(bc.alpha > 0.0 && bc.alpha < 1.0) {
                return Err(SimError::Config(format!(
                    "bootstrap needs b >= 2 and alpha in (0, 1), got b = {}, alpha = {}",
                    bc.b, bc.alpha
                )));
            }
        }
        Ok(())
    }
}

pub(crate) struct Outcome {
    pub record: ReplicateRecord,
    pub curve: Option<Vec<f64>>,
}

fn fit_method(
    method: Method,
    data: &Dataset,
    settings: &FitSettings,
    design: &SimDesign,
) -> pairrank::Result<(UnitBeta, Option<StepCdf>)> {
    let Some(kind) = method.estimator() else {
        let beta0 = design.beta0();
        if data.is_censored() {
            return Ok((beta0, None));
        }
        let (_, f) = profile_loglik(data, &beta0, settings.tie_mode)?;
        return Ok((beta0, Some(f)));
    };
    let e = fit(kind, data, settings)?;
    let f = match e.detail {
        FitDetail::Sphere(r) => Some(r.f_hat),
        FitDetail::ZeroCross(r) => Some(r.f_tilde),
        FitDetail::Cox(_) => None,
    };
    Ok((e.beta, f))
}

/// Generates every replicate of `design`, fits each method, and aggregates.
/// Replicates run in parallel; the report depends only on the inputs.
pub fn run_study(design: &SimDesign, config: &StudyConfig) -> Result<SimReport> {
    design.validate()?;
    config.validate()?;
    let started = Instant::now();
    let (methods, skipped): (Vec<Method>, Vec<Method>) = config
        .methods
        .iter()
        .partition(|&&m| !(m == Method::Pdr4 && design.n > config.pdr4_max_n));
    let outcomes: Vec<Vec<Outcome>> = (0..design.n_reps)
        .into_par_iter()
        .map(|rep| replicate(design, config, &methods, rep))
        .collect::<Result<_>>()?;
    let mut report = aggregate(design, config, &methods, skipped, outcomes);
    report.wall_clock_secs = Some(started.elapsed().as_secs_f64());
    Ok(report)
}

fn replicate(design: &SimDesign, config: &StudyConfig, methods: &[Method], rep: usize) -> Result<Vec<Outcome>> {
    let data = design.generate(rep)?;
    let beta0 = design.beta0();
    let target = design.target_cdf();
    let mut settings = config.settings;
    settings.seed = seed::derive_path(config.settings.seed, &[design.seed, STREAM_FIT, rep as u64]);

    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let mut record = ReplicateRecord {
            rep,
            method,
            beta: None,
            ise: None,
            interval: None,
            error: None,
        };
        let mut curve = None;
        match fit_method(method, &data, &settings, design) {
            Err(e) => record.error = Some(e.to_string()),
            Ok((b, f)) => {
                if let Some(f) = f {
                    let c: Vec<f64> = ise_grid().map(|t| f.eval(t)).collect();
                    record.ise = Some(ise_values(c.iter().copied(), target));
                    curve = Some(c);
                }
                record.beta = Some(align(b, &beta0).into_vec());
                if let Some(bc) = &config.bootstrap {
                    let s = seed::derive_path(design.seed, &[STREAM_BOOTSTRAP, rep as u64, method.stream()]);
                    let refit = |x: &Dataset| -> pairrank::Result<Vec<f64>> {
                        let (b, _) = fit_method(method, x, &settings, design)?;
                        Ok(align(b, &beta0).into_vec())
                    };
                    match bootstrap(&data, bc.b, bc.alpha, s, refit) {
                        Ok(sum) => {
                            record.interval = Some(Interval {
                                lower: sum.ci_lower,
                                upper: sum.ci_upper,
                                se: sum.se,
                                n_failed: sum.n_failed,
                            })
                        }
                        Err(e) => record.error = Some(format!("bootstrap: {e}")),
                    }
                }
            }
        }
        out.push(Outcome { record, curve });
    }
    Ok(out)
}

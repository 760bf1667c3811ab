//! Study reports: aggregation, JSON, and CSV tables.

use crate::design::{ErrorLaw, SimDesign};
use crate::error::Result;
use crate::metrics::{ise_grid, moments};
use crate::study::{Method, Outcome, StudyConfig};
use crate::truth::{quantile, true_f0};
use crate::{TOOL_NAME, VERSION};
use pairrank::bootstrap::sample_sd;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

pub const COORD_UNITS: &str = "rb, var and mse are 100 x computed values";
pub const ISE_UNITS: &str = "ise values are 1000 x computed values";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub se: Vec<f64>,
    pub n_failed: usize,
}

impl Interval {
    pub fn covers(&self, truth: &[f64]) -> Vec<bool> {
        truth
            .iter()
            .enumerate()
            .map(|(k, &t)| self.lower[k] <= t && t <= self.upper[k])
            .collect()
    }
}

/// One method on one replicate. `beta` is sign-aligned to the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub rep: usize,
    pub method: Method,
    pub beta: Option<Vec<f64>>,
    pub ise: Option<f64>,
    pub interval: Option<Interval>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordSummary {
    pub truth: f64,
    pub mean: f64,
    /// `None` when the true coordinate is 0.
    pub rb_x100: Option<f64>,
    pub var_x100: f64,
    pub mse_x100: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IseSummary {
    pub n: usize,
    pub mean_x1000: f64,
    pub sd_x1000: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Empty when no replicate succeeded.
    pub coords: Vec<CoordSummary>,
    /// Mean of `||beta_hat - beta0||^2`.
    pub mean_sq_error: Option<f64>,
    pub ise: Option<IseSummary>,
    /// Per-coordinate fraction of intervals containing the truth.
    pub coverage: Option<Vec<f64>>,
    pub n_intervals: usize,
    /// Replicate average of the estimated c.d.f. on the ISE grid.
    pub mean_curve: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub coords: String,
    pub ise: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub tool: String,
    pub version: String,
    pub units: Units,
    pub design: SimDesign,
    pub config: StudyConfig,
    pub methods: Vec<MethodSummary>,
    /// Requested methods not run at this sample size.
    pub skipped: Vec<Method>,
    pub replicates: Vec<ReplicateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_secs: Option<f64>,
}

pub(crate) fn aggregate(
    design: &SimDesign,
    config: &StudyConfig,
    methods: &[Method],
    skipped: Vec<Method>,
    outcomes: Vec<Vec<Outcome>>,
) -> SimReport {
    let truth = design.beta0().into_vec();
    let mut summaries = Vec::with_capacity(methods.len());
    for (mi, &method) in methods.iter().enumerate() {
        let col: Vec<&Outcome> = outcomes.iter().map(|row| &row[mi]).collect();
        let betas: Vec<&Vec<f64>> = col.iter().filter_map(|o| o.record.beta.as_ref()).collect();
        let n_ok = betas.len();
        let coords = if n_ok == 0 {
            Vec::new()
        } else {
            (0..truth.len())
                .map(|k| {
                    let vals: Vec<f64> = betas.iter().map(|b| b[k]).collect();
                    let m = moments(&vals, truth[k]);
                    CoordSummary {
                        truth: truth[k],
                        mean: m.mean,
                        rb_x100: (truth[k] != 0.0).then(|| 100.0 * m.relative_bias(truth[k])),
                        var_x100: 100.0 * m.var,
                        mse_x100: 100.0 * m.mse,
                    }
                })
                .collect()
        };
        let mean_sq_error = (n_ok > 0).then(|| {
            betas
                .iter()
                .map(|b| b.iter().zip(&truth).map(|(u, v)| (u - v).powi(2)).sum::<f64>())
                .sum::<f64>()
                / n_ok as f64
        });
        let ises: Vec<f64> = col.iter().filter_map(|o| o.record.ise).collect();
        let ise = (!ises.is_empty()).then(|| IseSummary {
            n: ises.len(),
            mean_x1000: 1000.0 * ises.iter().sum::<f64>() / ises.len() as f64,
            sd_x1000: 1000.0 * sample_sd(&ises),
        });
        let intervals: Vec<_> = col.iter().filter_map(|o| o.record.interval.as_ref()).collect();
        let coverage = (!intervals.is_empty()).then(|| {
            (0..truth.len())
                .map(|k| {
                    let hits = intervals.iter().filter(|iv| iv.covers(&truth)[k]).count();
                    hits as f64 / intervals.len() as f64
                })
                .collect()
        });
        let curves: Vec<&Vec<f64>> = col.iter().filter_map(|o| o.curve.as_ref()).collect();
        let mean_curve = (!curves.is_empty()).then(|| {
            let mut acc = vec![0.0; curves[0].len()];
            for c in &curves {
                for (a, v) in acc.iter_mut().zip(c.iter()) {
                    *a += v;
                }
            }
            acc.iter().map(|a| a / curves.len() as f64).collect()
        });
        summaries.push(MethodSummary {
            method,
            n_ok,
            n_failed: col.len() - n_ok,
            coords,
            mean_sq_error,
            ise,
            coverage,
            n_intervals: intervals.len(),
            mean_curve,
        });
    }
    SimReport {
        tool: TOOL_NAME.to_string(),
        version: VERSION.to_string(),
        units: Units {
            coords: COORD_UNITS.into(),
            ise: ISE_UNITS.into(),
        },
        design: design.clone(),
        config: config.clone(),
        methods: summaries,
        skipped,
        replicates: outcomes.into_iter().flatten().map(|o| o.record).collect(),
        wall_clock_secs: None,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row of the quantile-quantile table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqRow {
    pub method: Method,
    pub prob: f64,
    pub estimated: f64,
    /// Quantiles of the unit-norm target under each error law.
    pub reference: Vec<f64>,
}

pub const QQ_PROBS: usize = 99;

impl SimReport {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }

    /// The report without wall-clock time, which is the only part that
    /// varies between identical runs.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_clock_secs: None,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    fn provenance(&self) -> Result<String> {
        let echo = serde_json::json!({ "design": self.design, "config": self.config });
        Ok(format!(
            "# tool={} version={} seed={}\n# config={}\n",
            self.tool,
            self.version,
            self.design.seed,
            serde_json::to_string(&echo)?
        ))
    }

    /// Per-method table: RB, Var and MSE per coordinate (x100), ISE (x1000),
    /// interval coverage. Header comments carry the provenance.
    pub fn table_csv(&self) -> Result<String> {
        let p = self.design.beta_raw.len();
        let mut out = self.provenance()?;
        writeln!(out, "# units: {}; {}", self.units.coords, self.units.ise).unwrap();
        let mut header = vec!["method".to_string(), "n_ok".into(), "n_failed".into()];
        for k in 1..=p {
            header.push(format!("rb_beta{k}_x100"));
            header.push(format!("var_beta{k}_x100"));
            header.push(format!("mse_beta{k}_x100"));
        }
        header.push("mise_x1000".into());
        header.push("sd_ise_x1000".into());
        for k in 1..=p {
            header.push(format!("cp_beta{k}"));
        }
        writeln!(out, "{}", header.join(",")).unwrap();
        for s in &self.methods {
            let mut row = vec![s.method.to_string(), s.n_ok.to_string(), s.n_failed.to_string()];
            for k in 0..p {
                let c = s.coords.get(k);
                row.push(opt(c.and_then(|c| c.rb_x100)));
                row.push(opt(c.map(|c| c.var_x100)));
                row.push(opt(c.map(|c| c.mse_x100)));
            }
            row.push(opt(s.ise.as_ref().map(|i| i.mean_x1000)));
            row.push(opt(s.ise.as_ref().map(|i| i.sd_x1000)));
            for k in 0..p {
                row.push(opt(s.coverage.as_ref().map(|c| c[k])));
            }
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        Ok(out)
    }

    /// Quantiles of the replicate-averaged c.d.f. estimate against the
    /// quantiles of the target under each error law, at probabilities
    /// `0.01, ..., 0.99`.
    pub fn qq_rows(&self) -> Vec<QqRow> {
        let grid: Vec<f64> = ise_grid().collect();
        let scale = self.design.beta_norm();
        let probs: Vec<f64> = (1..=QQ_PROBS).map(|k| k as f64 / (QQ_PROBS + 1) as f64).collect();
        let reference: Vec<Vec<f64>> = probs
            .iter()
            .map(|&p| {
                ErrorLaw::ALL
                    .iter()
                    .map(|&law| {
                        let f0 = true_f0(law);
                        quantile(|t| f0(scale * t), p)
                    })
                    .collect()
            })
            .collect();
        let mut rows = Vec::new();
        for s in &self.methods {
            let Some(curve) = &s.mean_curve else { continue };
            for (pi, &p) in probs.iter().enumerate() {
                let idx = curve.iter().position(|&v| v >= p).unwrap_or(grid.len() - 1);
                rows.push(QqRow {
                    method: s.method,
                    prob: p,
                    estimated: grid[idx],
                    reference: reference[pi].clone(),
                });
            }
        }
        rows
    }

    pub fn qq_csv(&self) -> Result<String> {
        let mut out = self.provenance()?;
        let laws: Vec<&str> = ErrorLaw::ALL.iter().map(|l| l.name()).collect();
        writeln!(out, "method,prob,estimated,{}", laws.join(",")).unwrap();
        for r in self.qq_rows() {
            let refs: Vec<String> = r.reference.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{},{},{},{}", r.method, r.prob, r.estimated, refs.join(",")).unwrap();
        }
        Ok(out)
    }
}

use crate::config::{FitConfig, SimConfig};
use crate::error::{CliError, Result};
use pairrank::bootstrap::{bootstrap, BootstrapSummary};
use pairrank::estimator::{fit, FitDetail};
use pairrank::isotonic::{maxmin_oracle, STEP_CONVENTION};
use pairrank::oracle::{km_literal, loglik_literal, psi_literal};
use pairrank::prl::{loglik, profile_loglik};
use pairrank::score::psi_n;
use pairrank::{pava, seed, Dataset, EstimatorKind, StepCdf, TieMode, UnitBeta};
use pairrank_simlab::truth::logistic_cdf;
use pairrank_simlab::{run_study, ErrorLaw, SimDesign, SimReport};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const TOOL: &str = "pairrank";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
}

impl Provenance {
    fn new(command: &str, seed: u64) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            seed,
        }
    }
}

/// A step c.d.f. as `(knot, value)` pairs with its evaluation convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTable {
    pub convention: String,
    pub knots: Vec<(f64, f64)>,
}

impl From<&StepCdf> for StepTable {
    fn from(f: &StepCdf) -> Self {
        Self {
            convention: STEP_CONVENTION.into(),
            knots: f.knots().iter().copied().zip(f.values().iter().copied()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub n: usize,
    pub p: usize,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub estimator: EstimatorKind,
    pub censored: bool,
    /// Unit-norm coefficient estimate.
    pub beta: Vec<f64>,
    /// Profile log-likelihood at `beta`; the partial log-likelihood for Cox.
    pub loglik: f64,
    pub degenerate: bool,
    pub f_hat: Option<StepTable>,
    pub warnings: Vec<String>,
    pub bootstrap: Option<BootstrapSummary>,
    pub detail: FitDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub estimator: EstimatorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub provenance: Provenance,
    pub config: FitConfig,
    pub input: InputInfo,
    pub fits: Vec<FitEntry>,
    pub failures: Vec<FitFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub provenance: Provenance,
    pub config: SimConfig,
    pub report: SimReport,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn fit_entry(kind: EstimatorKind, data: &Dataset, config: &FitConfig, index: u64) -> pairrank::Result<FitEntry> {
    let settings = config.settings();
    let e = fit(kind, data, &settings)?;
    let (loglik, degenerate, f_hat, warnings) = match &e.detail {
        FitDetail::Sphere(r) => (r.loglik, r.degenerate, Some((&r.f_hat).into()), r.warnings.clone()),
        FitDetail::ZeroCross(r) => (r.loglik, r.degenerate, Some((&r.f_tilde).into()), r.warnings.clone()),
        FitDetail::Cox(r) => (r.loglik, false, None, Vec::new()),
    };
    let summary = if config.bootstrap >= 2 {
        let point = e.beta.clone();
        let s = seed::derive_path(config.seed, &[seed::STREAM_BOOTSTRAP, index]);
        Some(bootstrap(data, config.bootstrap, config.alpha, s, |x| {
            let b = fit(kind, x, &settings)?.beta;
            let b = if b.dot(&point) < 0.0 { b.negated() } else { b };
            Ok(b.into_vec())
        })?)
    } else {
        None
    };
    Ok(FitEntry {
        estimator: kind,
        censored: e.censored,
        beta: e.beta.into_vec(),
        loglik,
        degenerate,
        f_hat,
        warnings,
        bootstrap: summary,
        detail: e.detail,
    })
}

/// Fits every configured estimator. Estimators that fail are listed in the
/// output and turn the result into a fit error after the output is written.
pub fn cmd_fit(command: &str, csv: &Path, config: &FitConfig, out_dir: Option<&PathBuf>) -> Result<FitOutput> {
    config.validate()?;
    let data = Dataset::read_csv_path(csv).map_err(CliError::Data)?;
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for (i, &kind) in config.estimators.iter().enumerate() {
        match fit_entry(kind, &data, config, i as u64) {
            Ok(e) => fits.push(e),
            Err(err) => failures.push(FitFailure {
                estimator: kind,
                message: err.to_string(),
            }),
        }
    }
    let out = FitOutput {
        provenance: Provenance::new(command, config.seed),
        config: config.clone(),
        input: InputInfo {
            path: csv.display().to_string(),
            n: data.n(),
            p: data.p(),
            censored: data.is_censored(),
        },
        fits,
        failures,
    };
    let json = to_json(&out);
    match out_dir {
        Some(dir) => {
            create_dir(dir)?;
            write_file(&dir.join(format!("{command}.json")), &json)?;
        }
        None => print!("{json}"),
    }
    if !out.failures.is_empty() {
        let msgs: Vec<String> = out.failures.iter().map(|f| format!("{}: {}", f.estimator, f.message)).collect();
        return Err(CliError::Fit(msgs.join("; ")));
    }
    Ok(out)
}

/// Runs the study and writes `simulation.json`, `simulation.csv` and `qq.csv`.
pub fn cmd_simulate(config: &SimConfig, out_dir: &Path) -> Result<SimOutput> {
    let design = config.design()?;
    let study = config.study()?;
    let report = run_study(&design, &study)?;
    if let Some(secs) = report.wall_clock_secs {
        eprintln!("simulation finished in {secs:.1} s");
    }
    let report = report.without_timing();
    create_dir(out_dir)?;
    let out = SimOutput {
        provenance: Provenance::new("simulate", config.seed),
        config: config.clone(),
        report,
    };
    write_file(&out_dir.join("simulation.json"), &to_json(&out))?;
    let sim_err = |e: pairrank_simlab::SimError| CliError::Simulation(e);
    write_file(&out_dir.join("simulation.csv"), &out.report.table_csv().map_err(sim_err)?)?;
    write_file(&out_dir.join("qq.csv"), &out.report.qq_csv().map_err(sim_err)?)?;
    Ok(out)
}

struct Check {
    name: &'static str,
    worst: f64,
    tol: f64,
}

fn random_step(r: &mut impl Rng) -> StepCdf {
    let m = r.random_range(1..8);
    let mut knots: Vec<f64> = (0..m).map(|_| r.random_range(-4.0..4.0)).collect();
    knots.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = (0..m).map(|_| r.random_range(0.01..0.99)).collect();
    values.sort_by(f64::total_cmp);
    StepCdf::new(knots, values).expect("valid step function")
}

/// Compares the fast implementations with their literal definitions on
/// small random inputs.
pub fn cmd_selftest(base: u64) -> Result<()> {
    let mut r = seed::rng(base);
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..500 {
        let len = r.random_range(1..=40);
        let ind: Vec<f64> = (0..len).map(|_| r.random_range(0..2) as f64).collect();
        let w: Vec<f64> = (0..len).map(|_| r.random_range(0.1..5.0)).collect();
        let f = pava(&ind, &w).map_err(|e| CliError::SelfTest(e.to_string()))?;
        for j in 0..len {
            worst = worst.max((f.fitted[j] - maxmin_oracle(&ind, &w, j)).abs());
        }
    }
    checks.push(Check { name: "pava vs max-min formula", worst, tol: 1e-12 });

    let (mut ll_gap, mut psi_gap, mut profile_gap) = (0.0f64, 0.0f64, 0.0f64);
    for rep in 0..40u64 {
        let data = SimDesign::new(6, ErrorLaw::ALL[rep as usize % 3], 1, base ^ rep).generate(0)?;
        let beta = UnitBeta::new(vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)])
            .map_err(|e| CliError::SelfTest(e.to_string()))?;
        let mode = if rep % 2 == 0 { TieMode::Strict } else { TieMode::TieAware };
        let f = random_step(&mut r);
        let fast = loglik(&data, &beta, &f, mode).map_err(|e| CliError::SelfTest(e.to_string()))?;
        ll_gap = ll_gap.max((fast - loglik_literal(&data, beta.as_slice(), &f, mode)).abs());
        let psi = psi_n(&data, &beta, mode).map_err(|e| CliError::SelfTest(e.to_string()))?.psi;
        let slow = psi_literal(&data, beta.as_slice(), mode);
        for (a, b) in psi.iter().zip(&slow) {
            psi_gap = psi_gap.max((a - b).abs());
        }
        let (pl, _) = profile_loglik(&data, &beta, mode).map_err(|e| CliError::SelfTest(e.to_string()))?;
        profile_gap = profile_gap.max(fast - pl);
    }
    checks.push(Check { name: "pairwise log-likelihood vs double loop", worst: ll_gap, tol: 1e-12 });
    checks.push(Check { name: "score vs literal sum", worst: psi_gap, tol: 1e-12 });
    checks.push(Check { name: "profile dominates random c.d.f.s", worst: profile_gap.max(0.0), tol: 1e-9 });

    let mut km_gap = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(2..15);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(0..6) as f64).collect();
        let delta: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let data = Dataset::from_rows(&rows, y.clone(), Some(delta.clone())).map_err(|e| CliError::SelfTest(e.to_string()))?;
        let g = pairrank::censored::km_censoring(&data).map_err(|e| CliError::SelfTest(e.to_string()))?;
        for t in 0..7 {
            let t = t as f64 - 0.5;
            km_gap = km_gap.max((g.eval(t) - km_literal(&y, &delta, t)).abs());
        }
    }
    checks.push(Check { name: "Kaplan-Meier vs product-limit enumeration", worst: km_gap, tol: 1e-14 });

    let mut diffs: Vec<f64> = (0..200_000)
        .map(|_| ErrorLaw::ExtremeValue.sample(&mut r) - ErrorLaw::ExtremeValue.sample(&mut r))
        .collect();
    diffs.sort_by(f64::total_cmp);
    let n = diffs.len() as f64;
    let gap = diffs
        .iter()
        .enumerate()
        .map(|(i, &x)| (logistic_cdf(x) - i as f64 / n).abs().max(((i + 1) as f64 / n - logistic_cdf(x)).abs()))
        .fold(0.0, f64::max);
    checks.push(Check { name: "Gumbel difference vs logistic (2e5 draws)", worst: gap, tol: 5e-3 });

    let mut failed = Vec::new();
    for c in &checks {
        let ok = c.worst <= c.tol;
        println!("{} {}: {:.2e} (tol {:.0e})", if ok { "ok  " } else { "FAIL" }, c.name, c.worst, c.tol);
        if !ok {
            failed.push(c.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::SelfTest(failed.join(", ")))
    }
}

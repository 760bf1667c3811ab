//! Score-type estimator: the zero-crossing of the profiled score `psi_n`.
//!
//! `psi_n` is piecewise constant in the coefficient, so it has no roots in
//! general; a zero-crossing is a point whose every neighborhood contains
//! arguments giving both signs. With `p` covariates the search is run `p`
//! times, each time dropping one component of `psi_n` (the `p - 1` remaining
//! equations match the `p - 1` free angles), and the `p` solutions are
//! averaged.

use serde::{Deserialize, Serialize};

use crate::censored::check_dim;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::isotonic::StepCdf;
use crate::optim::{argmax_first, minimize, random_starts, NelderMeadOptions};
use crate::pairs::{PairTable, TieMode, WeightMode};
use crate::polar::{beta_from_angles, to_angles, to_beta, wrap_angle, PolarAngles, UnitBeta};
use crate::profile::ProfileEngine;
use crate::seed::STREAM_SCORE_K;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Relative residual below which a minimum of `||S^(-k)||` counts as a
/// zero-crossing when `p > 2`.
pub const NEAR_ZERO_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreValue {
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub n_starts: usize,
    pub seed: u64,
    /// Grid size of the one-dimensional scan used when `p = 2`.
    pub grid_points: usize,
    pub nm_tol: f64,
    pub nm_max_iter: usize,
    /// Final bracket width of the bisection refining each sign change.
    pub bisect_tol: f64,
    pub tie_mode: TieMode,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            n_starts: 25,
            seed: 0,
            grid_points: 4096,
            nm_tol: 1e-8,
            nm_max_iter: 2000,
            bisect_tol: 1e-8,
            tie_mode: TieMode::Strict,
        }
    }
}

/// Search result for one left-out component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCrossing {
    /// Index of the dropped component (0-based).
    pub k: usize,
    pub theta: Vec<f64>,
    /// `||S^(-k)||` at `theta`.
    pub residual_norm: f64,
    /// Profile log-likelihood at `theta`.
    pub pl_value: f64,
    /// Whether a genuine crossing (sign change, or near-zero minimum) was found.
    pub found: bool,
    /// Final bisection bracket in `theta_1` when `p = 2`.
    pub bracket: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCrossReport {
    pub beta_tilde: UnitBeta,
    pub theta_tilde: PolarAngles,
    pub per_k: Vec<ComponentCrossing>,
    /// Profile c.d.f. at `beta_tilde`.
    pub f_tilde: StepCdf,
    /// Profile log-likelihood at `beta_tilde`.
    pub loglik: f64,
    /// `psi_n` vanishes on a whole arc of the scan (`p = 2`) or at every
    /// search point (`p > 2`), so zero-crossings are not isolated; the
    /// reported point maximizes the profile likelihood among the zeros.
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

/// `psi_n(beta) = n^-2 sum_{i != j} (X_i - X_j) {I(Y_i > Y_j) - F_hat_beta(v_ij)}`.
pub fn psi_n(data: &Dataset, beta: &UnitBeta, tie_mode: TieMode) -> Result<ScoreValue> {
    check_dim(data, beta)?;
    let mut eng = ProfileEngine::new(data, &WeightMode::Uniform(tie_mode))?;
    let mut psi = vec![0.0; data.p()];
    eng.loglik_and_psi(beta.as_slice(), &mut psi)?;
    Ok(ScoreValue { psi })
}

/// `F_tilde`: the profile c.d.f. at `beta_tilde`.
pub fn f_tilde(data: &Dataset, beta_tilde: &UnitBeta, tie_mode: TieMode) -> Result<StepCdf> {
    check_dim(data, beta_tilde)?;
    ProfileEngine::new(data, &WeightMode::Uniform(tie_mode))?.cdf(beta_tilde.as_slice())
}

/// Locates the zero-crossing of `psi_n` and reports `beta_tilde`, `F_tilde`.
pub fn find_zero_crossing(data: &Dataset, config: &ScoreConfig) -> Result<ZeroCrossReport> {
    find_zero_crossing_with(data, &WeightMode::Uniform(config.tie_mode), config)
}

pub(crate) fn find_zero_crossing_with(
    data: &Dataset,
    mode: &WeightMode<'_>,
    config: &ScoreConfig,
) -> Result<ZeroCrossReport> {
    let p = data.p();
    if p < 2 {
        return Err(Error::Unsupported {
            what: "score zero-crossing",
            requirement: "at least two covariates".into(),
        });
    }
    let table = PairTable::new(data, mode)?;
    let mut eng = ProfileEngine::from_table(data, table.clone());
    let (per_k, degenerate) = if p == 2 {
        scan_p2(&mut eng, config)?
    } else {
        search_general(data, &table, config)?
    };

    let mut warnings = Vec::new();
    for c in per_k.iter().filter(|c| !c.found) {
        warnings.push(format!(
            "no zero-crossing found with component {} left out; using the best residual point",
            c.k + 1
        ));
    }
    let theta_tilde = combine(&per_k);
    let beta_tilde = to_beta(&theta_tilde);
    let loglik = eng.loglik(beta_tilde.as_slice())?;
    let f_tilde = eng.cdf(beta_tilde.as_slice())?;
    Ok(ZeroCrossReport {
        beta_tilde,
        theta_tilde,
        per_k,
        f_tilde,
        loglik,
        degenerate,
        warnings,
    })
}

/// Averages the per-component solutions. Each is first moved to the sign of
/// the candidate with the largest profile likelihood, then its last angle is
/// unwrapped to within `pi` of the reference so the mean does not straddle
/// the branch cut.
fn combine(per_k: &[ComponentCrossing]) -> PolarAngles {
    let best = argmax_first(per_k.iter().map(|c| c.pl_value)).unwrap_or(0);
    let reference = UnitBeta::new(beta_from_angles(&per_k[best].theta)).expect("chart is unit norm");
    let ref_theta = to_angles(&reference).into_vec();
    let last = ref_theta.len() - 1;
    let mut mean = vec![0.0; ref_theta.len()];
    for c in per_k {
        let mut b = UnitBeta::new(beta_from_angles(&c.theta)).expect("chart is unit norm");
        if b.dot(&reference) < 0.0 {
            b = b.negated();
        }
        let mut t = to_angles(&b).into_vec();
        t[last] = ref_theta[last] + wrap_angle(t[last] - ref_theta[last]);
        for (m, v) in mean.iter_mut().zip(&t) {
            *m += v;
        }
    }
    let k = per_k.len() as f64;
    PolarAngles::new(mean.into_iter().map(|m| m / k).collect())
}

fn grid_theta(j: usize, g: usize) -> f64 {
    -PI + 2.0 * PI * j as f64 / g as f64
}

struct Scalar<'e, 'a> {
    eng: &'e mut ProfileEngine<'a>,
    psi: Vec<f64>,
    comp: usize,
}

impl Scalar<'_, '_> {
    /// Remaining component of `psi_n` when component `1 - comp` is dropped,
    /// i.e. `psi_n[comp]`, and the profile log-likelihood.
    fn eval(&mut self, t: f64) -> Result<(f64, f64)> {
        let beta = [t.cos(), t.sin()];
        let ll = self.eng.loglik_and_psi(&beta, &mut self.psi)?;
        Ok((self.psi[self.comp], ll))
    }
}

/// `p = 2`: grid scan of both components, then bisection of every sign change.
fn scan_p2(eng: &mut ProfileEngine<'_>, config: &ScoreConfig) -> Result<(Vec<ComponentCrossing>, bool)> {
    let g = config.grid_points.max(8);
    let mut vals = vec![[0.0f64; 2]; g];
    let mut pl = vec![0.0; g];
    let mut psi = vec![0.0; 2];
    // the second half of an even grid is the exact negation of the first
    let half = if g.is_multiple_of(2) { g / 2 } else { g };
    let beta_at = |j: usize| {
        let t = grid_theta(j % half, g);
        let s = if j >= half { -1.0 } else { 1.0 };
        [s * t.cos(), s * t.sin()]
    };
    for j in 0..half {
        pl[j] = eng.loglik_and_psi(&beta_at(j), &mut psi)?;
        vals[j] = [psi[0], psi[1]];
        if half < g {
            pl[j + half] = eng.loglik_and_psi_reflected(&mut psi);
            vals[j + half] = [psi[0], psi[1]];
        }
    }

    // psi vanishing at two neighbouring grid points means it is zero on a
    // whole arc, where every point is a zero-crossing
    let zero = |j: usize| vals[j][0] == 0.0 && vals[j][1] == 0.0;
    let degenerate = (0..g).any(|j| zero(j) && zero((j + 1) % g));
    if degenerate {
        let j = flat_center(&pl, zero, g);
        let t = grid_theta(j, g);
        let per_k = (0..2)
            .map(|k| ComponentCrossing {
                k,
                theta: vec![t],
                residual_norm: 0.0,
                pl_value: pl[j],
                found: true,
                bracket: None,
            })
            .collect();
        return Ok((per_k, true));
    }

    let mut per_k = Vec::with_capacity(2);
    for k in 0..2 {
        // dropping component k leaves psi[1 - k]
        let comp = 1 - k;
        let mut s = Scalar { eng, psi: vec![0.0; 2], comp };
        let mut best: Option<ComponentCrossing> = None;
        for j in 0..g {
            let (a, fa) = (grid_theta(j, g), vals[j][comp]);
            let (b, fb) = if j + 1 < g {
                (grid_theta(j + 1, g), vals[j + 1][comp])
            } else {
                (PI, vals[0][comp])
            };
            let cand = if fa == 0.0 {
                Some(ComponentCrossing {
                    k,
                    theta: vec![a],
                    residual_norm: 0.0,
                    pl_value: pl[j],
                    found: true,
                    bracket: Some((a, a)),
                })
            } else if fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
                Some(bisect(&mut s, k, a, fa, b, config.bisect_tol)?)
            } else {
                None
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.pl_value > b.pl_value) {
                    best = Some(c);
                }
            }
        }
        let chosen = match best {
            Some(c) => c,
            None => {
                // no sign change: smallest |S|, ties by larger likelihood
                let mut j_best = 0;
                for j in 1..g {
                    let (r, rb) = (vals[j][comp].abs(), vals[j_best][comp].abs());
                    if r < rb || (r == rb && pl[j] > pl[j_best]) {
                        j_best = j;
                    }
                }
                ComponentCrossing {
                    k,
                    theta: vec![grid_theta(j_best, g)],
                    residual_norm: vals[j_best][comp].abs(),
                    pl_value: pl[j_best],
                    found: false,
                    bracket: None,
                }
            }
        };
        per_k.push(chosen);
    }
    Ok((per_k, false))
}

/// Among grid points where `psi` vanishes, the likelihood-best one; when the
/// best value is shared by a run of neighbours, the middle of that run.
fn flat_center(pl: &[f64], zero: impl Fn(usize) -> bool, g: usize) -> usize {
    let Some(first) = argmax_first((0..g).map(|j| if zero(j) { pl[j] } else { f64::NAN })) else {
        return 0;
    };
    let same = |j: usize| zero(j) && pl[j] == pl[first];
    let mut back = 0;
    while back + 1 < g && same((first + g - back - 1) % g) {
        back += 1;
    }
    let mut fwd = 0;
    while back + fwd + 1 < g && same((first + fwd + 1) % g) {
        fwd += 1;
    }
    let start = first + g - back;
    (start + (back + fwd) / 2) % g
}

fn bisect(s: &mut Scalar<'_, '_>, k: usize, mut a: f64, fa: f64, mut b: f64, tol: f64) -> Result<ComponentCrossing> {
    let neg_a = fa < 0.0;
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (fm, pl) = s.eval(m)?;
        if fm == 0.0 {
            return Ok(ComponentCrossing {
                k,
                theta: vec![wrap_angle(m)],
                residual_norm: 0.0,
                pl_value: pl,
                found: true,
                bracket: Some((m, m)),
            });
        }
        if (fm < 0.0) == neg_a {
            a = m;
        } else {
            b = m;
        }
    }
    let m = 0.5 * (a + b);
    let (fm, pl) = s.eval(m)?;
    Ok(ComponentCrossing {
        k,
        theta: vec![wrap_angle(m)],
        residual_norm: fm.abs(),
        pl_value: pl,
        found: true,
        bracket: Some((a, b)),
    })
}

/// Mean Euclidean length of the covariate differences over ordered pairs;
/// the scale against which residual norms of `psi_n` are judged.
fn pairwise_scale(data: &Dataset) -> f64 {
    let n = data.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d: f64 = data
                    .row(i)
                    .iter()
                    .zip(data.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                total += d.sqrt();
            }
        }
    }
    total / (n * n) as f64
}

struct Minimum {
    theta: Vec<f64>,
    residual: f64,
    pl: f64,
}

/// `p > 2`: multi-start minimization of `||S^(-k)||` for each `k`.
fn search_general(
    data: &Dataset,
    table: &PairTable,
    config: &ScoreConfig,
) -> Result<(Vec<ComponentCrossing>, bool)> {
    let p = data.p();
    let threshold = NEAR_ZERO_FACTOR * pairwise_scale(data);
    let opts = NelderMeadOptions {
        tol: config.nm_tol,
        max_iter: config.nm_max_iter,
        initial_step: None,
    };
    let jobs: Vec<(usize, Vec<f64>)> = (0..p)
        .flat_map(|k| {
            random_starts(p - 1, config.n_starts.max(1), config.seed, &[STREAM_SCORE_K, k as u64])
                .into_iter()
                .map(move |s| (k, s))
        })
        .collect();
    let minima: Vec<Minimum> = jobs
        .par_iter()
        .map(|(k, x0)| {
            let mut eng = ProfileEngine::from_table(data, table.clone());
            let mut psi = vec![0.0; p];
            let mut err = None;
            let mut obj = |theta: &[f64]| -> f64 {
                match eng.loglik_and_psi(&beta_from_angles(theta), &mut psi) {
                    Ok(_) => drop_norm(&psi, *k),
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::INFINITY
                    }
                }
            };
            let r = minimize(&mut obj, x0, &opts);
            if let Some(e) = err {
                return Err(e);
            }
            let pl = eng.loglik_and_psi(&beta_from_angles(&r.x), &mut psi)?;
            Ok(Minimum {
                residual: drop_norm(&psi, *k),
                theta: r.x,
                pl,
            })
        })
        .collect::<Result<_>>()?;

    let per_start = config.n_starts.max(1);
    let degenerate = minima.iter().all(|m| m.residual == 0.0);
    let mut per_k = Vec::with_capacity(p);
    for k in 0..p {
        let group = &minima[k * per_start..(k + 1) * per_start];
        let near: Vec<usize> = (0..group.len()).filter(|&i| group[i].residual <= threshold).collect();
        let (idx, found) = if near.is_empty() {
            let mut b = 0;
            for i in 1..group.len() {
                if group[i].residual < group[b].residual {
                    b = i;
                }
            }
            (b, false)
        } else {
            let mut b = near[0];
            for &i in &near[1..] {
                let (m, cur) = (&group[i], &group[b]);
                if m.pl > cur.pl || (m.pl == cur.pl && m.residual < cur.residual) {
                    b = i;
                }
            }
            (b, true)
        };
        let m = &group[idx];
        per_k.push(ComponentCrossing {
            k,
            theta: PolarAngles::new(m.theta.clone()).into_vec(),
            residual_norm: m.residual,
            pl_value: m.pl,
            found,
            bracket: None,
        });
    }
    Ok((per_k, degenerate))
}

fn drop_norm(psi: &[f64], k: usize) -> f64 {
    psi.iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, v)| v * v)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_have_zero_score() {
        let d = Dataset::from_rows(&[vec![1.0, 0.3], vec![0.0, 0.0]], vec![1.0, 0.0], None).unwrap();
        let b = UnitBeta::new(vec![0.6, 0.8]).unwrap();
        assert_eq!(psi_n(&d, &b, TieMode::Strict).unwrap().psi, vec![0.0, 0.0]);
        let r = find_zero_crossing(&d, &ScoreConfig { grid_points: 64, ..Default::default() }).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.loglik, 0.0);
        // the middle of the arc where the projection has the right sign
        let v = r.beta_tilde.as_slice()[0] + 0.3 * r.beta_tilde.as_slice()[1];
        assert!(v > 0.9 * (1.0f64 + 0.09).sqrt(), "{v}");
    }

    #[test]
    fn combine_handles_branch_cut() {
        let mk = |t: f64, pl: f64| ComponentCrossing {
            k: 0,
            theta: vec![t],
            residual_norm: 0.0,
            pl_value: pl,
            found: true,
            bracket: None,
        };
        let t = combine(&[mk(PI - 0.01, 0.0), mk(-PI + 0.03, -1.0)]);
        // the mean of pi - 0.01 and pi + 0.03 is pi + 0.01
        assert!(wrap_angle(t.as_slice()[0] - (-PI + 0.01)).abs() < 1e-12);
    }
}

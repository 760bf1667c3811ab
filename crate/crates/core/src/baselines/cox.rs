//! Cox proportional hazards regression by Newton-Raphson on the partial
//! likelihood, Breslow handling of tied event times.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::polar::UnitBeta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoxConfig {
    /// Convergence threshold on the gradient norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CoxConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFit {
    /// Maximizer `b` of the partial likelihood.
    pub beta_hat_unnormalized: Vec<f64>,
    /// `-b / ||b||`: the direction in the orientation `H(Y) = X'beta + e`.
    /// `None` when `b = 0`.
    pub beta_hat: Option<UnitBeta>,
    pub loglik: f64,
    pub iterations: usize,
    /// Partial log-likelihood after each accepted step, starting at `b = 0`.
    pub loglik_trace: Vec<f64>,
}

struct Derivs {
    loglik: f64,
    grad: Vec<f64>,
    /// Negative Hessian, row-major `p x p`.
    info: Vec<f64>,
}

/// Rows in decreasing order of `Y`, ties by row index.
fn risk_order(y: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    order
}

fn derivs(data: &Dataset, delta: &[u8], order: &[usize], b: &[f64], second: bool) -> Derivs {
    let p = data.p();
    let y = data.y();
    let eta: Vec<f64> = (0..data.n())
        .map(|i| data.row(i).iter().zip(b).map(|(x, c)| x * c).sum())
        .collect();
    let shift = eta.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    let mut s0 = 0.0;
    let mut s1 = vec![0.0; p];
    let mut s2 = vec![0.0; if second { p * p } else { 0 }];
    let mut out = Derivs {
        loglik: 0.0,
        grad: vec![0.0; p],
        info: vec![0.0; if second { p * p } else { 0 }],
    };
    let mut pos = 0;
    while pos < order.len() {
        let t = y[order[pos]];
        let mut end = pos;
        while end < order.len() && y[order[end]] == t {
            let i = order[end];
            let w = (eta[i] - shift).exp();
            let x = data.row(i);
            s0 += w;
            for a in 0..p {
                s1[a] += w * x[a];
                if second {
                    for c in 0..p {
                        s2[a * p + c] += w * x[a] * x[c];
                    }
                }
            }
            end += 1;
        }
        let log_s0 = s0.ln() + shift;
        for &i in &order[pos..end] {
            if delta[i] == 0 {
                continue;
            }
            out.loglik += eta[i] - log_s0;
            let x = data.row(i);
            for a in 0..p {
                let ma = s1[a] / s0;
                out.grad[a] += x[a] - ma;
                if second {
                    for c in 0..p {
                        out.info[a * p + c] += s2[a * p + c] / s0 - ma * (s1[c] / s0);
                    }
                }
            }
        }
        pos = end;
    }
    out
}

/// Log partial likelihood at `b` (Breslow ties). Without a `delta` column
/// every row is an event.
pub fn partial_loglik(data: &Dataset, b: &[f64]) -> f64 {
    let all = vec![1u8; data.n()];
    let delta = data.delta().unwrap_or(&all);
    derivs(data, delta, &risk_order(data.y()), b, false).loglik
}

/// Solves `a x = rhs` for symmetric positive definite `a` by Cholesky.
fn cholesky_solve(a: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let p = rhs.len();
    let mut l = vec![0.0; p * p];
    let scale = (0..p).fold(0.0f64, |m, i| m.max(a[i * p + i].abs()));
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if !(s > 1e-13 * scale.max(f64::MIN_POSITIVE)) {
                    return None;
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    let mut x = rhs.to_vec();
    for i in 0..p {
        for k in 0..i {
            x[i] -= l[i * p + k] * x[k];
        }
        x[i] /= l[i * p + i];
    }
    for i in (0..p).rev() {
        for k in i + 1..p {
            x[i] -= l[k * p + i] * x[k];
        }
        x[i] /= l[i * p + i];
    }
    Some(x)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Newton-Raphson from `b = 0` with step halving.
pub fn fit_cox(data: &Dataset, config: &CoxConfig) -> Result<CoxFit> {
    let all = vec![1u8; data.n()];
    let delta = data.delta().unwrap_or(&all);
    let order = risk_order(data.y());
    let p = data.p();
    let mut b = vec![0.0; p];
    let mut cur = derivs(data, delta, &order, &b, true);
    let mut trace = vec![cur.loglik];
    let mut iterations = 0;
    loop {
        if norm(&cur.grad) < config.tol {
            break;
        }
        if iterations >= config.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                gradient_norm: norm(&cur.grad),
            });
        }
        iterations += 1;
        let step = cholesky_solve(&cur.info, &cur.grad).ok_or(Error::SingularHessian { iteration: iterations })?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = b.iter().zip(&step).map(|(x, s)| x + scale * s).collect();
            let next = derivs(data, delta, &order, &cand, true);
            if next.loglik >= cur.loglik {
                accepted = Some((cand, next));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, next)) = accepted else {
            // no ascent possible at working precision: stationary
            break;
        };
        let moved = scale * norm(&step);
        b = cand;
        cur = next;
        trace.push(cur.loglik);
        if moved < 1e-12 * (1.0 + norm(&b)) {
            break;
        }
    }
    let beta_hat = if b.iter().any(|v| *v != 0.0) {
        Some(UnitBeta::new(b.iter().map(|v| -v).collect())?)
    } else {
        None
    };
    Ok(CoxFit {
        beta_hat_unnormalized: b,
        beta_hat,
        loglik: cur.loglik,
        iterations,
        loglik_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
        assert!(cholesky_solve(&[1.0, 1.0, 1.0, 1.0], &[1.0, 0.0]).is_none());
    }

    #[test]
    fn initial_loglik_counts_risk_sets() {
        let d = Dataset::from_rows(&[vec![0.3], vec![1.0], vec![-2.0]], vec![1.0, 2.0, 3.0], None).unwrap();
        let expect = -(3f64.ln() + 2f64.ln() + 1f64.ln());
        assert!((partial_loglik(&d, &[0.0]) - expect).abs() < 1e-14);
    }
}

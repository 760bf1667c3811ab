//! Slow, direct implementations used to verify the fast paths. Each follows
//! the defining formula with explicit enumeration and shares no code with
//! the optimized evaluators beyond the data container.

use crate::data::Dataset;
use crate::isotonic::{maxmin_oracle, StepCdf};
use crate::pairs::TieMode;

pub use crate::baselines::s4_naive;

fn dot_diff(data: &Dataset, i: usize, j: usize, beta: &[f64]) -> f64 {
    data.row(i)
        .iter()
        .zip(data.row(j))
        .zip(beta)
        .map(|((a, b), c)| (a - b) * c)
        .sum()
}

fn log_or_skip(weight: bool, prob: f64) -> f64 {
    if weight {
        prob.ln()
    } else {
        0.0
    }
}

/// Pairwise rank log-likelihood written term by term. Strict mode:
/// `I(Y_i > Y_j) log F(v_ij) + I(Y_i <= Y_j) log(1 - F(v_ij))`. Tie-aware mode:
/// `I(Y_i > Y_j) log(1 - F(v_ji)) + I(Y_i <= Y_j) log F(v_ji)`.
pub fn loglik_literal(data: &Dataset, beta: &[f64], f: &StepCdf, tie_mode: TieMode) -> f64 {
    let y = data.y();
    let n = data.n();
    let mut ll = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            match tie_mode {
                TieMode::Strict => {
                    let q = f.eval(dot_diff(data, i, j, beta));
                    ll += log_or_skip(y[i] > y[j], q) + log_or_skip(y[i] <= y[j], 1.0 - q);
                }
                TieMode::TieAware => {
                    let q = f.eval(dot_diff(data, j, i, beta));
                    ll += log_or_skip(y[i] > y[j], 1.0 - q) + log_or_skip(y[i] <= y[j], q);
                }
            }
        }
    }
    ll
}

/// Profile c.d.f. value of every ordered pair, by sorting the pairs and
/// applying the max-min formula to the merged knots. Returned as
/// `(i, j, v_ij, F_hat(v_ij))` in lexicographic pair order.
pub fn profile_values(data: &Dataset, beta: &[f64], tie_mode: TieMode) -> Vec<(usize, usize, f64, f64)> {
    let y = data.y();
    let n = data.n();
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let ind = match tie_mode {
                    TieMode::Strict => y[i] > y[j],
                    TieMode::TieAware => y[i] >= y[j],
                };
                rows.push((i, j, dot_diff(data, i, j, beta), if ind { 1.0 } else { 0.0 }));
            }
        }
    }
    let mut vs: Vec<f64> = rows.iter().map(|r| r.2).collect();
    vs.sort_by(f64::total_cmp);
    vs.dedup();
    let mut mean = vec![0.0; vs.len()];
    let mut count = vec![0.0; vs.len()];
    for r in &rows {
        let k = vs.partition_point(|&v| v < r.2);
        mean[k] += r.3;
        count[k] += 1.0;
    }
    for (m, c) in mean.iter_mut().zip(&count) {
        *m /= c;
    }
    let fitted: Vec<f64> = (0..vs.len()).map(|k| maxmin_oracle(&mean, &count, k)).collect();
    rows.into_iter()
        .map(|(i, j, v, _)| (i, j, v, fitted[vs.partition_point(|&u| u < v)]))
        .collect()
}

/// `n^-2 sum_{i != j} (X_i - X_j) {I_ij - F_hat(v_ij)}` by enumeration.
pub fn psi_literal(data: &Dataset, beta: &[f64], tie_mode: TieMode) -> Vec<f64> {
    let y = data.y();
    let n = data.n();
    let mut psi = vec![0.0; data.p()];
    for (i, j, _, fv) in profile_values(data, beta, tie_mode) {
        let ind = match tie_mode {
            TieMode::Strict => y[i] > y[j],
            TieMode::TieAware => y[i] >= y[j],
        };
        let r = if ind { 1.0 } else { 0.0 } - fv;
        for (k, s) in psi.iter_mut().enumerate() {
            *s += (data.row(i)[k] - data.row(j)[k]) * r;
        }
    }
    psi.iter().map(|s| s / (n * n) as f64).collect()
}

/// Product-limit censoring survival `prod_{s <= t} (1 - c_s / r_s)` over
/// distinct censoring times `s`, where `c_s` counts censorings at `s` and
/// `r_s = #{Y >= s} - #{Y = s, delta = 1}`.
pub fn km_literal(y: &[f64], delta: &[u8], t: f64) -> f64 {
    let mut times: Vec<f64> = y
        .iter()
        .zip(delta)
        .filter(|(_, &d)| d == 0)
        .map(|(&v, _)| v)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut s = 1.0;
    for &u in times.iter().filter(|&&u| u <= t) {
        let c = y.iter().zip(delta).filter(|(&v, &d)| v == u && d == 0).count() as f64;
        let at_risk = y.iter().filter(|&&v| v >= u).count() as f64;
        let failures = y.iter().zip(delta).filter(|(&v, &d)| v == u && d == 1).count() as f64;
        s *= 1.0 - c / (at_risk - failures);
    }
    s
}

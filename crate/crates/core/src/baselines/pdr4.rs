//! Quadruple pairwise-difference rank estimator.
//!
//! `S4(beta) = sum over distinct (i, j, k, l) of
//! I(v_ij > v_kl) {I(Y_i > Y_j) - I(Y_k > Y_l)}` with `v_ij = z_i - z_j`,
//! `z = X beta`. Equal projections count as "not greater".
//!
//! The direct sum costs `O(n^4)`. Here it is evaluated exactly in
//! `O(n^2 log n)`: the sum over all pairs of ordered pairs is counted with one
//! sort, and the terms where the two pairs share an index are removed by
//! inclusion-exclusion. Sharing is one of `i = k`, `i = l`, `j = k`, `j = l`;
//! the only feasible double overlaps are `(i, j) = (k, l)`, which contributes
//! nothing, and `(i, j) = (l, k)`, which is added back once.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::pairs::{PairTable, TieMode, WeightMode};
use crate::prl::{fit_sphere, FitReport, PrlConfig};

pub const DEFAULT_PDR4_CAP: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pdr4Config {
    pub search: PrlConfig,
    /// Largest sample size accepted.
    pub cap: usize,
}

impl Default for Pdr4Config {
    fn default() -> Self {
        Self {
            search: PrlConfig::default(),
            cap: DEFAULT_PDR4_CAP,
        }
    }
}

fn check(data: &Dataset, beta: &[f64], cap: usize) -> Result<()> {
    let n = data.n();
    if n > cap {
        return Err(Error::CostCap { n, cap });
    }
    if n < 4 {
        return Err(Error::InvalidData("the quadruple criterion needs at least 4 rows".into()));
    }
    if beta.len() != data.p() {
        return Err(Error::InvalidData("coefficient length does not match covariates".into()));
    }
    Ok(())
}

fn indicator(y: &[f64], i: usize, j: usize) -> i64 {
    (y[i] > y[j]) as i64
}

/// `S4(beta)`, exact. Any nonzero `beta` is accepted; the value depends on
/// its direction only.
pub fn s4(data: &Dataset, beta: &[f64]) -> Result<i64> {
    s4_capped(data, beta, DEFAULT_PDR4_CAP)
}

pub fn s4_capped(data: &Dataset, beta: &[f64], cap: usize) -> Result<i64> {
    check(data, beta, cap)?;
    let mut z = Vec::new();
    data.project(beta, &mut z);
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite projection".into()));
    }
    let mut work = S4Work::default();
    Ok(work.eval(&z, data.y()))
}

#[derive(Default)]
struct S4Work {
    pairs: Vec<(f64, i64)>,
    sorted: Vec<f64>,
    e: Vec<f64>,
}

impl S4Work {
    fn eval(&mut self, z: &[f64], y: &[f64]) -> i64 {
        let n = z.len();

        // all ordered pairs of ordered pairs
        self.pairs.clear();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    self.pairs.push((z[i] - z[j], indicator(y, i, j)));
                }
            }
        }
        self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let keys = &self.pairs;
        let mut total = 0i64;
        for &(v, ind) in keys.iter() {
            if ind == 1 {
                let less = keys.partition_point(|p| p.0 < v) as i64;
                let greater = (keys.len() - keys.partition_point(|p| p.0 <= v)) as i64;
                total += less - greater;
            }
        }

        // pairs sharing one index with the anchor m, using e_k = z_k - z_m
        let mut overlap = 0i64;
        for m in 0..n {
            self.e.clear();
            self.e.extend((0..n).filter(|&k| k != m).map(|k| z[k] - z[m]));
            self.sorted.clear();
            self.sorted.extend_from_slice(&self.e);
            self.sorted.sort_unstable_by(f64::total_cmp);
            let s = &self.sorted;
            let less = |c: f64| s.partition_point(|&x| x < c) as i64;
            let greater = |c: f64| (s.len() - s.partition_point(|&x| x <= c)) as i64;

            for (idx, k) in (0..n).filter(|&k| k != m).enumerate() {
                let ek = self.e[idx];
                let i_mk = indicator(y, m, k);
                let i_km = indicator(y, k, m);
                // i = k = m: I(e_l > e_j)(I_mj - I_ml)
                overlap += i_mk * greater(ek) - i_mk * less(ek);
                // j = l = m: I(e_i > e_k)(I_im - I_km)
                overlap += i_km * less(ek) - i_km * greater(ek);
                // i = l = m: I(-e_j > e_k)(I_mj - I_km)
                overlap += (i_mk - i_km) * less(-ek);
                // j = k = m: I(e_i > -e_l)(I_im - I_ml)
                overlap += (i_km - i_mk) * greater(-ek);
            }
        }

        // (i, j, j, i): I(v_ij > v_ji)(I_ij - I_ji)
        let mut reversed = 0i64;
        for i in 0..n {
            for j in 0..n {
                if i != j && z[i] - z[j] > z[j] - z[i] {
                    reversed += indicator(y, i, j) - indicator(y, j, i);
                }
            }
        }
        total - overlap + reversed
    }
}

/// Direct `O(n^4)` evaluation of `S4`, for verification.
pub fn s4_naive(data: &Dataset, beta: &[f64]) -> Result<i64> {
    check(data, beta, usize::MAX)?;
    let mut z = Vec::new();
    data.project(beta, &mut z);
    let y = data.y();
    let n = z.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                for l in 0..n {
                    if l == i || l == j || l == k {
                        continue;
                    }
                    if z[i] - z[j] > z[k] - z[l] {
                        s += indicator(y, i, j) - indicator(y, k, l);
                    }
                }
            }
        }
    }
    Ok(s)
}

/// Maximizes `S4` over the unit sphere with the multi-start simplex search.
/// The report's `objective` is `S4` at the estimate; `loglik` and `f_hat` are
/// the profile likelihood quantities at the same point.
pub fn fit_pdr4(data: &Dataset, config: &Pdr4Config) -> Result<FitReport> {
    check(data, &vec![0.0; data.p()], config.cap)?;
    let table = PairTable::new(data, &WeightMode::Uniform(TieMode::Strict))?;
    let y = data.y();
    fit_sphere(
        data,
        &config.search,
        &|| {
            let mut work = S4Work::default();
            let mut z = Vec::with_capacity(data.n());
            Ok(move |b: &[f64]| {
                data.project(b, &mut z);
                if z.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidData("non-finite projection".into()));
                }
                Ok(work.eval(&z, y) as f64)
            })
        },
        &table,
    )
}

#![allow(dead_code)]

use pairrank::Dataset;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    pairrank::seed::rng(seed)
}

/// `X1 = Z^2`, `X2 = X1 + Z'`, `Y = X'beta + e` with standard logistic `e`.
pub fn linear_logistic(n: usize, beta: [f64; 2], seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = r.sample(StandardNormal);
        let x1 = z * z;
        let x2 = x1 + r.sample::<f64, _>(StandardNormal);
        let u: f64 = r.random_range(1e-12..1.0 - 1e-12);
        y.push(beta[0] * x1 + beta[1] * x2 + (u / (1.0 - u)).ln());
        rows.push(vec![x1, x2]);
    }
    Dataset::from_rows(&rows, y, None).unwrap()
}

/// Standard normal covariates, integer-valued response.
pub fn small_discrete(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let y = (0..n).map(|_| r.random_range(0..4) as f64).collect();
    Dataset::from_rows(&rows, y, None).unwrap()
}

pub fn small_continuous(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let y = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    Dataset::from_rows(&rows, y, None).unwrap()
}

/// `X1 = Z^2`, `X2 = X1 + Z'`, `Y = X1 + X2 + e` with `e = log(-log(1 - U))`.
pub fn extreme_value(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = r.sample(StandardNormal);
        let x1 = z * z;
        let x2 = x1 + r.sample::<f64, _>(StandardNormal);
        let u: f64 = r.random_range(f64::EPSILON..1.0);
        y.push(x1 + x2 + (-(-u).ln_1p()).ln());
        rows.push(vec![x1, x2]);
    }
    Dataset::from_rows(&rows, y, None).unwrap()
}

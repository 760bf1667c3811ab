mod common;

use pairrank::baselines::{fit_cox, fit_pdr4, partial_loglik, s4, CoxConfig, Pdr4Config};
use pairrank::{to_beta, Dataset, Error, PolarAngles, PrlConfig, UnitBeta};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn at(t: f64) -> UnitBeta {
    to_beta(&PolarAngles::new(vec![t]))
}

/// Direct quadruple enumeration.
fn s4_loops(d: &Dataset, b: &[f64]) -> i64 {
    let z: Vec<f64> = (0..d.n()).map(|i| d.row(i).iter().zip(b).map(|(x, c)| x * c).sum()).collect();
    let y = d.y();
    let n = d.n();
    let mut s = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let distinct = i != j && i != k && i != l && j != k && j != l && k != l;
                    if distinct && z[i] - z[j] > z[k] - z[l] {
                        s += (y[i] > y[j]) as i64 - (y[k] > y[l]) as i64;
                    }
                }
            }
        }
    }
    s
}

#[test]
fn s4_four_points() {
    // responses increasing in the index with distinct pairwise differences
    let rows = vec![vec![0.0], vec![1.0], vec![3.0], vec![7.0]];
    let d = Dataset::from_rows(&rows, vec![0.0, 1.0, 2.0, 3.0], None).unwrap();
    let v = s4(&d, &[1.0]).unwrap();
    assert_eq!(v, s4_loops(&d, &[1.0]));
    // every concordant comparison scores +1: count quadruples whose larger
    // difference has the positive indicator and the smaller one does not
    let mut expect = 0;
    for (i, j, k, l) in quads(4) {
        let (vij, vkl) = (rows[i][0] - rows[j][0], rows[k][0] - rows[l][0]);
        if vij > vkl && i > j && k < l {
            expect += 1;
        }
    }
    assert_eq!(v, expect);
    for seed in 0..10 {
        let d = common::small_continuous(4, 2, seed);
        let b = [0.3, -0.7];
        assert_eq!(s4(&d, &b).unwrap(), s4_loops(&d, &b), "seed {seed}");
    }
}

fn quads(n: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    if i != j && i != k && i != l && j != k && j != l && k != l {
                        out.push((i, j, k, l));
                    }
                }
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn s4_matches_loops_and_invariances(seed in 0u64..10_000, n in 4usize..11, c in 0.01f64..100.0) {
        let d = if seed % 2 == 0 { common::small_discrete(n, 2, seed) } else { common::small_continuous(n, 2, seed) };
        let mut r = common::rng(seed);
        let b = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let base = s4(&d, &b).unwrap();
        prop_assert_eq!(base, s4_loops(&d, &b));
        prop_assert_eq!(base, s4(&d, &[c * b[0], c * b[1]]).unwrap());
        let g = d.map_y(|y| y.exp() + 3.0 * y).unwrap();
        prop_assert_eq!(base, s4(&g, &b).unwrap());
    }
}

#[test]
fn s4_cost_cap() {
    let d = common::small_continuous(151, 2, 1);
    assert!(matches!(s4(&d, &[1.0, 0.0]), Err(Error::CostCap { n: 151, cap: 150 })));
    assert!(fit_pdr4(&d, &Pdr4Config::default()).is_err());
    let small = common::small_continuous(3, 2, 1);
    assert!(s4(&small, &[1.0, 0.0]).is_err());
}

#[test]
fn pdr4_matches_a_dense_grid_argmax() {
    let d = common::linear_logistic(30, [1.0, 1.0], 5);
    let cfg = Pdr4Config { search: PrlConfig { seed: 3, ..Default::default() }, ..Default::default() };
    let r = fit_pdr4(&d, &cfg).unwrap();
    let fitted = s4(&d, r.beta_hat.as_slice()).unwrap();
    assert_eq!(r.objective, fitted as f64);

    let steps = (2.0 * PI / 1e-3) as usize;
    let grid: Vec<(f64, i64)> = (0..steps)
        .map(|g| {
            let t = -PI + g as f64 * 1e-3;
            (t, s4(&d, at(t).as_slice()).unwrap())
        })
        .collect();
    let best = grid.iter().map(|g| g.1).max().unwrap();
    assert!(fitted >= best, "fit {fitted} below grid max {best}");
    let theta = r.theta_hat.as_slice()[0];
    let nearest = grid
        .iter()
        .filter(|g| g.1 == best)
        .map(|g| (g.0 - theta).abs().min(2.0 * PI - (g.0 - theta).abs()))
        .fold(f64::INFINITY, f64::min);
    assert!(nearest < 0.05, "nearest grid argmax {nearest} away");
}

#[test]
fn pdr4_invariances() {
    let d = common::linear_logistic(25, [1.0, 1.0], 8);
    let cfg = Pdr4Config { search: PrlConfig { seed: 1, ..Default::default() }, ..Default::default() };
    let a = fit_pdr4(&d, &cfg).unwrap();
    let e = fit_pdr4(&d.map_y(f64::exp).unwrap(), &cfg).unwrap();
    assert_eq!(a.beta_hat, e.beta_hat);
    let perm: Vec<usize> = (0..25).map(|i| (i * 7) % 25).collect();
    let p = fit_pdr4(&d.select_rows(&perm).unwrap(), &cfg).unwrap();
    assert!(a.beta_hat.distance(&p.beta_hat) < 1e-8, "{:?} {:?}", a.beta_hat, p.beta_hat);
}

#[test]
fn cox_initial_loglik_counts_risk_sets() {
    let d = common::small_continuous(12, 2, 3);
    let with_delta = d.with_delta((0..12).map(|i| (i % 3 != 0) as u8).collect()).unwrap();
    for data in [&d, &with_delta] {
        let r = fit_cox(data, &CoxConfig::default()).unwrap();
        let y = data.y();
        let all = vec![1u8; 12];
        let delta = data.delta().unwrap_or(&all);
        let expect: f64 = (0..12)
            .filter(|&i| delta[i] == 1)
            .map(|i| -(y.iter().filter(|&&v| v >= y[i]).count() as f64).ln())
            .sum();
        assert!((r.loglik_trace[0] - expect).abs() < 1e-12);
        assert!((partial_loglik(data, &[0.0, 0.0]) - expect).abs() < 1e-12);
    }
}

/// Score of the one-covariate partial likelihood without ties.
fn cox_score(x: &[f64], y: &[f64], b: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..x.len() {
            if y[j] >= y[i] {
                let w = (x[j] * b).exp();
                num += x[j] * w;
                den += w;
            }
        }
        s += x[i] - num / den;
    }
    s
}

#[test]
fn cox_agrees_with_a_bisection_root() {
    // two points are always separable (the maximum sits at infinity), so the
    // smallest root-bearing design has three
    let x = [0.0, 1.0, 2.0];
    let y = [2.0, 1.0, 3.0];
    let d = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], y.to_vec(), None).unwrap();
    let (mut lo, mut hi) = (-20.0, 20.0);
    assert!(cox_score(&x, &y, lo) > 0.0 && cox_score(&x, &y, hi) < 0.0);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if cox_score(&x, &y, m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let r = fit_cox(&d, &CoxConfig::default()).unwrap();
    assert!((r.beta_hat_unnormalized[0] - lo).abs() < 1e-8, "{} vs {lo}", r.beta_hat_unnormalized[0]);
}

#[test]
fn two_separable_points_do_not_converge() {
    let d = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![1.0, 2.0], None).unwrap();
    match fit_cox(&d, &CoxConfig::default()) {
        Err(Error::NonConvergence { .. }) => {}
        Ok(r) => assert!(r.beta_hat_unnormalized[0].abs() > 5.0, "{r:?}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn cox_ignores_duplication_and_location() {
    let d = common::linear_logistic(40, [1.0, 1.0], 2);
    let a = fit_cox(&d, &CoxConfig::default()).unwrap();
    let idx: Vec<usize> = (0..40).chain(0..40).collect();
    let dup = d.select_rows(&idx).unwrap().map_y(|y| y + 10.0).unwrap();
    let b = fit_cox(&dup, &CoxConfig::default()).unwrap();
    for (u, v) in a.beta_hat_unnormalized.iter().zip(&b.beta_hat_unnormalized) {
        assert!((u - v).abs() < 1e-8, "{u} {v}");
    }
}

#[test]
fn newton_steps_never_decrease_the_partial_likelihood() {
    for seed in 0..10 {
        let d = common::extreme_value(80, seed);
        let r = fit_cox(&d, &CoxConfig::default()).unwrap();
        assert!(r.loglik_trace.windows(2).all(|w| w[1] >= w[0]), "seed {seed}");
        assert_eq!(*r.loglik_trace.last().unwrap(), r.loglik);
        assert_eq!(r.loglik_trace.len(), r.iterations + 1);
    }
}

#[test]
fn cox_orientation_matches_the_transformation_model() {
    // extreme-value errors make the proportional hazards model exact with
    // coefficient -beta
    let d = common::extreme_value(400, 3);
    let r = fit_cox(&d, &CoxConfig::default()).unwrap();
    let b = r.beta_hat.clone().unwrap();
    let truth = UnitBeta::new(vec![1.0, 1.0]).unwrap();
    assert!(b.dot(&truth) > 0.98, "{b:?}");
    assert!(r.beta_hat_unnormalized.iter().all(|&v| v < 0.0));
    let rank = fit_cox(&d.map_y(f64::exp).unwrap(), &CoxConfig::default()).unwrap();
    assert_eq!(rank, r);
}

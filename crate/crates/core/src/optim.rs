//! Nelder-Mead simplex minimization.
//!
//! The profiled objectives are piecewise constant in the angles, so strict
//! comparisons are used throughout: on a plateau reflections are rejected and
//! the simplex contracts instead of drifting.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Convergence requires both the simplex diameter (sup-norm distance of
    /// every vertex to the best one) and the spread of function values to be
    /// at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial edge length; `None` uses `0.1 * max|x0|`, or 0.1 when `x0 = 0`.
    pub initial_step: Option<f64>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 2000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` starting from `x0`. Non-finite function values are treated
/// as `+inf`.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    assert!(dim >= 1, "Nelder-Mead needs at least one dimension");
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let step = opts.initial_step.unwrap_or_else(|| {
        let m = x0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m > 0.0 {
            0.1 * m
        } else {
            0.1
        }
    });
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    pts.push(x0.to_vec());
    for k in 0..dim {
        let mut v = x0.to_vec();
        v[k] += step;
        pts.push(v);
    }
    let mut fv: Vec<f64> = pts.iter().map(|p| eval(p)).collect();

    let mut order: Vec<usize> = (0..=dim).collect();
    let mut centroid = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial2 = vec![0.0; dim];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        // stable by value, then by vertex age, for reproducibility
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]).then(a.cmp(&b)));
        let (best, second, worst) = (order[0], order[dim - 1], order[dim]);

        let spread = fv[worst] - fv[best];
        let diameter = pts
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[best])
                    .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()))
            })
            .fold(0.0f64, f64::max);
        if diameter <= opts.tol && (spread <= opts.tol || spread.is_nan()) {
            converged = true;
            break;
        }
        let scale = pts[best].iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if diameter <= f64::EPSILON * scale || iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..dim] {
            for (c, v) in centroid.iter_mut().zip(&pts[i]) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= dim as f64);

        for ((t, c), w) in trial.iter_mut().zip(&centroid).zip(&pts[worst]) {
            *t = c + REFLECT * (c - w);
        }
        let fr = eval(&trial);

        if fr < fv[best] {
            for ((t, c), w) in trial2.iter_mut().zip(&centroid).zip(&pts[worst]) {
                *t = c + EXPAND * (c - w);
            }
            let fe = eval(&trial2);
            if fe < fr {
                pts[worst].copy_from_slice(&trial2);
                fv[worst] = fe;
            } else {
                pts[worst].copy_from_slice(&trial);
                fv[worst] = fr;
            }
            continue;
        }
        if fr < fv[second] {
            pts[worst].copy_from_slice(&trial);
            fv[worst] = fr;
            continue;
        }
        // contraction
        let outside = fr < fv[worst];
        for ((t, c), w) in trial2.iter_mut().zip(&centroid).zip(&pts[worst]) {
            *t = if outside {
                c + CONTRACT * REFLECT * (c - w)
            } else {
                c - CONTRACT * (c - w)
            };
        }
        let fc = eval(&trial2);
        let accept = if outside { fc <= fr } else { fc < fv[worst] };
        if accept {
            pts[worst].copy_from_slice(&trial2);
            fv[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let anchor = pts[best].clone();
        for &i in &order[1..] {
            for (v, a) in pts[i].iter_mut().zip(&anchor) {
                *v = a + SHRINK * (*v - a);
            }
            fv[i] = eval(&pts[i]);
        }
    }

    order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]).then(a.cmp(&b)));
    let best = order[0];
    NelderMeadResult {
        x: pts[best].clone(),
        fx: fv[best],
        iterations,
        evaluations,
        converged,
    }
}

/// Outcome of one start of a multi-start maximization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub theta: Vec<f64>,
    /// Objective at the start point.
    pub initial: f64,
    /// Objective at the returned point.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Draws `n_starts` points uniformly from `[-pi, pi]^dim`, each from its own
/// stream derived from `seed` and the start index.
pub fn random_starts(dim: usize, n_starts: usize, seed: u64, stream: &[u64]) -> Vec<Vec<f64>> {
    (0..n_starts)
        .map(|s| {
            let mut path = stream.to_vec();
            path.push(s as u64);
            let mut rng = crate::seed::rng(crate::seed::derive_path(seed, &path));
            (0..dim).map(|_| rng.random_range(-PI..PI)).collect()
        })
        .collect()
}

/// Maximizes an objective from each start with Nelder-Mead. `make` builds a
/// fresh objective per start so starts can run in parallel; results come back
/// in start order.
pub fn multistart_maximize<M, F>(
    starts: &[Vec<f64>],
    opts: &NelderMeadOptions,
    make: M,
) -> Result<Vec<StartOutcome>>
where
    M: Fn() -> Result<F> + Sync,
    F: FnMut(&[f64]) -> Result<f64>,
{
    starts
        .par_iter()
        .map(|x0| {
            let mut obj = make()?;
            let mut err = None;
            let initial = obj(x0)?;
            let r = minimize(
                |x| match obj(x) {
                    Ok(v) => -v,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::INFINITY
                    }
                },
                x0,
                opts,
            );
            if let Some(e) = err {
                return Err(e);
            }
            Ok(StartOutcome {
                theta: r.x,
                initial,
                value: -r.fx,
                iterations: r.iterations,
                converged: r.converged,
            })
        })
        .collect()
}

/// Index of the strictly largest value; ties go to the smallest index. NaN
/// never wins.
pub fn argmax_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            None if !v.is_nan() => best = Some((i, v)),
            Some((_, b)) if v > b => best = Some((i, v)),
            _ => {}
        }
    }
    best.map(|(i, _)| i)
}

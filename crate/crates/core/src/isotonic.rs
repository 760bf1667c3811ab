//! Weighted isotonic regression by pool-adjacent-violators, and the step
//! c.d.f. it produces when applied to sorted pairwise comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::PairSystem;

/// Nondecreasing step function with values in `[0, 1]`.
///
/// Evaluation is left-continuous: for `t` in `(knots[i-1], knots[i]]` the value
/// is `values[i]`; at or below the first knot it is `values[0]`, above the last
/// knot it is `values[last]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCdf {
    knots: Vec<f64>,
    values: Vec<f64>,
}

pub const STEP_CONVENTION: &str =
    "left-continuous: F(t) = values[i] for knots[i-1] < t <= knots[i]; values[0] for t <= knots[0]; values[last] for t > knots[last]";

impl StepCdf {
    /// Validates and builds a step function. Duplicate knots are merged,
    /// keeping the larger (later) value.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::InvalidData(
                "step function needs matching, nonempty knots and values".into(),
            ));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite knot or value".into()));
        }
        let mut k: Vec<f64> = Vec::with_capacity(knots.len());
        let mut v: Vec<f64> = Vec::with_capacity(values.len());
        for (&t, &f) in knots.iter().zip(&values) {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidData(format!("value {f} outside [0, 1]")));
            }
            match k.last() {
                Some(&last) if t < last => {
                    return Err(Error::InvalidData("knots must be sorted".into()))
                }
                Some(&last) if t == last => {
                    *v.last_mut().unwrap() = f;
                }
                _ => {
                    k.push(t);
                    v.push(f);
                }
            }
            if v.len() >= 2 && v[v.len() - 1] < v[v.len() - 2] {
                return Err(Error::InvalidData("values must be nondecreasing".into()));
            }
        }
        Ok(Self {
            knots: k,
            values: v,
        })
    }

    pub(crate) fn from_parts_unchecked(knots: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert!(knots.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        Self { knots, values }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.knots.partition_point(|&k| k < t);
        self.values[i.min(self.values.len() - 1)]
    }
}

/// One block of the isotonic fit: positions `start..end` share `mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub start: usize,
    pub end: usize,
    pub mean: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    pub fitted: Vec<f64>,
    pub pools: Vec<Pool>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Block {
    pub start: usize,
    pub end: usize,
    pub sum: f64,
    pub weight: f64,
}

impl Block {
    #[inline]
    pub fn mean(&self) -> f64 {
        self.sum / self.weight
    }

    /// `mean(self) >= mean(next)`, compared without division (weights are
    /// positive).
    #[inline]
    pub fn violates(&self, next: &Block) -> bool {
        self.sum * next.weight >= next.sum * self.weight
    }
}

/// Stack-based PAVA over `(weighted sum, weight)` items. Adjacent blocks are
/// merged while the left mean is not strictly below the right mean, so the
/// resulting block means are strictly increasing.
pub(crate) fn pava_blocks(items: impl Iterator<Item = (f64, f64)>, blocks: &mut Vec<Block>) {
    blocks.clear();
    for (idx, (sum, weight)) in items.enumerate() {
        let mut cur = Block {
            start: idx,
            end: idx + 1,
            sum,
            weight,
        };
        while let Some(prev) = blocks.last() {
            if prev.violates(&cur) {
                cur = Block {
                    start: prev.start,
                    end: cur.end,
                    sum: prev.sum + cur.sum,
                    weight: prev.weight + cur.weight,
                };
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push(cur);
    }
}

/// Weighted least-squares nondecreasing fit to `y`.
pub fn pava(y: &[f64], w: &[f64]) -> Result<IsotonicFit> {
    if y.is_empty() {
        return Err(Error::InvalidData("isotonic regression of empty input".into()));
    }
    if y.len() != w.len() {
        return Err(Error::InvalidData("response and weight lengths differ".into()));
    }
    if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidData("weights must be positive and finite".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite response".into()));
    }
    let mut blocks = Vec::new();
    pava_blocks(y.iter().zip(w).map(|(&a, &b)| (a * b, b)), &mut blocks);
    let mut fitted = Vec::with_capacity(y.len());
    let pools = blocks
        .iter()
        .map(|b| {
            let mean = b.mean();
            fitted.extend(std::iter::repeat_n(mean, b.end - b.start));
            Pool {
                start: b.start,
                end: b.end,
                mean,
                weight: b.weight,
            }
        })
        .collect();
    Ok(IsotonicFit { fitted, pools })
}

/// Closed-form isotonic value at 0-based index `j`:
/// `max_{s<=j} min_{t>=j}` of the weighted average of `ind[s..=t]`.
///
/// Quadratic in the input length; meant for verification.
pub fn maxmin_oracle(ind: &[f64], weights: &[f64], j: usize) -> f64 {
    assert!(j < ind.len() && ind.len() == weights.len());
    let mut best = f64::NEG_INFINITY;
    for s in 0..=j {
        let (mut sum, mut wsum) = (0.0, 0.0);
        for h in s..j {
            sum += weights[h] * ind[h];
            wsum += weights[h];
        }
        let mut inner = f64::INFINITY;
        for t in j..ind.len() {
            sum += weights[t] * ind[t];
            wsum += weights[t];
            inner = inner.min(sum / wsum);
        }
        best = best.max(inner);
    }
    best
}

/// Collapses runs of equal `v` into single knots carrying the summed weight
/// and the summed weighted response.
pub(crate) fn merge_ties(
    v_sorted: &[f64],
    resp: &[f64],
    w: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut knots = Vec::new();
    let mut sums = Vec::new();
    let mut weights = Vec::new();
    for ((&v, &r), &wt) in v_sorted.iter().zip(resp).zip(w) {
        if knots.last() == Some(&v) {
            *sums.last_mut().unwrap() += wt * r;
            *weights.last_mut().unwrap() += wt;
        } else {
            knots.push(v);
            sums.push(wt * r);
            weights.push(wt);
        }
    }
    (knots, sums, weights)
}

/// Profile estimate of the error-difference c.d.f. for a fixed coefficient:
/// isotonic regression of the comparison indicators on the sorted pairwise
/// projections, with tied projections pooled first.
pub fn profile_cdf(pairs: &PairSystem) -> Result<StepCdf> {
    if pairs.v_sorted.is_empty() {
        return Err(Error::InvalidData("empty pair system".into()));
    }
    let (knots, sums, weights) = merge_ties(&pairs.v_sorted, &pairs.ind_sorted, &pairs.weights);
    let mut blocks = Vec::new();
    pava_blocks(sums.iter().copied().zip(weights.iter().copied()), &mut blocks);
    let mut values = Vec::with_capacity(knots.len());
    for b in &blocks {
        let m = b.mean().clamp(0.0, 1.0);
        values.extend(std::iter::repeat_n(m, b.end - b.start));
    }
    Ok(StepCdf::from_parts_unchecked(knots, values))
}

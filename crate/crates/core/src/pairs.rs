//! Ordered-pair comparison systems.
//!
//! Every estimator in the crate works on the `n(n-1)` ordered pairs `(i, j)`,
//! `i != j`: the projection `v = (X_i - X_j)'beta`, a response (the comparison
//! indicator, or its IPW-weighted fraction under censoring) and a weight.

use serde::{Deserialize, Serialize};

use crate::censored::{ipw_pair_weights, SurvivalStep};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::polar::UnitBeta;

/// How ties in the response enter the comparison indicator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    /// `I(Y_i > Y_j)`; a tied pair counts as "not greater" in both orders.
    #[default]
    Strict,
    /// Tie-aware likelihood. Rewritten on the pair `(i, j)` it uses
    /// `I(Y_i >= Y_j)`, so a tie contributes `log F(v_ij) + log F(v_ji)`.
    TieAware,
}

impl std::str::FromStr for TieMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Self::Strict),
            "tie_aware" | "tie-aware" => Ok(Self::TieAware),
            other => Err(Error::Config(format!("unknown tie mode `{other}`"))),
        }
    }
}

/// Pair weighting scheme.
#[derive(Debug, Clone, Copy)]
pub enum WeightMode<'a> {
    /// Unit weights, indicator responses.
    Uniform(TieMode),
    /// Inverse-probability-of-censoring weights built from the censoring
    /// survival function `G`.
    Ipw(&'a SurvivalStep),
}

/// Largest sample size for which pair systems can be built.
pub const MAX_ROWS: usize = 1 << 16;

/// The beta-independent part of a pair system: endpoints, responses, weights.
/// Pairs are enumerated in lexicographic `(i, j)` order, so the position in
/// this table doubles as the tie-break key when sorting.
#[derive(Debug, Clone)]
pub struct PairTable {
    n: usize,
    pub(crate) first: Vec<u32>,
    pub(crate) second: Vec<u32>,
    pub(crate) resp: Vec<f64>,
    pub(crate) weight: Vec<f64>,
    /// Set for unit weights, where the response follows from the data.
    pub(crate) unit: Option<TieMode>,
    /// Table position of the ordered pair `(i, j)` at `i * (n - 1) + j - (j > i)`,
    /// `u32::MAX` for a dropped pair. Empty when no pair is dropped.
    pub(crate) slot: Vec<u32>,
}

impl PairTable {
    pub fn new(data: &Dataset, mode: &WeightMode<'_>) -> Result<Self> {
        let n = data.n();
        if n > MAX_ROWS {
            return Err(Error::InvalidData(format!("at most {MAX_ROWS} rows are supported, got {n}")));
        }
        let k = n * n.saturating_sub(1);
        let mut t = Self {
            n,
            first: Vec::with_capacity(k),
            second: Vec::with_capacity(k),
            resp: Vec::with_capacity(k),
            weight: Vec::with_capacity(k),
            unit: None,
            slot: Vec::new(),
        };
        let y = data.y();
        match mode {
            WeightMode::Uniform(ties) => {
                t.unit = Some(*ties);
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let ind = match ties {
                            TieMode::Strict => y[i] > y[j],
                            TieMode::TieAware => y[i] >= y[j],
                        };
                        t.push(i, j, if ind { 1.0 } else { 0.0 }, 1.0);
                    }
                }
            }
            WeightMode::Ipw(g) => {
                let delta = data.delta().ok_or(Error::MissingDelta)?;
                let g_at: Vec<f64> = y.iter().map(|&v| g.eval_floored(v)).collect();
                let mut slot = Vec::with_capacity(k);
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let (w_gt, w_le) =
                            ipw_pair_weights(y[i], y[j], delta[i], delta[j], g_at[i], g_at[j]);
                        let total = w_gt + w_le;
                        if total > 0.0 {
                            slot.push(t.len() as u32);
                            t.push(i, j, w_gt / total, total);
                        } else {
                            slot.push(u32::MAX);
                        }
                    }
                }
                if t.len() < k {
                    t.slot = slot;
                } else if t.weight.iter().all(|&w| w == 1.0) {
                    // without effective censoring the table is the strict one
                    let strict = (0..k).all(|id| {
                        let (i, j) = t.endpoints(id);
                        t.resp[id] == f64::from(u8::from(y[i] > y[j]))
                    });
                    if strict {
                        t.unit = Some(TieMode::Strict);
                    }
                }
            }
        }
        Ok(t)
    }

    fn push(&mut self, i: usize, j: usize, r: f64, w: f64) {
        self.first.push(i as u32);
        self.second.push(j as u32);
        self.resp.push(r);
        self.weight.push(w);
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Table position of the ordered pair `(i, j)`, if it was kept.
    #[inline]
    pub(crate) fn lookup(&self, i: usize, j: usize) -> Option<usize> {
        let pos = i * (self.n - 1) + j - usize::from(j > i);
        if self.slot.is_empty() {
            Some(pos)
        } else {
            let s = self.slot[pos];
            (s != u32::MAX).then_some(s as usize)
        }
    }

    pub fn endpoints(&self, id: usize) -> (usize, usize) {
        (self.first[id] as usize, self.second[id] as usize)
    }

    pub fn response(&self, id: usize) -> f64 {
        self.resp[id]
    }

    pub fn weight(&self, id: usize) -> f64 {
        self.weight[id]
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Keyed {
    pub v: f64,
    pub id: u32,
    pub a: u16,
    pub b: u16,
}

#[inline]
fn less(a: &Keyed, b: &Keyed) -> bool {
    (a.v < b.v) | ((a.v == b.v) & (a.id < b.id))
}

/// Sorts pairs by `(v, i, j)`, reusing the previous order as a starting point.
///
/// Consecutive evaluations in a line search or grid scan change the order only
/// locally, so an insertion pass over the previous permutation is close to
/// linear. When the displacement budget is exhausted it falls back to a full
/// sort. The comparison key is a strict total order, so the result does not
/// depend on the starting permutation.
#[derive(Debug, Clone, Default)]
pub(crate) struct PairSorter {
    pub buf: Vec<Keyed>,
}

impl PairSorter {
    pub fn sort(&mut self, table: &PairTable, z: &[f64]) -> Result<()> {
        let k = table.len();
        let warm = self.buf.len() == k;
        if !warm {
            self.buf.clear();
            let (first, second) = (&table.first, &table.second);
            self.buf.extend((0..k).map(|id| Keyed {
                v: 0.0,
                id: id as u32,
                a: first[id] as u16,
                b: second[id] as u16,
            }));
        }
        let mut finite = true;
        for e in self.buf.iter_mut() {
            e.v = z[e.a as usize] - z[e.b as usize];
            finite &= e.v.is_finite();
        }
        self.finish(warm, finite)
    }

    /// Sorts the `n(n-1)/2` unordered pairs by `|v|`, each oriented so that
    /// `v = z_a - z_b >= 0`; `v` holds the magnitude.
    pub fn sort_half(&mut self, n: usize, z: &[f64]) -> Result<()> {
        let k = n * n.saturating_sub(1) / 2;
        let warm = self.buf.len() == k;
        if !warm {
            self.buf.clear();
            for i in 0..n {
                for j in i + 1..n {
                    let id = self.buf.len() as u32;
                    self.buf.push(Keyed {
                        v: 0.0,
                        id,
                        a: i as u16,
                        b: j as u16,
                    });
                }
            }
        }
        let mut finite = true;
        for e in self.buf.iter_mut() {
            let v = z[e.a as usize] - z[e.b as usize];
            // pairs at zero keep the orientation a < b
            if v < 0.0 || (v == 0.0 && e.a > e.b) {
                std::mem::swap(&mut e.a, &mut e.b);
            }
            e.v = v.abs();
            finite &= v.is_finite();
        }
        self.finish(warm, finite)
    }

    fn finish(&mut self, warm: bool, finite: bool) -> Result<()> {
        if !finite {
            let bad = self.buf.iter().find(|e| !e.v.is_finite()).unwrap();
            return Err(Error::NonFiniteProjection {
                i: bad.a as usize,
                j: bad.b as usize,
            });
        }
        let k = self.buf.len();
        if !(warm && insertion_sort_bounded(&mut self.buf, 64 * k + 64)) {
            self.buf.sort_unstable_by(|a, b| {
                a.v.partial_cmp(&b.v)
                    .expect("finite projections")
                    .then(a.id.cmp(&b.id))
            });
        }
        Ok(())
    }
}

/// Insertion sort that gives up after `budget` element moves.
fn insertion_sort_bounded(buf: &mut [Keyed], budget: usize) -> bool {
    let mut moves = 0usize;
    for i in 1..buf.len() {
        if !less(&buf[i], &buf[i - 1]) {
            continue;
        }
        let cur = buf[i];
        let mut j = i;
        while j > 0 && less(&cur, &buf[j - 1]) {
            buf[j] = buf[j - 1];
            j -= 1;
        }
        buf[j] = cur;
        moves += i - j;
        if moves > budget {
            return false;
        }
    }
    true
}

/// Sorted pair system for one coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSystem {
    /// Projections `(X_i - X_j)'beta`, nondecreasing.
    pub v_sorted: Vec<f64>,
    /// Comparison response in the same order: `I(Y_i > Y_j)` (or `>=` in
    /// tie-aware mode); the IPW fraction `w_gt / (w_gt + w_le)` under censoring.
    pub ind_sorted: Vec<f64>,
    pub weights: Vec<f64>,
    /// `(i, j)` at each sorted position.
    pub pairs: Vec<(usize, usize)>,
    /// `perm[id]` is the sorted position of the `id`-th pair in lexicographic
    /// `(i, j)` enumeration.
    pub perm: Vec<usize>,
}

impl PairSystem {
    pub fn len(&self) -> usize {
        self.v_sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_sorted.is_empty()
    }
}

pub(crate) fn system_from_sorted(table: &PairTable, sorter: &PairSorter) -> PairSystem {
    let k = sorter.buf.len();
    let mut sys = PairSystem {
        v_sorted: Vec::with_capacity(k),
        ind_sorted: Vec::with_capacity(k),
        weights: Vec::with_capacity(k),
        pairs: Vec::with_capacity(k),
        perm: vec![0; k],
    };
    for (pos, e) in sorter.buf.iter().enumerate() {
        let id = e.id as usize;
        sys.v_sorted.push(e.v);
        sys.ind_sorted.push(table.resp[id]);
        sys.weights.push(table.weight[id]);
        sys.pairs.push(table.endpoints(id));
        sys.perm[id] = pos;
    }
    sys
}

/// Enumerates all ordered pairs, computes projections and sorts them by
/// `(v, i, j)`.
pub fn build_pairs(data: &Dataset, beta: &UnitBeta, mode: &WeightMode<'_>) -> Result<PairSystem> {
    if beta.len() != data.p() {
        return Err(Error::InvalidData(format!(
            "coefficient has length {}, data has {} covariates",
            beta.len(),
            data.p()
        )));
    }
    let table = PairTable::new(data, mode)?;
    let mut z = Vec::new();
    data.project(beta.as_slice(), &mut z);
    let mut sorter = PairSorter::default();
    sorter.sort(&table, &z)?;
    Ok(system_from_sorted(&table, &sorter))
}

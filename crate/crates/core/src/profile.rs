//! Reusable evaluator for the profiled pairwise rank likelihood and the
//! profiled score.
//!
//! For a fixed coefficient the nuisance c.d.f. is profiled out exactly by
//! isotonic regression of the pair responses on the sorted projections. This
//! evaluator keeps its buffers (and the previous sort order) between calls,
//! which is what makes grid scans and simplex searches affordable.
//!
//! Only the `n(n-1)/2` unordered pairs are sorted, by `|v|`: the ordered pair
//! `(j, i)` sits at `-v_ij`, so the full sequence is the sorted half read
//! backwards with reversed orientation, then the ties at zero, then the half
//! read forwards.

use crate::data::Dataset;
use crate::error::Result;
use crate::isotonic::{Block, StepCdf};
use crate::pairs::{system_from_sorted, Keyed, PairSorter, PairSystem, PairTable, TieMode, WeightMode};

#[derive(Debug, Clone)]
pub struct ProfileEngine<'a> {
    data: &'a Dataset,
    table: PairTable,
    sorter: PairSorter,
    z: Vec<f64>,
    blocks: Vec<Block>,
    acc: Vec<f64>,
    evaluations: u64,
    /// Unit weights, and responses tie only between identical covariate
    /// rows. Away from zero the system is antisymmetric (`r_ji = 1 - r_ij`),
    /// so the isotonic fit of the negative half is the reflection of that of
    /// the positive half and only the positive half is pooled.
    mirror: bool,
    /// Number of leading sorted pairs with `v = 0`.
    zero_end: usize,
    /// Mirror mode: final pools over the pre-pooled items (reflected positive
    /// blocks in reverse, the zero knot, the positive blocks) and the fitted
    /// value of each item.
    pools: Vec<Block>,
    level: Vec<f64>,
    /// The blocks describe `-beta` for the last sorted `beta`.
    flipped: bool,
}

/// `W1 log m + W0 log(1 - m)` for a pool with weighted response sum `W1`,
/// total weight `W` and mean `m = W1 / W`, using `0 log 0 = 0`.
#[inline]
pub(crate) fn pool_loglik(sum: f64, weight: f64) -> f64 {
    let m = (sum / weight).clamp(0.0, 1.0);
    let mut ll = 0.0;
    if sum > 0.0 && m > 0.0 {
        ll += sum * m.ln();
    }
    let rest = weight - sum;
    if rest > 0.0 && m < 1.0 {
        ll += rest * (-m).ln_1p();
    }
    ll
}

/// `(weight, response)` of an ordered pair.
#[derive(Clone, Copy)]
enum Resp<'t> {
    Strict(&'t [f64]),
    TieAware(&'t [f64]),
    Table(&'t PairTable),
}

impl<'t> Resp<'t> {
    fn new(table: &'t PairTable, y: &'t [f64]) -> Self {
        match table.unit {
            Some(TieMode::Strict) => Self::Strict(y),
            Some(TieMode::TieAware) => Self::TieAware(y),
            None => Self::Table(table),
        }
    }

    #[inline]
    fn get(self, i: u16, j: u16) -> (f64, f64) {
        let (i, j) = (i as usize, j as usize);
        match self {
            Self::Strict(y) => (1.0, f64::from(u8::from(y[i] > y[j]))),
            Self::TieAware(y) => (1.0, f64::from(u8::from(y[i] >= y[j]))),
            Self::Table(t) => match t.lookup(i, j) {
                Some(id) => (t.weight[id], t.resp[id]),
                None => (0.0, 0.0),
            },
        }
    }
}

#[inline]
fn orient(e: &Keyed, flip: bool) -> (u16, u16) {
    if flip {
        (e.b, e.a)
    } else {
        (e.a, e.b)
    }
}

/// Calls `f(v, i, j)` for positions `lo..hi` of the full ordered-pair
/// sequence sorted by `v`. `buf` holds the sorted half, `zero` of its pairs
/// at `v = 0`; `flip` reverses every orientation (the sequence at `-beta`).
#[inline]
fn visit<F: FnMut(f64, u16, u16)>(buf: &[Keyed], zero: usize, flip: bool, lo: usize, hi: usize, mut f: F) {
    let h = buf.len();
    let neg_end = h - zero;
    let zero_end = h + zero;
    let (a, b) = (lo.min(neg_end), hi.min(neg_end));
    if a < b {
        for e in buf[h - b..h - a].iter().rev() {
            let (i, j) = orient(e, flip);
            f(-e.v, j, i);
        }
    }
    let (a, b) = (lo.max(neg_end), hi.min(zero_end));
    // both orientations of a pair at zero sit in the same knot, so `flip`
    // does not apply
    for p in a..b {
        let q = p - neg_end;
        if q < zero {
            f(0.0, buf[q].a, buf[q].b);
        } else {
            f(0.0, buf[q - zero].b, buf[q - zero].a);
        }
    }
    let a = lo.max(zero_end);
    if a < hi {
        for e in &buf[a - h..hi - h] {
            let (i, j) = orient(e, flip);
            f(e.v, i, j);
        }
    }
}

/// Pushes a knot onto the PAVA stack, merging while the order is violated.
/// Knots without weight are skipped.
#[inline]
fn push_block(blocks: &mut Vec<Block>, mut cur: Block) {
    if cur.weight <= 0.0 {
        return;
    }
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

/// Pools tied projections into knots and runs PAVA over the knots. Block
/// bounds are positions in the sequence seen by `visit`.
fn pool_full(buf: &[Keyed], zero: usize, flip: bool, resp: Resp<'_>, blocks: &mut Vec<Block>) {
    blocks.clear();
    let mut pos = 0;
    let mut knot_v = f64::NAN;
    let mut knot = Block {
        start: 0,
        end: 0,
        sum: 0.0,
        weight: 0.0,
    };
    visit(buf, zero, flip, 0, 2 * buf.len(), |v, i, j| {
        let (w, r) = resp.get(i, j);
        if v == knot_v {
            knot.sum += w * r;
            knot.weight += w;
            knot.end = pos + 1;
        } else {
            push_block(blocks, knot);
            knot = Block {
                start: pos,
                end: pos + 1,
                sum: w * r,
                weight: w,
            };
            knot_v = v;
        }
        pos += 1;
    });
    push_block(blocks, knot);
}

/// Antisymmetric mode: PAVA over the pairs with `v > 0` in their positive
/// orientation. Block bounds are positions in `buf`.
fn pool_half(buf: &[Keyed], y: &[f64], flip: bool, blocks: &mut Vec<Block>) {
    blocks.clear();
    let k = buf.len();
    let resp = |e: &Keyed| {
        let (i, j) = orient(e, flip);
        f64::from(u8::from(y[i as usize] > y[j as usize]))
    };
    let mut i = 0;
    while i < k {
        let v = buf[i].v;
        let mut sum = resp(&buf[i]);
        let mut j = i + 1;
        while j < k && buf[j].v == v {
            sum += resp(&buf[j]);
            j += 1;
        }
        push_block(
            blocks,
            Block {
                start: i,
                end: j,
                sum,
                weight: (j - i) as f64,
            },
        );
        i = j;
    }
}

fn push_knot(v: f64, m: f64, knots: &mut Vec<f64>, values: &mut Vec<f64>) {
    if knots.last() != Some(&v) {
        knots.push(v);
        values.push(m);
    }
}

/// Whether every pair of tied responses has identical covariate rows.
fn ties_only_between_equal_rows(data: &Dataset) -> bool {
    let y = data.y();
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    order.windows(2).all(|w| y[w[0]] != y[w[1]] || data.row(w[0]) == data.row(w[1]))
}

impl<'a> ProfileEngine<'a> {
    pub fn new(data: &'a Dataset, mode: &WeightMode<'_>) -> Result<Self> {
        Ok(Self::from_table(data, PairTable::new(data, mode)?))
    }

    pub fn from_table(data: &'a Dataset, table: PairTable) -> Self {
        let mirror = table.unit.is_some() && ties_only_between_equal_rows(data);
        Self {
            data,
            table,
            sorter: PairSorter::default(),
            z: Vec::with_capacity(data.n()),
            blocks: Vec::new(),
            acc: vec![0.0; data.n()],
            evaluations: 0,
            mirror,
            zero_end: 0,
            pools: Vec::new(),
            level: Vec::new(),
            flipped: false,
        }
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn table(&self) -> &PairTable {
        &self.table
    }

    /// Number of profile evaluations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    fn prepare(&mut self, beta: &[f64]) -> Result<()> {
        self.evaluations += 1;
        self.data.project(beta, &mut self.z);
        self.sorter.sort_half(self.data.n(), &self.z)?;
        self.zero_end = self.sorter.buf.partition_point(|e| e.v <= 0.0);
        self.pool(false);
        Ok(())
    }

    fn pool(&mut self, flip: bool) {
        self.flipped = flip;
        let y = self.data.y();
        if self.mirror {
            let (zero, rest) = self.sorter.buf.split_at(self.zero_end);
            pool_half(rest, y, flip, &mut self.blocks);
            let resp = Resp::new(&self.table, y);
            let zero_sum: f64 = zero.iter().map(|e| resp.get(e.a, e.b).1 + resp.get(e.b, e.a).1).sum();
            let q = self.blocks.len();
            let item = |idx: usize| {
                let (sum, weight) = match idx.cmp(&q) {
                    std::cmp::Ordering::Less => {
                        let b = &self.blocks[q - 1 - idx];
                        (b.weight - b.sum, b.weight)
                    }
                    std::cmp::Ordering::Equal => (zero_sum, 2.0 * zero.len() as f64),
                    std::cmp::Ordering::Greater => {
                        let b = &self.blocks[idx - q - 1];
                        (b.sum, b.weight)
                    }
                };
                Block {
                    start: idx,
                    end: idx + 1,
                    sum,
                    weight,
                }
            };
            self.pools.clear();
            for idx in 0..2 * q + 1 {
                push_block(&mut self.pools, item(idx));
            }
            self.level.clear();
            self.level.resize(2 * q + 1, 0.5);
            for b in &self.pools {
                let m = b.mean().clamp(0.0, 1.0);
                self.level[b.start..b.end].iter_mut().for_each(|l| *l = m);
            }
        } else {
            let resp = Resp::new(&self.table, y);
            pool_full(&self.sorter.buf, self.zero_end, flip, resp, &mut self.blocks);
        }
    }

    fn current_loglik(&self) -> f64 {
        let pools = if self.mirror { &self.pools } else { &self.blocks };
        pools.iter().map(|b| pool_loglik(b.sum, b.weight)).sum()
    }

    /// Profile log-likelihood `l(beta, F_hat_beta)`.
    pub fn loglik(&mut self, beta: &[f64]) -> Result<f64> {
        self.prepare(beta)?;
        Ok(self.current_loglik())
    }

    /// Profile log-likelihood together with the profiled score
    /// `n^-2 sum_{i != j} w_ij (X_i - X_j) {r_ij - F_hat_beta(v_ij)}`.
    pub fn loglik_and_psi(&mut self, beta: &[f64], psi: &mut [f64]) -> Result<f64> {
        self.prepare(beta)?;
        Ok(self.finish_psi(psi))
    }

    /// [`Self::loglik_and_psi`] at `-beta`, where `beta` is the argument of the
    /// previous evaluation. Every projection flips sign, so the sorted
    /// magnitudes are reused and only the pooling is redone. The result equals
    /// a direct evaluation at the exactly negated coefficient.
    pub(crate) fn loglik_and_psi_reflected(&mut self, psi: &mut [f64]) -> f64 {
        self.evaluations += 1;
        self.pool(!self.flipped);
        self.finish_psi(psi)
    }

    fn finish_psi(&mut self, psi: &mut [f64]) -> f64 {
        let n = self.data.n();
        let y = self.data.y();
        let flip = self.flipped;
        let buf = &self.sorter.buf;
        let acc = &mut self.acc;
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut add = |i: u16, j: u16, d: f64| {
            acc[i as usize] += d;
            acc[j as usize] -= d;
        };
        let scale = 1.0 / (n as f64 * n as f64);
        if self.mirror {
            let resp = Resp::new(&self.table, y);
            let (zero, rest) = buf.split_at(self.zero_end);
            let q = self.blocks.len();
            let g0 = self.level.get(q).copied().unwrap_or(0.5);
            for e in zero {
                let d = (resp.get(e.a, e.b).1 - g0) - (resp.get(e.b, e.a).1 - g0);
                add(e.a, e.b, d);
            }
            // a pair and its reflection: r - F(v) and (1 - r) - F(-v)
            for (k, b) in self.blocks.iter().enumerate() {
                let (up, down) = (self.level[q + 1 + k], self.level[q - 1 - k]);
                for e in &rest[b.start..b.end] {
                    let (i, j) = orient(e, flip);
                    let r = f64::from(u8::from(y[i as usize] > y[j as usize]));
                    add(i, j, (r - up) - ((1.0 - r) - down));
                }
            }
        } else {
            let resp = Resp::new(&self.table, y);
            for b in &self.blocks {
                let m = b.mean().clamp(0.0, 1.0);
                visit(buf, self.zero_end, flip, b.start, b.end, |_, i, j| {
                    let (w, r) = resp.get(i, j);
                    add(i, j, w * (r - m));
                });
            }
        }
        let p = self.data.p();
        psi[..p].iter_mut().for_each(|v| *v = 0.0);
        for (i, &a) in self.acc.iter().enumerate() {
            if a != 0.0 {
                for (s, x) in psi.iter_mut().zip(self.data.row(i)) {
                    *s += a * x;
                }
            }
        }
        psi[..p].iter_mut().for_each(|v| *v *= scale);
        self.current_loglik()
    }

    /// The profile c.d.f. `F_hat_beta` as a step function on the distinct projections.
    pub fn cdf(&mut self, beta: &[f64]) -> Result<StepCdf> {
        self.prepare(beta)?;
        let mut knots = Vec::new();
        let mut values = Vec::new();
        let buf = &self.sorter.buf;
        if !self.mirror {
            let resp = Resp::new(&self.table, self.data.y());
            for b in &self.blocks {
                let m = b.mean().clamp(0.0, 1.0);
                visit(buf, self.zero_end, false, b.start, b.end, |v, i, j| {
                    if resp.get(i, j).0 > 0.0 {
                        push_knot(v, m, &mut knots, &mut values);
                    }
                });
            }
            return Ok(StepCdf::from_parts_unchecked(knots, values));
        }
        let rest = &buf[self.zero_end..];
        let q = self.blocks.len();
        for (k, b) in self.blocks.iter().enumerate().rev() {
            for e in rest[b.start..b.end].iter().rev() {
                push_knot(-e.v, self.level[q - 1 - k], &mut knots, &mut values);
            }
        }
        if self.zero_end > 0 {
            push_knot(0.0, self.level[q], &mut knots, &mut values);
        }
        for (k, b) in self.blocks.iter().enumerate() {
            for e in &rest[b.start..b.end] {
                push_knot(e.v, self.level[q + 1 + k], &mut knots, &mut values);
            }
        }
        Ok(StepCdf::from_parts_unchecked(knots, values))
    }

    /// The sorted pair system at `beta`.
    pub fn pair_system(&mut self, beta: &[f64]) -> Result<PairSystem> {
        self.data.project(beta, &mut self.z);
        let mut sorter = PairSorter::default();
        sorter.sort(&self.table, &self.z)?;
        Ok(system_from_sorted(&self.table, &sorter))
    }
}

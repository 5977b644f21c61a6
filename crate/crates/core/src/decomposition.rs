//! Two-state primitive operations and products of them.
//!
//! A primitive `T_mn(α, β)` mixes states `m` and `n` and leaves the rest
//! alone. Every primitive with `α + β ≤ 1` has a nonnegative determinant, so
//! any map with a negative determinant is out of reach of such products. For
//! maps that pass the determinant test, [`residual_search`] enumerates short
//! products on a grid and reports how close they get.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::StochasticMap;

/// Determinants below `-DET_TOL` count as negative.
pub const DET_TOL: f64 = 1e-12;
/// Upper limit on the estimated number of expanded search nodes.
pub const NODE_BUDGET: f64 = 1e8;
pub const MAX_DEPTH: usize = 5;
pub const MIN_GRID: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrimitiveOp {
    pub dim: usize,
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// Primitives in application order: `ops[0]` acts first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpSequence {
    pub dim: usize,
    pub ops: Vec<PrimitiveOp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Blocked,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Obstruction {
    pub det: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub depth: usize,
    pub grid: f64,
    /// Restrict primitives to `α + β ≤ 1`.
    pub sum_constraint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    /// Smallest max-abs entry distance found.
    pub residual: f64,
    pub depth: usize,
    pub grid: f64,
    pub nodes_visited: u64,
    pub estimated_nodes: f64,
    /// A product attaining `residual`.
    pub best: OpSequence,
}

impl PrimitiveOp {
    pub fn new(dim: usize, m: usize, n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if m == n {
            return Err(Error::InvalidPrimitive(format!("states must differ, got ({m}, {n})")));
        }
        if m >= dim || n >= dim {
            return Err(Error::InvalidPrimitive(format!("state out of range for dim {dim}")));
        }
        for (name, x) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidPrimitive(format!("{name} = {x} outside [0, 1]")));
            }
        }
        Ok(PrimitiveOp { dim, m, n, alpha, beta })
    }

    pub fn swap(dim: usize, m: usize, n: usize) -> Result<Self> {
        Self::new(dim, m, n, 1.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }
}

/// Identity except for the block `[[1−α, β], [α, 1−β]]` on rows and columns `(m, n)`.
pub fn primitive_matrix(op: &PrimitiveOp) -> StochasticMap {
    let mut t = DMatrix::identity(op.dim, op.dim);
    t[(op.m, op.m)] = 1.0 - op.alpha;
    t[(op.m, op.n)] = op.beta;
    t[(op.n, op.m)] = op.alpha;
    t[(op.n, op.n)] = 1.0 - op.beta;
    StochasticMap::from_matrix_unchecked(t)
}

/// Right-multiplies `acc` by `op` in place; only columns `m` and `n` change.
fn right_apply(acc: &mut DMatrix<f64>, op: &PrimitiveOp) {
    for i in 0..acc.nrows() {
        let (cm, cn) = (acc[(i, op.m)], acc[(i, op.n)]);
        acc[(i, op.m)] = (1.0 - op.alpha) * cm + op.alpha * cn;
        acc[(i, op.n)] = op.beta * cm + (1.0 - op.beta) * cn;
    }
}

impl OpSequence {
    pub fn new(dim: usize, ops: Vec<PrimitiveOp>) -> Result<Self> {
        for op in &ops {
            if op.dim != dim {
                return Err(Error::DimMismatch { expected: dim, found: op.dim });
            }
        }
        Ok(OpSequence { dim, ops })
    }

    pub fn det(&self) -> f64 {
        self.ops.iter().map(PrimitiveOp::det).product()
    }
}

/// `T_K ⋯ T_2 T_1` for `ops = [T_1, …, T_K]`.
pub fn compose_sequence(seq: &OpSequence) -> Result<StochasticMap> {
    let mut acc = DMatrix::identity(seq.dim, seq.dim);
    for op in &seq.ops {
        if op.dim != seq.dim {
            return Err(Error::DimMismatch { expected: seq.dim, found: op.dim });
        }
        acc = primitive_matrix(op).matrix() * acc;
    }
    Ok(StochasticMap::from_matrix_unchecked(acc))
}

pub fn det_obstruction(t: &StochasticMap) -> Obstruction {
    let det = t.determinant();
    let verdict = if det < -DET_TOL { Verdict::Blocked } else { Verdict::Inconclusive };
    Obstruction { det, verdict }
}

/// Grid `{0, g, 2g, …} ∪ {1}`.
pub fn grid_values(step: f64) -> Vec<f64> {
    let count = (1.0 / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=count).map(|k| (k as f64 * step).min(1.0)).collect();
    if 1.0 - v[v.len() - 1] > 1e-12 {
        v.push(1.0);
    }
    v
}

/// Expanded-node estimate `Σ_{k<depth} b^k`, with branching `b = pairs·(|grid|² − 1)`.
pub fn estimated_nodes(dim: usize, depth: usize, grid: f64, sum_constraint: bool) -> f64 {
    let g = grid_values(grid);
    let per_pair = if sum_constraint {
        let mut c = 0usize;
        for a in &g {
            for b in &g {
                if a + b <= 1.0 + 1e-12 {
                    c += 1;
                }
            }
        }
        c - 1
    } else {
        g.len() * g.len() - 1
    };
    let b = (dim * (dim - 1) / 2 * per_pair) as f64;
    (0..depth).map(|k| b.powi(k as i32)).sum()
}

struct Search<'a> {
    d: usize,
    target: &'a DMatrix<f64>,
    grid: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    moves: Vec<(f64, f64)>,
    depth: usize,
    sum_constraint: bool,
    best: f64,
    best_ops: Vec<PrimitiveOp>,
    stack: Vec<PrimitiveOp>,
    nodes: u64,
    seen: HashMap<Vec<i64>, usize>,
}

const DEDUPE_LEVELS: usize = 2;

impl Search<'_> {
    fn col_err(&self, col: &[f64], k: usize) -> f64 {
        col.iter().enumerate().map(|(i, x)| (x - self.target[(i, k)]).abs()).fold(0.0, f64::max)
    }

    /// Lower bound on the residual of any extension of `acc`: each later column
    /// is a convex combination of the current ones.
    fn hull_bound(&self, acc: &DMatrix<f64>) -> f64 {
        let mut bound: f64 = 0.0;
        for i in 0..self.d {
            let row = acc.row(i);
            let (lo, hi) = (row.min(), row.max());
            for k in 0..self.d {
                let x = self.target[(i, k)];
                bound = bound.max(lo - x).max(x - hi);
            }
        }
        bound
    }

    /// Best residual of `acc · T_mn(α, β)` over all pairs and grid values.
    fn leaves(&mut self, acc: &DMatrix<f64>) {
        let d = self.d;
        let col_errs: Vec<f64> =
            (0..d).map(|k| self.col_err(acc.column(k).as_slice(), k)).collect();
        let mut buf = vec![0.0; d];
        for pi in 0..self.pairs.len() {
            let (m, n) = self.pairs[pi];
            let rest = (0..d).filter(|&k| k != m && k != n).map(|k| col_errs[k]).fold(0.0, f64::max);
            if rest >= self.best {
                continue;
            }
            let mut em = Vec::with_capacity(self.grid.len());
            let mut en = Vec::with_capacity(self.grid.len());
            for &g in &self.grid {
                for i in 0..d {
                    buf[i] = (1.0 - g) * acc[(i, m)] + g * acc[(i, n)];
                }
                em.push(self.col_err(&buf, m));
                for i in 0..d {
                    buf[i] = g * acc[(i, m)] + (1.0 - g) * acc[(i, n)];
                }
                en.push(self.col_err(&buf, n));
            }
            let mut local = f64::INFINITY;
            let mut arg = (0, 0);
            if self.sum_constraint {
                for (ia, a) in self.grid.iter().enumerate() {
                    for (ib, b) in self.grid.iter().enumerate() {
                        if a + b <= 1.0 + 1e-12 && em[ia].max(en[ib]) < local {
                            local = em[ia].max(en[ib]);
                            arg = (ia, ib);
                        }
                    }
                }
            } else {
                let ia = argmin(&em);
                let ib = argmin(&en);
                local = em[ia].max(en[ib]);
                arg = (ia, ib);
            }
            let total = local.max(rest);
            if total < self.best {
                let op = PrimitiveOp { dim: d, m, n, alpha: self.grid[arg.0], beta: self.grid[arg.1] };
                self.best = total;
                self.best_ops = self.stack.clone();
                self.best_ops.push(op);
            }
        }
    }

    fn key(acc: &DMatrix<f64>) -> Vec<i64> {
        acc.iter().map(|x| (x * 1e10).round() as i64).collect()
    }

    fn expand(&mut self, acc: &DMatrix<f64>, level: usize) {
        self.nodes += 1;
        if level < DEDUPE_LEVELS {
            let key = Self::key(acc);
            match self.seen.get(&key) {
                Some(&l) if l <= level => return,
                _ => {
                    self.seen.insert(key, level);
                }
            }
        }
        if self.hull_bound(acc) >= self.best {
            return;
        }
        self.leaves(acc);
        if level + 1 >= self.depth || self.best == 0.0 {
            return;
        }
        let mut child = acc.clone();
        for pi in 0..self.pairs.len() {
            let (m, n) = self.pairs[pi];
            for mi in 0..self.moves.len() {
                let (alpha, beta) = self.moves[mi];
                let op = PrimitiveOp { dim: self.d, m, n, alpha, beta };
                child.copy_from(acc);
                right_apply(&mut child, &op);
                self.stack.push(op);
                self.expand(&child, level + 1);
                self.stack.pop();
            }
        }
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

/// Smallest `‖P − T‖_max` over products `P` of at most `depth` primitives on the grid.
///
/// Products are grown by right multiplication, which changes two columns at a
/// time, so the last factor's `α` and `β` can be chosen independently. Prefixes
/// whose column hull cannot contain `T` within the current best are pruned,
/// and duplicate prefixes are skipped at the first two levels. Enumeration is
/// sequential and fully deterministic.
pub fn residual_search(t: &StochasticMap, params: SearchParams) -> Result<SearchResult> {
    let SearchParams { depth, grid, sum_constraint } = params;
    if depth > MAX_DEPTH {
        return Err(Error::InvalidSearch(format!("depth {depth} above {MAX_DEPTH}")));
    }
    if !(grid >= MIN_GRID - 1e-15) || grid > 1.0 {
        return Err(Error::InvalidSearch(format!("grid step {grid} outside [{MIN_GRID}, 1]")));
    }
    let d = t.dim();
    let estimate = estimated_nodes(d, depth, grid, sum_constraint);
    if estimate > NODE_BUDGET {
        return Err(Error::BudgetExceeded { estimate, limit: NODE_BUDGET });
    }
    let values = grid_values(grid);
    let mut pairs = Vec::new();
    for m in 0..d {
        for n in m + 1..d {
            pairs.push((m, n));
        }
    }
    let mut moves = Vec::new();
    for &a in &values {
        for &b in &values {
            if (a, b) != (0.0, 0.0) && (!sum_constraint || a + b <= 1.0 + 1e-12) {
                moves.push((a, b));
            }
        }
    }
    let target = t.matrix();
    let id = DMatrix::identity(d, d);
    let mut s = Search {
        d,
        target,
        grid: values,
        pairs,
        moves,
        depth,
        sum_constraint,
        best: (&id - target).amax(),
        best_ops: Vec::new(),
        stack: Vec::new(),
        nodes: 0,
        seen: HashMap::new(),
    };
    if depth > 0 && s.best > 0.0 {
        s.expand(&id, 0);
    }
    // the stack holds factors left to right; the sequence lists them in application order
    s.best_ops.reverse();
    Ok(SearchResult {
        residual: s.best,
        depth,
        grid,
        nodes_visited: s.nodes,
        estimated_nodes: estimate,
        best: OpSequence { dim: d, ops: s.best_ops },
    })
}

//! Classical stochastic maps, rate matrices and reset errors.
//!
//! Maps are column-stochastic: entry `(m, n)` is the probability of a jump
//! from state `n` to state `m`, so every column sums to one and a map acts on
//! probability vectors by left multiplication, `p' = T p`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Entries below `-ENTRY_TOL` are rejected as negative.
pub const ENTRY_TOL: f64 = 1e-12;
/// Allowed deviation of a column (or vector) sum from one.
pub const SUM_TOL: f64 = 1e-9;

/// A validated column-stochastic `d×d` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMap {
    matrix: DMatrix<f64>,
}

/// A probability vector on `d` states.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(DVector<f64>);

/// The normalized row-sum vector `T·1/d`; the image of the uniform distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSumVector(DVector<f64>);

/// A generator with nonnegative off-diagonal rates and zero column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRateMatrix {
    matrix: DMatrix<f64>,
}

/// Nonempty proper subset of states whose final population should vanish.
///
/// Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndesiredSet {
    dim: usize,
    indices: Vec<usize>,
}

/// A constant generator applied for `duration`.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub generator: TransitionRateMatrix,
    pub duration: f64,
}

/// Protocols applied in order: the first element acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSequence {
    dim: usize,
    protocols: Vec<Protocol>,
}

fn check_square(raw: &DMatrix<f64>) -> Result<usize> {
    let (rows, cols) = raw.shape();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    if rows < 2 {
        return Err(Error::DimTooSmall(rows));
    }
    for ((row, col), x) in raw.iter().enumerate().map(|(k, x)| ((k % rows, k / rows), x)) {
        if !x.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(rows)
}

/// Validates a raw matrix as a column-stochastic map.
///
/// Entries within `ENTRY_TOL` outside `[0, 1]` are clamped onto the interval;
/// everything else is kept bit-exact.
pub fn validate_map(raw: DMatrix<f64>) -> Result<StochasticMap> {
    let d = check_square(&raw)?;
    for col in 0..d {
        for row in 0..d {
            let x = raw[(row, col)];
            if x < -ENTRY_TOL {
                return Err(Error::NegativeEntry { row, col, value: x });
            }
        }
    }
    for col in 0..d {
        let sum: f64 = raw.column(col).sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::ColumnSumViolation { col, sum });
        }
    }
    let matrix = raw.map(|x| {
        if x < 0.0 {
            0.0
        } else if x > 1.0 && x <= 1.0 + ENTRY_TOL {
            1.0
        } else {
            x
        }
    });
    Ok(StochasticMap { matrix })
}

impl StochasticMap {
    pub fn new(raw: DMatrix<f64>) -> Result<Self> {
        validate_map(raw)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        validate_map(matrix_from_rows(rows)?)
    }

    pub fn identity(d: usize) -> Self {
        StochasticMap { matrix: DMatrix::identity(d, d) }
    }

    /// The rank-one map sending every input to `q`.
    pub fn constant(q: &ProbabilityVector) -> Self {
        let d = q.dim();
        let mut matrix = DMatrix::zeros(d, d);
        for n in 0..d {
            matrix.set_column(n, q.as_vector());
        }
        StochasticMap { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    /// `self · other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &StochasticMap) -> Result<StochasticMap> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(StochasticMap { matrix: &self.matrix * &other.matrix })
    }

    pub fn row_sums(&self) -> RowSumVector {
        row_sums(self)
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// Whether the map also preserves the uniform distribution.
    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|m| (self.matrix.row(m).sum() - 1.0).abs() <= tol)
    }

    /// Wraps a matrix that is stochastic by construction, skipping tolerance checks.
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        StochasticMap { matrix }
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = rows.len();
    if d == 0 {
        return Err(Error::DimTooSmall(0));
    }
    for r in rows {
        if r.len() != d {
            return Err(Error::NonSquare { rows: d, cols: r.len() });
        }
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

/// `r_n = Σ_m T[n][m] / d`.
pub fn row_sums(t: &StochasticMap) -> RowSumVector {
    let d = t.dim();
    let r = DVector::from_fn(d, |n, _| t.matrix.row(n).sum() / d as f64);
    RowSumVector(r)
}

pub fn apply_map(t: &StochasticMap, p: &ProbabilityVector) -> Result<ProbabilityVector> {
    if t.dim() != p.dim() {
        return Err(Error::DimMismatch { expected: t.dim(), found: p.dim() });
    }
    Ok(ProbabilityVector(&t.matrix * &p.0))
}

/// `T = e^{Wτ}` for a constant generator.
pub fn map_from_rates(w: &TransitionRateMatrix, tau: f64) -> Result<StochasticMap> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::OutOfRange(format!("duration must be nonnegative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(StochasticMap::identity(w.dim()));
    }
    let e = linalg::expm(&(w.matrix() * tau));
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::ExpDivergence);
    }
    validate_map(e)
}

/// Ordered product `e^{W_N τ_N} ⋯ e^{W_1 τ_1}`.
pub fn map_from_protocols(seq: &ProtocolSequence) -> Result<StochasticMap> {
    let mut t = StochasticMap::identity(seq.dim());
    for p in &seq.protocols {
        let step = map_from_rates(&p.generator, p.duration)?;
        t = step.compose(&t)?;
    }
    Ok(t)
}

/// `γ_W = max_n (−W[n][n])`.
pub fn escape_rate(w: &TransitionRateMatrix) -> f64 {
    (0..w.dim()).map(|n| -w.matrix[(n, n)]).fold(0.0, f64::max)
}

/// `ε = Σ_{m∈𝔲} (T·1)_m`.
pub fn reset_error(t: &StochasticMap, u: &UndesiredSet) -> Result<f64> {
    if t.dim() != u.dim() {
        return Err(Error::DimMismatch { expected: t.dim(), found: u.dim() });
    }
    Ok(u.indices.iter().map(|&m| t.matrix.row(m).sum()).sum())
}

impl ProbabilityVector {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidProbability("empty vector".into()));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < -ENTRY_TOL) {
            return Err(Error::InvalidProbability(format!("entry {x} is negative or non-finite")));
        }
        let s = v.sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidProbability(format!("entries sum to {s}")));
        }
        Ok(ProbabilityVector(v.map(|x| x.max(0.0))))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(v))
    }

    pub fn uniform(d: usize) -> Self {
        ProbabilityVector(DVector::from_element(d, 1.0 / d as f64))
    }

    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = DVector::zeros(d);
        v[k] = 1.0;
        ProbabilityVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

impl RowSumVector {
    /// Validates a normalized, nonnegative vector.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        ProbabilityVector::new(v).map(|p| RowSumVector(p.0))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(v))
    }

    pub fn uniform(d: usize) -> Self {
        RowSumVector(DVector::from_element(d, 1.0 / d as f64))
    }

    pub(crate) fn from_vector_unchecked(v: DVector<f64>) -> Self {
        RowSumVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn min(&self) -> f64 {
        self.0.min()
    }

    /// Index and value of the first entry at or below `floor`, if any.
    pub fn first_at_or_below(&self, floor: f64) -> Option<(usize, f64)> {
        self.0.iter().copied().enumerate().find(|(_, x)| *x <= floor)
    }

    pub fn to_probability(&self) -> ProbabilityVector {
        ProbabilityVector(self.0.clone())
    }
}

impl TransitionRateMatrix {
    pub fn new(raw: DMatrix<f64>) -> Result<Self> {
        let d = check_square(&raw)?;
        for col in 0..d {
            for row in 0..d {
                if row != col && raw[(row, col)] < 0.0 {
                    return Err(Error::InvalidRateMatrix(format!(
                        "negative rate {} at ({row}, {col})",
                        raw[(row, col)]
                    )));
                }
            }
            let s: f64 = raw.column(col).sum();
            let scale = raw.column(col).amax().max(1.0);
            if s.abs() > SUM_TOL * scale {
                return Err(Error::InvalidRateMatrix(format!("column {col} sums to {s}")));
            }
        }
        Ok(TransitionRateMatrix { matrix: raw })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    /// Builds a generator from off-diagonal rates; the diagonal is filled in.
    pub fn from_off_diagonal(rates: DMatrix<f64>) -> Result<Self> {
        let d = check_square(&rates)?;
        let mut m = rates;
        for n in 0..d {
            m[(n, n)] = 0.0;
            let out: f64 = m.column(n).sum();
            m[(n, n)] = -out;
        }
        Self::new(m)
    }

    /// The two-level decay generator `[[0, w], [0, −w]]`.
    pub fn two_level_decay(w: f64) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(2, 2, &[0.0, w, 0.0, -w]))
    }

    pub fn zeros(d: usize) -> Self {
        TransitionRateMatrix { matrix: DMatrix::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn escape_rate(&self) -> f64 {
        escape_rate(self)
    }
}

impl UndesiredSet {
    pub fn new(dim: usize, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidUndesiredSet("empty set".into()));
        }
        if indices.len() >= dim {
            return Err(Error::InvalidUndesiredSet(format!(
                "set of size {} is not a proper subset of {dim} states",
                indices.len()
            )));
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidUndesiredSet("duplicate index".into()));
        }
        if let Some(&bad) = sorted.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidUndesiredSet(format!("index {bad} out of range for dim {dim}")));
        }
        Ok(UndesiredSet { dim, indices: sorted })
    }

    /// Accepts indices counted from one, as written on the command line.
    pub fn from_one_based(dim: usize, indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::InvalidUndesiredSet("one-based indices start at 1".into()));
        }
        let zero: Vec<usize> = indices.iter().map(|i| i - 1).collect();
        Self::new(dim, &zero)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

impl Protocol {
    pub fn new(generator: TransitionRateMatrix, duration: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidProtocol(format!("duration must be positive, got {duration}")));
        }
        Ok(Protocol { generator, duration })
    }

    pub fn unit(generator: TransitionRateMatrix) -> Self {
        Protocol { generator, duration: 1.0 }
    }

    /// Escape rate of the unit-time generator `W·τ`.
    pub fn effective_escape_rate(&self) -> f64 {
        self.generator.escape_rate() * self.duration
    }
}

impl ProtocolSequence {
    pub fn new(dim: usize, protocols: Vec<Protocol>) -> Result<Self> {
        for p in &protocols {
            if p.generator.dim() != dim {
                return Err(Error::DimMismatch { expected: dim, found: p.generator.dim() });
            }
        }
        Ok(ProtocolSequence { dim, protocols })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn protocols(&self) -> &[Protocol] {
        &self.protocols
    }

    pub fn len(&self) -> usize {
        self.protocols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.protocols.is_empty()
    }

    /// Rejects the sequence if any unit-time escape rate exceeds `gamma`.
    pub fn check_rate_budget(&self, gamma: f64) -> Result<()> {
        for (index, p) in self.protocols.iter().enumerate() {
            let rate = p.effective_escape_rate();
            if rate > gamma * (1.0 + 1e-12) {
                return Err(Error::RateExceedsGamma { index, rate, gamma });
            }
        }
        Ok(())
    }
}

/// The two-level reset map `e^{Wτ}` for `W = [[0, w], [0, −w]]` in closed form.
pub fn two_level_reset(w_tau: f64) -> StochasticMap {
    let e = (-w_tau).exp();
    StochasticMap::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[1.0, -(-w_tau).exp_m1(), 0.0, e]))
}

/// The 3-state map with zero diagonal and 1/2 elsewhere.
pub fn derangement_map() -> StochasticMap {
    StochasticMap::from_matrix_unchecked(DMatrix::from_row_slice(
        3,
        3,
        &[0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0],
    ))
}

//! Kraus channels, Choi matrices, density operators and projectors.
//!
//! Choi matrices put the input on the first tensor factor:
//! `M = Σ_{m,n} |m⟩⟨n| ⊗ Λ(|m⟩⟨n|)`, indexed `(m·d + i, n·d + j)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::maps::StochasticMap;

/// Tolerance for Hermiticity and eigenvalue checks of density operators.
pub const DENSITY_TOL: f64 = 1e-10;
/// Tolerance for trace preservation and idempotence.
pub const CHANNEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorQ {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NonSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let dev = linalg::hermitian_deviation(&m);
        if dev > DENSITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let h = linalg::hermitize(&m);
        let tr = h.trace().re;
        if (tr - 1.0).abs() > CHANNEL_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let low = linalg::herm_eigenvalues(&h).min();
        if low < -DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {low:e}")));
        }
        Ok(DensityOperator { matrix: h })
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        let d = p.len();
        Self::new(CMatrix::from_fn(d, d, |i, j| if i == j { c(p[i], 0.0) } else { c(0.0, 0.0) }))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityOperator { matrix: linalg::identity(d).scale(1.0 / d as f64) }
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        DensityOperator { matrix: linalg::hermitize(&m) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::herm_eigenvalues(&self.matrix).iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::herm_eigenvalues(&self.matrix).min()
    }
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidDensity("channel needs at least one Kraus operator".into()))?;
        let d = first.nrows();
        if d < 2 {
            return Err(Error::DimTooSmall(d));
        }
        for k in &kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimMismatch { expected: d, found: k.nrows().max(k.ncols()) });
            }
        }
        let sum = kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        let dev = linalg::max_abs(&(sum - linalg::identity(d)));
        if !(dev <= CHANNEL_TOL) {
            return Err(Error::TracePreservationViolation(dev));
        }
        Ok(KrausChannel { dim: d, kraus })
    }

    pub fn identity(d: usize) -> Self {
        KrausChannel { dim: d, kraus: vec![linalg::identity(d)] }
    }

    /// `Λ(ρ) = tr(ρ)·I/d`.
    pub fn fully_depolarizing(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let mut kraus = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut k = CMatrix::zeros(d, d);
                k[(i, j)] = c(s, 0.0);
                kraus.push(k);
            }
        }
        KrausChannel { dim: d, kraus }
    }

    /// Qubit dephasing `{√λ·I, √(1−λ)·Z}`.
    pub fn dephasing(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange(format!("dephasing weight {lambda}")));
        }
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        Self::new(vec![linalg::identity(2).scale(lambda.sqrt()), z.scale((1.0 - lambda).sqrt())])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `Σ_j K_j X K_j†` for any operator `X`.
    pub fn apply_operator(&self, x: &CMatrix) -> CMatrix {
        self.kraus.iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k * x * k.adjoint())
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, found: rho.dim() });
        }
        Ok(DensityOperator::from_matrix_unchecked(self.apply_operator(rho.matrix())))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &KrausChannel) -> Result<KrausChannel> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch { expected: self.dim, found: other.dim });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a * b);
            }
        }
        // Minimal Kraus form keeps repeated compositions from growing without bound.
        let ch = KrausChannel { dim: self.dim, kraus };
        Ok(choi_unchecked(&ch).to_kraus())
    }
}

fn choi_unchecked(ch: &KrausChannel) -> ChoiMatrix {
    let d = ch.dim;
    let mut m = CMatrix::zeros(d * d, d * d);
    for k in &ch.kraus {
        for mm in 0..d {
            for nn in 0..d {
                for i in 0..d {
                    let a = k[(i, mm)];
                    if a.re == 0.0 && a.im == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        m[(mm * d + i, nn * d + j)] += a * k[(j, nn)].conj();
                    }
                }
            }
        }
    }
    ChoiMatrix { dim: d, matrix: m }
}

/// `M = (I ⊗ Λ)(|Ω⟩⟨Ω|)` with `|Ω⟩ = Σ_m |m⟩|m⟩`.
pub fn choi_from_kraus(ch: &KrausChannel) -> Result<ChoiMatrix> {
    let choi = choi_unchecked(ch);
    let dev = linalg::max_abs(&(choi.partial_trace_output() - linalg::identity(ch.dim)));
    if dev > CHANNEL_TOL {
        return Err(Error::TracePreservationViolation(dev));
    }
    Ok(choi)
}

impl ChoiMatrix {
    /// Accepts a positive semidefinite `d²×d²` matrix whose output partial trace is the identity.
    pub fn new(m: CMatrix, dim: usize) -> Result<Self> {
        if m.nrows() != dim * dim || m.ncols() != dim * dim {
            return Err(Error::DimMismatch { expected: dim * dim, found: m.nrows() });
        }
        let dev = linalg::hermitian_deviation(&m);
        if dev > CHANNEL_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let h = linalg::hermitize(&m);
        let low = linalg::herm_eigenvalues(&h).min();
        if low < -CHANNEL_TOL {
            return Err(Error::InvalidDensity(format!("Choi matrix has eigenvalue {low:e}")));
        }
        let choi = ChoiMatrix { dim, matrix: h };
        let dev = linalg::max_abs(&(choi.partial_trace_output() - linalg::identity(dim)));
        if dev > CHANNEL_TOL {
            return Err(Error::TracePreservationViolation(dev));
        }
        Ok(choi)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `tr₂ M`, an operator on the input space; the identity for trace-preserving channels.
    pub fn partial_trace_output(&self) -> CMatrix {
        linalg::partial_trace_second(&self.matrix, self.dim, self.dim)
    }

    /// `tr₁ M = Λ(I)`.
    pub fn partial_trace_input(&self) -> CMatrix {
        linalg::partial_trace_first(&self.matrix, self.dim, self.dim)
    }

    /// `Λ(X) = Σ_{m,n} X_mn·Λ(|m⟩⟨n|)`, read off the Choi blocks.
    pub fn apply_operator(&self, x: &CMatrix) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d, d);
        for m in 0..d {
            for n in 0..d {
                let w = x[(m, n)];
                if w.re == 0.0 && w.im == 0.0 {
                    continue;
                }
                out += self.matrix.view((m * d, n * d), (d, d)) * w;
            }
        }
        out
    }

    /// Kraus operators from the eigendecomposition; eigenvalues below `1e-14` are dropped.
    pub fn to_kraus(&self) -> KrausChannel {
        let d = self.dim;
        let (values, vectors) = linalg::herm_eigen(&self.matrix);
        let mut kraus = Vec::new();
        for k in (0..d * d).rev() {
            let lam = values[k];
            if lam <= linalg::EIGEN_FLOOR {
                continue;
            }
            let s = lam.sqrt();
            kraus.push(CMatrix::from_fn(d, d, |i, m| vectors[(m * d + i, k)] * s));
        }
        if kraus.is_empty() {
            kraus.push(CMatrix::zeros(d, d));
        }
        KrausChannel { dim: d, kraus }
    }
}

/// `φ = Λ(I/d)`.
pub fn reduced_output(ch: &KrausChannel) -> DensityOperator {
    let d = ch.dim;
    DensityOperator::from_matrix_unchecked(ch.apply_operator(&linalg::identity(d).scale(1.0 / d as f64)))
}

impl ProjectorQ {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NonSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let dev = linalg::hermitian_deviation(&m);
        if dev > CHANNEL_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let h = linalg::hermitize(&m);
        let dev = linalg::max_abs(&(&h * &h - &h));
        if dev > CHANNEL_TOL {
            return Err(Error::NotProjector(dev));
        }
        Ok(ProjectorQ { matrix: h })
    }

    /// `Σ_{k∈indices} |k⟩⟨k|`.
    pub fn computational(d: usize, indices: &[usize]) -> Result<Self> {
        let mut m = CMatrix::zeros(d, d);
        for &k in indices {
            if k >= d {
                return Err(Error::OutOfRange(format!("basis index {k} for dim {d}")));
            }
            m[(k, k)] = c(1.0, 0.0);
        }
        Ok(ProjectorQ { matrix: m })
    }

    /// Projector onto the span of the given orthonormal columns.
    pub fn from_columns(v: &CMatrix) -> Result<Self> {
        Self::new(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round().max(0.0) as usize
    }
}

/// `ε = tr[Π·Λ(I)]`.
pub fn quantum_error(ch: &KrausChannel, pi: &ProjectorQ) -> Result<f64> {
    if pi.dim() != ch.dim {
        return Err(Error::DimMismatch { expected: ch.dim, found: pi.dim() });
    }
    let out = ch.apply_operator(&linalg::identity(ch.dim));
    Ok((pi.matrix() * out).trace().re)
}

/// `T_mn = ⟨b_m|Λ(|b_n⟩⟨b_n|)|b_m⟩` for the orthonormal columns `b` of `basis`.
pub fn classical_reduction_in_basis(ch: &KrausChannel, basis: &CMatrix) -> Result<StochasticMap> {
    let d = ch.dim;
    if basis.nrows() != d || basis.ncols() != d {
        return Err(Error::DimMismatch { expected: d, found: basis.nrows() });
    }
    let dev = linalg::max_abs(&(basis.adjoint() * basis - linalg::identity(d)));
    if dev > CHANNEL_TOL {
        return Err(Error::OutOfRange(format!("basis is not orthonormal (deviation {dev:e})")));
    }
    let mut t = DMatrix::zeros(d, d);
    for n in 0..d {
        let b = basis.column(n);
        let out = ch.apply_operator(&(b * b.adjoint()));
        for m in 0..d {
            let bm = basis.column(m);
            t[(m, n)] = (bm.adjoint() * &out * bm)[(0, 0)].re;
        }
    }
    crate::maps::validate_map(t)
}

pub fn classical_reduction(ch: &KrausChannel) -> Result<StochasticMap> {
    classical_reduction_in_basis(ch, &linalg::identity(ch.dim))
}

/// The channel with Kraus operators `√T_mn·|m⟩⟨n|`, whose classical reduction is `T`.
pub fn classical_embedding(t: &StochasticMap) -> KrausChannel {
    let d = t.dim();
    let mut kraus = Vec::new();
    for m in 0..d {
        for n in 0..d {
            let p = t.entry(m, n);
            if p > 0.0 {
                let mut k = CMatrix::zeros(d, d);
                k[(m, n)] = c(p.sqrt(), 0.0);
                kraus.push(k);
            }
        }
    }
    KrausChannel { dim: d, kraus }
}

/// Qubit channel that replaces the state by `ρ_E = (1−κ)|0⟩⟨0| + κ|1⟩⟨1|`.
pub fn swap_channel(kappa: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::OutOfRange(format!("kappa = {kappa} outside [0, 1]")));
    }
    let p = [1.0 - kappa, kappa];
    let mut kraus = Vec::new();
    for (m, pm) in p.iter().enumerate() {
        for n in 0..2 {
            let mut k = CMatrix::zeros(2, 2);
            k[(m, n)] = c(pm.sqrt(), 0.0);
            kraus.push(k);
        }
    }
    Ok(KrausChannel { dim: 2, kraus })
}

/// `Λ(ρ) = tr_E[U(ρ ⊗ π_E)U†]` with `π_E = diag(env)` and tensor order system ⊗ environment.
pub fn dilation_channel(u: &CMatrix, d: usize, env: &[f64]) -> Result<KrausChannel> {
    let e = env.len();
    if u.nrows() != d * e || u.ncols() != d * e {
        return Err(Error::DimMismatch { expected: d * e, found: u.nrows() });
    }
    let dev = linalg::max_abs(&(u.adjoint() * u - linalg::identity(d * e)));
    if dev > CHANNEL_TOL {
        return Err(Error::OutOfRange(format!("dilation operator is not unitary (deviation {dev:e})")));
    }
    if env.iter().any(|p| !(*p >= 0.0)) || (env.iter().sum::<f64>() - 1.0).abs() > CHANNEL_TOL {
        return Err(Error::InvalidDensity("environment weights must be a probability vector".into()));
    }
    let mut kraus = Vec::new();
    for (j, pj) in env.iter().enumerate() {
        if *pj == 0.0 {
            continue;
        }
        let s = pj.sqrt();
        for i in 0..e {
            kraus.push(CMatrix::from_fn(d, d, |a, b| u[(a * e + i, b * e + j)] * s));
        }
    }
    KrausChannel::new(kraus)
}

/// The swap unitary on two systems of dimension `d`.
pub fn swap_unitary(d: usize) -> CMatrix {
    let mut u = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            u[(b * d + a, a * d + b)] = c(1.0, 0.0);
        }
    }
    u
}

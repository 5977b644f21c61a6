//! Dense linear-algebra helpers shared by the classical and quantum modules.
//!
//! Real matrix exponentials go through nalgebra's Padé scaling-and-squaring.
//! Hermitian matrix functions are evaluated in the eigenbasis after
//! symmetrizing the input.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Eigenvalues below this are clamped before taking logarithms or inverse roots.
pub const EIGEN_FLOOR: f64 = 1e-14;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().exp()
}

pub fn expm_complex(m: &CMatrix) -> CMatrix {
    m.clone().exp()
}

/// `(M + M†) / 2`
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entrywise modulus of `M − M†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn herm_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = hermitize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn herm_eigenvalues(m: &CMatrix) -> DVector<f64> {
    herm_eigen(m).0
}

/// `V f(Λ) V†` for the Hermitian part of `m`.
pub fn herm_apply(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = herm_eigen(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for k in 0..n {
        let fk = c(f(values[k]), 0.0);
        for i in 0..n {
            scaled[(i, k)] *= fk;
        }
    }
    hermitize(&(scaled * vectors.adjoint()))
}

pub fn herm_exp(m: &CMatrix) -> CMatrix {
    herm_apply(m, f64::exp)
}

pub fn herm_log(m: &CMatrix) -> CMatrix {
    herm_apply(m, |x| x.max(EIGEN_FLOOR).ln())
}

pub fn herm_sqrt(m: &CMatrix) -> CMatrix {
    herm_apply(m, |x| x.max(0.0).sqrt())
}

pub fn herm_inv_sqrt(m: &CMatrix) -> CMatrix {
    herm_apply(m, |x| 1.0 / x.max(EIGEN_FLOOR).sqrt())
}

pub fn herm_pow(m: &CMatrix, p: f64) -> CMatrix {
    herm_apply(m, |x| x.max(EIGEN_FLOOR).powf(p))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Trace over the first tensor factor of a `(d1·d2)×(d1·d2)` operator.
pub fn partial_trace_first(m: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d2, d2);
    for k in 0..d1 {
        for i in 0..d2 {
            for j in 0..d2 {
                out[(i, j)] += m[(k * d2 + i, k * d2 + j)];
            }
        }
    }
    out
}

/// Trace over the second tensor factor of a `(d1·d2)×(d1·d2)` operator.
pub fn partial_trace_second(m: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d1, d1);
    for i in 0..d1 {
        for j in 0..d1 {
            let mut acc = c(0.0, 0.0);
            for k in 0..d2 {
                acc += m[(i * d2 + k, j * d2 + k)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

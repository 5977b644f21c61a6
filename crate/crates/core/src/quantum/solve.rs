//! Two-sided Hermitian scaling of a positive-definite bipartite operator.
//!
//! Given `A > 0` on `C^d ⊗ C^d` and a target state `φ`, find Hermitian `U`, `V`
//! with `M = exp(ln A + U⊗I + I⊗V)` satisfying `tr₂M = I` and `tr₁M = d·φ`.
//! These are the stationarity conditions of the convex potential
//! `F(U, V) = tr M − tr U − d·tr(Vφ)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

use super::channel::DensityOperator;

pub const QUANTUM_SOLVER_MAX_DIM: usize = 2;
pub const QUANTUM_SOLVER_MAX_ITERS: usize = 200;
/// Partial-trace residual accepted as success.
pub const QUANTUM_SOLVER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumScaling {
    pub u: CMatrix,
    /// Traceless.
    pub v: CMatrix,
    pub choi: CMatrix,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantumScalingSummary {
    pub residual: f64,
    pub iterations: usize,
}

impl QuantumScaling {
    pub fn summary(&self) -> QuantumScalingSummary {
        QuantumScalingSummary { residual: self.residual, iterations: self.iterations }
    }
}

/// Hilbert–Schmidt orthonormal Hermitian basis; the first element is `I/√d`
/// when `with_identity` is set, otherwise only traceless elements are returned.
fn hermitian_basis(d: usize, with_identity: bool) -> Vec<CMatrix> {
    let mut out = Vec::new();
    if with_identity {
        out.push(linalg::identity(d).scale(1.0 / (d as f64).sqrt()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            let mut re = CMatrix::zeros(d, d);
            re[(i, j)] = c(s, 0.0);
            re[(j, i)] = c(s, 0.0);
            out.push(re);
            let mut im = CMatrix::zeros(d, d);
            im[(i, j)] = c(0.0, -s);
            im[(j, i)] = c(0.0, s);
            out.push(im);
        }
    }
    // diagonal traceless elements in the generalized Gell-Mann form
    for k in 1..d {
        let norm = 1.0 / ((k * (k + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..k {
            m[(i, i)] = c(norm, 0.0);
        }
        m[(k, k)] = c(-(k as f64) * norm, 0.0);
        out.push(m);
    }
    out
}

struct Problem {
    d: usize,
    log_a: CMatrix,
    /// Directions on the bipartite space: first `nu` act on the input factor.
    dirs: Vec<CMatrix>,
    /// Linear part of the potential along each direction.
    lin: Vec<f64>,
    nu: usize,
    u_basis: Vec<CMatrix>,
    v_basis: Vec<CMatrix>,
    target: CMatrix,
}

impl Problem {
    fn hamiltonian(&self, x: &DVector<f64>) -> CMatrix {
        let mut h = self.log_a.clone();
        for (k, b) in self.dirs.iter().enumerate() {
            h += b.scale(x[k]);
        }
        h
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        let ev = linalg::herm_eigenvalues(&self.hamiltonian(x));
        ev.iter().map(|e| e.exp()).sum::<f64>() - x.dot(&DVector::from_column_slice(&self.lin))
    }

    fn residual(&self, m: &CMatrix) -> f64 {
        let d = self.d;
        let a = linalg::max_abs(&(linalg::partial_trace_second(m, d, d) - linalg::identity(d)));
        let b = linalg::max_abs(&(linalg::partial_trace_first(m, d, d) - self.target.scale(d as f64)));
        a.max(b)
    }

    /// Choi candidate, gradient and Hessian at `x`.
    fn derivatives(&self, x: &DVector<f64>) -> (CMatrix, DVector<f64>, DMatrix<f64>) {
        let h = self.hamiltonian(x);
        let (vals, vecs) = linalg::herm_eigen(&h);
        let n = vals.len();
        let exps: Vec<f64> = vals.iter().map(|v| v.exp()).collect();
        let mut m = vecs.clone();
        for k in 0..n {
            for i in 0..n {
                m[(i, k)] *= c(exps[k], 0.0);
            }
        }
        let m = linalg::hermitize(&(m * vecs.adjoint()));
        // divided differences of exp at the eigenvalues
        let kernel = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (vals[i], vals[j]);
            if (a - b).abs() < 1e-10 * (1.0 + a.abs()) {
                (0.5 * (a + b)).exp()
            } else {
                (exps[i] - exps[j]) / (a - b)
            }
        });
        let rotated: Vec<CMatrix> = self.dirs.iter().map(|b| vecs.adjoint() * b * &vecs).collect();
        let p = self.dirs.len();
        let mut g = DVector::zeros(p);
        for k in 0..p {
            g[k] = (&m * &self.dirs[k]).trace().re - self.lin[k];
        }
        let mut hess = DMatrix::zeros(p, p);
        for a in 0..p {
            for b in a..p {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += kernel[(i, j)] * (rotated[a][(i, j)] * rotated[b][(j, i)]).re;
                    }
                }
                hess[(a, b)] = acc;
                hess[(b, a)] = acc;
            }
        }
        (m, g, hess)
    }

    fn split(&self, x: &DVector<f64>) -> (CMatrix, CMatrix) {
        let d = self.d;
        let mut u = CMatrix::zeros(d, d);
        let mut v = CMatrix::zeros(d, d);
        for (k, b) in self.u_basis.iter().enumerate() {
            u += b.scale(x[k]);
        }
        for (k, b) in self.v_basis.iter().enumerate() {
            v += b.scale(x[self.nu + k]);
        }
        (u, v)
    }
}

pub fn quantum_scale_solve(a: &CMatrix, phi: &DensityOperator) -> Result<QuantumScaling> {
    let d = phi.dim();
    quantum_scale_solve_from(a, phi, &CMatrix::zeros(d, d), &CMatrix::zeros(d, d))
}

/// Damped Newton from a given Hermitian starting pair, gauge-fixed so `tr V = 0`.
pub fn quantum_scale_solve_from(a: &CMatrix, phi: &DensityOperator, u0: &CMatrix, v0: &CMatrix) -> Result<QuantumScaling> {
    let d = phi.dim();
    if d > QUANTUM_SOLVER_MAX_DIM {
        return Err(Error::DimTooLarge(d));
    }
    if a.nrows() != d * d || a.ncols() != d * d {
        return Err(Error::DimMismatch { expected: d * d, found: a.nrows() });
    }
    let dev = linalg::hermitian_deviation(a);
    if dev > 1e-10 * linalg::max_abs(a).max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let low = linalg::herm_eigenvalues(a).min();
    if !(low > 1e-12) {
        return Err(Error::SingularInput(low));
    }
    let plow = phi.min_eigenvalue();
    if !(plow > 1e-12) {
        return Err(Error::SingularInput(plow));
    }
    let id = linalg::identity(d);
    let u_basis = hermitian_basis(d, true);
    let v_basis = hermitian_basis(d, false);
    let mut dirs = Vec::new();
    let mut lin = Vec::new();
    for b in &u_basis {
        dirs.push(linalg::kron(b, &id));
        lin.push(b.trace().re);
    }
    for b in &v_basis {
        dirs.push(linalg::kron(&id, b));
        lin.push(d as f64 * (b * phi.matrix()).trace().re);
    }
    let nu = u_basis.len();
    let prob = Problem {
        d,
        log_a: linalg::herm_log(a),
        dirs,
        lin,
        nu,
        u_basis,
        v_basis,
        target: phi.matrix().clone(),
    };

    // Shift tr V into U, then expand in the bases.
    let shift = v0.trace().re / d as f64;
    let u_start = linalg::hermitize(u0) + id.scale(shift);
    let v_start = linalg::hermitize(v0) - id.scale(shift);
    let mut x = DVector::zeros(prob.dirs.len());
    for (k, b) in prob.u_basis.iter().enumerate() {
        x[k] = (b * &u_start).trace().re;
    }
    for (k, b) in prob.v_basis.iter().enumerate() {
        x[nu + k] = (b * &v_start).trace().re;
    }

    let mut iterations = 0;
    let (mut m, mut g, mut hess) = prob.derivatives(&x);
    let mut residual = prob.residual(&m);
    while iterations < QUANTUM_SOLVER_MAX_ITERS && residual > 1e-13 {
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            None => -&g,
        };
        let f0 = prob.objective(&x);
        let slope = g.dot(&step);
        let dir = if slope < 0.0 { step } else { -&g };
        let slope = g.dot(&dir);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let trial = &x + &dir * t;
            let f1 = prob.objective(&trial);
            if f1.is_finite() && f1 <= f0 + 1e-4 * t * slope {
                x = trial;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !moved {
            break;
        }
        let next = prob.derivatives(&x);
        m = next.0;
        g = next.1;
        hess = next.2;
        residual = prob.residual(&m);
    }
    if !(residual <= QUANTUM_SOLVER_TOL) {
        return Err(Error::NoConvergence { iterations, residual: g.amax() });
    }
    let (u, v) = prob.split(&x);
    Ok(QuantumScaling { u, v, choi: m, residual, iterations })
}

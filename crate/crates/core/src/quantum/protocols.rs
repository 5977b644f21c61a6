//! Protocol-count bounds for Lindblad and unitary-dilation implementations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::log_rate_budget;
use crate::linalg::{self, c, CMatrix};

use super::channel::{ChoiMatrix, KrausChannel};

/// `N_min = ℓ / (√d·ln(d·e^γ))` for protocols with `‖Σ_c L_c†L_c‖_∞ ≤ γ`.
pub fn lindblad_protocol_bound(ell: f64, d: usize, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::NonpositiveRate(gamma));
    }
    if !(ell >= 0.0) {
        return Err(Error::OutOfRange(format!("length must be nonnegative, got {ell}")));
    }
    Ok(ell / ((d as f64).sqrt() * log_rate_budget(d, gamma)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DilationBound {
    /// `ln(1/(d·λ₁)) / ln(d·e^γ)`.
    pub n_min: f64,
    pub lambda_min: f64,
}

/// Smallest output eigenvalue reachable with `n` dilation steps of bandwidth `γ`.
pub fn dilation_eigen_floor(d: usize, gamma: f64, n: usize) -> f64 {
    let df = d as f64;
    ((-gamma).exp() / df).powi(n as i32) / df
}

pub fn dilation_protocol_bound(lambda_min: f64, d: usize, gamma: f64) -> Result<DilationBound> {
    if !(gamma > 0.0) {
        return Err(Error::NonpositiveRate(gamma));
    }
    let df = d as f64;
    if !(lambda_min > 0.0 && lambda_min <= 1.0 / df + 1e-12) {
        return Err(Error::OutOfRange(format!("smallest eigenvalue {lambda_min} outside (0, 1/{d}]")));
    }
    let n_min = ((1.0 / (df * lambda_min)).ln() / log_rate_budget(d, gamma)).max(0.0);
    Ok(DilationBound { n_min, lambda_min })
}

/// `ρ̇ = −i[H, ρ] + Σ_c (L_c ρ L_c† − ½{L_c†L_c, ρ})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladGenerator {
    pub hamiltonian: CMatrix,
    pub jumps: Vec<CMatrix>,
}

impl LindbladGenerator {
    pub fn new(hamiltonian: CMatrix, jumps: Vec<CMatrix>) -> Result<Self> {
        let d = hamiltonian.nrows();
        if !hamiltonian.is_square() {
            return Err(Error::NonSquare { rows: d, cols: hamiltonian.ncols() });
        }
        let dev = linalg::hermitian_deviation(&hamiltonian);
        if dev > 1e-10 {
            return Err(Error::NotHermitian(dev));
        }
        for l in &jumps {
            if l.nrows() != d || l.ncols() != d {
                return Err(Error::DimMismatch { expected: d, found: l.nrows() });
            }
        }
        Ok(LindbladGenerator { hamiltonian, jumps })
    }

    /// Qubit decay `L = √w·|0⟩⟨1|`.
    pub fn amplitude_damping(w: f64) -> Result<Self> {
        if !(w >= 0.0) {
            return Err(Error::NonpositiveRate(w));
        }
        let mut l = CMatrix::zeros(2, 2);
        l[(0, 1)] = c(w.sqrt(), 0.0);
        Self::new(CMatrix::zeros(2, 2), vec![l])
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// `‖Σ_c L_c†L_c‖_∞`.
    pub fn coupling_norm(&self) -> f64 {
        let d = self.dim();
        let s = self.jumps.iter().fold(CMatrix::zeros(d, d), |acc, l| acc + l.adjoint() * l);
        linalg::herm_eigenvalues(&s).max().max(0.0)
    }

    /// Superoperator acting on column-stacked `vec(ρ)`, entry `ρ_ij` at `i + j·d`.
    pub fn superoperator(&self) -> CMatrix {
        let d = self.dim();
        let id = linalg::identity(d);
        let h = &self.hamiltonian;
        let mut s = (linalg::kron(&id, h) - linalg::kron(&h.transpose(), &id)) * c(0.0, -1.0);
        for l in &self.jumps {
            let ll = l.adjoint() * l;
            s += linalg::kron(&l.conjugate(), l);
            s -= (linalg::kron(&id, &ll) + linalg::kron(&ll.transpose(), &id)).scale(0.5);
        }
        s
    }

    /// The channel `e^{τ·𝓛}` in minimal Kraus form.
    pub fn channel(&self, tau: f64) -> Result<KrausChannel> {
        if !(tau >= 0.0) {
            return Err(Error::OutOfRange(format!("duration {tau}")));
        }
        let d = self.dim();
        let prop = linalg::expm_complex(&self.superoperator().scale(tau));
        let mut m = CMatrix::zeros(d * d, d * d);
        for mm in 0..d {
            for nn in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        m[(mm * d + i, nn * d + j)] = prop[(i + j * d, mm + nn * d)];
                    }
                }
            }
        }
        let choi = ChoiMatrix::new(m, d)?;
        KrausChannel::new(choi.to_kraus().kraus().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::channel::{dilation_channel, reduced_output, swap_unitary, DensityOperator};
    use crate::quantum::spd::quantum_ell;

    #[test]
    fn lindblad_bound_examples() {
        assert_eq!(lindblad_protocol_bound(0.0, 2, 1.0).unwrap(), 0.0);
        let gen = LindbladGenerator::amplitude_damping(1.0).unwrap();
        assert!((gen.coupling_norm() - 1.0).abs() < 1e-15);
        let ch = gen.channel(1.0).unwrap();
        let phi = reduced_output(&ch);
        let q = (-1f64).exp() / 2.0;
        let ev = phi.eigenvalues();
        assert!((ev[0] - q).abs() < 1e-12 && (ev[1] - (1.0 - q)).abs() < 1e-12);
        let l = quantum_ell(&ch);
        let oracle = ((2.0 - (-1f64).exp()).ln().powi(2) + 1.0).sqrt();
        assert!((l - oracle).abs() < 1e-11);
        assert!((l - 1.113545032).abs() < 1e-8);
        let n = lindblad_protocol_bound(l, 2, 1.0).unwrap();
        assert!((n - 0.4649).abs() < 1e-3);
        assert!(n <= 1.0);
        assert!(lindblad_protocol_bound(1.0, 2, 0.0).is_err());
    }

    #[test]
    fn superoperator_matches_direct_generator() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(-0.4, 0.0)]);
        let l = CMatrix::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.5, 0.1), c(0.0, 0.0), c(-0.1, 0.3)]);
        let gen = LindbladGenerator::new(h.clone(), vec![l.clone()]).unwrap();
        let rho = CMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.4, 0.0)]);
        let i = c(0.0, 1.0);
        let ll = l.adjoint() * &l;
        let direct = (&h * &rho - &rho * &h) * (-i) + &l * &rho * l.adjoint() - (&ll * &rho + &rho * &ll).scale(0.5);
        let vec_rho = nalgebra::DVector::from_iterator(4, rho.iter().copied());
        let out = gen.superoperator() * vec_rho;
        let back = CMatrix::from_column_slice(2, 2, out.as_slice());
        assert!(linalg::max_abs(&(back - direct)) < 1e-15);
    }

    #[test]
    fn lindblad_channel_is_trace_preserving() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.7, 0.0), c(0.7, 0.0), c(0.0, 0.0)]);
        let mut l = CMatrix::zeros(2, 2);
        l[(0, 1)] = c(0.8, 0.0);
        let gen = LindbladGenerator::new(h, vec![l]).unwrap();
        assert!(gen.channel(1.3).is_ok());
    }

    #[test]
    fn dilation_bound_examples() {
        let b = dilation_protocol_bound(0.5, 2, 1.0).unwrap();
        assert_eq!(b.n_min, 0.0);
        let b = dilation_protocol_bound(0.05, 2, 1.0).unwrap();
        assert!((b.n_min - 10f64.ln() / (2.0 * std::f64::consts::E).ln()).abs() < 1e-15);
        assert!((b.n_min - 1.3599438486).abs() < 1e-9);
        assert!(dilation_protocol_bound(0.7, 2, 1.0).is_err());
        assert!(dilation_protocol_bound(0.0, 2, 1.0).is_err());
    }

    #[test]
    fn gibbs_swaps_respect_eigen_floor() {
        // swap with a qubit Gibbs environment whose gap satisfies βΔ ≤ γ
        let gamma = 1.0;
        let mut state = DensityOperator::maximally_mixed(2);
        for n in 1..=4 {
            let bd = gamma * (0.5 + 0.1 * n as f64).min(1.0);
            let p1 = 1.0 / (1.0 + bd.exp());
            let ch = dilation_channel(&swap_unitary(2), 2, &[1.0 - p1, p1]).unwrap();
            state = ch.apply(&state).unwrap();
            assert!(state.min_eigenvalue() >= dilation_eigen_floor(2, gamma, n) - 1e-15);
        }
    }
}

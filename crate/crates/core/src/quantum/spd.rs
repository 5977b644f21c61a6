//! Affine-invariant distance on positive-definite matrices and the quantum bounds built on it.

use crate::error::{Error, Result};
use crate::geometry::{
    bracket_from_ell, ell_of_row_sums, entropic_bound_of, entropy_of, margins_from, ComplexityBracket,
    TradeoffMargin, DEFAULT_FLOOR,
};
use crate::linalg::{self, CMatrix};
use crate::maps::{ProbabilityVector, StochasticMap};
use crate::scaling::{geodesic_upper_estimate_with_floor, GeodesicEstimate};

use super::channel::{quantum_error, reduced_output, DensityOperator, KrausChannel, ProjectorQ};

/// Smallest eigenvalue accepted by [`spd_distance`].
pub const SPD_MIN_EIGEN: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;

fn check_spd(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::NonSquare { rows: a.nrows(), cols: a.ncols() });
    }
    let scale = linalg::max_abs(a).max(1.0);
    let dev = linalg::hermitian_deviation(a);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    let h = linalg::hermitize(a);
    let low = linalg::herm_eigenvalues(&h).min();
    if !(low > SPD_MIN_EIGEN) {
        return Err(Error::SingularInput(low));
    }
    Ok(h)
}

/// `D(A, B) = ‖ln(A^{−1/2}·B·A^{−1/2})‖_F`.
pub fn spd_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let a = check_spd(a)?;
    let b = check_spd(b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimMismatch { expected: a.nrows(), found: b.nrows() });
    }
    let w = linalg::herm_inv_sqrt(&a);
    let inner = &w * b * &w;
    let ev = linalg::herm_eigenvalues(&inner);
    Ok(ev.iter().map(|x| x.max(f64::MIN_POSITIVE).ln().powi(2)).sum::<f64>().sqrt())
}

fn spectrum(phi: &DensityOperator) -> Vec<f64> {
    phi.eigenvalues()
}

/// `ℓ = ‖ln d + ln φ‖_F` with `φ = Λ(I/d)`; `+∞` if an eigenvalue is at or below the floor.
pub fn quantum_ell(ch: &KrausChannel) -> f64 {
    quantum_ell_with_floor(ch, DEFAULT_FLOOR)
}

pub fn quantum_ell_with_floor(ch: &KrausChannel, floor: f64) -> f64 {
    ell_of_row_sums(&spectrum(&reduced_output(ch)), floor)
}

pub fn quantum_bracket(ch: &KrausChannel, floor: f64) -> ComplexityBracket {
    bracket_from_ell(quantum_ell_with_floor(ch, floor), ch.dim())
}

/// `ε·e^ℓ` and the sharper rank-weighted margin for a channel and projector.
///
/// The projector must have rank at least one.
pub fn quantum_tradeoff(ch: &KrausChannel, pi: &ProjectorQ) -> Result<TradeoffMargin> {
    quantum_tradeoff_with(ch, pi, DEFAULT_FLOOR, 1e-10)
}

pub fn quantum_tradeoff_with(ch: &KrausChannel, pi: &ProjectorQ, floor: f64, tol: f64) -> Result<TradeoffMargin> {
    let eps = quantum_error(ch, pi)?;
    let rank = pi.rank();
    if rank == 0 {
        return Err(Error::OutOfRange("projector has rank zero".into()));
    }
    Ok(margins_from(eps.max(0.0), quantum_ell_with_floor(ch, floor), rank, tol))
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    let ev: Vec<f64> = spectrum(rho).iter().map(|x| x.max(0.0)).collect();
    entropy_of(&ev)
}

/// `ln S(I/d) − ln S(φ)` with von Neumann entropies; `+∞` for a pure output.
pub fn quantum_entropy_bound(ch: &KrausChannel) -> f64 {
    let ev: Vec<f64> = spectrum(&reduced_output(ch)).iter().map(|x| x.max(0.0)).collect();
    entropic_bound_of(&ev)
}

/// Upper estimate along density paths that commute with `φ`.
///
/// Such paths only move the spectrum, so the classical estimator on the
/// eigenvalues of `φ` gives their shortest length.
pub fn quantum_upper_estimate(ch: &KrausChannel, k: usize, iters: usize, floor: f64) -> Result<GeodesicEstimate> {
    let ev: Vec<f64> = spectrum(&reduced_output(ch)).iter().map(|x| x.max(0.0)).collect();
    let s: f64 = ev.iter().sum();
    let p = ProbabilityVector::from_slice(&ev.iter().map(|x| x / s).collect::<Vec<_>>())?;
    geodesic_upper_estimate_with_floor(&StochasticMap::constant(&p), k, iters, floor)
}

/// `ρ(t) ∝ exp((1−t)·ln(I/d) + t·ln φ)` at `t = k/K`.
pub fn log_euclidean_seed_path(phi: &DensityOperator, k: usize) -> Result<Vec<DensityOperator>> {
    let d = phi.dim();
    let low = phi.min_eigenvalue();
    if !(low > SPD_MIN_EIGEN) {
        return Err(Error::SingularInput(low));
    }
    let l0 = linalg::identity(d).scale(-(d as f64).ln());
    let l1 = linalg::herm_log(phi.matrix());
    let mut out = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let t = i as f64 / k as f64;
        let e = linalg::herm_exp(&(l0.scale(1.0 - t) + l1.scale(t)));
        let tr = e.trace().re;
        out.push(DensityOperator::from_matrix_unchecked(e.unscale(tr)));
    }
    Ok(out)
}

/// Length of a sampled density path under `‖ρ^{−1/2}·ρ̇·ρ^{−1/2}‖_F`.
///
/// Consecutive samples are joined linearly, which keeps the trace fixed, and
/// each piece contributes its speed at the midpoint.
pub fn density_path_length(path: &[DensityOperator]) -> Result<f64> {
    let mut total = 0.0;
    for (k, w) in path.windows(2).enumerate() {
        if w[0].dim() != w[1].dim() {
            return Err(Error::DimMismatch { expected: w[0].dim(), found: w[1].dim() });
        }
        let mid = (w[0].matrix() + w[1].matrix()).scale(0.5);
        let low = linalg::herm_eigenvalues(&mid).min();
        if !(low > SPD_MIN_EIGEN) {
            return Err(Error::BoundarySample { sample: k });
        }
        let s = linalg::herm_inv_sqrt(&mid);
        let delta = w[1].matrix() - w[0].matrix();
        total += (&s * delta * &s).norm();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::quantum::channel::swap_channel;

    fn diag(p: &[f64]) -> CMatrix {
        CMatrix::from_fn(p.len(), p.len(), |i, j| if i == j { c(p[i], 0.0) } else { c(0.0, 0.0) })
    }

    fn sample_spd() -> CMatrix {
        CMatrix::from_row_slice(
            3,
            3,
            &[c(2.0, 0.0), c(0.3, 0.2), c(0.1, 0.0), c(0.3, -0.2), c(1.0, 0.0), c(0.0, 0.4), c(0.1, 0.0), c(0.0, -0.4), c(1.5, 0.0)],
        )
    }

    #[test]
    fn spd_distance_examples() {
        let a = sample_spd();
        assert!(spd_distance(&a, &a).unwrap() < 1e-12);
        let d = spd_distance(&diag(&[0.5, 0.5]), &diag(&[0.75, 0.25])).unwrap();
        assert!((d - 0.8030286220374507).abs() < 1e-14);
        assert!(matches!(spd_distance(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.5])), Err(Error::SingularInput(_))));
    }

    #[test]
    fn spd_congruence_and_symmetry() {
        let a = sample_spd();
        let b = diag(&[0.4, 1.3, 0.9]);
        let x = CMatrix::from_row_slice(
            3,
            3,
            &[c(1.0, 0.2), c(0.5, 0.0), c(0.0, 0.3), c(-0.2, 0.0), c(1.1, -0.4), c(0.3, 0.0), c(0.0, 0.1), c(0.2, 0.2), c(0.8, 0.0)],
        );
        let d0 = spd_distance(&a, &b).unwrap();
        let d1 = spd_distance(&(&x * &a * x.adjoint()), &(&x * &b * x.adjoint())).unwrap();
        assert!((d0 - d1).abs() < 1e-8);
        assert!((d0 - spd_distance(&b, &a).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn quantum_ell_examples() {
        assert_eq!(quantum_ell(&KrausChannel::identity(2)), 0.0);
        assert!(quantum_ell(&KrausChannel::fully_depolarizing(3)) < 1e-14);
        let l = quantum_ell(&swap_channel(0.25).unwrap());
        assert!((l - 0.8030286220374507).abs() < 1e-14);
        let mut prev = 0.0;
        for e in [1e-2, 1e-10, 1e-50, 1e-200, 1e-299] {
            let l = quantum_ell(&swap_channel(e).unwrap());
            assert!(l > prev);
            prev = l;
        }
        assert_eq!(quantum_ell(&swap_channel(0.0).unwrap()), f64::INFINITY);
    }

    #[test]
    fn quantum_tradeoff_examples() {
        let pi = ProjectorQ::computational(2, &[1]).unwrap();
        let m = quantum_tradeoff(&KrausChannel::identity(2), &pi).unwrap();
        assert!((m.margin - 1.0).abs() < 1e-15 && m.holds);
        let m = quantum_tradeoff(&swap_channel(0.25).unwrap(), &pi).unwrap();
        assert!((m.margin - 1.1161457340251055).abs() < 1e-13);
        let zero = ProjectorQ::computational(2, &[]).unwrap();
        assert!(quantum_tradeoff(&KrausChannel::identity(2), &zero).is_err());
    }

    #[test]
    fn entropy_bound_examples() {
        assert!(quantum_entropy_bound(&KrausChannel::identity(2)).abs() < 1e-15);
        let b = quantum_entropy_bound(&swap_channel(0.25).unwrap());
        assert!((b - 0.2091443435).abs() < 1e-9);
        assert_eq!(quantum_entropy_bound(&swap_channel(1.0).unwrap()), f64::INFINITY);
    }

    #[test]
    fn commuting_seed_path_in_bracket() {
        let ch = swap_channel(0.1).unwrap();
        let phi = reduced_output(&ch);
        let l = quantum_ell(&ch);
        let path = log_euclidean_seed_path(&phi, 512).unwrap();
        let len = density_path_length(&path).unwrap();
        assert!(len >= l && len <= (2f64.sqrt() + 1.0) * l + 1e-6);
        // in d = 2 this curve is the constrained geodesic
        let est = quantum_upper_estimate(&ch, 64, 200, DEFAULT_FLOOR).unwrap();
        assert!((len - est.length).abs() < 1e-5);
    }
}

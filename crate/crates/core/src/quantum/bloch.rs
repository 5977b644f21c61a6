//! Qubit states as Bloch vectors and the swap-channel closed form.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::purity_complexity;
use crate::linalg::{c, CMatrix};

use super::channel::DensityOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub fn new(a: [f64; 3]) -> Result<Self> {
        let v = BlochVector(a);
        if !(v.norm() <= 1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!("Bloch vector norm {} exceeds 1", v.norm())));
        }
        Ok(v)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `(I + a·σ)/2`.
    pub fn density(&self) -> DensityOperator {
        let [x, y, z] = self.0;
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c((1.0 + z) / 2.0, 0.0), c(x / 2.0, -y / 2.0), c(x / 2.0, y / 2.0), c((1.0 - z) / 2.0, 0.0)],
        );
        DensityOperator::from_matrix_unchecked(m)
    }

    /// Inverse of [`density`](Self::density).
    pub fn from_density(rho: &DensityOperator) -> Result<Self> {
        if rho.dim() != 2 {
            return Err(Error::DimMismatch { expected: 2, found: rho.dim() });
        }
        let m = rho.matrix();
        Self::new([2.0 * m[(1, 0)].re, 2.0 * m[(1, 0)].im, (m[(0, 0)] - m[(1, 1)]).re])
    }
}

/// Length under `g = 2‖ȧ‖²/(1−a²) + 4(a·ȧ)²/(1−a²)²`, midpoint rule per segment.
pub fn bloch_path_length(path: &[BlochVector]) -> Result<f64> {
    for (k, a) in path.iter().enumerate() {
        if !(a.norm() < 1.0) {
            return Err(Error::BoundaryBlochVector { sample: k });
        }
    }
    let mut total = 0.0;
    for w in path.windows(2) {
        let mid: Vec<f64> = (0..3).map(|i| 0.5 * (w[0].0[i] + w[1].0[i])).collect();
        let da: Vec<f64> = (0..3).map(|i| w[1].0[i] - w[0].0[i]).collect();
        let a2: f64 = mid.iter().map(|x| x * x).sum();
        let dd: f64 = da.iter().map(|x| x * x).sum();
        let ad: f64 = mid.iter().zip(&da).map(|(x, y)| x * y).sum();
        let q = 1.0 - a2;
        total += (2.0 * dd / q + 4.0 * ad * ad / (q * q)).sqrt();
    }
    Ok(total)
}

/// Straight path from the origin to `radius·ê_z` with `k` segments.
pub fn radial_path(radius: f64, k: usize) -> Vec<BlochVector> {
    (0..=k).map(|i| BlochVector([0.0, 0.0, radius * i as f64 / k as f64])).collect()
}

/// Closed-form complexity of the swap channel with environment weight `κ`.
///
/// Uses the purity `℘ = |2κ−1|`, with `1 − ℘ = 2·min(κ, 1−κ)` formed directly.
pub fn swap_complexity(kappa: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::OutOfRange(format!("kappa = {kappa} outside [0, 1]")));
    }
    let p = (2.0 * kappa - 1.0).abs();
    let gap = 2.0 * kappa.min(1.0 - kappa);
    Ok(purity_complexity(p, gap.ln()))
}

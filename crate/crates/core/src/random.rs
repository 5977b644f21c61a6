//! Random ensembles for property sweeps.
//!
//! * Stochastic maps: each column is an independent flat Dirichlet draw,
//!   sampled as normalized unit exponentials.
//! * Rate matrices: uniform off-diagonal rates rescaled so that the escape
//!   rate is at most the requested budget.
//! * Kraus channels: a complex Gaussian `(n·d)×d` block matrix is
//!   orthonormalized by QR; its `d×d` blocks are the Kraus operators.
//! * Projectors: leading columns of a QR-orthonormalized complex Gaussian matrix.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::linalg::{c, CMatrix};
use crate::maps::{Protocol, ProtocolSequence, StochasticMap, TransitionRateMatrix, UndesiredSet};
use crate::quantum::channel::{DensityOperator, KrausChannel, ProjectorQ};

pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| {
        let x: f64 = Exp1.sample(rng);
        x.max(f64::MIN_POSITIVE)
    });
    let s = v.sum();
    v / s
}

pub fn random_stochastic_map<R: Rng + ?Sized>(rng: &mut R, d: usize) -> StochasticMap {
    let mut m = DMatrix::zeros(d, d);
    for n in 0..d {
        m.set_column(n, &random_simplex(rng, d));
    }
    crate::maps::validate_map(m).expect("normalized columns are stochastic")
}

/// Strictly positive target row-sum vector bounded away from the boundary by `margin/d`.
pub fn random_interior<R: Rng + ?Sized>(rng: &mut R, d: usize, margin: f64) -> DVector<f64> {
    let p = random_simplex(rng, d);
    p.map(|x| (1.0 - margin) * x + margin / d as f64)
}

pub fn random_undesired_set<R: Rng + ?Sized>(rng: &mut R, d: usize) -> UndesiredSet {
    let k = rng.random_range(1..d);
    let mut idx: Vec<usize> = (0..d).collect();
    for i in 0..k {
        let j = rng.random_range(i..d);
        idx.swap(i, j);
    }
    UndesiredSet::new(d, &idx[..k]).expect("proper nonempty subset")
}

/// Generator with escape rate drawn uniformly in `(0, gamma]`.
pub fn random_rate_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize, gamma: f64) -> TransitionRateMatrix {
    let mut w = DMatrix::from_fn(d, d, |i, j| if i == j { 0.0 } else { rng.random::<f64>() });
    let out = (0..d).map(|n| w.column(n).sum()).fold(0.0, f64::max);
    let target = gamma * (1.0 - rng.random::<f64>());
    if out > 0.0 {
        w *= target / out;
    }
    TransitionRateMatrix::from_off_diagonal(w).expect("nonnegative rates")
}

/// `n` unit-duration protocols, each with escape rate at most `gamma`.
pub fn random_protocols<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize, gamma: f64) -> ProtocolSequence {
    let ps = (0..n).map(|_| Protocol::unit(random_rate_matrix(rng, d, gamma))).collect();
    ProtocolSequence::new(d, ps).expect("shared dimension")
}

pub fn random_complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Columns of `Q` from the QR factorization, with phases fixed by `R`'s diagonal.
fn orthonormal_columns(g: CMatrix) -> CMatrix {
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..q.ncols() {
        let rk = r[(k, k)];
        let n = rk.norm();
        if n > 0.0 {
            let phase = rk / n;
            for i in 0..q.nrows() {
                q[(i, k)] *= phase;
            }
        }
    }
    q
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    orthonormal_columns(random_complex_gaussian(rng, d, d))
}

pub fn random_kraus_channel<R: Rng + ?Sized>(rng: &mut R, d: usize, n_kraus: usize) -> KrausChannel {
    let q = orthonormal_columns(random_complex_gaussian(rng, n_kraus * d, d));
    let kraus = (0..n_kraus).map(|k| q.rows(k * d, d).into_owned()).collect();
    KrausChannel::new(kraus).expect("stacked isometry is trace preserving")
}

/// Projector of rank in `1..d`, or of rank `rank` if given.
pub fn random_projector<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: Option<usize>) -> ProjectorQ {
    let k = rank.unwrap_or_else(|| rng.random_range(1..d));
    let u = random_unitary(rng, d);
    ProjectorQ::from_columns(&u.columns(0, k).into_owned()).expect("orthonormal columns")
}

pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityOperator {
    let g = random_complex_gaussian(rng, d, d);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(m.unscale(tr)).expect("Wishart matrix normalized")
}

/// Kraus operators `e^{iθ}·√T_mn·|m⟩⟨n|` for a random stochastic `T` and random phases.
pub fn random_diagonal_kraus_channel<R: Rng + ?Sized>(rng: &mut R, d: usize) -> KrausChannel {
    let t = random_stochastic_map(rng, d);
    let mut kraus = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            let mut k = CMatrix::zeros(d, d);
            k[(m, n)] = c(theta.cos(), theta.sin()) * t.entry(m, n).sqrt();
            kraus.push(k);
        }
    }
    KrausChannel::new(kraus).expect("embedding of a stochastic map")
}

/// Hermitian positive-definite matrix with eigenvalues in `[0.1, 2.1)`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let u = random_unitary(rng, d);
    let diag = CMatrix::from_fn(d, d, |i, j| if i == j { c(0.1 + 2.0 * rng.random::<f64>(), 0.0) } else { c(0.0, 0.0) });
    crate::linalg::hermitize(&(&u * diag * u.adjoint()))
}

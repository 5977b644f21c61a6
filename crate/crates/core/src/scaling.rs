//! Two-sided diagonal scaling, constrained paths and geodesic length estimates.
//!
//! A strictly positive stochastic base `A` is deformed into
//! `diag(e^u)·A·diag(e^v)`, which keeps every column summing to one and gives
//! the rows any prescribed interior row-sum vector. Chaining such solves along
//! a schedule of row-sum vectors yields a path of stochastic maps whose metric
//! length depends on the schedule alone.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ell_of_row_sums, DEFAULT_FLOOR};
use crate::maps::{row_sums, RowSumVector, StochasticMap};

/// Newton iteration cap for the scaling solver.
pub const SINKHORN_MAX_NEWTON: usize = 200;
/// Iteration cap for the alternating-scaling fallback.
pub const SINKHORN_MAX_ALTERNATING: usize = 200_000;
/// Marginal residual accepted as success.
pub const SINKHORN_TOL: f64 = 1e-9;
/// Default mixing weight of the interpolation base.
pub const DEFAULT_MIX: f64 = 0.5;
/// Default iteration budget of the geodesic estimator.
pub const DEFAULT_ESTIMATOR_ITERS: usize = 500;

const NEWTON_STOP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinkhornSolution {
    /// Log row scalings.
    pub u: Vec<f64>,
    /// Log column scalings, gauge-fixed to sum to zero.
    pub v: Vec<f64>,
    /// Largest violation of `T·1/d = r` and `Tᵀ·1 = 1`.
    pub residual: f64,
    pub newton_steps: usize,
    /// Whether the alternating fallback was needed.
    pub used_fallback: bool,
}

impl SinkhornSolution {
    /// `diag(e^u)·A·diag(e^v)`.
    pub fn scaled(&self, a: &StochasticMap) -> DMatrix<f64> {
        let d = a.dim();
        DMatrix::from_fn(d, d, |m, n| a.entry(m, n) * (self.u[m] + self.v[n]).exp())
    }

    pub fn scaled_map(&self, a: &StochasticMap) -> Result<StochasticMap> {
        crate::maps::validate_map(self.scaled(a))
    }
}

struct Scaler<'a> {
    d: usize,
    ln_a: DMatrix<f64>,
    target: &'a [f64],
}

impl Scaler<'_> {
    fn scaled(&self, u: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |m, n| (self.ln_a[(m, n)] + u[m] + v[n]).exp())
    }

    fn objective(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let df = self.d as f64;
        let mass = self.scaled(u, v).sum();
        let lin: f64 = (0..self.d).map(|m| df * self.target[m] * u[m] + v[m]).sum();
        mass - lin
    }

    fn gradient(&self, t: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
        let df = self.d as f64;
        let gu = DVector::from_fn(self.d, |m, _| t.row(m).sum() - df * self.target[m]);
        let gv = DVector::from_fn(self.d, |n, _| t.column(n).sum() - 1.0);
        (gu, gv)
    }

    fn residual(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let t = self.scaled(u, v);
        let (gu, gv) = self.gradient(&t);
        (gu.amax() / self.d as f64).max(gv.amax())
    }
}

fn fix_gauge(u: &mut DVector<f64>, v: &mut DVector<f64>) {
    let c = v.mean();
    v.add_scalar_mut(-c);
    u.add_scalar_mut(c);
}

fn check_positive_base(a: &StochasticMap) -> Result<()> {
    let d = a.dim();
    for n in 0..d {
        for m in 0..d {
            if !(a.entry(m, n) > 0.0) {
                return Err(Error::NotStrictlyPositive { row: m, col: n });
            }
        }
    }
    Ok(())
}

fn check_interior_target(r: &RowSumVector, d: usize) -> Result<()> {
    if r.dim() != d {
        return Err(Error::DimMismatch { expected: d, found: r.dim() });
    }
    if let Some((index, value)) = r.first_at_or_below(0.0) {
        return Err(Error::BoundaryTarget { index, value });
    }
    Ok(())
}

/// Scales `A` to row-sum vector `r` with unit column sums, starting from `u = v = 0`.
pub fn sinkhorn_solve(a: &StochasticMap, r: &RowSumVector) -> Result<SinkhornSolution> {
    let d = a.dim();
    sinkhorn_solve_from(a, r, &vec![0.0; d], &vec![0.0; d])
}

/// Same as [`sinkhorn_solve`] from a caller-supplied starting point.
///
/// Damped Newton on the convex potential, with the Hessian's null direction
/// `(1, −1)` lifted by a rank-one term, then an alternating row/column
/// rescaling if the line search stalls above tolerance.
pub fn sinkhorn_solve_from(a: &StochasticMap, r: &RowSumVector, u0: &[f64], v0: &[f64]) -> Result<SinkhornSolution> {
    let d = a.dim();
    check_positive_base(a)?;
    check_interior_target(r, d)?;
    if u0.len() != d || v0.len() != d {
        return Err(Error::DimMismatch { expected: d, found: u0.len().min(v0.len()) });
    }
    let s = Scaler { d, ln_a: a.matrix().map(f64::ln), target: r.as_slice() };
    let mut u = DVector::from_column_slice(u0);
    let mut v = DVector::from_column_slice(v0);
    fix_gauge(&mut u, &mut v);

    let mut steps = 0;
    let mut stalled = false;
    while steps < SINKHORN_MAX_NEWTON {
        let t = s.scaled(&u, &v);
        let (gu, gv) = s.gradient(&t);
        let res = (gu.amax() / d as f64).max(gv.amax());
        if res <= NEWTON_STOP || !res.is_finite() {
            break;
        }
        let mut h = DMatrix::zeros(2 * d, 2 * d);
        for m in 0..d {
            h[(m, m)] = t.row(m).sum();
            h[(d + m, d + m)] = t.column(m).sum();
            for n in 0..d {
                h[(m, d + n)] = t[(m, n)];
                h[(d + n, m)] = t[(m, n)];
            }
        }
        let scale = h.diagonal().mean();
        for i in 0..2 * d {
            for j in 0..2 * d {
                let wi = if i < d { 1.0 } else { -1.0 };
                let wj = if j < d { 1.0 } else { -1.0 };
                h[(i, j)] += scale * wi * wj;
            }
        }
        let mut g = DVector::zeros(2 * d);
        g.rows_mut(0, d).copy_from(&gu);
        g.rows_mut(d, d).copy_from(&gv);
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            None => match h.lu().solve(&(-&g)) {
                Some(x) => x,
                None => {
                    stalled = true;
                    break;
                }
            },
        };
        let du = step.rows(0, d).into_owned();
        let dv = step.rows(d, d).into_owned();
        let f0 = s.objective(&u, &v);
        let slope = g.dot(&step);
        let mut tstep = 1.0;
        let mut accepted = false;
        while tstep > 1e-12 {
            let un = &u + &du * tstep;
            let vn = &v + &dv * tstep;
            let f1 = s.objective(&un, &vn);
            if f1.is_finite() && (f1 <= f0 + 1e-4 * tstep * slope || s.residual(&un, &vn) < res) {
                u = un;
                v = vn;
                accepted = true;
                break;
            }
            tstep *= 0.5;
        }
        fix_gauge(&mut u, &mut v);
        steps += 1;
        if !accepted {
            stalled = true;
            break;
        }
    }

    let mut residual = s.residual(&u, &v);
    let mut used_fallback = false;
    if !(residual <= SINKHORN_TOL) || (stalled && residual > NEWTON_STOP * 1e3) {
        used_fallback = true;
        let (uf, vf, rf) = alternating_scaling(&s, u.clone(), v.clone());
        if rf <= residual || !residual.is_finite() {
            u = uf;
            v = vf;
            residual = rf;
        }
    }
    if !(residual <= SINKHORN_TOL) {
        return Err(Error::NoConvergence { iterations: steps, residual });
    }
    Ok(SinkhornSolution {
        u: u.iter().copied().collect(),
        v: v.iter().copied().collect(),
        residual,
        newton_steps: steps,
        used_fallback,
    })
}

fn alternating_scaling(s: &Scaler, mut u: DVector<f64>, mut v: DVector<f64>) -> (DVector<f64>, DVector<f64>, f64) {
    let d = s.d;
    let df = d as f64;
    let lse = |xs: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = xs.collect();
        let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
    };
    if !u.iter().chain(v.iter()).all(|x| x.is_finite()) {
        u.fill(0.0);
        v.fill(0.0);
    }
    for it in 0..SINKHORN_MAX_ALTERNATING {
        for m in 0..d {
            u[m] = (df * s.target[m]).ln() - lse(&mut (0..d).map(|n| s.ln_a[(m, n)] + v[n]));
        }
        for n in 0..d {
            v[n] = -lse(&mut (0..d).map(|m| s.ln_a[(m, n)] + u[m]));
        }
        if it % 16 == 0 && s.residual(&u, &v) <= NEWTON_STOP * 10.0 {
            break;
        }
    }
    fix_gauge(&mut u, &mut v);
    let res = s.residual(&u, &v);
    (u, v, res)
}

/// `A_t = a·sin(πt)·11ᵀ/d + (1 − a·sin(πt))·((1−t)·I + t·T)`.
pub fn interpolation_base(t_map: &StochasticMap, t: f64, a: f64) -> Result<StochasticMap> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("path parameter {t} outside [0, 1]")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::OutOfRange(format!("mixing weight {a} outside (0, 1)")));
    }
    let d = t_map.dim();
    if t == 0.0 {
        return Ok(StochasticMap::identity(d));
    }
    if t == 1.0 {
        return Ok(t_map.clone());
    }
    let w = a * (std::f64::consts::PI * t).sin();
    let df = d as f64;
    let m = DMatrix::from_fn(d, d, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        w / df + (1.0 - w) * ((1.0 - t) * id + t * t_map.entry(i, j))
    });
    Ok(StochasticMap::from_matrix_unchecked(m))
}

fn softmax(x: &DVector<f64>) -> DVector<f64> {
    let mx = x.max();
    let e = x.map(|xi| (xi - mx).exp());
    let s = e.sum();
    e / s
}

fn log_softmax(x: &DVector<f64>) -> DVector<f64> {
    let mx = x.max();
    let lse = mx + x.iter().map(|xi| (xi - mx).exp()).sum::<f64>().ln();
    x.add_scalar(-lse)
}

fn log_target(t_map: &StochasticMap, floor: f64) -> Result<DVector<f64>> {
    let r = row_sums(t_map);
    if let Some((index, value)) = r.first_at_or_below(floor) {
        return Err(Error::BoundaryTarget { index, value });
    }
    Ok(r.as_vector().map(f64::ln))
}

/// Row-sum vectors `softmax((1−t)·ln(1/d) + t·ln r^T)` at `t = k/K`, `k = 0..=K`.
pub fn log_linear_schedule(t_map: &StochasticMap, k: usize) -> Result<Vec<RowSumVector>> {
    log_linear_schedule_with_floor(t_map, k, DEFAULT_FLOOR)
}

pub fn log_linear_schedule_with_floor(t_map: &StochasticMap, k: usize, floor: f64) -> Result<Vec<RowSumVector>> {
    if k == 0 {
        return Err(Error::OutOfRange("schedule needs at least one segment".into()));
    }
    let d = t_map.dim();
    let x1 = log_target(t_map, floor)?;
    let x0 = DVector::from_element(d, -(d as f64).ln());
    let mut out = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let r = if i == 0 {
            RowSumVector::uniform(d)
        } else if i == k {
            row_sums(t_map)
        } else {
            let t = i as f64 / k as f64;
            RowSumVector::from_vector_unchecked(softmax(&(&x0 * (1.0 - t) + &x1 * t)))
        };
        out.push(r);
    }
    Ok(out)
}

/// The normalizer `c_t = −ln Σ_n exp((1−t)·ln(1/d) + t·ln r_n)` of the log-linear schedule.
pub fn log_linear_normalizer(t_map: &StochasticMap, t: f64) -> Result<f64> {
    let d = t_map.dim();
    let x1 = log_target(t_map, DEFAULT_FLOOR)?;
    let x = DVector::from_element(d, -(d as f64).ln()) * (1.0 - t) + x1 * t;
    Ok(log_softmax(&x)[0] - x[0])
}

/// A discretized path of row-sum vectors, optionally with the stochastic maps realizing it.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPath {
    pub t: Vec<f64>,
    pub rows: Vec<RowSumVector>,
    pub maps: Option<Vec<StochasticMap>>,
    /// Scaling residual per sample; zero at the endpoints.
    pub residuals: Vec<f64>,
    /// Metric length of segment `k` divided by `t_{k+1} − t_k`.
    pub segment_speed: Vec<f64>,
}

impl MapPath {
    /// Builds a path from row-sum samples on a uniform grid in `[0, 1]`.
    pub fn from_rows(rows: Vec<RowSumVector>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::OutOfRange("path has no samples".into()));
        }
        let k = rows.len() - 1;
        let t = (0..=k).map(|i| if k == 0 { 0.0 } else { i as f64 / k as f64 }).collect();
        let residuals = vec![0.0; rows.len()];
        let mut p = MapPath { t, rows, maps: None, residuals, segment_speed: Vec::new() };
        p.segment_speed = segment_lengths(&p.rows)?
            .iter()
            .enumerate()
            .map(|(i, l)| l / (p.t[i + 1] - p.t[i]))
            .collect();
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.dim())
    }
}

/// Realizes a schedule of row-sum vectors as stochastic maps from the identity to `T`.
///
/// Sample 0 is the identity and the last sample is `T` itself; interior
/// samples scale [`interpolation_base`] onto the scheduled row sums.
pub fn constrained_path(t_map: &StochasticMap, schedule: &[RowSumVector], a: f64) -> Result<MapPath> {
    let d = t_map.dim();
    if schedule.len() < 2 {
        return Err(Error::OutOfRange("schedule needs both endpoints".into()));
    }
    let k = schedule.len() - 1;
    let target = row_sums(t_map);
    let gap = |x: &RowSumVector, y: &RowSumVector| -> f64 {
        x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    };
    for r in schedule {
        if r.dim() != d {
            return Err(Error::DimMismatch { expected: d, found: r.dim() });
        }
    }
    if gap(&schedule[0], &RowSumVector::uniform(d)) > 1e-9 {
        return Err(Error::OutOfRange("schedule must start at the uniform vector".into()));
    }
    if gap(&schedule[k], &target) > 1e-9 {
        return Err(Error::OutOfRange("schedule must end at the target row sums".into()));
    }
    let mut maps = Vec::with_capacity(k + 1);
    let mut residuals = Vec::with_capacity(k + 1);
    maps.push(StochasticMap::identity(d));
    residuals.push(0.0);
    for (i, r) in schedule.iter().enumerate().take(k).skip(1) {
        let t = i as f64 / k as f64;
        let wrap = |e: Error| Error::PathSample { sample: i, source: Box::new(e) };
        let base = interpolation_base(t_map, t, a).map_err(wrap)?;
        let sol = sinkhorn_solve(&base, r).map_err(wrap)?;
        maps.push(sol.scaled_map(&base).map_err(wrap)?);
        residuals.push(sol.residual);
    }
    maps.push(t_map.clone());
    residuals.push(0.0);
    let mut path = MapPath::from_rows(schedule.to_vec())?;
    path.maps = Some(maps);
    path.residuals = residuals;
    Ok(path)
}

const GL_POINTS: usize = 16;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_POINTS;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out.push(((1.0 - x) / 2.0, w / 2.0));
        }
        out
    })
}

/// Metric length of `s ↦ softmax(x_a + s·(x_b − x_a))`, `s ∈ [0, 1]`, plus its
/// gradient with respect to both endpoints when requested.
fn segment(xa: &DVector<f64>, xb: &DVector<f64>, grads: Option<(&mut DVector<f64>, &mut DVector<f64>)>) -> f64 {
    let delta = xb - xa;
    let mut len = 0.0;
    let mut ga = DVector::zeros(xa.len());
    let mut gb = DVector::zeros(xa.len());
    let want = grads.is_some();
    for &(s, w) in gauss_legendre() {
        let r = softmax(&(xa + &delta * s));
        let mean = r.dot(&delta);
        let v = delta.add_scalar(-mean);
        let speed = v.norm();
        len += w * speed;
        if want && speed > 0.0 {
            let u = &v / speed;
            let sigma = u.sum();
            let jd = r.component_mul(&delta) - &r * mean;
            let common = &u - &r * sigma;
            gb += (&common - &jd * (sigma * s)) * w;
            ga -= (&common + &jd * (sigma * (1.0 - s))) * w;
        }
    }
    if let Some((a, b)) = grads {
        *a += ga;
        *b += gb;
    }
    len
}

fn log_rows(rows: &[RowSumVector]) -> Result<Vec<DVector<f64>>> {
    rows.iter()
        .enumerate()
        .map(|(k, r)| {
            if r.first_at_or_below(0.0).is_some() {
                Err(Error::BoundarySample { sample: k })
            } else {
                Ok(r.as_vector().map(f64::ln))
            }
        })
        .collect()
}

fn segment_lengths(rows: &[RowSumVector]) -> Result<Vec<f64>> {
    let x = log_rows(rows)?;
    Ok(x.windows(2).map(|w| segment(&w[0], &w[1], None)).collect())
}

/// Metric length of a sampled path.
///
/// Consecutive samples are joined by the normalized log-linear curve
/// `softmax((1−s)·ln r_k + s·ln r_{k+1})`, which stays on the simplex, and the
/// speed `‖d ln r/ds‖` along each piece is integrated with 16-point
/// Gauss–Legendre quadrature. A path whose samples all lie on one such curve
/// has the same length at every resolution.
pub fn path_length(path: &MapPath) -> Result<f64> {
    Ok(segment_lengths(&path.rows)?.iter().sum())
}

/// `Σ_k ‖ln x_{k+1} − ln x_k‖₂` for positive, not necessarily normalized, samples.
pub fn log_chord_length(samples: &[DVector<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for (k, w) in samples.windows(2).enumerate() {
        if w[0].len() != w[1].len() {
            return Err(Error::DimMismatch { expected: w[0].len(), found: w[1].len() });
        }
        if w[1].iter().any(|x| !(*x > 0.0)) {
            return Err(Error::BoundarySample { sample: k + 1 });
        }
        if w[0].iter().any(|x| !(*x > 0.0)) {
            return Err(Error::BoundarySample { sample: k });
        }
        total += w[0].zip_map(&w[1], |a, b| b.ln() - a.ln()).norm();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicEstimate {
    /// Best path length found; an upper bound on the complexity.
    pub length: f64,
    /// Length of the log-linear starting path.
    pub seed_length: f64,
    /// The closed-form lower bound `ℓ`.
    pub ell: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: &'static str,
    #[serde(skip)]
    pub knots: Vec<RowSumVector>,
}

/// Energy `K·Σ L_k²` of a knot sequence and its gradient on the interior knots.
fn energy(x: &[DVector<f64>]) -> (f64, f64, Vec<DVector<f64>>) {
    let k = x.len() - 1;
    let d = x[0].len();
    let mut grads = vec![DVector::zeros(d); x.len()];
    let mut e = 0.0;
    let mut total = 0.0;
    for i in 0..k {
        let mut ga = DVector::zeros(d);
        let mut gb = DVector::zeros(d);
        let l = segment(&x[i], &x[i + 1], Some((&mut ga, &mut gb)));
        total += l;
        e += l * l;
        grads[i] += ga * (2.0 * l * k as f64);
        grads[i + 1] += gb * (2.0 * l * k as f64);
    }
    (e * k as f64, total, grads)
}

fn pack(x: &[DVector<f64>]) -> DVector<f64> {
    let d = x[0].len();
    let inner = &x[1..x.len() - 1];
    DVector::from_iterator(inner.len() * d, inner.iter().flat_map(|v| v.iter().copied()))
}

fn unpack(flat: &DVector<f64>, x: &mut [DVector<f64>]) {
    let d = x[0].len();
    let n = x.len();
    for (i, knot) in x[1..n - 1].iter_mut().enumerate() {
        knot.copy_from(&flat.rows(i * d, d));
    }
}

/// Upper estimate of the complexity by minimizing path energy over `K − 1` interior knots.
///
/// Knots are unnormalized log row sums (the simplex point is their softmax),
/// so every iterate is interior. The energy is minimized by L-BFGS with a
/// backtracking line search; the shortest path seen is reported, which is
/// never longer than the log-linear seed.
pub fn geodesic_upper_estimate(t_map: &StochasticMap, k: usize, iters: usize) -> Result<GeodesicEstimate> {
    geodesic_upper_estimate_with_floor(t_map, k, iters, DEFAULT_FLOOR)
}

pub fn geodesic_upper_estimate_with_floor(
    t_map: &StochasticMap,
    k: usize,
    iters: usize,
    floor: f64,
) -> Result<GeodesicEstimate> {
    let schedule = log_linear_schedule_with_floor(t_map, k, floor)?;
    let ell = ell_of_row_sums(row_sums(t_map).as_slice(), floor);
    let mut x = log_rows(&schedule)?;
    let (mut e, seed_length, mut g) = energy(&x);
    let mut best = seed_length;
    let mut best_knots = x.clone();
    let mut converged = ell == 0.0 || k < 2;
    let mut iterations = 0;
    let gtol = 1e-10 * (1.0 + e);
    let memory = 8;
    let mut s_hist: Vec<DVector<f64>> = Vec::new();
    let mut y_hist: Vec<DVector<f64>> = Vec::new();
    let mut flat = if converged { DVector::zeros(0) } else { pack(&x) };
    let mut gflat = if converged { DVector::zeros(0) } else { pack(&g) };
    while !converged && iterations < iters {
        if gflat.amax() <= gtol {
            converged = true;
            break;
        }
        let mut q = -gflat.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / y.dot(s);
            let a = rho * s.dot(&q);
            q -= y * a;
            alphas.push((rho, a));
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            q *= s.dot(y) / y.dot(y);
        }
        for ((s, y), (rho, a)) in s_hist.iter().zip(&y_hist).zip(alphas.iter().rev()) {
            let b = rho * y.dot(&q);
            q += s * (a - b);
        }
        let mut dir = q;
        let mut slope = dir.dot(&gflat);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            dir = -gflat.clone();
            slope = -gflat.norm_squared();
        }
        let mut step = if s_hist.is_empty() { (1e-2 / dir.amax()).min(1.0) } else { 1.0 };
        let mut moved = false;
        for _ in 0..40 {
            let trial = &flat + &dir * step;
            let mut xt = x.clone();
            unpack(&trial, &mut xt);
            let (et, lt, gt) = energy(&xt);
            if et.is_finite() && et <= e + 1e-4 * step * slope {
                let gtf = pack(&gt);
                let sv = &trial - &flat;
                let yv = &gtf - &gflat;
                if sv.dot(&yv) > 1e-16 * sv.norm() * yv.norm() {
                    s_hist.push(sv);
                    y_hist.push(yv);
                    if s_hist.len() > memory {
                        s_hist.remove(0);
                        y_hist.remove(0);
                    }
                }
                let rel = (e - et) / e.max(1e-300);
                flat = trial;
                x = xt;
                e = et;
                g = gt;
                gflat = pack(&g);
                if lt < best {
                    best = lt;
                    best_knots = x.clone();
                }
                moved = true;
                if rel < 1e-15 {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !moved {
            converged = gflat.amax() <= 1e-6 * (1.0 + e);
            break;
        }
    }
    let knots = best_knots.iter().map(|xi| RowSumVector::from_vector_unchecked(softmax(xi))).collect();
    Ok(GeodesicEstimate {
        length: best,
        seed_length,
        ell,
        iterations,
        converged,
        seed: "log-linear",
        knots,
    })
}

//! The log-barrier metric on row-sum vectors and the bounds that follow from it.
//!
//! Everything here depends on a map only through its row-sum vector
//! `r = T·1/d`. Zero row sums are a physical answer (a perfect reset), so the
//! length `ℓ` reports `+∞` instead of an error whenever some `r_n` falls at or
//! below the probability floor.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{reset_error, row_sums, ProbabilityVector, RowSumVector, StochasticMap, UndesiredSet};

/// Row sums at or below this value are treated as exact zeros.
pub const DEFAULT_FLOOR: f64 = 1e-300;

/// A base point of the metric together with two tangent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub base: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// `[ℓ, (√d+1)ℓ]` with a divergence flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityBracket {
    pub ell: f64,
    pub lower: f64,
    pub upper: f64,
    pub diverged: bool,
}

/// Parameters of the power-law metric family; `α = 2` is the log-barrier case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaMetricParams {
    alpha: f64,
}

/// Complexity–error margins for one map and undesired set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffMargin {
    pub epsilon: f64,
    pub ell: f64,
    /// `ε·e^ℓ`; NaN when `ε = 0` and `ℓ = ∞`.
    pub margin: f64,
    /// `ε·|𝔲|⁻¹·e^{ℓ/√|𝔲|}`.
    pub sharper_margin: f64,
    pub holds: bool,
    pub sharper_holds: bool,
}

impl MetricSample {
    pub fn new(base: Vec<f64>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let d = base.len();
        if x.len() != d {
            return Err(Error::DimMismatch { expected: d, found: x.len() });
        }
        if y.len() != d {
            return Err(Error::DimMismatch { expected: d, found: y.len() });
        }
        for v in [&x, &y] {
            let s: f64 = v.iter().sum();
            if s.abs() > 1e-9 {
                return Err(Error::OutOfRange(format!("tangent vector sums to {s}, expected 0")));
            }
        }
        Ok(MetricSample { base, x, y })
    }
}

/// `g_r(X, Y) = Σ_n X_n Y_n / r_n²`.
pub fn metric_eval(s: &MetricSample) -> Result<f64> {
    metric_eval_with_floor(s, DEFAULT_FLOOR)
}

pub fn metric_eval_with_floor(s: &MetricSample, floor: f64) -> Result<f64> {
    let mut g = 0.0;
    for (n, ((r, x), y)) in s.base.iter().zip(&s.x).zip(&s.y).enumerate() {
        if *r <= floor {
            return Err(Error::BoundaryPoint { index: n, value: *r });
        }
        g += x * y / (r * r);
    }
    Ok(g)
}

/// `ℓ = ‖ln d + ln r‖₂` for a row-sum vector given as a slice.
pub fn ell_of_row_sums(r: &[f64], floor: f64) -> f64 {
    let ln_d = (r.len() as f64).ln();
    let mut acc = 0.0;
    for &x in r {
        if x <= floor {
            return f64::INFINITY;
        }
        let l = ln_d + x.ln();
        acc += l * l;
    }
    acc.sqrt()
}

pub fn ell(t: &StochasticMap) -> f64 {
    ell_with_floor(t, DEFAULT_FLOOR)
}

pub fn ell_with_floor(t: &StochasticMap, floor: f64) -> f64 {
    ell_of_row_sums(row_sums(t).as_slice(), floor)
}

pub fn bracket_from_ell(ell: f64, d: usize) -> ComplexityBracket {
    let diverged = !ell.is_finite();
    ComplexityBracket { ell, lower: ell, upper: ((d as f64).sqrt() + 1.0) * ell, diverged }
}

pub fn complexity_bracket(t: &StochasticMap) -> ComplexityBracket {
    bracket_from_ell(ell(t), t.dim())
}

pub fn complexity_bracket_with_floor(t: &StochasticMap, floor: f64) -> ComplexityBracket {
    bracket_from_ell(ell_with_floor(t, floor), t.dim())
}

/// Shannon entropy in nats with `0·ln 0 = 0`.
pub fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

pub fn shannon_entropy(p: &ProbabilityVector) -> f64 {
    entropy_of(p.as_slice())
}

/// `ln S(1/d) − ln S(r)`; `+∞` when the output entropy vanishes.
pub fn entropic_bound_of(r: &[f64]) -> f64 {
    let s = entropy_of(r);
    if s <= 0.0 {
        return f64::INFINITY;
    }
    (r.len() as f64).ln().ln() - s.ln()
}

pub fn entropic_bound(t: &StochasticMap) -> f64 {
    entropic_bound_of(row_sums(t).as_slice())
}

/// Margins from a given error, length and undesired-set size.
///
/// Products are formed in log space so that `ε` near underflow and `ℓ` near
/// overflow still give a finite answer.
pub fn margins_from(epsilon: f64, ell: f64, set_size: usize, tol: f64) -> TradeoffMargin {
    let k = set_size as f64;
    let (margin, sharper_margin) = if epsilon == 0.0 && ell == f64::INFINITY {
        (f64::NAN, f64::NAN)
    } else if epsilon == 0.0 {
        (0.0, 0.0)
    } else {
        let le = epsilon.ln();
        ((le + ell).exp(), (le - k.ln() + ell / k.sqrt()).exp())
    };
    let check = |m: f64| if m.is_nan() { true } else { m >= 1.0 - tol };
    TradeoffMargin { epsilon, ell, margin, sharper_margin, holds: check(margin), sharper_holds: check(sharper_margin) }
}

pub fn tradeoff_margin(t: &StochasticMap, u: &UndesiredSet) -> Result<TradeoffMargin> {
    tradeoff_margin_with(t, u, DEFAULT_FLOOR, 1e-12)
}

pub fn tradeoff_margin_with(t: &StochasticMap, u: &UndesiredSet, floor: f64, tol: f64) -> Result<TradeoffMargin> {
    let eps = reset_error(t, u)?;
    Ok(margins_from(eps, ell_with_floor(t, floor), u.len(), tol))
}

/// `ln(d·e^γ)`, the per-protocol length budget divided by `√d`.
pub fn log_rate_budget(d: usize, gamma: f64) -> f64 {
    (d as f64).ln() + gamma
}

/// `N_min = C / ((d+√d)·ln(d·e^γ))`.
pub fn protocol_lower_bound(c_est: f64, d: usize, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::NonpositiveRate(gamma));
    }
    if !(c_est >= 0.0) {
        return Err(Error::OutOfRange(format!("complexity estimate must be nonnegative, got {c_est}")));
    }
    let df = d as f64;
    Ok(c_est / ((df + df.sqrt()) * log_rate_budget(d, gamma)))
}

/// The largest `ℓ` reachable with `n` protocols: `N·√d·ln(d·e^γ)`.
pub fn protocol_length_ceiling(n: usize, d: usize, gamma: f64) -> f64 {
    n as f64 * (d as f64).sqrt() * log_rate_budget(d, gamma)
}

impl AlphaMetricParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(AlphaMetricParams { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `α′ = 1 − α/2`.
    pub fn alpha_prime(&self) -> f64 {
        1.0 - self.alpha / 2.0
    }
}

pub fn alpha_length_of(r: &[f64], params: &AlphaMetricParams) -> Result<f64> {
    if params.alpha == 2.0 {
        return Err(Error::AlphaTwo);
    }
    let ap = params.alpha_prime();
    let base = (r.len() as f64).recip().powf(ap);
    let mut acc = 0.0;
    for &x in r {
        let p = x.max(0.0).powf(ap);
        if !p.is_finite() {
            return Ok(f64::INFINITY);
        }
        acc += (p - base) * (p - base);
    }
    Ok(acc.sqrt() / ap.abs())
}

/// `ℓ_α = |α′|⁻¹·‖r^{α′} − d^{−α′}‖₂`.
pub fn alpha_length(t: &StochasticMap, params: &AlphaMetricParams) -> Result<f64> {
    alpha_length_of(row_sums(t).as_slice(), params)
}

/// Ceiling on `ℓ_α` for `α < 2`, valid for every map on `d` states.
pub fn alpha_length_ceiling(d: usize, params: &AlphaMetricParams) -> f64 {
    let df = d as f64;
    let ap = params.alpha_prime();
    let t = df.powf(-ap);
    (df + df.sqrt()) / ap * (1.0 - t).max(t)
}

/// Growth floor `2^{|α′|}/|α′|·(e^{N|α′|} − 1)` for the two-level decay family with `α > 2`.
pub fn alpha_growth_floor(n: f64, params: &AlphaMetricParams) -> f64 {
    let a = params.alpha_prime().abs();
    2f64.powf(a) / a * (n * a).exp_m1()
}

/// Complexity of a qubit path with purity `z ∈ [0, 1)`, given `ln(1 − z)` separately.
///
/// `2·atanh(√2 f) − √2·atanh(f)` with `f = z/√(1+z²)`. The first term is
/// evaluated through `1 − √2 f = (1−z)(1+z) / (√(1+z²)·(√(1+z²)+√2 z))`
/// so that `1 − z` never has to be formed by cancellation.
pub fn purity_complexity(z: f64, ln_one_minus_z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if ln_one_minus_z == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let s2 = std::f64::consts::SQRT_2;
    let h = (1.0 + z * z).sqrt();
    let f = z / h;
    let ln_one_minus = ln_one_minus_z + (1.0 + z).ln() - h.ln() - (h + s2 * z).ln();
    let first = (1.0 + s2 * f).ln() - ln_one_minus;
    first - s2 * f.atanh()
}

/// Closed-form complexity of the two-level reset `e^{Wτ}` as a function of `u = wτ`.
pub fn two_level_complexity(u: f64) -> f64 {
    if !(u > 0.0) {
        return 0.0;
    }
    purity_complexity(-(-u).exp_m1(), -u)
}

/// The limit of `C(u) − u` as `u → ∞`: `2 ln 2 − √2 ln(1+√2)`.
pub fn two_level_asymptotic_offset() -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    2.0 * 2f64.ln() - s2 * (1.0 + s2).ln()
}

/// `ℓ` of a validated row-sum vector at the default floor.
pub fn row_sum_ell(r: &RowSumVector) -> f64 {
    ell_of_row_sums(r.as_slice(), DEFAULT_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{derangement_map, two_level_reset, TransitionRateMatrix};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Composite Simpson rule for the speed of the monotone path `r_2 = e^{−s}/2`.
    ///
    /// In two dimensions every path from the uniform point to the target
    /// traverses this segment, so its length is the complexity.
    fn arc_length_oracle(u: f64) -> f64 {
        let n = 20_000;
        let h = u / n as f64;
        let f = |s: f64| {
            let q = (-s).exp();
            (1.0 + (q / (2.0 - q)).powi(2)).sqrt()
        };
        let mut acc = f(0.0) + f(u);
        for k in 1..n {
            acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn metric_examples() {
        let s = MetricSample::new(vec![0.5, 0.5], vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(metric_eval(&s).unwrap(), 0.0);
        let s = MetricSample::new(vec![0.5, 0.5], vec![0.1, -0.1], vec![0.1, -0.1]).unwrap();
        assert!(close(metric_eval(&s).unwrap(), 0.08, 1e-15));
        let s = MetricSample::new(vec![1.0, 0.0], vec![0.1, -0.1], vec![0.1, -0.1]).unwrap();
        assert!(matches!(metric_eval(&s), Err(Error::BoundaryPoint { index: 1, .. })));
        assert!(MetricSample::new(vec![0.5, 0.5], vec![0.1, 0.1], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn ell_examples() {
        assert_eq!(ell(&StochasticMap::identity(3)), 0.0);
        assert!(ell(&derangement_map()) < 1e-15);
        let expect = (1.5f64.ln().powi(2) + 0.5f64.ln().powi(2)).sqrt();
        assert!(close(ell(&two_level_reset(2f64.ln())), expect, 1e-15));
        assert!(close(expect, 0.8030286220374507, 1e-15));
        let perfect = StochasticMap::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(ell(&perfect), f64::INFINITY);
    }

    #[test]
    fn bracket_examples() {
        let b = complexity_bracket(&StochasticMap::identity(2));
        assert_eq!((b.lower, b.upper, b.diverged), (0.0, 0.0, false));
        let b = complexity_bracket(&two_level_reset(2f64.ln()));
        // (√2+1)·0.8030286220374507
        assert!(close(b.upper, 1.9386825903, 1e-9));
        let perfect = StochasticMap::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(complexity_bracket(&perfect).diverged);
    }

    #[test]
    fn entropy_examples() {
        assert!(close(shannon_entropy(&ProbabilityVector::uniform(2)), 2f64.ln(), 1e-15));
        assert_eq!(shannon_entropy(&ProbabilityVector::basis(2, 0)), 0.0);
        let p = ProbabilityVector::from_slice(&[0.75, 0.25]).unwrap();
        assert!(close(shannon_entropy(&p), 0.5623351446188083, 1e-15));
    }

    #[test]
    fn entropic_examples() {
        assert!(entropic_bound(&StochasticMap::identity(2)).abs() < 1e-15);
        let b = entropic_bound(&two_level_reset(2f64.ln()));
        let oracle = 2f64.ln().ln() - 0.5623351446188083f64.ln();
        assert!(close(b, oracle, 1e-14));
        assert!(close(b, 0.2091443435, 1e-9));
        let perm = StochasticMap::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(entropic_bound(&perm).abs() < 1e-15);
        let perfect = StochasticMap::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(entropic_bound(&perfect), f64::INFINITY);
    }

    #[test]
    fn tradeoff_examples() {
        let u = UndesiredSet::new(2, &[1]).unwrap();
        let m = tradeoff_margin(&StochasticMap::identity(2), &u).unwrap();
        assert_eq!(m.margin, 1.0);
        assert!(m.holds);
        let m = tradeoff_margin(&two_level_reset(2f64.ln()), &u).unwrap();
        assert!(close(m.margin, 1.1161457340251055, 1e-13));
        assert!(m.holds && m.sharper_holds);
        let perfect = StochasticMap::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let m = tradeoff_margin(&perfect, &u).unwrap();
        assert!(m.holds && m.margin.is_nan());
    }

    #[test]
    fn protocol_bound_examples() {
        assert_eq!(protocol_lower_bound(0.0, 2, 1.0).unwrap(), 0.0);
        let n = protocol_lower_bound(1.938976, 2, 1.0).unwrap();
        assert!(close(n, 1.938976 / ((2.0 + 2f64.sqrt()) * (2.0 * std::f64::consts::E).ln()), 1e-15));
        assert!(close(n, 0.3354, 5e-5));
        assert!(matches!(protocol_lower_bound(1.0, 2, 0.0), Err(Error::NonpositiveRate(_))));
    }

    #[test]
    fn alpha_examples() {
        let fisher = AlphaMetricParams::new(1.0).unwrap();
        assert_eq!(alpha_length(&StochasticMap::identity(3), &fisher).unwrap(), 0.0);
        let l = alpha_length(&two_level_reset(2f64.ln()), &fisher).unwrap();
        let oracle = 2.0 * ((0.75f64.sqrt() - 0.5f64.sqrt()).powi(2) + (0.25f64.sqrt() - 0.5f64.sqrt()).powi(2)).sqrt();
        assert!(close(l, oracle, 1e-15));
        assert!(close(l, 0.5221047689, 1e-9));
        let four = AlphaMetricParams::new(4.0).unwrap();
        let l4 = alpha_length(&two_level_reset(3.0), &four).unwrap();
        assert!(l4 >= 2.0 * (3f64.exp() - 1.0));
        assert!(close(l4, 38.1835, 1e-3));
        assert!(matches!(alpha_length(&StochasticMap::identity(2), &AlphaMetricParams::new(2.0).unwrap()), Err(Error::AlphaTwo)));
        assert!(AlphaMetricParams::new(-1.0).is_err());
        assert!(close(alpha_length_ceiling(2, &fisher), 4.828427124746, 1e-11));
    }

    #[test]
    fn alpha_family_dichotomy() {
        let fisher = AlphaMetricParams::new(1.0).unwrap();
        let four = AlphaMetricParams::new(4.0).unwrap();
        for n in 1..=8 {
            let t = two_level_reset(n as f64);
            assert!(alpha_length(&t, &four).unwrap() >= alpha_growth_floor(n as f64, &four));
            assert!(alpha_length(&t, &fisher).unwrap() <= alpha_length_ceiling(2, &fisher));
        }
    }

    #[test]
    fn two_level_examples() {
        assert_eq!(two_level_complexity(0.0), 0.0);
        // frozen from an independent adaptive quadrature of the arc-length integral
        let frozen = [
            (0.25, 0.32068977115415),
            (0.5, 0.60367277503755),
            (2f64.ln(), 0.810460019621208),
            (1.0, 1.12884485950464),
            (2.0, 2.13858821740355),
            (4.0, 4.13982265597914),
            (10.0, 10.1398438807106),
        ];
        for (u, c) in frozen {
            assert!(close(two_level_complexity(u), c, 1e-12), "u = {u}");
        }
        assert!(close(two_level_complexity(10.0) - 10.0, two_level_asymptotic_offset(), 5e-4));
        assert!(close(two_level_asymptotic_offset(), 0.13984388083943, 1e-13));
    }

    #[test]
    fn two_level_matches_arc_length_oracle() {
        for u in [0.1, 0.25, 0.5, 1.0, 2.0, 4.0] {
            assert!(close(two_level_complexity(u), arc_length_oracle(u), 1e-10), "u = {u}");
        }
    }

    #[test]
    fn two_level_large_argument_stays_finite() {
        for u in [40.0, 100.0, 700.0, 1e4] {
            let c = two_level_complexity(u);
            assert!(c.is_finite());
            assert!(close(c - u, two_level_asymptotic_offset(), 1e-9));
        }
    }

    #[test]
    fn two_level_derivative_at_least_one() {
        let h = 1e-6;
        let mut u = 0.0;
        while u < 12.0 {
            let d = (two_level_complexity(u + h) - two_level_complexity(u)) / h;
            assert!(d >= 1.0 - 1e-6, "u = {u}, slope {d}");
            u += 0.05;
        }
    }

    #[test]
    fn doubly_stochastic_zero_length() {
        let t = StochasticMap::from_rows(&[vec![0.2, 0.5, 0.3], vec![0.5, 0.3, 0.2], vec![0.3, 0.2, 0.5]]).unwrap();
        assert!(ell(&t) < 1e-15);
        assert!(entropic_bound(&t) <= 1e-15);
        let p = ProbabilityVector::from_slice(&[0.7, 0.2, 0.1]).unwrap();
        let q = crate::maps::apply_map(&t, &p).unwrap();
        assert!(shannon_entropy(&p) <= shannon_entropy(&q) + 1e-15);
    }

    #[test]
    fn decay_protocol_length_within_ceiling() {
        for gamma in [0.5, 1.0, 2.0] {
            let w = TransitionRateMatrix::two_level_decay(gamma).unwrap();
            let t = crate::maps::map_from_rates(&w, 1.0).unwrap();
            assert!(ell(&t) <= protocol_length_ceiling(1, 2, gamma));
        }
    }

    fn column_stochastic(d: usize) -> impl Strategy<Value = StochasticMap> {
        prop::collection::vec(prop::collection::vec(1e-6f64..1.0, d), d).prop_map(move |cols| {
            let mut m = nalgebra::DMatrix::zeros(d, d);
            for (n, col) in cols.iter().enumerate() {
                let s: f64 = col.iter().sum();
                for (k, x) in col.iter().enumerate() {
                    m[(k, n)] = x / s;
                }
            }
            crate::maps::validate_map(m).unwrap()
        })
    }

    proptest! {
        #[test]
        fn metric_is_nonnegative(base in prop::collection::vec(0.01f64..1.0, 4), x in prop::collection::vec(-1.0f64..1.0, 3)) {
            let s: f64 = base.iter().sum();
            let base: Vec<f64> = base.iter().map(|b| b / s).collect();
            let mut t = x.clone();
            t.push(-x.iter().sum::<f64>());
            let sample = MetricSample::new(base, t.clone(), t).unwrap();
            prop_assert!(metric_eval(&sample).unwrap() >= 0.0);
        }

        #[test]
        fn tradeoff_holds(t in (2usize..=6).prop_flat_map(column_stochastic), pick in 0usize..64) {
            let d = t.dim();
            let k = 1 + pick % (d - 1);
            let idx: Vec<usize> = (0..k).map(|i| (i + pick) % d).collect();
            let u = UndesiredSet::new(d, &idx).unwrap();
            let m = tradeoff_margin(&t, &u).unwrap();
            prop_assert!(m.holds && m.sharper_holds, "{m:?}");
            let kf = k as f64;
            if m.ell.is_finite() {
                prop_assert!(kf.ln() - m.ell / kf.sqrt() >= -m.ell - 1e-12);
            }
        }
    }
}

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any fails.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resetgeo::decomposition::{det_obstruction, residual_search, SearchParams, Verdict};
use resetgeo::geometry::{
    alpha_growth_floor, alpha_length, alpha_length_ceiling, bracket_from_ell, protocol_length_ceiling,
    two_level_asymptotic_offset,
};
use resetgeo::maps::{derangement_map, two_level_reset};
use resetgeo::quantum::bloch::{bloch_path_length, radial_path, swap_complexity};
use resetgeo::quantum::channel::{classical_reduction, swap_channel, ProjectorQ};
use resetgeo::quantum::spd::{quantum_ell, quantum_tradeoff};
use resetgeo::random::{
    random_diagonal_kraus_channel, random_interior, random_kraus_channel, random_projector, random_protocols,
    random_stochastic_map, random_undesired_set,
};
use resetgeo::scaling::sinkhorn_solve_from;
use resetgeo::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Arc length of the monotone two-level path, by composite Simpson on `[0, u]`.
/// The speed in the decay coordinate `s` is `√(1 + (q/(2−q))²)` with `q = e^{−s}`.
fn two_level_oracle(u: f64) -> f64 {
    let n = 20_000;
    let h = u / n as f64;
    let f = |s: f64| {
        let q = (-s).exp();
        (1.0 + (q / (2.0 - q)).powi(2)).sqrt()
    };
    let mut acc = f(0.0) + f(u);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0
}

fn c1() -> Outcome {
    let mut worst: f64 = f64::INFINITY;
    for u in [0.25, 0.5, 1.0, 2.0, 4.0] {
        worst = worst.min(two_level_complexity(u) - u);
    }
    let c = two_level_complexity(2f64.ln());
    // frozen from the Simpson oracle above and an independent 30-digit quadrature
    let frozen = 0.810460019621208;
    let oracle = two_level_oracle(2f64.ln());
    let nominal = 0.810561;
    let pass = worst >= 0.0 && (c - frozen).abs() <= 1e-6 && (c - oracle).abs() <= 1e-6;
    outcome(
        pass,
        format!(
            "min C-u = {worst:.3e}; C(ln2) = {c:.12} (oracle {oracle:.12}, |diff| {:.1e}; stated nominal {nominal} differs by {:.2e})",
            (c - oracle).abs(),
            (c - nominal).abs()
        ),
    )
}

fn c2() -> Outcome {
    let gap = two_level_complexity(10.0) - 10.0;
    let closed = 2.0 * 2f64.ln() - 2f64.sqrt() * (1.0 + 2f64.sqrt()).ln();
    let pass = (gap - closed).abs() <= 5e-4 && (two_level_asymptotic_offset() - closed).abs() <= 1e-12;
    outcome(pass, format!("C(10)-10 = {gap:.9}, 2ln2-√2ln(1+√2) = {closed:.9}, |diff| {:.2e}", (gap - closed).abs()))
}

fn c3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for u in [0.5, 1.0, 2.0] {
        let est = geodesic_upper_estimate(&two_level_reset(u), 64, 500).expect("interior map");
        let exact = two_level_complexity(u);
        let oracle = two_level_oracle(u);
        let err = (est.length - exact).abs().max((exact - oracle).abs());
        worst = worst.max(err);
        parts.push(format!("u={u}: {:.6} vs {:.6}", est.length, exact));
    }
    outcome(worst <= 1e-3, format!("{}; max |diff| {worst:.2e}", parts.join(", ")))
}

fn c4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dims = [2usize, 3, 4, 6];
    let mut fails = 0;
    let mut worst_upper = f64::NEG_INFINITY;
    let mut worst_lower = f64::NEG_INFINITY;
    for i in 0..200 {
        let d = dims[i % dims.len()];
        let t = random_stochastic_map(&mut rng, d);
        let est = geodesic_upper_estimate(&t, 24, 150).expect("random map is interior");
        let b = bracket_from_ell(est.ell, d);
        worst_lower = worst_lower.max(b.lower - est.length);
        worst_upper = worst_upper.max(est.length - b.upper);
        if !(b.lower <= est.length + 1e-12 && est.length <= b.upper + 1e-6) {
            fails += 1;
        }
    }
    outcome(
        fails == 0,
        format!("200 maps, {fails} violations; max(ℓ-Ĉ) = {worst_lower:.2e}, max(Ĉ-(√d+1)ℓ) = {worst_upper:.2e}"),
    )
}

fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fails = 0;
    let mut min_margin = f64::INFINITY;
    for _ in 0..1000 {
        let d = rng.random_range(2..=6);
        let t = random_stochastic_map(&mut rng, d);
        let u = random_undesired_set(&mut rng, d);
        let m = tradeoff_margin(&t, &u).unwrap();
        let k = u.len() as f64;
        let sharper_floor = k * (-m.ell / k.sqrt()).exp();
        if !(m.margin >= 1.0 - 1e-12 && m.epsilon >= sharper_floor - 1e-12) {
            fails += 1;
        }
        min_margin = min_margin.min(m.margin);
    }
    outcome(fails == 0, format!("1000 cases, {fails} violations; min ε·e^ℓ = {min_margin:.6}"))
}

fn c6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut fails = 0;
    let (mut worst_res, mut worst_gauge, mut worst_rep) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..200 {
        let d = 2 + i % 5;
        let a = random_stochastic_map(&mut rng, d);
        let r = RowSumVector::new(random_interior(&mut rng, d, 0.05)).unwrap();
        let zero = vec![0.0; d];
        let sol = match sinkhorn_solve_from(&a, &r, &zero, &zero) {
            Ok(s) => s,
            Err(_) => {
                fails += 1;
                continue;
            }
        };
        // independent marginal check on the scaled matrix
        let m = sol.scaled(&a);
        let df = d as f64;
        let mut res: f64 = 0.0;
        for k in 0..d {
            res = res.max((m.row(k).sum() / df - r.as_slice()[k]).abs());
            res = res.max((m.column(k).sum() - 1.0).abs());
        }
        let gauge = sol.v.iter().sum::<f64>().abs();
        let u0: Vec<f64> = sol.u.iter().map(|x| x + rng.random_range(-1.0..1.0)).collect();
        let v0: Vec<f64> = sol.v.iter().map(|x| x + rng.random_range(-1.0..1.0)).collect();
        let rep = match sinkhorn_solve_from(&a, &r, &u0, &v0) {
            Ok(s2) => s2.u.iter().zip(&sol.u).chain(s2.v.iter().zip(&sol.v)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        };
        worst_res = worst_res.max(res);
        worst_gauge = worst_gauge.max(gauge);
        worst_rep = worst_rep.max(rep);
        if !(res <= 1e-9 && gauge <= 1e-12 && rep <= 1e-7) {
            fails += 1;
        }
    }
    outcome(
        fails == 0,
        format!(
            "200 instances, {fails} failures; max residual {worst_res:.2e}, max |Σv| {worst_gauge:.2e}, max restart drift {worst_rep:.2e}"
        ),
    )
}

fn c7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gamma = 2.0;
    let mut fails = 0;
    let mut tightest: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(2..=4);
        let n = rng.random_range(1..=5);
        let seq = random_protocols(&mut rng, d, n, gamma);
        let t = map_from_protocols(&seq).unwrap();
        let l = ell(&t);
        let est = geodesic_upper_estimate(&t, 24, 150).unwrap();
        let n_min = protocol_lower_bound(est.length, d, gamma).unwrap();
        tightest = tightest.max(n_min / n as f64);
        if !(l <= protocol_length_ceiling(n, d, gamma) && n as f64 >= n_min) {
            fails += 1;
        }
    }
    outcome(fails == 0, format!("100 stacks, {fails} violations; max N_min/N = {tightest:.4}"))
}

fn c8() -> Outcome {
    let four = AlphaMetricParams::new(4.0).unwrap();
    let one = AlphaMetricParams::new(1.0).unwrap();
    let decay = TransitionRateMatrix::two_level_decay(1.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 1..=3usize {
        let seq = ProtocolSequence::new(2, vec![Protocol::unit(decay.clone()); n]).unwrap();
        let t = map_from_protocols(&seq).unwrap();
        let l4 = alpha_length(&t, &four).unwrap();
        let l1 = alpha_length(&t, &one).unwrap();
        let floor = 2.0 * ((n as f64).exp() - 1.0);
        let ceiling = (2.0 + 2f64.sqrt()) / 0.5 * (1.0 - 2f64.powf(-0.5)).max(2f64.powf(-0.5));
        let ok = l4 >= floor
            && (alpha_growth_floor(n as f64, &four) - floor).abs() <= 1e-12 * floor
            && l1 <= ceiling
            && (alpha_length_ceiling(2, &one) - ceiling).abs() <= 1e-12;
        pass &= ok;
        parts.push(format!("N={n}: ℓ₄ {l4:.4} ≥ {floor:.4}, ℓ₁ {l1:.4} ≤ {ceiling:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn c9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut fails = 0;
    let mut min_margin = f64::INFINITY;
    for _ in 0..500 {
        let d = rng.random_range(2..=4);
        let n_kraus = rng.random_range(1..=d * d);
        let ch = random_kraus_channel(&mut rng, d, n_kraus);
        let pi = random_projector(&mut rng, d, None);
        let m = quantum_tradeoff(&ch, &pi).unwrap();
        if m.margin.is_nan() || m.margin < 1.0 - 1e-10 {
            fails += 1;
        }
        min_margin = min_margin.min(m.margin);
    }
    outcome(fails == 0, format!("500 channels, {fails} violations; min ε·e^ℓ = {min_margin:.6}"))
}

fn c10() -> Outcome {
    let mut pass = true;
    let mut worst_q: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for kappa in [0.05, 0.1, 0.25, 0.4] {
        let c = swap_complexity(kappa).unwrap();
        let quad = bloch_path_length(&radial_path(1.0 - 2.0 * kappa, 40_000)).unwrap();
        worst_q = worst_q.max((c - quad).abs());
        worst_sym = worst_sym.max((c - swap_complexity(1.0 - kappa).unwrap()).abs());
        let ch = swap_channel(kappa).unwrap();
        for idx in [0usize, 1] {
            let m = quantum_tradeoff(&ch, &ProjectorQ::computational(2, &[idx]).unwrap()).unwrap();
            min_margin = min_margin.min(m.margin);
        }
    }
    pass &= worst_q <= 1e-4 && worst_sym <= 1e-12 && min_margin >= 1.0;
    outcome(
        pass,
        format!("max |C - quadrature| {worst_q:.2e}, max asymmetry {worst_sym:.2e}, min margin {min_margin:.6}"),
    )
}

fn c11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let d = 2 + i % 4;
        let ch = random_diagonal_kraus_channel(&mut rng, d);
        let lq = quantum_ell(&ch);
        let lc = ell(&classical_reduction(&ch).unwrap());
        worst = worst.max((lq - lc).abs());
    }
    outcome(worst <= 1e-9, format!("50 channels, max |ℓ_q - ℓ_c| {worst:.2e}"))
}

fn c12() -> Outcome {
    let t = derangement_map();
    let mut swapped: DMatrix<f64> = t.matrix().clone();
    swapped.swap_rows(0, 1);
    let swapped = StochasticMap::new(swapped).unwrap();
    let blocked = det_obstruction(&swapped);
    let open = det_obstruction(&t);
    let search = residual_search(&t, SearchParams { depth: 4, grid: 0.1, sum_constraint: false }).unwrap();
    let pass = blocked.verdict == Verdict::Blocked
        && (blocked.det + 0.25).abs() <= 1e-12
        && open.verdict == Verdict::Inconclusive
        && search.residual > 0.0;
    outcome(
        pass,
        format!(
            "swapped det {:.12} ({:?}); original {:?}, residual {:.4} after {} nodes",
            blocked.det, blocked.verdict, open.verdict, search.residual, search.nodes_visited
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 12] = [
        ("two-level closed form", c1, Duration::from_secs(1)),
        ("asymptotic constant", c2, Duration::from_secs(1)),
        ("estimator vs two-level closed form", c3, Duration::from_secs(30)),
        ("bound sandwich sweep", c4, Duration::from_secs(300)),
        ("trade-off suite", c5, Duration::from_secs(60)),
        ("scaling solver", c6, Duration::from_secs(60)),
        ("protocol bound", c7, Duration::from_secs(120)),
        ("alpha dichotomy", c8, Duration::from_secs(1)),
        ("quantum trade-off", c9, Duration::from_secs(120)),
        ("swap channel", c10, Duration::from_secs(10)),
        ("classical-quantum consistency", c11, Duration::from_secs(30)),
        ("decomposition obstruction", c12, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let pass = o.pass && took <= *limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<36} {}  [{:.2}s / {}s]  {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::path::Path;

use resetgeo::decomposition::{det_obstruction, residual_search, SearchParams};
use resetgeo::geometry::{complexity_bracket_with_floor, protocol_length_ceiling, tradeoff_margin_with, TradeoffMargin};
use resetgeo::io;
use resetgeo::quantum::{
    choi_from_kraus, dilation_protocol_bound, lindblad_protocol_bound, quantum_bracket, quantum_entropy_bound,
    quantum_scale_solve, quantum_upper_estimate, reduced_output, KrausChannel, ProjectorQ,
};
use resetgeo::report::{CaseRecord, ExperimentReport};
use resetgeo::scaling::{constrained_path, geodesic_upper_estimate_with_floor, MapPath};
use resetgeo::{entropic_bound, map_from_protocols, protocol_lower_bound, RowSumVector, StochasticMap, UndesiredSet};
use serde_json::json;

use crate::{sweep, Cli, CliResult, Command, Emitted, EstimatorArgs, Failure, Format};

pub const CLASSICAL_TOL: f64 = 1e-12;
pub const QUANTUM_TOL: f64 = 1e-10;
/// Slack for `Ĉ ≤ (√d+1)ℓ`, which the estimator only meets up to optimizer noise.
const UPPER_SLACK: f64 = 1e-6;

pub fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn default_undesired(d: usize, given: &[usize]) -> Vec<usize> {
    if given.is_empty() {
        (2..=d).collect()
    } else {
        given.to_vec()
    }
}

pub fn undesired_set(d: usize, given: &[usize]) -> CliResult<UndesiredSet> {
    Ok(UndesiredSet::from_one_based(d, &default_undesired(d, given))?)
}

pub fn computational_projector(d: usize, given: &[usize]) -> CliResult<ProjectorQ> {
    let one = default_undesired(d, given);
    if one.contains(&0) {
        return Err(Failure::Input("undesired states are counted from 1".into()));
    }
    let zero: Vec<usize> = one.iter().map(|i| i - 1).collect();
    Ok(ProjectorQ::computational(d, &zero)?)
}

fn fill_margins(rec: &mut CaseRecord, m: &TradeoffMargin) {
    rec.epsilon = Some(m.epsilon);
    rec.margin = Some(m.margin);
    rec.sharper_margin = Some(m.sharper_margin);
    if !m.holds {
        rec.violate("tradeoff");
    }
    if !m.sharper_holds {
        rec.violate("sharper-tradeoff");
    }
}

/// Flags an estimate outside `[ℓ, (√d+1)ℓ]` or below the entropic bound.
fn check_estimate(rec: &mut CaseRecord, c_hat: f64) {
    rec.c_hat = Some(c_hat);
    if c_hat < rec.ell - 1e-9 * (1.0 + rec.ell) {
        rec.violate("lower-bound");
    }
    if c_hat > rec.upper + UPPER_SLACK {
        rec.violate("upper-bound");
    }
    if rec.entropic_bound.is_finite() && c_hat < rec.entropic_bound - 1e-9 * (1.0 + rec.entropic_bound.abs()) {
        rec.violate("entropic-bound");
    }
}

fn check_entropic(rec: &mut CaseRecord) {
    let e = rec.entropic_bound;
    if e.is_finite() && rec.upper.is_finite() && e > rec.upper + 1e-9 * (1.0 + rec.upper) {
        rec.violate("entropic-bound");
    }
}

pub struct Estimator {
    pub k: usize,
    pub iters: usize,
}

impl Estimator {
    pub fn from_args(a: &EstimatorArgs) -> Option<Self> {
        a.estimate.then_some(Estimator { k: a.k, iters: a.iters })
    }
}

pub fn classical_record(
    t: &StochasticMap,
    u: &UndesiredSet,
    floor: f64,
    tol: f64,
    est: Option<&Estimator>,
) -> CliResult<CaseRecord> {
    let b = complexity_bracket_with_floor(t, floor);
    let mut rec = CaseRecord {
        ell: b.ell,
        lower: b.lower,
        upper: b.upper,
        diverged: b.diverged,
        entropic_bound: entropic_bound(t),
        ..Default::default()
    };
    rec.inputs.insert("dim".into(), t.dim() as f64);
    rec.extra.insert("det".into(), t.determinant());
    fill_margins(&mut rec, &tradeoff_margin_with(t, u, floor, tol)?);
    check_entropic(&mut rec);
    if let Some(e) = est {
        if b.diverged {
            rec.flag("estimate-skipped:diverged");
        } else {
            let g = geodesic_upper_estimate_with_floor(t, e.k, e.iters, floor)?;
            check_estimate(&mut rec, g.length);
        }
    }
    Ok(rec)
}

pub fn quantum_record(
    ch: &KrausChannel,
    pi: &ProjectorQ,
    floor: f64,
    tol: f64,
    est: Option<&Estimator>,
) -> CliResult<CaseRecord> {
    let d = ch.dim();
    let b = quantum_bracket(ch, floor);
    let mut rec = CaseRecord {
        ell: b.ell,
        lower: b.lower,
        upper: b.upper,
        diverged: b.diverged,
        entropic_bound: quantum_entropy_bound(ch),
        ..Default::default()
    };
    rec.inputs.insert("dim".into(), d as f64);
    rec.inputs.insert("n_kraus".into(), ch.kraus().len() as f64);
    rec.extra.insert("lambda_min".into(), reduced_output(ch).min_eigenvalue());
    fill_margins(&mut rec, &resetgeo::quantum::spd::quantum_tradeoff_with(ch, pi, floor, tol)?);
    check_entropic(&mut rec);
    if let Some(e) = est {
        if b.diverged {
            rec.flag("estimate-skipped:diverged");
        } else {
            let g = quantum_upper_estimate(ch, e.k, e.iters, floor)?;
            check_estimate(&mut rec, g.length);
        }
    }
    Ok(rec)
}

fn report_output(report: &ExperimentReport, format: Format) -> Emitted {
    let text = match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
    };
    Emitted { text, side: None, violation: report.violation }
}

pub fn run(cli: &Cli) -> CliResult<Emitted> {
    let floor = cli.floor;
    if !(0.0..1.0).contains(&floor) {
        return Err(Failure::Input(format!("--floor {floor} outside [0, 1)")));
    }
    match &cli.command {
        Command::Analyze { map, undesired, est } => {
            let t = io::parse_map(&read(map)?)?;
            let u = undesired_set(t.dim(), undesired)?;
            let mut rec =
                classical_record(&t, &u, floor, cli.tol.unwrap_or(CLASSICAL_TOL), Estimator::from_args(est).as_ref())?;
            rec.label = Some(map.display().to_string());
            let report = ExperimentReport::new("analyze", vec![rec]);
            Ok(report_output(&report, cli.format.unwrap_or(Format::Json)))
        }
        Command::Path { map, k, iters, mix, with_maps } => path(cli, map, *k, *iters, *mix, *with_maps),
        Command::Sweep(args) => sweep::run(cli, args, false),
        Command::QuantumSweep(args) => sweep::run(cli, args, true),
        Command::ProtocolCheck { protocols, gamma, k, iters } => {
            let seq = io::parse_protocols(&read(protocols)?)?;
            seq.check_rate_budget(*gamma)?;
            let t = map_from_protocols(&seq)?;
            let d = t.dim();
            let n = seq.len();
            let b = complexity_bracket_with_floor(&t, floor);
            let mut rec = CaseRecord {
                label: Some(protocols.display().to_string()),
                ell: b.ell,
                lower: b.lower,
                upper: b.upper,
                diverged: b.diverged,
                entropic_bound: entropic_bound(&t),
                ..Default::default()
            };
            rec.inputs.insert("dim".into(), d as f64);
            rec.inputs.insert("gamma".into(), *gamma);
            rec.inputs.insert("n".into(), n as f64);
            let ceiling = protocol_length_ceiling(n, d, *gamma);
            rec.extra.insert("length_ceiling".into(), ceiling);
            rec.extra.insert("n_min_bracket".into(), protocol_lower_bound(b.upper.min(f64::MAX), d, *gamma)?);
            if !(b.ell <= ceiling + 1e-9) {
                rec.violate("length-ceiling");
            }
            if !b.diverged {
                let g = geodesic_upper_estimate_with_floor(&t, *k, *iters, floor)?;
                check_estimate(&mut rec, g.length);
                let n_min = protocol_lower_bound(g.length, d, *gamma)?;
                rec.n_min = Some(n_min);
                if (n as f64) < n_min {
                    rec.violate("protocol-count");
                }
            }
            let report = ExperimentReport::new("protocol-check", vec![rec]);
            Ok(report_output(&report, cli.format.unwrap_or(Format::Json)))
        }
        Command::DecomposeSearch { map, depth, grid, sum_constraint } => {
            let t = io::parse_map(&read(map)?)?;
            let obstruction = det_obstruction(&t);
            let search = residual_search(&t, SearchParams { depth: *depth, grid: *grid, sum_constraint: *sum_constraint })?;
            let text = match cli.format.unwrap_or(Format::Json) {
                Format::Json => {
                    let v = json!({ "det": obstruction.det, "verdict": obstruction.verdict, "search": search });
                    serde_json::to_string_pretty(&v).expect("search result serializes") + "\n"
                }
                Format::Csv => format!(
                    "det,verdict,depth,grid,sum_constraint,residual,nodes_visited,estimated_nodes\n{},{},{},{},{},{},{},{}\n",
                    io::fmt_sig(obstruction.det),
                    serde_json::to_value(obstruction.verdict).expect("verdict serializes").as_str().unwrap_or(""),
                    depth,
                    io::fmt_sig(*grid),
                    sum_constraint,
                    io::fmt_sig(search.residual),
                    search.nodes_visited,
                    io::fmt_sig(search.estimated_nodes),
                ),
            };
            Ok(Emitted { text, side: None, violation: false })
        }
        Command::QuantumAnalyze { channel, projector, undesired, gamma, solve, est } => {
            let ch = io::parse_channel(&read(channel)?)?;
            let d = ch.dim();
            let pi = match projector {
                Some(p) => io::parse_projector(&read(p)?)?,
                None => computational_projector(d, undesired)?,
            };
            if pi.dim() != d {
                return Err(Failure::Input(format!("projector dim {} does not match channel dim {d}", pi.dim())));
            }
            let tol = cli.tol.unwrap_or(QUANTUM_TOL);
            let mut rec = quantum_record(&ch, &pi, floor, tol, Estimator::from_args(est).as_ref())?;
            rec.label = Some(channel.display().to_string());
            if let Some(g) = gamma {
                if rec.ell.is_finite() {
                    rec.extra.insert("lindblad_n_min".into(), lindblad_protocol_bound(rec.ell, d, *g)?);
                }
                let lambda = rec.extra["lambda_min"];
                if lambda > floor {
                    let bound = dilation_protocol_bound(lambda.min(1.0 / d as f64), d, *g)?;
                    rec.extra.insert("dilation_n_min".into(), bound.n_min);
                } else {
                    rec.flag("dilation-bound:diverged");
                }
            }
            if *solve {
                let phi = reduced_output(&ch);
                let dep = choi_from_kraus(&KrausChannel::fully_depolarizing(d))?;
                let own = choi_from_kraus(&ch)?;
                let base = (own.matrix() + dep.matrix()).scale(0.5);
                match quantum_scale_solve(&base, &phi) {
                    Ok(s) => {
                        rec.extra.insert("scaling_residual".into(), s.residual);
                        rec.extra.insert("scaling_iterations".into(), s.iterations as f64);
                    }
                    Err(e) => rec.flag(format!("solve-failed:{e}")),
                }
            }
            let report = ExperimentReport::new("quantum-analyze", vec![rec]);
            Ok(report_output(&report, cli.format.unwrap_or(Format::Json)))
        }
    }
}

fn path(cli: &Cli, map: &Path, k: usize, iters: usize, mix: f64, with_maps: bool) -> CliResult<Emitted> {
    let t = io::parse_map(&read(map)?)?;
    let d = t.dim();
    let b = complexity_bracket_with_floor(&t, cli.floor);
    let est = geodesic_upper_estimate_with_floor(&t, k, iters, cli.floor)?;
    let path = if est.ell == 0.0 {
        let mut p = MapPath::from_rows(vec![RowSumVector::uniform(d)])?;
        p.maps = Some(vec![t.clone()]);
        p
    } else {
        constrained_path(&t, &est.knots, mix)?
    };
    let length = if est.ell == 0.0 { 0.0 } else { est.length };
    let violation = length < b.ell - 1e-9 * (1.0 + b.ell) || length > b.upper + UPPER_SLACK;
    let summary = json!({
        "c_hat": length,
        "ell": b.ell,
        "lower": b.lower,
        "upper": b.upper,
        "seed_length": est.seed_length,
        "iterations": est.iterations,
        "converged": est.converged,
        "samples": path.len(),
        "max_residual": path.residuals.iter().copied().fold(0.0, f64::max),
        "violation": violation,
    });
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(Emitted { text: io::path_csv(&path), side: Some(summary.to_string()), violation }),
        Format::Json => {
            let mut v = summary;
            v["path"] = io::path_json(&path, with_maps);
            Ok(Emitted {
                text: serde_json::to_string_pretty(&v).expect("path serializes") + "\n",
                side: None,
                violation,
            })
        }
    }
}

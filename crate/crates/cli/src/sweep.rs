use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use resetgeo::io::fmt_sig;
use resetgeo::maps::two_level_reset;
use resetgeo::quantum::{classical_reduction, quantum_ell_with_floor, swap_channel, swap_complexity, ProjectorQ};
use resetgeo::random::{
    random_diagonal_kraus_channel, random_kraus_channel, random_projector, random_stochastic_map, random_undesired_set,
};
use resetgeo::report::{CaseRecord, ExperimentReport};
use resetgeo::{ell_with_floor, two_level_complexity, UndesiredSet};

use crate::commands::{classical_record, quantum_record, Estimator, CLASSICAL_TOL, QUANTUM_TOL};
use crate::{pool, Cli, CliResult, Emitted, Failure, Format};

pub const ENSEMBLE_HELP: &str = "\
Runs one case per grid point and writes one row per case, in grid order.

Families:
  two-level       reset map [[1, 1-e^-x], [0, e^-x]] for each x in --values; undesired state 2
  random          random column-stochastic maps, --count per entry of --dims, random undesired sets
  swap            qubit swap channel with environment weight k for each k in --values; undesired |1>
  random-channel  random Kraus channels, --count per entry of --dims, random projectors
  diagonal        Kraus embeddings of random stochastic maps, compared with their classical reduction

Random maps draw each column from a flat Dirichlet distribution (normalized unit
exponentials). Random Kraus sets orthonormalize a stacked complex Gaussian
(n*d x d) matrix by QR with phase fixing; the number of operators is uniform in
1..=d^2. Random projectors take leading columns of a Haar unitary, with rank
uniform in 1..d. Case i uses ChaCha8 seeded by --seed on stream i, so output
does not depend on the worker count (RESETGEO_THREADS).";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    TwoLevel,
    Random,
    Swap,
    RandomChannel,
    Diagonal,
}

impl Family {
    fn is_quantum(self) -> bool {
        matches!(self, Family::Swap | Family::RandomChannel | Family::Diagonal)
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct SweepArgs {
    /// Ensemble or closed-form family (default: two-level, or swap for quantum-sweep).
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Grid for two-level (wτ) and swap (κ) families.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Vec<f64>,
    /// Dimensions for random families.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4])]
    pub dims: Vec<usize>,
    /// Samples per dimension for random families.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Run the geodesic upper estimator on every case.
    #[arg(long)]
    pub estimate: bool,
    #[arg(long, default_value_t = 32)]
    pub k: usize,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
}

enum Case {
    Value(f64),
    Sample { dim: usize, index: usize },
}

fn cases(family: Family, args: &SweepArgs) -> CliResult<Vec<Case>> {
    match family {
        Family::TwoLevel | Family::Swap => {
            if args.values.is_empty() {
                return Err(Failure::Input("empty grid: pass --values".into()));
            }
            if let Some(x) = args.values.iter().find(|x| !x.is_finite()) {
                return Err(Failure::Input(format!("grid value {x} is not finite")));
            }
            Ok(args.values.iter().map(|&x| Case::Value(x)).collect())
        }
        _ => {
            if args.dims.is_empty() || args.count == 0 {
                return Err(Failure::Input("empty grid: need --dims and a positive --count".into()));
            }
            if let Some(d) = args.dims.iter().find(|&&d| d < 2) {
                return Err(Failure::Input(format!("dimension {d} below 2")));
            }
            Ok(args
                .dims
                .iter()
                .flat_map(|&dim| (0..args.count).map(move |index| Case::Sample { dim, index }))
                .collect())
        }
    }
}

fn run_case(cli: &Cli, family: Family, case: &Case, i: usize, est: Option<&Estimator>) -> CliResult<CaseRecord> {
    let floor = cli.floor;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    rng.set_stream(i as u64);
    let ctol = cli.tol.unwrap_or(CLASSICAL_TOL);
    let qtol = cli.tol.unwrap_or(QUANTUM_TOL);
    let mut rec = match (family, case) {
        (Family::TwoLevel, Case::Value(x)) => {
            if *x < 0.0 {
                return Err(Failure::Input(format!("wτ = {x} is negative")));
            }
            let t = two_level_reset(*x);
            let mut rec = classical_record(&t, &UndesiredSet::new(2, &[1])?, floor, ctol, est)?;
            let c = two_level_complexity(*x);
            rec.c_exact = Some(c);
            rec.extra.insert("c_minus_w_tau".into(), c - x);
            if c < rec.lower - 1e-12 || c > rec.upper + 1e-12 {
                rec.violate("bracket");
            }
            rec.inputs.insert("w_tau".into(), *x);
            rec
        }
        (Family::Swap, Case::Value(k)) => {
            let ch = swap_channel(*k)?;
            let mut rec = quantum_record(&ch, &ProjectorQ::computational(2, &[1])?, floor, qtol, est)?;
            let c = swap_complexity(*k)?;
            rec.c_exact = Some(c);
            if c.is_finite() && (c < rec.lower - 1e-12 || c > rec.upper + 1e-12) {
                rec.violate("bracket");
            }
            rec.inputs.insert("kappa".into(), *k);
            rec
        }
        (Family::Random, Case::Sample { dim, .. }) => {
            let t = random_stochastic_map(&mut rng, *dim);
            let u = random_undesired_set(&mut rng, *dim);
            let mut rec = classical_record(&t, &u, floor, ctol, est)?;
            rec.extra.insert("undesired_size".into(), u.len() as f64);
            rec
        }
        (Family::RandomChannel, Case::Sample { dim, .. }) => {
            let n_kraus = rand::Rng::random_range(&mut rng, 1..=dim * dim);
            let ch = random_kraus_channel(&mut rng, *dim, n_kraus);
            let pi = random_projector(&mut rng, *dim, None);
            let mut rec = quantum_record(&ch, &pi, floor, qtol, est)?;
            rec.extra.insert("projector_rank".into(), pi.rank() as f64);
            rec
        }
        (Family::Diagonal, Case::Sample { dim, .. }) => {
            let ch = random_diagonal_kraus_channel(&mut rng, *dim);
            let pi = random_projector(&mut rng, *dim, None);
            let mut rec = quantum_record(&ch, &pi, floor, qtol, est)?;
            let lc = ell_with_floor(&classical_reduction(&ch)?, floor);
            let lq = quantum_ell_with_floor(&ch, floor);
            let gap = if lc.is_finite() || lq.is_finite() { (lc - lq).abs() } else { 0.0 };
            rec.extra.insert("ell_classical".into(), lc);
            rec.extra.insert("ell_gap".into(), gap);
            if !(gap <= 1e-9) {
                rec.violate("classical-reduction");
            }
            rec
        }
        _ => unreachable!("cases() matches the family"),
    };
    if let Case::Sample { index, .. } = case {
        rec.inputs.insert("sample".into(), *index as f64);
    }
    Ok(rec)
}

pub fn run(cli: &Cli, args: &SweepArgs, quantum_only: bool) -> CliResult<Emitted> {
    let family = args.family.unwrap_or(if quantum_only { Family::Swap } else { Family::TwoLevel });
    if quantum_only && !family.is_quantum() {
        return Err(Failure::Input("quantum-sweep takes swap, random-channel or diagonal".into()));
    }
    let grid = cases(family, args)?;
    let est = args.estimate.then_some(Estimator { k: args.k, iters: args.iters });
    let results = pool::map_indexed(grid.len(), |i| run_case(cli, family, &grid[i], i, est.as_ref()));
    let mut records = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => records.push(rec),
            Err(Failure::Input(msg)) => {
                let at = match &grid[i] {
                    Case::Value(x) => format!("value {}", fmt_sig(*x)),
                    Case::Sample { dim, index } => format!("dim {dim} sample {index}"),
                };
                return Err(Failure::Input(format!("{at}: {msg}")));
            }
        }
    }
    let name = if quantum_only { "quantum-sweep" } else { "sweep" };
    let report = ExperimentReport::new(name, records);
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
    };
    Ok(Emitted { text, side: None, violation: report.violation })
}

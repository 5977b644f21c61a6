//! JSON input formats and CSV/JSON path export.
//!
//! Matrices are written row by row. Stochastic maps are column-stochastic:
//! `rows[m][n]` is the probability of moving from state `n` to state `m`, so
//! each column of `rows` sums to one. Complex entries are `[re, im]` pairs.
//!
//! ```json
//! {"dim": 2, "rows": [[1.0, 0.5], [0.0, 0.5]]}
//! {"dim": 2, "kraus": [[[1,0],[0,0],[0,0],[1,0]]]}
//! {"dim": 2, "matrix": [[0,0],[0,0],[0,0],[1,0]]}
//! {"dim": 2, "protocols": [{"rows": [[0,1],[0,-1]], "duration": 1.0}]}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::maps::{matrix_from_rows, Protocol, ProtocolSequence, StochasticMap, TransitionRateMatrix};
use crate::quantum::channel::{KrausChannel, ProjectorQ};
use crate::scaling::MapPath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub dim: usize,
    pub kraus: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorFile {
    pub dim: usize,
    pub matrix: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolEntry {
    pub rows: Vec<Vec<f64>>,
    #[serde(default = "unit_duration")]
    pub duration: f64,
}

fn unit_duration() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub dim: usize,
    pub protocols: Vec<ProtocolEntry>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn check_rows(dim: usize, rows: &[Vec<f64>]) -> Result<nalgebra::DMatrix<f64>> {
    if rows.len() != dim {
        return Err(Error::Parse(format!("dim is {dim} but {} rows were given", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if let Some(j) = r.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i, col: j });
        }
    }
    matrix_from_rows(rows)
}

fn complex_block(dim: usize, flat: &[[f64; 2]]) -> Result<CMatrix> {
    if flat.len() != dim * dim {
        return Err(Error::Parse(format!("expected {} entries, got {}", dim * dim, flat.len())));
    }
    if let Some(k) = flat.iter().position(|z| !z[0].is_finite() || !z[1].is_finite()) {
        return Err(Error::NonFinite { row: k / dim, col: k % dim });
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        let z = flat[i * dim + j];
        c(z[0], z[1])
    }))
}

fn flatten(m: &CMatrix) -> Vec<[f64; 2]> {
    let d = m.nrows();
    (0..d * d).map(|k| {
        let z = m[(k / d, k % d)];
        [z.re, z.im]
    })
    .collect()
}

pub fn parse_map(text: &str) -> Result<StochasticMap> {
    let f: MatrixFile = parse_json(text)?;
    crate::maps::validate_map(check_rows(f.dim, &f.rows)?)
}

pub fn parse_rate_matrix(text: &str) -> Result<TransitionRateMatrix> {
    let f: MatrixFile = parse_json(text)?;
    TransitionRateMatrix::new(check_rows(f.dim, &f.rows)?)
}

pub fn parse_channel(text: &str) -> Result<KrausChannel> {
    let f: ChannelFile = parse_json(text)?;
    let kraus = f.kraus.iter().map(|k| complex_block(f.dim, k)).collect::<Result<Vec<_>>>()?;
    KrausChannel::new(kraus)
}

pub fn parse_projector(text: &str) -> Result<ProjectorQ> {
    let f: ProjectorFile = parse_json(text)?;
    ProjectorQ::new(complex_block(f.dim, &f.matrix)?)
}

pub fn parse_protocols(text: &str) -> Result<ProtocolSequence> {
    let f: ProtocolFile = parse_json(text)?;
    let mut ps = Vec::with_capacity(f.protocols.len());
    for p in &f.protocols {
        let w = TransitionRateMatrix::new(check_rows(f.dim, &p.rows)?)?;
        ps.push(Protocol::new(w, p.duration)?);
    }
    ProtocolSequence::new(f.dim, ps)
}

pub fn map_to_json(t: &StochasticMap) -> String {
    let d = t.dim();
    let rows = (0..d).map(|i| (0..d).map(|j| t.entry(i, j)).collect()).collect();
    serde_json::to_string(&MatrixFile { dim: d, rows }).expect("plain numbers serialize")
}

pub fn channel_to_json(ch: &KrausChannel) -> String {
    let f = ChannelFile { dim: ch.dim(), kraus: ch.kraus().iter().map(flatten).collect() };
    serde_json::to_string(&f).expect("plain numbers serialize")
}

pub fn projector_to_json(p: &ProjectorQ) -> String {
    serde_json::to_string(&ProjectorFile { dim: p.dim(), matrix: flatten(p.matrix()) }).expect("plain numbers serialize")
}

pub fn protocols_to_json(seq: &ProtocolSequence) -> String {
    let d = seq.dim();
    let protocols = seq
        .protocols()
        .iter()
        .map(|p| ProtocolEntry {
            rows: (0..d).map(|i| (0..d).map(|j| p.generator.matrix()[(i, j)]).collect()).collect(),
            duration: p.duration,
        })
        .collect();
    serde_json::to_string(&ProtocolFile { dim: d, protocols }).expect("plain numbers serialize")
}

/// Formats a number with 12 significant digits; `inf`, `-inf` and `nan` for non-finite values.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" { "0".into() } else { s }
    } else {
        format!("{x:.11e}")
    }
}

/// CSV with columns `t, r_1..r_d, segment_speed`; the last row has an empty speed.
pub fn path_csv(path: &MapPath) -> String {
    let d = path.dim();
    let mut out = String::from("t");
    for n in 1..=d {
        out.push_str(&format!(",r_{n}"));
    }
    out.push_str(",segment_speed\n");
    for (k, r) in path.rows.iter().enumerate() {
        out.push_str(&fmt_sig(path.t[k]));
        for x in r.as_slice() {
            out.push(',');
            out.push_str(&fmt_sig(*x));
        }
        out.push(',');
        if let Some(s) = path.segment_speed.get(k) {
            out.push_str(&fmt_sig(*s));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct PathSampleJson {
    t: f64,
    r: Vec<f64>,
    segment_speed: Option<f64>,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    map: Option<Vec<Vec<f64>>>,
}

/// JSON array of samples; per-sample matrices are embedded when `with_maps` is set.
pub fn path_json(path: &MapPath, with_maps: bool) -> serde_json::Value {
    let samples: Vec<PathSampleJson> = path
        .rows
        .iter()
        .enumerate()
        .map(|(k, r)| PathSampleJson {
            t: path.t[k],
            r: r.as_slice().to_vec(),
            segment_speed: path.segment_speed.get(k).copied(),
            residual: path.residuals.get(k).copied().unwrap_or(0.0),
            map: match (&path.maps, with_maps) {
                (Some(ms), true) => {
                    let m = &ms[k];
                    let d = m.dim();
                    Some((0..d).map(|i| (0..d).map(|j| m.entry(i, j)).collect()).collect())
                }
                _ => None,
            },
        })
        .collect();
    serde_json::to_value(samples).expect("finite path samples serialize")
}

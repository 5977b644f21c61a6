//! Structured experiment records for JSON and CSV emission.
//!
//! Non-finite numbers serialize as JSON `null` and as `inf`/`nan` in CSV.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::io::fmt_sig;

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

fn opt_finite_or_null<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) if v.is_finite() => s.serialize_f64(*v),
        _ => s.serialize_none(),
    }
}

/// One analysed case.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct CaseRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub inputs: BTreeMap<String, f64>,
    #[serde(serialize_with = "finite_or_null")]
    pub ell: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub lower: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub upper: f64,
    #[serde(serialize_with = "opt_finite_or_null")]
    pub c_hat: Option<f64>,
    #[serde(serialize_with = "opt_finite_or_null")]
    pub c_exact: Option<f64>,
    #[serde(serialize_with = "opt_finite_or_null")]
    pub epsilon: Option<f64>,
    #[serde(serialize_with = "opt_finite_or_null")]
    pub margin: Option<f64>,
    #[serde(serialize_with = "opt_finite_or_null")]
    pub sharper_margin: Option<f64>,
    #[serde(serialize_with = "finite_or_null")]
    pub entropic_bound: f64,
    #[serde(serialize_with = "opt_finite_or_null")]
    pub n_min: Option<f64>,
    pub diverged: bool,
    pub violation: bool,
    pub flags: Vec<String>,
    /// Command-specific quantities, such as protocol counts or search residuals.
    pub extra: BTreeMap<String, f64>,
}

impl CaseRecord {
    pub fn flag(&mut self, f: impl Into<String>) {
        self.flags.push(f.into());
    }

    /// Marks the record as violating an inequality and names the inequality.
    pub fn violate(&mut self, what: impl Into<String>) {
        self.violation = true;
        self.flags.push(format!("violation:{}", what.into()));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub command: String,
    pub records: Vec<CaseRecord>,
    pub violation: bool,
}

const CSV_COLUMNS: [&str; 13] = [
    "ell",
    "lower",
    "upper",
    "c_hat",
    "c_exact",
    "epsilon",
    "margin",
    "sharper_margin",
    "entropic_bound",
    "n_min",
    "diverged",
    "violation",
    "flags",
];

impl ExperimentReport {
    pub fn new(command: impl Into<String>, records: Vec<CaseRecord>) -> Self {
        let violation = records.iter().any(|r| r.violation);
        ExperimentReport { command: command.into(), records, violation }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per record: input columns, the fixed columns, then extra columns,
    /// with keys taken from the first record.
    pub fn to_csv(&self) -> String {
        let keys: Vec<String> = self.records.first().map(|r| r.inputs.keys().cloned().collect()).unwrap_or_default();
        let extra: Vec<String> = self.records.first().map(|r| r.extra.keys().cloned().collect()).unwrap_or_default();
        let mut out = String::new();
        let mut header: Vec<String> = keys.clone();
        header.extend(CSV_COLUMNS.iter().map(|s| s.to_string()));
        header.extend(extra.iter().cloned());
        out.push_str(&header.join(","));
        out.push('\n');
        let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
        for r in &self.records {
            let mut cells: Vec<String> = keys.iter().map(|k| r.inputs.get(k).map(|x| fmt_sig(*x)).unwrap_or_default()).collect();
            cells.push(fmt_sig(r.ell));
            cells.push(fmt_sig(r.lower));
            cells.push(fmt_sig(r.upper));
            cells.push(opt(r.c_hat));
            cells.push(opt(r.c_exact));
            cells.push(opt(r.epsilon));
            cells.push(opt(r.margin));
            cells.push(opt(r.sharper_margin));
            cells.push(fmt_sig(r.entropic_bound));
            cells.push(opt(r.n_min));
            cells.push(r.diverged.to_string());
            cells.push(r.violation.to_string());
            cells.push(r.flags.join(";"));
            cells.extend(extra.iter().map(|k| r.extra.get(k).map(|x| fmt_sig(*x)).unwrap_or_default()));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

//! Verification records and their CSV/JSON tables.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `residual <= tolerance`
    Identity,
    /// `lhs <= rhs * (1 + tolerance)`
    Inequality,
    /// Ratio with an unknown constant; passes when finite.
    Measurement,
}

/// One identity or inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub name: String,
    pub kind: CheckKind,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio_or_residual: f64,
    pub params: BTreeMap<String, f64>,
    pub pass: bool,
    pub tolerance: f64,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

impl VerificationRecord {
    pub fn identity(name: impl Into<String>, lhs: f64, rhs: f64, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Identity,
            lhs,
            rhs,
            ratio_or_residual: residual,
            params: BTreeMap::new(),
            pass: residual <= tolerance,
            tolerance,
        }
    }

    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Inequality,
            lhs,
            rhs,
            ratio_or_residual: ratio(lhs, rhs),
            params: BTreeMap::new(),
            pass: lhs <= rhs * (1.0 + tolerance),
            tolerance,
        }
    }

    /// `0/0` is reported as ratio 0 with a `degenerate` flag.
    pub fn measurement(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let r = ratio(lhs, rhs);
        let mut rec = Self {
            name: name.into(),
            kind: CheckKind::Measurement,
            lhs,
            rhs,
            ratio_or_residual: r,
            params: BTreeMap::new(),
            pass: r.is_finite(),
            tolerance: 0.0,
        };
        if lhs == 0.0 && rhs == 0.0 {
            rec.params.insert("degenerate".into(), 1.0);
        }
        rec
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub fn is_degenerate(&self) -> bool {
        self.param("degenerate") == Some(1.0)
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    name: &'a str,
    kind: CheckKind,
    lhs: f64,
    rhs: f64,
    ratio_or_residual: f64,
    tolerance: f64,
    pass: bool,
    params: String,
}

/// One record per row; `params` is flattened to `key=value;key=value`.
pub fn write_records_csv<W: Write>(out: W, records: &[VerificationRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in records {
        let params = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
        wtr.serialize(CsvRow {
            name: &r.name,
            kind: r.kind,
            lhs: r.lhs,
            rhs: r.rhs,
            ratio_or_residual: r.ratio_or_residual,
            tolerance: r.tolerance,
            pass: r.pass,
            params,
        })?;
    }
    if records.is_empty() {
        wtr.write_record(["name", "kind", "lhs", "rhs", "ratio_or_residual", "tolerance", "pass", "params"])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_records_json<W: Write>(out: W, records: &[VerificationRecord]) -> Result<()> {
    serde_json::to_writer_pretty(out, records)?;
    Ok(())
}

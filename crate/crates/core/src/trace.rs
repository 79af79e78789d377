//! Trace serialization: CSV with header `n,lambda,residual,E_n,dist,elapsed_ms`
//! and JSON lines with a closing summary record.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! written CSV reproduces every row bit for bit. Missing values are empty
//! fields.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::{EvalCounts, SolverTrace, Status, TraceRow};

pub const CSV_HEADER: &str = "n,lambda,residual,E_n,dist,elapsed_ms";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceParseError {
    #[error("missing or wrong header, expected {CSV_HEADER:?}")]
    Header,
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            r.lambda,
            r.residual,
            r.e_n,
            opt(r.dist),
            opt(r.elapsed_ms)
        );
    }
    out
}

pub fn rows_from_csv(text: &str) -> Result<Vec<TraceRow>, TraceParseError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(TraceParseError::Header);
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| TraceParseError::Row {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        let num = |s: &str, name: &str| -> Result<f64, TraceParseError> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| err(format!("{name}: {e}")))
        };
        let optional = |s: &str, name: &str| -> Result<Option<f64>, TraceParseError> {
            if s.trim().is_empty() {
                Ok(None)
            } else {
                num(s, name).map(Some)
            }
        };
        rows.push(TraceRow {
            n: fields[0]
                .trim()
                .parse()
                .map_err(|e| err(format!("n: {e}")))?,
            lambda: num(fields[1], "lambda")?,
            residual: num(fields[2], "residual")?,
            e_n: num(fields[3], "E_n")?,
            dist: optional(fields[4], "dist")?,
            elapsed_ms: optional(fields[5], "elapsed_ms")?,
        });
    }
    Ok(rows)
}

/// The closing record of a JSON-lines trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub status: Status,
    pub iterations: usize,
    pub final_metric: Option<f64>,
    pub evals: EvalCounts,
    pub degenerate_branch_hits: u64,
    pub degenerate_branch_flagged: bool,
    pub descent_checks: u64,
}

impl TraceSummary {
    pub fn of(trace: &SolverTrace) -> Self {
        TraceSummary {
            status: trace.status,
            iterations: trace.iterations(),
            final_metric: trace.final_metric(),
            evals: trace.evals,
            degenerate_branch_hits: trace.degenerate_branch_hits,
            degenerate_branch_flagged: trace.degenerate_branch_flagged(),
            descent_checks: trace.descent_checks,
        }
    }
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    summary: &'a TraceSummary,
}

pub fn trace_to_jsonl(trace: &SolverTrace) -> String {
    let mut out = String::new();
    for r in &trace.rows {
        out.push_str(&serde_json::to_string(r).expect("trace rows serialize"));
        out.push('\n');
    }
    let summary = TraceSummary::of(trace);
    out.push_str(&serde_json::to_string(&SummaryLine { summary: &summary }).expect("summary serializes"));
    out.push('\n');
    out
}

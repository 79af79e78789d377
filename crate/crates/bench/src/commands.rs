//! The four subcommands. Each returns a [`Report`] carrying the text to print
//! and the process exit code; files are written as a side effect.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use inertial_tseng::certify::{certify_linear_rate, certify_sqrt_rate, RateReport};
use inertial_tseng::schedules::{validate_c3, validate_strong};
use inertial_tseng::solver::{solve, SolverError, SolverTrace};
use inertial_tseng::trace::{rows_from_csv, rows_to_csv, trace_to_jsonl, TraceSummary};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::sweep::{grid_points, trend_verdicts, SummaryRow, SummaryTable, TrendVerdict};
use crate::{exit, BenchError};

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub exit_code: i32,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, BenchError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| BenchError::io(&path, e))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize") + "\n"
}

fn divergence(e: SolverError) -> BenchError {
    match e {
        SolverError::Divergence { n, last_row } => BenchError::Divergence(match last_row {
            Some(r) => format!("iterate became non-finite at n = {n} (last finite row: lambda = {}, residual = {})", r.lambda, r.residual),
            None => format!("iterate became non-finite at n = {n}"),
        }),
        other => BenchError::Config(other.to_string()),
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    family: &'a str,
    seed: u64,
    #[serde(flatten)]
    trace: TraceSummary,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    elapsed_s: f64,
}

fn validation_text(cfg: &ExperimentConfig) -> Result<(String, bool), BenchError> {
    let schedules = cfg.schedules.resolve()?;
    let report = validate_c3(&schedules, cfg.validate_horizon);
    let mut text = format!(
        "schedule conditions to n = {}: {}\n{report}",
        cfg.validate_horizon,
        if report.pass() { "pass" } else { "FAIL" }
    );
    if let Some(strong) = &cfg.strong {
        let sr = validate_strong(strong);
        let _ = write!(
            text,
            "linear-rate conditions: {}\n{sr}",
            if sr.pass() { "pass" } else { "FAIL" }
        );
    }
    Ok((text, report.pass()))
}

/// Runs one solve and writes the trace CSV, a JSON summary and the
/// validation report into `out_dir`.
pub fn cmd_solve(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report, BenchError> {
    let built = cfg.problem.build(cfg.seed)?;
    let solver_cfg = cfg.solver_config(cfg.schedules.resolve()?)?;
    ensure_dir(out_dir)?;
    let (validation, _) = validation_text(cfg)?;
    write_file(out_dir, &cfg.outputs.validation, &validation)?;
    if let (Some(name), Some(instance)) = (&cfg.outputs.instance, &built.instance) {
        write_file(out_dir, name, &to_json(instance))?;
    }

    let start = Instant::now();
    let (_, trace) = solve(&built.problem, &solver_cfg).map_err(divergence)?;
    let elapsed_s = start.elapsed().as_secs_f64();

    let trace_path = write_file(out_dir, &cfg.outputs.trace, &rows_to_csv(&trace.rows))?;
    if cfg.outputs.jsonl {
        write_file(out_dir, &format!("{}.jsonl", cfg.outputs.trace.trim_end_matches(".csv")), &trace_to_jsonl(&trace))?;
    }
    let lambdas = trace.rows.iter().map(|r| r.lambda);
    let summary = SolveSummary {
        family: cfg.problem.family(),
        seed: cfg.seed,
        trace: TraceSummary::of(&trace),
        lambda_min: lambdas.clone().reduce(f64::min),
        lambda_max: lambdas.reduce(f64::max),
        elapsed_s,
    };
    write_file(out_dir, &cfg.outputs.summary, &to_json(&summary))?;

    let mut text = format!(
        "{}: {} after {} iterations, final E_n = {}\ntrace: {}\n",
        cfg.problem.family(),
        trace.status.as_str(),
        trace.iterations(),
        trace.final_metric().map(|m| format!("{m:.6e}")).unwrap_or_else(|| "-".into()),
        trace_path.display()
    );
    if trace.degenerate_branch_flagged() {
        let _ = writeln!(
            text,
            "warning: degenerate step-size branch taken on {} of {} iterations",
            trace.degenerate_branch_hits,
            trace.iterations()
        );
    }
    Ok(Report {
        text,
        exit_code: if trace.status.converged() { exit::OK } else { exit::FAILED },
    })
}

/// Outcome of one grid point.
fn run_point(cfg: &ExperimentConfig, problem: &inertial_tseng::Problem, point: &[usize]) -> Result<(SummaryRow, Option<SolverTrace>), BenchError> {
    let mut schedules = cfg.schedules.resolve()?;
    for (axis, &i) in cfg.sweep.iter().zip(point) {
        axis.apply(axis.values[i], &mut schedules)?;
    }
    let solver_cfg = cfg.solver_config(schedules)?;
    let key = cfg.sweep.iter().map(|a| a.param.name()).collect::<Vec<_>>().join(";");
    let value = cfg
        .sweep
        .iter()
        .zip(point)
        .map(|(a, &i)| a.values[i].label())
        .collect::<Vec<_>>()
        .join(";");
    let start = Instant::now();
    let row = |iters, status: &str, final_metric| SummaryRow {
        sweep_key: key.clone(),
        sweep_value: value.clone(),
        point: point.to_vec(),
        iters,
        status: status.to_string(),
        final_metric,
        elapsed_s: start.elapsed().as_secs_f64(),
    };
    match solve(problem, &solver_cfg) {
        Ok((_, trace)) => Ok((row(trace.iterations(), trace.status.as_str(), trace.final_metric()), Some(trace))),
        Err(SolverError::Divergence { n, .. }) => Ok((row(n as usize, "divergence", None), None)),
        Err(e) => Err(BenchError::Config(e.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub table: SummaryTable,
    pub trends: Vec<TrendVerdict>,
}

/// Runs every grid point on the same generated problem, in parallel, and
/// writes the summary CSV and trend verdicts.
pub fn cmd_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(Report, SweepOutcome), BenchError> {
    let built = cfg.problem.build(cfg.seed)?;
    let points = grid_points(&cfg.sweep);
    let results = points
        .par_iter()
        .map(|p| run_point(cfg, &built.problem, p))
        .collect::<Result<Vec<_>, _>>()?;
    let table = SummaryTable {
        rows: results.into_iter().map(|(row, _)| row).collect(),
    };
    let trends = trend_verdicts(&cfg.sweep, &table);

    ensure_dir(out_dir)?;
    write_file(out_dir, &cfg.outputs.sweep_summary, &table.to_csv())?;
    let outcome = SweepOutcome { table, trends };
    write_file(out_dir, "trends.json", &to_json(&outcome.trends))?;

    let mut text = outcome.table.render();
    for t in &outcome.trends {
        let worst = t.lines.iter().map(|l| l.violations).max().unwrap_or(0);
        let _ = writeln!(
            text,
            "trend {:?} along {}: {} (worst line has {worst} violations, {} allowed)",
            t.expect,
            t.axis,
            if t.pass { "pass" } else { "FAIL" },
            t.allowed_violations
        );
    }
    let rows = &outcome.table.rows;
    let exit_code = if rows.iter().any(|r| r.status == "divergence") {
        exit::DIVERGENCE
    } else if rows.iter().any(|r| r.status == "max_iters") || outcome.trends.iter().any(|t| !t.pass) {
        exit::FAILED
    } else {
        exit::OK
    };
    Ok((Report { text, exit_code }, outcome))
}

/// Prints the schedule-condition report and, when the config has a
/// `strong` block, the linear-rate report. Exit 0 iff the schedule
/// conditions hold.
pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<Report, BenchError> {
    let (text, pass) = validation_text(cfg)?;
    Ok(Report {
        text,
        exit_code: if pass { exit::OK } else { exit::FAILED },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CertifyKind {
    Sqrt,
    Linear,
}

pub fn cmd_certify(trace_path: &Path, kind: CertifyKind, q_bound: Option<f64>) -> Result<(Report, RateReport), BenchError> {
    let text = fs::read_to_string(trace_path).map_err(|e| BenchError::io(trace_path, e))?;
    let rows = rows_from_csv(&text).map_err(|e| BenchError::Trace(e.to_string()))?;
    let report = match kind {
        CertifyKind::Sqrt => RateReport::Sqrt(certify_sqrt_rate(&rows).map_err(|e| BenchError::Trace(e.to_string()))?),
        CertifyKind::Linear => {
            RateReport::Linear(certify_linear_rate(&rows, q_bound).map_err(|e| BenchError::Trace(e.to_string()))?)
        }
    };
    Ok((
        Report {
            text: format!("{report}\n"),
            exit_code: if report.pass() { exit::OK } else { exit::FAILED },
        },
        report,
    ))
}

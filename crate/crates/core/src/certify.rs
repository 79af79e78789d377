//! Empirical convergence-rate certificates computed from a solver trace.
//!
//! Neither certificate needs the unobservable constants of the underlying
//! estimates; both fit what they need from the trace itself.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::TraceRow;

/// Minimum number of rows for the `O(1/√n)` certificate.
pub const SQRT_MIN_ROWS: usize = 50;
/// Fraction of the trace (from the start) used to fit the envelope constant.
pub const SQRT_FIT_FRACTION: f64 = 0.1;
/// The verified envelope is this multiple of the fitted one.
pub const SQRT_ENVELOPE_FACTOR: f64 = 2.0;
/// Distances at or below this are excluded from ratio computations.
pub const LINEAR_DIST_FLOOR: f64 = 1e-12;
/// Slack on the theoretical contraction factor.
pub const LINEAR_Q_SLACK: f64 = 0.05;
/// Minimum ratio of late-tail to early-tail log-decrease per iteration.
pub const LINEAR_PERSISTENCE_MIN: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error("trace has {rows} rows, certificate needs at least {needed}")]
    TooShort { rows: usize, needed: usize },
    #[error("trace row {n} has no distance-to-solution")]
    MissingDistance { n: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtRateReport {
    pub rows: usize,
    /// Number of leading rows the constant was fitted on.
    pub fit_rows: usize,
    /// `C = max r_n √n` over the fit window, `r_n = min_{i≤n} ‖w_i − y_i‖`.
    pub fitted_constant: f64,
    /// `max r_n √n / C` over the remaining rows.
    pub worst_envelope_ratio: f64,
    pub first_violation: Option<u64>,
    pub pass: bool,
}

/// Checks that the running minimum residual `r_n` stays under the envelope
/// `2C/√n` after fitting `C` on the first 10% of rows.
///
/// `r_n` is nonincreasing, so over a window `[a, b]` the product `r_n √n`
/// can grow by at most `√(b/a)`; fitting on a short prefix keeps the test
/// able to reject stagnating residuals.
pub fn certify_sqrt_rate(rows: &[TraceRow]) -> Result<SqrtRateReport, CertifyError> {
    if rows.len() < SQRT_MIN_ROWS {
        return Err(CertifyError::TooShort {
            rows: rows.len(),
            needed: SQRT_MIN_ROWS,
        });
    }
    let mut running = f64::INFINITY;
    let scaled: Vec<(u64, f64)> = rows
        .iter()
        .map(|r| {
            running = running.min(r.residual);
            (r.n, running * (r.n as f64).sqrt())
        })
        .collect();
    let fit_rows = ((rows.len() as f64 * SQRT_FIT_FRACTION).ceil() as usize).max(1);
    let fitted_constant = scaled[..fit_rows].iter().map(|&(_, s)| s).fold(0.0, f64::max);

    let mut worst: f64 = 0.0;
    let mut first_violation = None;
    for &(n, s) in &scaled[fit_rows..] {
        let ratio = if fitted_constant > 0.0 {
            s / fitted_constant
        } else if s == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(ratio);
        if ratio > SQRT_ENVELOPE_FACTOR && first_violation.is_none() {
            first_violation = Some(n);
        }
    }
    Ok(SqrtRateReport {
        rows: rows.len(),
        fit_rows,
        fitted_constant,
        worst_envelope_ratio: worst,
        first_violation,
        pass: first_violation.is_none(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRateReport {
    pub tail_rows: usize,
    /// Geometric mean of `dist²_{n+1}/dist²_n` over the tail.
    pub mean_ratio: f64,
    pub max_ratio: f64,
    /// Per-iteration log-decrease of the second half of the tail divided by
    /// that of the first half: about 1 for geometric decay, well below 1
    /// for power laws.
    pub persistence: f64,
    pub q_bound: Option<f64>,
    pub within_q_bound: Option<bool>,
    pub pass: bool,
}

/// Checks Q-linear decay of `dist_n = ‖x_n − x*‖` on the last half of rows.
///
/// Passes when the geometric-mean squared-distance ratio is below 1 and the
/// decay rate does not fade along the tail. With `q_bound`, also reports
/// whether every tail ratio is at most `q + 0.05`.
pub fn certify_linear_rate(rows: &[TraceRow], q_bound: Option<f64>) -> Result<LinearRateReport, CertifyError> {
    let dists = rows
        .iter()
        .map(|r| r.dist.ok_or(CertifyError::MissingDistance { n: r.n }))
        .collect::<Result<Vec<f64>, _>>()?;
    let tail: Vec<f64> = dists[dists.len() / 2..]
        .iter()
        .copied()
        .filter(|&d| d > LINEAR_DIST_FLOOR)
        .collect();
    if tail.len() < 4 {
        return Err(CertifyError::TooShort {
            rows: tail.len(),
            needed: 4,
        });
    }
    let log_ratios: Vec<f64> = tail.windows(2).map(|w| 2.0 * (w[1] / w[0]).ln()).collect();
    let mean_log = log_ratios.iter().sum::<f64>() / log_ratios.len() as f64;
    let max_ratio = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp();

    let half = log_ratios.len() / 2;
    let early = log_ratios[..half].iter().sum::<f64>() / half as f64;
    let late = log_ratios[half..].iter().sum::<f64>() / (log_ratios.len() - half) as f64;
    let persistence = if early < 0.0 { late / early } else { 0.0 };

    let mean_ratio = mean_log.exp();
    let within_q_bound = q_bound.map(|q| max_ratio <= q + LINEAR_Q_SLACK);
    Ok(LinearRateReport {
        tail_rows: tail.len(),
        mean_ratio,
        max_ratio,
        persistence,
        q_bound,
        within_q_bound,
        pass: mean_ratio < 1.0 && persistence >= LINEAR_PERSISTENCE_MIN,
    })
}

/// Either certificate, for uniform reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateReport {
    Sqrt(SqrtRateReport),
    Linear(LinearRateReport),
}

impl RateReport {
    pub fn pass(&self) -> bool {
        match self {
            RateReport::Sqrt(r) => r.pass,
            RateReport::Linear(r) => r.pass && r.within_q_bound.unwrap_or(true),
        }
    }
}

impl fmt::Display for RateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass() { "pass" } else { "FAIL" };
        match self {
            RateReport::Sqrt(r) => write!(
                f,
                "sqrt-rate {verdict}: C = {:.6e} fitted on {} of {} rows, worst r_n*sqrt(n)/C = {:.4}",
                r.fitted_constant, r.fit_rows, r.rows, r.worst_envelope_ratio
            ),
            RateReport::Linear(r) => {
                write!(
                    f,
                    "linear-rate {verdict}: mean ratio {:.6}, max ratio {:.6}, persistence {:.3} over {} tail rows",
                    r.mean_ratio, r.max_ratio, r.persistence, r.tail_rows
                )?;
                if let (Some(q), Some(ok)) = (r.q_bound, r.within_q_bound) {
                    write!(f, ", q = {q:.6} ({})", if ok { "within q + 0.05" } else { "above q + 0.05" })?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_with(residual: impl Fn(u64) -> f64, dist: impl Fn(u64) -> Option<f64>, n: u64) -> Vec<TraceRow> {
        (1..=n)
            .map(|i| TraceRow {
                n: i,
                lambda: 0.1,
                residual: residual(i),
                e_n: 0.0,
                dist: dist(i),
                elapsed_ms: None,
            })
            .collect()
    }

    #[test]
    fn sqrt_exact_envelope_passes() {
        let rows = rows_with(|n| 1.0 / (n as f64).sqrt(), |_| None, 400);
        let r = certify_sqrt_rate(&rows).unwrap();
        assert!(r.pass);
        assert!((r.fitted_constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_constant_residual_fails() {
        let rows = rows_with(|_| 1.0, |_| None, 400);
        let r = certify_sqrt_rate(&rows).unwrap();
        assert!(!r.pass);
        assert!(r.first_violation.is_some());
    }

    #[test]
    fn sqrt_needs_fifty_rows() {
        let rows = rows_with(|_| 1.0, |_| None, 49);
        assert_eq!(
            certify_sqrt_rate(&rows),
            Err(CertifyError::TooShort { rows: 49, needed: 50 })
        );
    }

    #[test]
    fn linear_geometric_passes() {
        let rows = rows_with(|_| 1.0, |n| Some(0.9f64.powi(n as i32)), 200);
        let r = certify_linear_rate(&rows, Some(0.81)).unwrap();
        assert!((r.mean_ratio - 0.81).abs() < 1e-10);
        assert!((r.persistence - 1.0).abs() < 1e-8);
        assert!(r.pass);
        assert_eq!(r.within_q_bound, Some(true));
    }

    #[test]
    fn linear_power_law_fails() {
        for n in [100, 1000, 10_000] {
            let rows = rows_with(|_| 1.0, |i| Some(1.0 / i as f64), n);
            let r = certify_linear_rate(&rows, None).unwrap();
            assert!(!r.pass, "{n}: {r:?}");
        }
    }

    #[test]
    fn linear_requires_distances() {
        let rows = rows_with(|_| 1.0, |_| None, 10);
        assert_eq!(
            certify_linear_rate(&rows, None),
            Err(CertifyError::MissingDistance { n: 1 })
        );
    }
}

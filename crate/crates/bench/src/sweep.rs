//! Cartesian parameter grids, the sweep summary table and trend verdicts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{SweepAxis, Trend};

pub const SUMMARY_HEADER: &str = "sweep_key,sweep_value,iters,status,final_metric,elapsed_s";

/// Value indices into each axis, first axis outermost.
pub fn grid_points(axes: &[SweepAxis]) -> Vec<Vec<usize>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                (0..axis.values.len()).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// Axis names joined by `;`.
    pub sweep_key: String,
    /// Axis values joined by `;`.
    pub sweep_value: String,
    #[serde(skip)]
    pub point: Vec<usize>,
    pub iters: usize,
    pub status: String,
    pub final_metric: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for r in &self.rows {
            let metric = r.final_metric.map(|m| m.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.sweep_key, r.sweep_value, r.iters, r.status, metric, r.elapsed_s
            );
        }
        out
    }

    /// `axis-name → values` pretty table, for terminal output.
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.sweep_value.len()).max().unwrap_or(0).max(12);
        let mut out = String::new();
        if let Some(first) = self.rows.first() {
            let _ = writeln!(out, "{:<width$}  {:>8}  {:<14}  final_metric", first.sweep_key, "iters", "status");
        }
        for r in &self.rows {
            let metric = r.final_metric.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{:<width$}  {:>8}  {:<14}  {metric}", r.sweep_value, r.iters, r.status);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineVerdict {
    /// The other axes' values, `name=value` joined by `;`.
    pub fixed: String,
    pub iters: Vec<usize>,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendVerdict {
    pub axis: String,
    pub expect: Trend,
    pub allowed_violations: usize,
    pub lines: Vec<LineVerdict>,
    pub pass: bool,
}

/// Counts adjacent-pair violations of `expect` in `iters`.
pub fn trend_violations(iters: &[usize], expect: Trend) -> usize {
    iters
        .windows(2)
        .filter(|w| match expect {
            Trend::Nonincreasing => w[1] > w[0],
            Trend::Decreasing => w[1] >= w[0],
        })
        .count()
}

/// For every axis with an expectation, checks iteration counts along that
/// axis with all other axes held fixed.
pub fn trend_verdicts(axes: &[SweepAxis], table: &SummaryTable) -> Vec<TrendVerdict> {
    axes.iter()
        .enumerate()
        .filter_map(|(a, axis)| axis.expect.map(|e| (a, axis, e)))
        .map(|(a, axis, expect)| {
            // Key: the other axes' indices; value: (index on this axis, row).
            type Line = (Vec<usize>, Vec<(usize, usize)>);
            let mut lines: Vec<Line> = Vec::new();
            for row in &table.rows {
                let mut others = row.point.clone();
                let idx = others.remove(a);
                match lines.iter_mut().find(|(k, _)| *k == others) {
                    Some((_, v)) => v.push((idx, row.iters)),
                    None => lines.push((others, vec![(idx, row.iters)])),
                }
            }
            let lines: Vec<LineVerdict> = lines
                .into_iter()
                .map(|(others, mut v)| {
                    v.sort_by_key(|&(i, _)| i);
                    let iters: Vec<usize> = v.iter().map(|&(_, it)| it).collect();
                    let fixed = axes
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != a)
                        .zip(&others)
                        .map(|((_, ax), &i)| format!("{}={}", ax.param.name(), ax.values[i].label()))
                        .collect::<Vec<_>>()
                        .join(";");
                    LineVerdict {
                        fixed,
                        violations: trend_violations(&iters, expect),
                        iters,
                    }
                })
                .collect();
            let pass = lines.iter().all(|l| l.violations <= axis.allowed_violations);
            TrendVerdict {
                axis: axis.param.name().to_string(),
                expect,
                allowed_violations: axis.allowed_violations,
                lines,
                pass,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{SweepParam, SweepValue};

    fn axis(param: SweepParam, n: usize, expect: Option<Trend>) -> SweepAxis {
        SweepAxis {
            param,
            values: (0..n).map(|i| SweepValue::Number(i as f64)).collect(),
            expect,
            allowed_violations: 0,
        }
    }

    #[test]
    fn cartesian_order() {
        let axes = [axis(SweepParam::Beta, 2, None), axis(SweepParam::Alpha, 3, None)];
        let pts = grid_points(&axes);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0, 0]);
        assert_eq!(pts[2], vec![0, 2]);
        assert_eq!(pts[3], vec![1, 0]);
        assert_eq!(grid_points(&[]), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn violations() {
        assert_eq!(trend_violations(&[5, 4, 4, 3], Trend::Nonincreasing), 0);
        assert_eq!(trend_violations(&[5, 4, 4, 3], Trend::Decreasing), 1);
        assert_eq!(trend_violations(&[1, 2, 3], Trend::Nonincreasing), 2);
    }

    #[test]
    fn verdict_per_line() {
        let axes = [
            axis(SweepParam::Beta, 2, None),
            axis(SweepParam::Alpha, 3, Some(Trend::Nonincreasing)),
        ];
        let iters = [9, 8, 7, 9, 10, 7];
        let rows = grid_points(&axes)
            .into_iter()
            .zip(iters)
            .map(|(point, iters)| SummaryRow {
                sweep_key: "beta;alpha".into(),
                sweep_value: String::new(),
                point,
                iters,
                status: "tolerance_met".into(),
                final_metric: None,
                elapsed_s: 0.0,
            })
            .collect();
        let v = trend_verdicts(&axes, &SummaryTable { rows });
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].lines[0].violations, 0);
        assert_eq!(v[0].lines[1].violations, 1);
        assert_eq!(v[0].lines[1].fixed, "beta=1");
        assert!(!v[0].pass);
    }
}

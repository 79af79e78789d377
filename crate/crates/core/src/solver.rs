//! The double-inertial, relaxed, self-adaptive Tseng iteration.
//!
//! Each iteration forms two extrapolated points from the last two iterates,
//!
//! ```text
//! w_n = x_n + α_n (x_n − x_{n−1})
//! z_n = x_n + β_n (x_n − x_{n−1})
//! y_n = J_{λ_n B}(w_n − λ_n A w_n)
//! x_{n+1} = (1 − θ_n) z_n + θ_n (y_n − λ_n (A y_n − A w_n))
//! ```
//!
//! and updates the step from the observed local Lipschitz ratio,
//! `λ_{n+1} = min{(μ + μ_n)‖w_n − y_n‖ / ‖A w_n − A y_n‖, λ_n + p_n}`.
//! `w_n = y_n` certifies `y_n` as a solution.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Metric, Vector};
use crate::operators::{forward_backward_map, ForwardOperator, OperatorError, Resolvent};
use crate::schedules::ScheduleSet;

/// `‖w_n − y_n‖ ≤ EXACT_STOP_RELATIVE·(1 + ‖w_n‖)` counts as `w_n = y_n`.
pub const EXACT_STOP_RELATIVE: f64 = 1e-13;
/// `‖Aw − Ay‖ ≤ DEGENERATE_RELATIVE·(1 + ‖Aw‖)` counts as `Aw = Ay`.
pub const DEGENERATE_RELATIVE: f64 = 1e-14;
/// Absolute tolerance of the fixed-point check for a registered solution.
pub const KNOWN_SOLUTION_TOL: f64 = 1e-8;
/// Relative slack in the per-iteration descent assertion.
pub const DESCENT_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("iterate became non-finite at n = {n}")]
    Divergence { n: u64, last_row: Option<TraceRow> },
    #[error("descent inequality violated at n = {n}: {lhs} > {rhs}")]
    DescentViolation { n: u64, lhs: f64, rhs: f64 },
    #[error("registered solution is not a fixed point: ‖T(x*) − x*‖ = {residual}")]
    NotASolution { residual: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

impl From<LinalgError> for SolverError {
    fn from(e: LinalgError) -> Self {
        SolverError::Operator(e.into())
    }
}

pub type Result<T, E = SolverError> = std::result::Result<T, E>;

/// `0 ∈ (A + B)x` with `A` given directly and `B` through its resolvent.
#[derive(Debug, Clone)]
pub struct Problem {
    pub forward: ForwardOperator,
    pub backward: Resolvent,
    pub dimension: usize,
    pub metric: Metric,
    known_solution: Option<Vector>,
    initial: (Vector, Vector),
    label: String,
}

impl Problem {
    /// A problem started from `x₀ = x₁ = 0` in the Euclidean geometry.
    pub fn new(label: impl Into<String>, forward: ForwardOperator, backward: Resolvent, dimension: usize) -> Self {
        Problem {
            forward,
            backward,
            dimension,
            metric: Metric::Euclidean,
            known_solution: None,
            initial: (Vector::zeros(dimension), Vector::zeros(dimension)),
            label: label.into(),
        }
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_initial_points(mut self, x0: Vector, x1: Vector) -> Result<Self> {
        for x in [&x0, &x1] {
            if x.dim() != self.dimension {
                return Err(LinalgError::DimensionMismatch {
                    left: self.dimension,
                    right: x.dim(),
                }
                .into());
            }
        }
        self.initial = (x0, x1);
        Ok(self)
    }

    /// Registers `x*`, rejecting it unless `‖T_λ(x*) − x*‖ ≤ 1e-8` at λ = 0.1.
    pub fn with_known_solution(mut self, solution: Vector) -> Result<Self> {
        let residual = self.fixed_point_residual(&solution, 0.1)?;
        if !(residual <= KNOWN_SOLUTION_TOL) {
            return Err(SolverError::NotASolution { residual });
        }
        self.known_solution = Some(solution);
        Ok(self)
    }

    pub fn known_solution(&self) -> Option<&Vector> {
        self.known_solution.as_ref()
    }

    pub fn initial_points(&self) -> (&Vector, &Vector) {
        (&self.initial.0, &self.initial.1)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `‖T_λ(x) − x‖` in the problem metric, with `T_λ = J_{λB}(I − λA)`.
    pub fn fixed_point_residual(&self, x: &Vector, lambda: f64) -> Result<f64> {
        let t = forward_backward_map(&self.forward, &self.backward, x, lambda)?;
        Ok(self.metric.distance(&t, x)?)
    }
}

/// Which quantity `E_n` measures, compared against the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// `‖x_{n+1} − x_n‖`
    #[default]
    StepDiff,
    /// `‖x_{n+1}‖`
    IterateNorm,
    /// `‖w_n − y_n‖`
    Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub schedules: ScheduleSet,
    pub max_iters: u64,
    pub tol: f64,
    #[serde(default)]
    pub stop_rule: StopRule,
    #[serde(default)]
    pub assert_descent: bool,
    #[serde(default = "default_true")]
    pub record_distance: bool,
    /// Wall-clock timestamps make traces non-reproducible, so they are opt-in.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_true() -> bool {
    true
}

impl SolverConfig {
    pub fn new(schedules: ScheduleSet) -> Self {
        SolverConfig {
            schedules,
            max_iters: 10_000,
            tol: 1e-6,
            stop_rule: StopRule::StepDiff,
            assert_descent: false,
            record_distance: true,
            record_timing: false,
        }
    }

    pub fn with_max_iters(mut self, max_iters: u64) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_stop_rule(mut self, rule: StopRule) -> Self {
        self.stop_rule = rule;
        self
    }

    pub fn with_descent_assertions(mut self, on: bool) -> Self {
        self.assert_descent = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.schedules;
        let problems = [
            (self.max_iters < 1, "max_iters must be at least 1"),
            (!(self.tol > 0.0), "tol must be positive"),
            (!(s.lambda1 > 0.0) || !s.lambda1.is_finite(), "lambda1 must be positive"),
            (!(s.mu > 0.0 && s.mu < 1.0), "mu must lie in (0, 1)"),
        ];
        match problems.iter().find(|(bad, _)| *bad) {
            Some((_, msg)) => Err(SolverError::InvalidConfig((*msg).to_string())),
            None => Ok(()),
        }
    }
}

/// `(x_{n−1}, x_n, λ_n, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub x_prev: Vector,
    pub x_curr: Vector,
    pub lambda: f64,
    pub n: u64,
}

impl IterationState {
    pub fn start(x0: Vector, x1: Vector, lambda1: f64) -> Self {
        IterationState {
            x_prev: x0,
            x_curr: x1,
            lambda: lambda1,
            n: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: u64,
    pub lambda: f64,
    pub residual: f64,
    #[serde(rename = "E_n")]
    pub e_n: f64,
    pub dist: Option<f64>,
    pub elapsed_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    ExactSolution,
    ToleranceMet,
    MaxIters,
}

impl Status {
    pub fn converged(self) -> bool {
        !matches!(self, Status::MaxIters)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::ExactSolution => "exact_solution",
            Status::ToleranceMet => "tolerance_met",
            Status::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalCounts {
    pub forward: u64,
    pub resolvent: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
    pub status: Status,
    pub evals: EvalCounts,
    /// Iterations where `‖Aw − Ay‖` was nonzero but below the degeneracy
    /// threshold and the step was grown by `p_n` instead.
    pub degenerate_branch_hits: u64,
    pub descent_checks: u64,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn final_metric(&self) -> Option<f64> {
        self.rows.last().map(|r| r.e_n)
    }

    /// More than 1% of iterations took the degenerate step-size branch.
    pub fn degenerate_branch_flagged(&self) -> bool {
        !self.rows.is_empty() && self.degenerate_branch_hits as f64 > 0.01 * self.rows.len() as f64
    }
}

/// `x_curr + factor·(x_curr − x_prev)`.
pub fn extrapolate(x_curr: &Vector, x_prev: &Vector, factor: f64) -> Result<Vector> {
    Ok(Vector::axpby(1.0 + factor, x_curr, -factor, x_prev)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepBranch {
    /// `λ_{n+1}` from the ratio `(μ + μ_n)‖w − y‖/‖Aw − Ay‖`.
    Ratio,
    /// `λ_{n+1} = λ_n + p_n` because the ratio was not smaller.
    Increment,
    /// `Aw = Ay` (exactly, or within the threshold).
    Degenerate { exact: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeUpdate {
    pub lambda: f64,
    pub branch: StepBranch,
}

/// The self-adaptive step rule, with norms taken in `metric`.
#[allow(clippy::too_many_arguments)]
pub fn step_size_update(
    lambda: f64,
    w: &Vector,
    y: &Vector,
    aw: &Vector,
    ay: &Vector,
    mu: f64,
    mu_n: f64,
    p_n: f64,
    metric: &Metric,
) -> Result<StepSizeUpdate> {
    if ![lambda, mu, mu_n, p_n].iter().all(|v| v.is_finite()) {
        return Err(LinalgError::NonFinite("step_size_update").into());
    }
    let grown = lambda + p_n;
    let force_gap = metric.distance(aw, ay)?;
    if force_gap <= DEGENERATE_RELATIVE * (1.0 + metric.norm(aw)?) {
        return Ok(StepSizeUpdate {
            lambda: grown,
            branch: StepBranch::Degenerate {
                exact: force_gap == 0.0,
            },
        });
    }
    let ratio = (mu + mu_n) * metric.distance(w, y)? / force_gap;
    Ok(if ratio < grown {
        StepSizeUpdate {
            lambda: ratio,
            branch: StepBranch::Ratio,
        }
    } else {
        StepSizeUpdate {
            lambda: grown,
            branch: StepBranch::Increment,
        }
    })
}

/// Everything one iteration computed, for diagnostics and assertions.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDetails {
    pub w: Vector,
    pub z: Vector,
    pub y: Vector,
    pub aw: Vector,
    /// `None` on the exact-solution exit, where `A y_n` is never needed.
    pub ay: Option<Vector>,
    /// `y_n − λ_n(A y_n − A w_n)`.
    pub corrected: Option<Vector>,
    pub step: Option<StepSizeUpdate>,
    pub evals: EvalCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next: IterationState,
    pub row: TraceRow,
    /// `Some(ExactSolution)` when `w_n = y_n`; the answer is then `next.x_curr`.
    pub status: Option<Status>,
    pub details: StepDetails,
}

fn divergence(n: u64) -> impl Fn(SolverError) -> SolverError {
    move |e| match e {
        SolverError::Operator(OperatorError::Linalg(LinalgError::NonFinite(_))) => {
            SolverError::Divergence { n, last_row: None }
        }
        other => other,
    }
}

/// One iteration from `state`. Performs exactly two forward evaluations and
/// one resolvent evaluation, or one and one on the exact-solution exit.
pub fn tseng_step(problem: &Problem, state: &IterationState, sched: &ScheduleSet, rule: StopRule) -> Result<Step> {
    tseng_step_inner(problem, state, sched, rule).map_err(divergence(state.n))
}

fn tseng_step_inner(problem: &Problem, state: &IterationState, sched: &ScheduleSet, rule: StopRule) -> Result<Step> {
    let n = state.n;
    let metric = &problem.metric;
    let lambda = state.lambda;
    let w = extrapolate(&state.x_curr, &state.x_prev, sched.alpha.eval(n))?;
    let z = extrapolate(&state.x_curr, &state.x_prev, sched.beta.eval(n))?;
    let aw = problem.forward.eval(&w)?;
    let y = problem
        .backward
        .eval(&Vector::axpby(1.0, &w, -lambda, &aw)?, lambda)?;
    let mut evals = EvalCounts {
        forward: 1,
        resolvent: 1,
    };
    let residual = metric.distance(&w, &y)?;

    if residual <= EXACT_STOP_RELATIVE * (1.0 + metric.norm(&w)?) {
        let row = make_row(problem, rule, n, lambda, residual, &state.x_curr, &y)?;
        let next = IterationState {
            x_prev: state.x_curr.clone(),
            x_curr: y.clone(),
            lambda,
            n: n + 1,
        };
        return Ok(Step {
            next,
            row,
            status: Some(Status::ExactSolution),
            details: StepDetails {
                w,
                z,
                y,
                aw,
                ay: None,
                corrected: None,
                step: None,
                evals,
            },
        });
    }

    let ay = problem.forward.eval(&y)?;
    evals.forward += 1;
    let step = step_size_update(
        lambda,
        &w,
        &y,
        &aw,
        &ay,
        sched.mu,
        sched.mu_seq.eval(n),
        sched.p_seq.eval(n),
        metric,
    )?;
    let theta = sched.theta.eval(n);
    let corrected = Vector::axpby(1.0, &y, -lambda, &ay.sub(&aw)?)?;
    let x_next = Vector::axpby(1.0 - theta, &z, theta, &corrected)?;
    if !step.lambda.is_finite() {
        return Err(LinalgError::NonFinite("step size").into());
    }
    let row = make_row(problem, rule, n, lambda, residual, &state.x_curr, &x_next)?;
    Ok(Step {
        next: IterationState {
            x_prev: state.x_curr.clone(),
            x_curr: x_next,
            lambda: step.lambda,
            n: n + 1,
        },
        row,
        status: None,
        details: StepDetails {
            w,
            z,
            y,
            aw,
            ay: Some(ay),
            corrected: Some(corrected),
            step: Some(step),
            evals,
        },
    })
}

fn make_row(
    problem: &Problem,
    rule: StopRule,
    n: u64,
    lambda: f64,
    residual: f64,
    x_curr: &Vector,
    x_next: &Vector,
) -> Result<TraceRow> {
    let metric = &problem.metric;
    let e_n = match rule {
        StopRule::StepDiff => metric.distance(x_next, x_curr)?,
        StopRule::IterateNorm => metric.norm(x_next)?,
        StopRule::Residual => residual,
    };
    let dist = match problem.known_solution() {
        Some(star) => Some(metric.distance(x_next, star)?),
        None => None,
    };
    Ok(TraceRow {
        n,
        lambda,
        residual,
        e_n,
        dist,
        elapsed_ms: None,
    })
}

/// The descent inequality for a solution `p`:
/// `‖y − λ(Ay − Aw) − p‖² ≤ ‖w − p‖² − (1 − ((μ+μ_n)λ_n/λ_{n+1})²)‖w − y‖²`,
/// asserted only where the coefficient is nonnegative. Returns whether it
/// was checked.
fn check_descent(problem: &Problem, sched: &ScheduleSet, state: &IterationState, step: &Step, p: &Vector) -> Result<bool> {
    let (Some(corrected), Some(update)) = (&step.details.corrected, &step.details.step) else {
        return Ok(false);
    };
    let metric = &problem.metric;
    let ratio = (sched.mu + sched.mu_seq.eval(state.n)) * state.lambda / update.lambda;
    let coefficient = 1.0 - ratio * ratio;
    if coefficient < 0.0 {
        return Ok(false);
    }
    let w_p = metric.distance(&step.details.w, p)?.powi(2);
    let lhs = metric.distance(corrected, p)?.powi(2);
    let rhs = w_p - coefficient * step.row.residual.powi(2);
    if lhs > rhs + DESCENT_SLACK * (1.0 + w_p) {
        return Err(SolverError::DescentViolation { n: state.n, lhs, rhs });
    }
    Ok(true)
}

/// Runs the iteration from the problem's initial points.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<(Vector, SolverTrace)> {
    let (x0, x1) = problem.initial_points();
    solve_from(problem, config, x0.clone(), x1.clone())
}

/// Runs the iteration from `x₀, x₁` until the stop metric reaches `tol`,
/// `w_n = y_n`, or `max_iters` iterations have been taken.
pub fn solve_from(problem: &Problem, config: &SolverConfig, x0: Vector, x1: Vector) -> Result<(Vector, SolverTrace)> {
    config.validate()?;
    let sched = &config.schedules;
    let started = config.record_timing.then(Instant::now);
    let descent_target = problem.known_solution().filter(|_| config.assert_descent);

    let mut state = IterationState::start(x0, x1, sched.lambda1);
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut evals = EvalCounts::default();
    let mut degenerate_branch_hits = 0;
    let mut descent_checks = 0;
    let mut status = Status::MaxIters;

    while (rows.len() as u64) < config.max_iters {
        let step = tseng_step(problem, &state, sched, config.stop_rule).map_err(|e| match e {
            SolverError::Divergence { n, .. } => SolverError::Divergence {
                n,
                last_row: rows.last().cloned(),
            },
            other => other,
        })?;
        if let Some(p) = descent_target {
            if check_descent(problem, sched, &state, &step, p)? {
                descent_checks += 1;
            }
        }
        evals.forward += step.details.evals.forward;
        evals.resolvent += step.details.evals.resolvent;
        if matches!(
            step.details.step,
            Some(StepSizeUpdate {
                branch: StepBranch::Degenerate { exact: false },
                ..
            })
        ) {
            degenerate_branch_hits += 1;
        }

        let mut row = step.row;
        if !config.record_distance {
            row.dist = None;
        }
        row.elapsed_ms = started.map(|t| t.elapsed().as_secs_f64() * 1e3);
        let metric = row.e_n;
        rows.push(row);
        state = step.next;

        if let Some(s) = step.status {
            status = s;
            break;
        }
        if metric <= config.tol {
            status = Status::ToleranceMet;
            break;
        }
    }

    Ok((
        state.x_curr,
        SolverTrace {
            rows,
            status,
            evals,
            degenerate_branch_hits,
            descent_checks,
        },
    ))
}

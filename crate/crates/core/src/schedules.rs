//! Parameter sequences for the iteration and their admissibility checks.
//!
//! Sequences come from a small closed family (constants, `a + b/(c+n)`,
//! `1 − 10⁻ⁿ`, `s/n²`) so that limits and series sums are known exactly and
//! configs stay portable. Validation evaluates every index up to a horizon
//! and leans on the closed forms for the tail (limits, sums). It never
//! blocks a solve; it reports.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("unknown schedule preset {0:?}")]
    UnknownPreset(String),
    #[error("ε must exceed 1, got {0}")]
    InvalidEpsilon(f64),
}

/// A real sequence indexed from `n = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sequence {
    Const(f64),
    /// `a + b/(c + n)`
    Shifted { a: f64, b: f64, c: f64 },
    /// `1 − 10⁻ⁿ`
    OneMinusPow10,
    /// `s/n²`
    InvSquare(f64),
}

impl Sequence {
    pub fn eval(&self, n: u64) -> f64 {
        let nf = n as f64;
        match *self {
            Sequence::Const(c) => c,
            Sequence::Shifted { a, b, c } => a + b / (c + nf),
            Sequence::OneMinusPow10 => 1.0 - 10f64.powi(-(n.min(i32::MAX as u64) as i32)),
            Sequence::InvSquare(s) => s / (nf * nf),
        }
    }

    pub fn limit(&self) -> f64 {
        match *self {
            Sequence::Const(c) => c,
            Sequence::Shifted { a, .. } => a,
            Sequence::OneMinusPow10 => 1.0,
            Sequence::InvSquare(_) => 0.0,
        }
    }

    /// `Σ_{n≥1}` in closed form; `+∞` for divergent series.
    pub fn series_sum(&self) -> f64 {
        match *self {
            Sequence::Const(0.0) => 0.0,
            Sequence::Shifted { a, b, .. } if a == 0.0 && b == 0.0 => 0.0,
            Sequence::InvSquare(s) => s * PI * PI / 6.0,
            _ => f64::INFINITY,
        }
    }

    /// `Σ_{n < k ≤ ∞}`, the tail after the first `n` terms.
    pub fn tail_sum(&self, n: u64) -> f64 {
        match *self {
            Sequence::InvSquare(s) => {
                // Σ_{k>n} 1/k² via Euler–Maclaurin.
                let x = n as f64;
                s * (1.0 / x - 1.0 / (2.0 * x * x) + 1.0 / (6.0 * x * x * x))
            }
            other => {
                if other.series_sum() == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        matches!(*self, Sequence::Const(c) if c == 0.0)
            || matches!(*self, Sequence::Shifted { a, b, .. } if a == 0.0 && b == 0.0)
            || matches!(*self, Sequence::InvSquare(s) if s == 0.0)
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Sequence::Const(c) => write!(f, "{c}"),
            Sequence::Shifted { a, b, c } if b < 0.0 => write!(f, "{a} - {}/({c}+n)", -b),
            Sequence::Shifted { a, b, c } => write!(f, "{a} + {b}/({c}+n)"),
            Sequence::OneMinusPow10 => write!(f, "1 - 10^-n"),
            Sequence::InvSquare(s) => write!(f, "{s}/n^2"),
        }
    }
}

/// Inertial factors `α_n` (for `w_n`) and `β_n` (for `z_n`), relaxation `θ_n`,
/// step-size relaxation `μ_n`, step increments `p_n`, plus the scalars `μ`,
/// `λ₁`, `ε` and the relaxation floor `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSet {
    pub alpha: Sequence,
    pub beta: Sequence,
    pub theta: Sequence,
    pub mu_seq: Sequence,
    pub p_seq: Sequence,
    pub mu: f64,
    pub lambda1: f64,
    pub epsilon: f64,
    pub theta_floor: f64,
}

impl ScheduleSet {
    /// `a_n = (1 − θ_n)β_n + θ_n α_n`.
    pub fn combined_inertia(&self, n: u64) -> f64 {
        let theta = self.theta.eval(n);
        (1.0 - theta) * self.beta.eval(n) + theta * self.alpha.eval(n)
    }

    /// `Σ p_n`, the total step-size growth budget.
    pub fn p_total(&self) -> f64 {
        self.p_seq.series_sum()
    }
}

pub const PRESETS: [&str; 4] = ["tseng_plain", "chc_relaxed", "akh", "paper_default"];

/// Named parameter reductions of the iteration.
///
/// * `tseng_plain`: no inertia, no relaxation, fixed `μ`; the plain
///   forward-backward-forward method with self-adaptive steps.
/// * `chc_relaxed`: single inertia with constant relaxation.
/// * `akh`: single inertia with `θ_n = α_n`.
/// * `paper_default`: `α_n = 1 − 10⁻ⁿ`, `β_n = 0.1 − 1/(1000+n)`,
///   `θ_n = 0.45 − 1/(1000+n)`, `μ_n = p_n = 1/n²`, `μ = 0.9`, `λ₁ = 0.1`.
pub fn preset(name: &str) -> Result<ScheduleSet, ScheduleError> {
    let zero = Sequence::Const(0.0);
    let set = match name {
        "tseng_plain" => ScheduleSet {
            alpha: zero,
            beta: zero,
            theta: Sequence::Const(1.0),
            mu_seq: zero,
            p_seq: zero,
            mu: 0.9,
            lambda1: 0.1,
            epsilon: 0.0,
            theta_floor: 0.5,
        },
        "chc_relaxed" => ScheduleSet {
            alpha: Sequence::Const(0.3),
            beta: zero,
            theta: Sequence::Const(0.4),
            mu_seq: zero,
            p_seq: zero,
            mu: 0.9,
            lambda1: 1.0,
            epsilon: 0.0,
            theta_floor: 0.2,
        },
        "akh" => ScheduleSet {
            alpha: Sequence::Const(0.3),
            beta: zero,
            theta: Sequence::Const(0.3),
            mu_seq: zero,
            p_seq: zero,
            mu: 0.3,
            lambda1: 1.0,
            epsilon: 0.0,
            theta_floor: 0.1,
        },
        "paper_default" => ScheduleSet {
            alpha: Sequence::OneMinusPow10,
            beta: Sequence::Shifted {
                a: 0.1,
                b: -1.0,
                c: 1000.0,
            },
            theta: Sequence::Shifted {
                a: 0.45,
                b: -1.0,
                c: 1000.0,
            },
            mu_seq: Sequence::InvSquare(1.0),
            p_seq: Sequence::InvSquare(1.0),
            mu: 0.9,
            lambda1: 0.1,
            epsilon: 1.2,
            theta_floor: 0.44,
        },
        other => return Err(ScheduleError::UnknownPreset(other.to_string())),
    };
    Ok(set)
}

/// Supremum allowed for `β_n`: `(3 + 2ε − √(8ε + 17))/(2ε)`, for `ε > 1`.
pub fn beta_bound(epsilon: f64) -> Result<f64, ScheduleError> {
    if !(epsilon > 1.0) || !epsilon.is_finite() {
        return Err(ScheduleError::InvalidEpsilon(epsilon));
    }
    Ok((3.0 + 2.0 * epsilon - (8.0 * epsilon + 17.0).sqrt()) / (2.0 * epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: String,
    pub pass: bool,
    pub first_violation_index: Option<u64>,
    pub detail: String,
}

impl ClauseResult {
    fn new(clause: &str, first_violation_index: Option<u64>, ok_extra: bool, detail: String) -> Self {
        ClauseResult {
            clause: clause.to_string(),
            pass: first_violation_index.is_none() && ok_extra,
            first_violation_index,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub clauses: Vec<ClauseResult>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn clause(&self, name: &str) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| c.clause == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ClauseResult> {
        self.clauses.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            let verdict = if c.pass { "pass" } else { "FAIL" };
            write!(f, "{:<10} {verdict}", c.clause)?;
            if let Some(n) = c.first_violation_index {
                write!(f, " (first violation at n = {n})")?;
            }
            writeln!(f, ": {}", c.detail)?;
        }
        Ok(())
    }
}

/// Absolute slack for the monotonicity of `a_n`, which is a combination of
/// rounded products.
const COMBINED_SLACK: f64 = 1e-15;

/// Checks the admissibility conditions on `s` for `n = 1..=horizon`.
///
/// Clauses: `scalars` (μ, λ₁, θ, ε), `(i)` `0 ≤ α_n ≤ 1`, `(ii)` `β_n`
/// nondecreasing below `beta_bound(ε)`, `(iii)` `θ < θ_n ≤ θ_{n+1} ≤ 1/(1+ε)`,
/// `(iv)` `a_n` nondecreasing, `(v)` `p_n, μ_n ≥ 0`, `Σp_n < ∞`, `μ_n → 0`.
/// When `β_n ≡ 0` the requirement `ε > 1` relaxes to `ε ≥ 0`.
pub fn validate_c3(s: &ScheduleSet, horizon: u64) -> ValidationReport {
    let horizon = horizon.max(2);
    let beta_zero = s.beta.is_identically_zero();
    let mut clauses = Vec::with_capacity(6);

    let eps_ok = if beta_zero { s.epsilon >= 0.0 } else { s.epsilon > 1.0 };
    let scalars_ok = s.mu > 0.0 && s.mu < 1.0 && s.lambda1 > 0.0 && s.theta_floor > 0.0 && eps_ok;
    clauses.push(ClauseResult::new(
        "scalars",
        None,
        scalars_ok,
        format!(
            "mu = {} in (0,1), lambda1 = {} > 0, theta = {} > 0, epsilon = {} {}",
            s.mu,
            s.lambda1,
            s.theta_floor,
            s.epsilon,
            if beta_zero { ">= 0 (beta == 0)" } else { "> 1" }
        ),
    ));

    let first = |bad: &dyn Fn(u64) -> bool| (1..=horizon).find(|&n| bad(n));

    // (i)
    let v = first(&|n| {
        let a = s.alpha.eval(n);
        !(0.0..=1.0).contains(&a)
    });
    clauses.push(ClauseResult::new("(i)", v, true, format!("0 <= alpha_n = {} <= 1", s.alpha)));

    // (ii)
    let v = first(&|n| {
        let b = s.beta.eval(n);
        b < 0.0 || b > s.beta.eval(n + 1)
    });
    let beta_sup = (1..=horizon)
        .map(|n| s.beta.eval(n))
        .fold(s.beta.limit(), f64::max);
    let (bound_ok, detail) = if beta_zero {
        (true, "beta_n == 0".to_string())
    } else {
        match beta_bound(s.epsilon) {
            Ok(bound) => (
                beta_sup < bound,
                format!("beta_n = {} nondecreasing, sup {beta_sup} < bound(eps) = {bound}", s.beta),
            ),
            Err(e) => (false, e.to_string()),
        }
    };
    clauses.push(ClauseResult::new("(ii)", v, bound_ok, detail));

    // (iii)
    let upper = 1.0 / (1.0 + s.epsilon);
    let v = first(&|n| {
        let t = s.theta.eval(n);
        t <= s.theta_floor || t > s.theta.eval(n + 1) || t > upper
    });
    let limit_ok = s.theta.limit() <= upper;
    clauses.push(ClauseResult::new(
        "(iii)",
        v,
        limit_ok,
        format!(
            "{} < theta_n = {} nondecreasing <= 1/(1+eps) = {upper}",
            s.theta_floor, s.theta
        ),
    ));

    // (iv)
    let v = first(&|n| s.combined_inertia(n) > s.combined_inertia(n + 1) + COMBINED_SLACK);
    clauses.push(ClauseResult::new(
        "(iv)",
        v,
        true,
        "a_n = (1-theta_n) beta_n + theta_n alpha_n nondecreasing".to_string(),
    ));

    // (v)
    let v = first(&|n| s.p_seq.eval(n) < 0.0 || s.mu_seq.eval(n) < 0.0);
    let declared = s.p_seq.series_sum();
    let partial: f64 = (1..=horizon).map(|n| s.p_seq.eval(n)).sum();
    let sum_ok = declared.is_finite() && partial <= declared + 1e-9;
    let mu_ok = s.mu_seq.limit() == 0.0;
    clauses.push(ClauseResult::new(
        "(v)",
        v,
        sum_ok && mu_ok,
        format!(
            "sum p_n = {declared} (partial to {horizon}: {partial}), lim mu_n = {}",
            s.mu_seq.limit()
        ),
    ));

    ValidationReport { clauses }
}

/// Constant-parameter data for the linear-rate regime: `A` is `L`-Lipschitz
/// and `r`-strongly monotone, with `α_n ≡ α`, `β_n ≡ β`, `θ_n ≡ θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongParams {
    pub lipschitz: f64,
    pub modulus: f64,
    pub mu: f64,
    pub lambda1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

impl StrongParams {
    /// `λ̂ = min{μ/L, λ₁}`.
    pub fn lambda_hat(&self) -> f64 {
        (self.mu / self.lipschitz).min(self.lambda1)
    }

    /// `τ = 1 − ½ min{1 − μ, 2λ̂r}`.
    pub fn tau(&self) -> f64 {
        1.0 - 0.5 * (1.0 - self.mu).min(2.0 * self.lambda_hat() * self.modulus)
    }

    /// The constant-parameter schedule these values describe.
    pub fn schedule(&self) -> ScheduleSet {
        ScheduleSet {
            alpha: Sequence::Const(self.alpha),
            beta: Sequence::Const(self.beta),
            theta: Sequence::Const(self.theta),
            mu_seq: Sequence::Const(0.0),
            p_seq: Sequence::Const(0.0),
            mu: self.mu,
            lambda1: self.lambda1,
            epsilon: 0.0,
            theta_floor: 0.5 * self.theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongReport {
    pub params: StrongParams,
    pub lambda_hat: f64,
    pub tau: f64,
    pub beta_limit: f64,
    pub alpha_limit: f64,
    pub theta_lower: f64,
    pub theta_upper: f64,
    /// `(lower, upper]`, when nonempty.
    pub theta_interval: Option<(f64, f64)>,
    /// `q = (1+β) + θ(τ(1+α) − (1+β))`.
    pub contraction: f64,
    pub clauses: Vec<ClauseResult>,
}

impl StrongReport {
    pub fn pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }
}

impl fmt::Display for StrongReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "lambda_hat = {}, tau = {}, q = {}",
            self.lambda_hat, self.tau, self.contraction
        )?;
        match self.theta_interval {
            Some((lo, hi)) => writeln!(f, "admissible theta in ({lo}, {hi}]")?,
            None => writeln!(
                f,
                "admissible theta interval empty: lower {} >= upper {}",
                self.theta_lower, self.theta_upper
            )?,
        }
        ValidationReport {
            clauses: self.clauses.clone(),
        }
        .fmt(f)
    }
}

/// Evaluates the linear-rate conditions (c₁)–(c₃) for `p`, reporting the
/// computed bounds whether or not they are met.
pub fn validate_strong(p: &StrongParams) -> StrongReport {
    let pre_ok = p.lipschitz > 0.0 && p.modulus > 0.0 && p.mu > 0.0 && p.mu < 1.0 && p.lambda1 > 0.0;
    let lambda_hat = p.lambda_hat();
    let tau = p.tau();
    let beta_limit = 0.5 * (1.0 / tau - 1.0);
    let alpha_limit = (1.0 - tau) / tau;

    let (alpha, beta, theta) = (p.alpha, p.beta, p.theta);
    let denom = 1.0 + beta - tau * (1.0 + alpha);
    let theta_lower = if denom > 0.0 {
        ((1.0 - beta) / (1.0 + alpha - beta)).max(beta / denom)
    } else {
        f64::INFINITY
    };
    let k = 1.0 / tau - 1.0 - 2.0 * beta;
    let theta_upper = if k > 0.0 {
        let disc = (1.0 + beta).powi(2) - 4.0 * k * (beta - 1.0);
        (-1.0 - beta + disc.sqrt()) / (2.0 * k)
    } else {
        f64::NAN
    };
    let theta_interval = (theta_lower < theta_upper && theta_lower.is_finite())
        .then(|| (theta_lower.max(0.0), theta_upper.min(1.0)));
    let contraction = (1.0 + beta) + theta * (tau * (1.0 + alpha) - (1.0 + beta));

    let clauses = vec![
        ClauseResult::new(
            "pre",
            None,
            pre_ok,
            format!("L = {} > 0, r = {} > 0, mu = {} in (0,1)", p.lipschitz, p.modulus, p.mu),
        ),
        ClauseResult::new(
            "tau",
            None,
            tau > 0.5 && tau < 1.0,
            format!("tau = {tau} in (1/2, 1)"),
        ),
        ClauseResult::new(
            "(c1)",
            None,
            (0.0..beta_limit).contains(&beta),
            format!("0 <= beta = {beta} < (1/tau - 1)/2 = {beta_limit}"),
        ),
        ClauseResult::new(
            "(c2)",
            None,
            (0.0..alpha_limit).contains(&alpha),
            format!("0 <= alpha = {alpha} < (1 - tau)/tau = {alpha_limit}"),
        ),
        ClauseResult::new(
            "(c3)",
            None,
            theta_interval.is_some_and(|(lo, hi)| theta > lo && theta <= hi),
            format!("{theta_lower} < theta = {theta} <= {theta_upper}"),
        ),
    ];

    StrongReport {
        params: *p,
        lambda_hat,
        tau,
        beta_limit,
        alpha_limit,
        theta_lower,
        theta_upper,
        theta_interval,
        contraction,
        clauses,
    }
}

/// Value lists for a coarse search over the linear-rate conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongGrid {
    pub mu: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Default for StrongGrid {
    fn default() -> Self {
        let steps = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        StrongGrid {
            mu: steps(0.1, 0.9, 9),
            lambda1: vec![0.05, 0.1, 0.5, 1.0],
            alpha: steps(0.0, 0.5, 26),
            beta: steps(0.0, 0.2, 21),
            theta: steps(0.05, 1.0, 96),
        }
    }
}

/// Every grid point satisfying (c₁)–(c₃) for an operator with constants
/// `lipschitz` and `modulus`, sorted by contraction factor.
pub fn search_strong(lipschitz: f64, modulus: f64, grid: &StrongGrid) -> Vec<StrongReport> {
    let mut found = Vec::new();
    for &mu in &grid.mu {
        for &lambda1 in &grid.lambda1 {
            for &alpha in &grid.alpha {
                for &beta in &grid.beta {
                    for &theta in &grid.theta {
                        let report = validate_strong(&StrongParams {
                            lipschitz,
                            modulus,
                            mu,
                            lambda1,
                            alpha,
                            beta,
                            theta,
                        });
                        if report.pass() {
                            found.push(report);
                        }
                    }
                }
            }
        }
    }
    found.sort_by(|a, b| a.contraction.total_cmp(&b.contraction));
    found
}

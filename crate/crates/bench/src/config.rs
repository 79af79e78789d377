//! Versioned JSON experiment configuration.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "seed": 7,
//!   "problem": { "family": "affine_vi", "dim": 50 },
//!   "schedules": { "preset": "paper_default", "alpha": { "const": 1.0 } },
//!   "solver": { "max_iters": 100000, "tol": 1e-3, "stop_rule": "iterate_norm" },
//!   "sweep": [ { "param": "theta", "values": [0.05, 0.1] } ]
//! }
//! ```

use std::fs;
use std::path::Path;

use inertial_tseng::linalg::{RngStream, Vector};
use inertial_tseng::problems::{self, LassoSpec, QMode, DEFAULT_REG_SCALE, L2_DEFAULT_GRID};
use inertial_tseng::schedules::{self, ScheduleSet, Sequence, StrongParams};
use inertial_tseng::solver::{Problem, SolverConfig, StopRule};
use serde::{Deserialize, Serialize};

use crate::BenchError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSpec,
    pub schedules: SchedulesSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
    /// Constants for the linear-rate conditions, reported by `validate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong: Option<StrongParams>,
    /// Horizon for the dense check of the schedule conditions.
    #[serde(default = "default_horizon")]
    pub validate_horizon: u64,
    #[serde(default)]
    pub outputs: OutputSpec,
}

fn default_horizon() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Lasso {
        sparsity: usize,
        measurements: usize,
        signal_len: usize,
        noise_var: f64,
        #[serde(default = "default_reg_scale")]
        reg_scale: f64,
        #[serde(default)]
        reg: Option<f64>,
    },
    AffineVi {
        dim: usize,
        /// Omitted means `q = 0`.
        #[serde(default)]
        q: Option<Vec<f64>>,
    },
    L2Vi {
        #[serde(default = "default_grid")]
        grid: usize,
        case: u8,
    },
    OracleStrong {
        dim: usize,
        rho: f64,
    },
    OrthantOracle {
        q: Vec<f64>,
    },
}

fn default_reg_scale() -> f64 {
    DEFAULT_REG_SCALE
}

fn default_grid() -> usize {
    L2_DEFAULT_GRID
}

/// A generated problem and, when the generator has one, its JSON record.
pub struct BuiltProblem {
    pub problem: Problem,
    pub instance: Option<serde_json::Value>,
}

impl ProblemSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ProblemSpec::Lasso { .. } => "lasso",
            ProblemSpec::AffineVi { .. } => "affine_vi",
            ProblemSpec::L2Vi { .. } => "l2_vi",
            ProblemSpec::OracleStrong { .. } => "oracle_strong",
            ProblemSpec::OrthantOracle { .. } => "orthant_oracle",
        }
    }

    pub fn build(&self, seed: u64) -> Result<BuiltProblem, BenchError> {
        let mut rng = RngStream::new(seed);
        let record = |v: Result<serde_json::Value, serde_json::Error>| v.map_err(|e| BenchError::Config(e.to_string()));
        Ok(match self {
            ProblemSpec::Lasso {
                sparsity,
                measurements,
                signal_len,
                noise_var,
                reg_scale,
                reg,
            } => {
                let spec = LassoSpec {
                    reg_scale: *reg_scale,
                    reg: *reg,
                    ..LassoSpec::new(*sparsity, *measurements, *signal_len, *noise_var)
                };
                let (inst, problem) = problems::gen_lasso_with(&mut rng, &spec)?;
                BuiltProblem {
                    problem,
                    instance: Some(record(serde_json::to_value(&inst))?),
                }
            }
            ProblemSpec::AffineVi { dim, q } => {
                let mode = match q {
                    None => QMode::Zero,
                    Some(q) => QMode::Custom(Vector::new(q.clone())?),
                };
                let (inst, problem) = problems::gen_affine_vi(&mut rng, *dim, mode)?;
                BuiltProblem {
                    problem,
                    instance: Some(record(serde_json::to_value(&inst))?),
                }
            }
            ProblemSpec::L2Vi { grid, case } => {
                let (inst, problem) = problems::gen_l2_vi(*grid, *case)?;
                BuiltProblem {
                    problem,
                    instance: Some(record(serde_json::to_value(&inst))?),
                }
            }
            ProblemSpec::OracleStrong { dim, rho } => BuiltProblem {
                problem: problems::gen_oracle_strong(&mut rng, *dim, *rho)?,
                instance: None,
            },
            ProblemSpec::OrthantOracle { q } => BuiltProblem {
                problem: problems::oracle_orthant_vi(Vector::new(q.clone())?)?,
                instance: None,
            },
        })
    }
}

/// A preset with optional per-field overrides, or a fully explicit set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_seq: Option<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_seq: Option<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_floor: Option<f64>,
}

impl SchedulesSpec {
    pub fn resolve(&self) -> Result<ScheduleSet, BenchError> {
        let missing = |name: &str| BenchError::Config(format!("schedules.{name} is required without a preset"));
        let base = match &self.preset {
            Some(name) => Some(schedules::preset(name).map_err(|e| BenchError::Config(e.to_string()))?),
            None => None,
        };
        macro_rules! pick {
            ($field:ident) => {
                match (self.$field, &base) {
                    (Some(v), _) => v,
                    (None, Some(b)) => b.$field,
                    (None, None) => return Err(missing(stringify!($field))),
                }
            };
        }
        Ok(ScheduleSet {
            alpha: pick!(alpha),
            beta: pick!(beta),
            theta: pick!(theta),
            mu_seq: pick!(mu_seq),
            p_seq: pick!(p_seq),
            mu: pick!(mu),
            lambda1: pick!(lambda1),
            epsilon: pick!(epsilon),
            theta_floor: pick!(theta_floor),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub stop_rule: StopRule,
    #[serde(default)]
    pub assert_descent: bool,
    #[serde(default)]
    pub record_timing: bool,
}

fn default_max_iters() -> u64 {
    10_000
}

fn default_tol() -> f64 {
    1e-6
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            max_iters: default_max_iters(),
            tol: default_tol(),
            stop_rule: StopRule::default(),
            assert_descent: false,
            record_timing: false,
        }
    }
}

/// Sweepable schedule fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha,
    Beta,
    Theta,
    MuSeq,
    PSeq,
    Mu,
    Lambda1,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Theta => "theta",
            SweepParam::MuSeq => "mu_seq",
            SweepParam::PSeq => "p_seq",
            SweepParam::Mu => "mu",
            SweepParam::Lambda1 => "lambda1",
        }
    }

    fn is_scalar(self) -> bool {
        matches!(self, SweepParam::Mu | SweepParam::Lambda1)
    }
}

/// A number (a constant sequence for sequence fields) or a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Sequence(Sequence),
}

impl SweepValue {
    fn as_sequence(self) -> Sequence {
        match self {
            SweepValue::Number(v) => Sequence::Const(v),
            SweepValue::Sequence(s) => s,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SweepValue::Number(v) => v.to_string(),
            SweepValue::Sequence(s) => s.to_string(),
        }
    }
}

/// Expected direction of iteration counts along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Nonincreasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<SweepValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Trend>,
    /// Adjacent-pair violations tolerated per line of the grid.
    #[serde(default)]
    pub allowed_violations: usize,
}

impl SweepAxis {
    pub fn apply(&self, value: SweepValue, s: &mut ScheduleSet) -> Result<(), BenchError> {
        if self.param.is_scalar() {
            let SweepValue::Number(v) = value else {
                return Err(BenchError::Config(format!("sweep over {} needs numbers", self.param.name())));
            };
            match self.param {
                SweepParam::Mu => s.mu = v,
                _ => s.lambda1 = v,
            }
            return Ok(());
        }
        let seq = value.as_sequence();
        match self.param {
            SweepParam::Alpha => s.alpha = seq,
            SweepParam::Beta => s.beta = seq,
            SweepParam::Theta => s.theta = seq,
            SweepParam::MuSeq => s.mu_seq = seq,
            _ => s.p_seq = seq,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default = "default_validation")]
    pub validation: String,
    #[serde(default = "default_sweep_summary")]
    pub sweep_summary: String,
    /// Unset means no instance file (LASSO designs are large).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default)]
    pub jsonl: bool,
}

fn default_trace() -> String {
    "trace.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}
fn default_validation() -> String {
    "validation.txt".into()
}
fn default_sweep_summary() -> String {
    "summary.csv".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            trace: default_trace(),
            summary: default_summary(),
            validation: default_validation(),
            sweep_summary: default_sweep_summary(),
            instance: None,
            jsonl: false,
        }
    }
}

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_iters: Option<u64>,
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(n) = o.max_iters {
            self.solver.max_iters = n;
        }
        if let Some(t) = o.tol {
            self.solver.tol = t;
        }
    }

    fn check(&self) -> Result<(), BenchError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(BenchError::Config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        self.schedules.resolve()?;
        if let Some(axis) = self.sweep.iter().find(|a| a.values.is_empty()) {
            return Err(BenchError::Config(format!("sweep over {} has no values", axis.param.name())));
        }
        Ok(())
    }

    pub fn solver_config(&self, schedules: ScheduleSet) -> Result<SolverConfig, BenchError> {
        let cfg = SolverConfig {
            max_iters: self.solver.max_iters,
            tol: self.solver.tol,
            stop_rule: self.solver.stop_rule,
            assert_descent: self.solver.assert_descent,
            record_distance: true,
            record_timing: self.solver.record_timing,
            schedules,
        };
        cfg.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

//! Experiment runner for `inertial_tseng`: single solves, parameter sweeps,
//! schedule validation and rate certificates, all driven by JSON configs.
//!
//! Exit codes: [`exit::OK`] on success, [`exit::FAILED`] when a run does not
//! converge or a check fails, [`exit::CONFIG`] for unreadable configs or
//! traces, [`exit::DIVERGENCE`] when an iterate becomes non-finite and
//! [`exit::IO`] for file-system errors.

use std::path::Path;

use inertial_tseng::linalg::LinalgError;
use inertial_tseng::problems::ProblemError;
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod sweep;

pub use commands::{cmd_certify, cmd_solve, cmd_sweep, cmd_validate, CertifyKind, Report};
pub use config::{ExperimentConfig, Overrides};

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
    pub const IO: i32 = 4;
}

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TSENG_BENCH_OUT";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("diverged: {0}")]
    Divergence(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

impl From<LinalgError> for BenchError {
    fn from(e: LinalgError) -> Self {
        BenchError::Config(e.to_string())
    }
}

impl BenchError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        BenchError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Trace(_) | BenchError::Problem(_) => exit::CONFIG,
            BenchError::Io { .. } => exit::IO,
            BenchError::Divergence(_) => exit::DIVERGENCE,
        }
    }
}

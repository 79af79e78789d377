//! A relaxed, doubly inertial forward–backward–forward (Tseng) splitting
//! method with self-adaptive step sizes for the inclusion `0 ∈ (A + B)x`,
//! where `A` is monotone and Lipschitz and `B` is maximal monotone.
//!
//! Each iteration forms two extrapolations of the last two iterates,
//!
//! ```text
//! w_n = x_n + α_n (x_n − x_{n−1}),    z_n = x_n + β_n (x_n − x_{n−1}),
//! y_n = J_{λ_n B}(w_n − λ_n A w_n),
//! x_{n+1} = (1 − θ_n) z_n + θ_n (y_n − λ_n (A y_n − A w_n)),
//! ```
//!
//! and adapts the step without knowing the Lipschitz constant of `A`.
//!
//! ```
//! use inertial_tseng::{linalg::Vector, problems::oracle_orthant_vi, schedules, solver};
//!
//! let q = Vector::new(vec![-1.0, 2.0, -0.5]).unwrap();
//! let problem = oracle_orthant_vi(q).unwrap();
//! let config = solver::SolverConfig::new(schedules::preset("paper_default").unwrap())
//!     .with_tol(1e-10)
//!     .with_max_iters(5000);
//! let (x, trace) = solver::solve(&problem, &config).unwrap();
//! assert!(trace.status.converged());
//! assert!((x.as_slice()[0] - 1.0).abs() < 1e-8);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod certify;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod schedules;
pub mod solver;
pub mod trace;

pub use linalg::{Matrix, Metric, RngStream, Vector};
pub use operators::{ForwardOperator, Resolvent};
pub use schedules::{ScheduleSet, Sequence};
pub use solver::{solve, Problem, SolverConfig, SolverTrace, Status, TraceRow};

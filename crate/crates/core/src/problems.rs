//! Instance generators: sparse recovery (LASSO), affine variational
//! inequalities on the orthant, a discretized L² variational inequality, and
//! small oracle problems with closed-form solutions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{normal_matrix, uniform_matrix, LinalgError, Matrix, Metric, RngStream, Vector};
use crate::operators::{
    affine_forward, hyperplane_projector, least_squares_gradient, orthant_projector, pointwise_max_zero,
    projector_as_resolvent, soft_threshold_resolvent, LipschitzBound, OperatorError,
};
use crate::solver::{Problem, SolverError};

pub const GENERATOR_VERSION: u32 = 1;
/// Default LASSO regularizer as a multiple of `‖Aᵀy‖_∞`.
pub const DEFAULT_REG_SCALE: f64 = 0.002;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid sizes: {0}")]
    InvalidSizes(String),
    #[error("unknown initial-point case {0}, expected 1..=4")]
    InvalidCase(u8),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub type Result<T, E = ProblemError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub family: String,
    pub seed: Option<u64>,
    pub rng: String,
    pub generator_version: u32,
    pub notes: Vec<String>,
}

impl InstanceMetadata {
    fn new(family: &str, seed: Option<u64>, notes: &[&str]) -> Self {
        InstanceMetadata {
            family: family.to_string(),
            seed,
            rng: RngStream::ALGORITHM.to_string(),
            generator_version: GENERATOR_VERSION,
            notes: notes.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// `y = A x_true + noise` with `x_true` `K`-sparse, solved as
/// `min ½‖Ax − y‖² + reg·‖x‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoInstance {
    pub metadata: InstanceMetadata,
    #[serde(serialize_with = "nested_rows", deserialize_with = "from_nested_rows")]
    pub design: Matrix,
    pub observed: Vector,
    pub x_true: Vector,
    pub reg: f64,
    pub sparsity: usize,
    pub measurements: usize,
    pub signal_len: usize,
    pub noise_var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoSpec {
    pub sparsity: usize,
    pub measurements: usize,
    pub signal_len: usize,
    pub noise_var: f64,
    /// `reg = reg_scale·‖Aᵀy‖_∞` unless `reg` is given.
    pub reg_scale: f64,
    pub reg: Option<f64>,
}

impl LassoSpec {
    pub fn new(sparsity: usize, measurements: usize, signal_len: usize, noise_var: f64) -> Self {
        LassoSpec {
            sparsity,
            measurements,
            signal_len,
            noise_var,
            reg_scale: DEFAULT_REG_SCALE,
            reg: None,
        }
    }
}

/// Gaussian design, `K` support indices uniform without replacement with
/// values uniform on `(−1, 1)`, i.i.d. Gaussian noise of variance
/// `noise_var` per component, and `x₀ = x₁ = 0`.
pub fn gen_lasso(rng: &mut RngStream, k: usize, m: usize, n: usize, noise_var: f64) -> Result<(LassoInstance, Problem)> {
    gen_lasso_with(rng, &LassoSpec::new(k, m, n, noise_var))
}

pub fn gen_lasso_with(rng: &mut RngStream, spec: &LassoSpec) -> Result<(LassoInstance, Problem)> {
    let (k, m, n) = (spec.sparsity, spec.measurements, spec.signal_len);
    if !(k >= 1 && k < m && m < n) {
        return Err(ProblemError::InvalidSizes(format!(
            "need 1 <= K < M < N, got K={k}, M={m}, N={n}"
        )));
    }
    if !(spec.noise_var >= 0.0) {
        return Err(ProblemError::InvalidSizes(format!(
            "noise variance must be nonnegative, got {}",
            spec.noise_var
        )));
    }
    let design = normal_matrix(rng, m, n)?;
    let support = rng.sample_indices(n, k);
    let mut x = vec![0.0; n];
    for &i in &support {
        x[i] = rng.uniform(-1.0, 1.0);
    }
    let x_true = Vector::new(x)?;
    let clean = design.matvec(&x_true)?;
    let sd = spec.noise_var.sqrt();
    let observed = if sd > 0.0 {
        let noise = Vector::from_fn(m, |_| sd * rng.standard_normal())?;
        clean.add(&noise)?
    } else {
        clean
    };
    let reg = match spec.reg {
        Some(r) => r,
        None => spec.reg_scale * design.matvec_transpose(&observed)?.norm_inf(),
    };

    let forward = least_squares_gradient(design.clone(), observed.clone())?;
    let backward = soft_threshold_resolvent(reg)?;
    let problem = Problem::new("lasso", forward, backward, n);
    let instance = LassoInstance {
        metadata: InstanceMetadata::new("lasso", Some(rng.seed()), &["noise variance is per component"]),
        design,
        observed,
        x_true,
        reg,
        sparsity: k,
        measurements: m,
        signal_len: n,
        noise_var: spec.noise_var,
    };
    Ok((instance, problem))
}

impl LassoInstance {
    /// `‖x − x_true‖ / ‖x_true‖`.
    pub fn relative_error(&self, x: &Vector) -> Result<f64> {
        Ok(x.distance(&self.x_true)? / self.x_true.norm())
    }

    /// `½‖Ax − y‖²`, whose gradient is the forward operator.
    pub fn data_fit(&self, x: &Vector) -> Result<f64> {
        Ok(0.5 * self.design.matvec(x)?.sub(&self.observed)?.norm_squared())
    }
}

/// `A(x) = Mx + q` over `C = R^m_+` with `M = NNᵀ + S + D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineVIInstance {
    pub metadata: InstanceMetadata,
    #[serde(serialize_with = "nested_rows", deserialize_with = "from_nested_rows")]
    pub matrix: Matrix,
    pub offset: Vector,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMode {
    Zero,
    Custom(Vector),
}

/// Entries of `N` and the strict upper triangle of `S` uniform on `(−5, 5)`
/// (`S` antisymmetrized), diagonal of `D` uniform on `(0, 0.3)`. Initial
/// points `x₀ = x₁` are drawn uniform on `(0, 1)` after the matrices.
/// With `q = 0` the solution `x* = 0` is registered.
pub fn gen_affine_vi(rng: &mut RngStream, m: usize, q_mode: QMode) -> Result<(AffineVIInstance, Problem)> {
    if m == 0 {
        return Err(ProblemError::InvalidSizes("m must be at least 1".into()));
    }
    let gram_factor = uniform_matrix(rng, m, m, -5.0, 5.0)?;
    let skew = random_skew(rng, m, 5.0)?;
    let diag: Vec<f64> = (0..m).map(|_| rng.uniform(0.0, 0.3)).collect();
    let matrix = gram_factor
        .matmul(&gram_factor.transpose())?
        .add(&skew)?
        .add(&Matrix::diagonal(&diag)?)?;
    let start = rng.uniform_vector(m, 0.0, 1.0)?;

    let (offset, known) = match q_mode {
        QMode::Zero => (Vector::zeros(m), Some(Vector::zeros(m))),
        QMode::Custom(q) => (q, None),
    };
    let problem = affine_vi_problem(matrix.clone(), offset.clone(), known)?
        .with_initial_points(start.clone(), start)?;
    let instance = AffineVIInstance {
        metadata: InstanceMetadata::new(
            "affine_vi",
            Some(rng.seed()),
            &["S = U - U^T with U strictly upper triangular, entries uniform(-5,5)"],
        ),
        matrix,
        offset,
        dim: m,
    };
    Ok((instance, problem))
}

fn random_skew(rng: &mut RngStream, m: usize, half_width: f64) -> Result<Matrix> {
    let mut data = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let u = rng.uniform(-half_width, half_width);
            data[i * m + j] = u;
            data[j * m + i] = -u;
        }
    }
    Ok(Matrix::from_row_major(m, m, data)?)
}

/// `A(x) = Mx + q` with the orthant projection as resolvent.
pub fn affine_vi_problem(matrix: Matrix, offset: Vector, known_solution: Option<Vector>) -> Result<Problem> {
    orthant_affine("affine_vi", matrix, offset, known_solution)
}

fn orthant_affine(label: &str, matrix: Matrix, offset: Vector, known_solution: Option<Vector>) -> Result<Problem> {
    let m = offset.dim();
    let forward = affine_forward(matrix, offset)?;
    let backward = projector_as_resolvent(orthant_projector(m));
    let problem = Problem::new(label, forward, backward, m);
    Ok(match known_solution {
        Some(x) => problem.with_known_solution(x)?,
        None => problem,
    })
}

/// `A(x) = x + q` on the orthant, solved by `x* = max(0, −q)`.
pub fn oracle_orthant_vi(q: Vector) -> Result<Problem> {
    let star = q.map(|v| (-v).max(0.0))?;
    let m = q.dim();
    orthant_affine("orthant_oracle", Matrix::identity(m), q, Some(star))
}

/// Grid, weights and initial functions of the discretized L² problem
/// `0 ∈ max(x, 0) + N_C(x)`, `C = {x : ∫₀¹ t x(t) dt = b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2VIInstance {
    pub metadata: InstanceMetadata,
    pub grid: Vector,
    pub weights: Vec<f64>,
    pub b: f64,
    pub case: u8,
    pub x0: Vector,
    pub x1: Vector,
}

pub const L2_DEFAULT_GRID: usize = 200;

/// `(97t² + 4t)/13`
pub fn l2_quadratic(t: f64) -> f64 {
    (97.0 * t * t + 4.0 * t) / 13.0
}

/// `(t² − e^{−7t})/250`
pub fn l2_exponential(t: f64) -> f64 {
    (t * t - (-7.0 * t).exp()) / 250.0
}

/// `(sin 3t + cos 10t)/100`
pub fn l2_trigonometric(t: f64) -> f64 {
    ((3.0 * t).sin() + (10.0 * t).cos()) / 100.0
}

/// Composite trapezoid weights on `m` uniform points of `[0, 1]`; they sum
/// to 1.
pub fn trapezoid_weights(m: usize) -> Vec<f64> {
    let h = 1.0 / (m - 1) as f64;
    (0..m)
        .map(|i| if i == 0 || i == m - 1 { 0.5 * h } else { h })
        .collect()
}

/// The four initial-point pairs `(x₀, x₁)`, sampled on a uniform grid of `m`
/// points with trapezoid-weighted inner products.
pub fn gen_l2_vi(m: usize, case: u8) -> Result<(L2VIInstance, Problem)> {
    if m < 10 {
        return Err(ProblemError::InvalidSizes(format!("grid needs at least 10 points, got {m}")));
    }
    type Profile = fn(f64) -> f64;
    let (f0, f1): (Profile, Profile) = match case {
        1 => (l2_quadratic, l2_exponential),
        2 => (l2_quadratic, l2_trigonometric),
        3 => (l2_exponential, l2_trigonometric),
        4 => (l2_trigonometric, l2_quadratic),
        other => return Err(ProblemError::InvalidCase(other)),
    };
    let grid = Vector::from_fn(m, |i| i as f64 / (m - 1) as f64)?;
    let weights = trapezoid_weights(m);
    let metric = Metric::Weighted(weights.clone());
    let b = 2.0;
    let x0 = grid.map(f0)?;
    let x1 = grid.map(f1)?;

    // The unique solution is x* = c·t with ⟨t, c·t⟩ = b.
    let tt = metric.inner(&grid, &grid)?;
    let star = grid.scale(b / tt)?;

    let projector = hyperplane_projector(grid.clone(), b, metric.clone())?;
    let problem = Problem::new("l2_vi", pointwise_max_zero(), projector_as_resolvent(projector), m)
        .with_metric(metric)
        .with_initial_points(x0.clone(), x1.clone())?
        .with_known_solution(star)?;
    let instance = L2VIInstance {
        metadata: InstanceMetadata::new("l2_vi", None, &["uniform grid on [0,1], trapezoid weights"]),
        grid,
        weights,
        b,
        case,
        x0,
        x1,
    };
    Ok((instance, problem))
}

/// `A(x) = ρx + Sx` on the orthant with `S` skew-symmetric (strict upper
/// triangle uniform on `(−1, 1)`), so `A` is exactly `ρ`-strongly monotone
/// with `‖A‖ = √(ρ² + ‖S‖²)`. Solution `x* = 0`; initial points `x₀ = x₁`
/// uniform on `(−1, 1)`.
pub fn gen_oracle_strong(rng: &mut RngStream, m: usize, rho: f64) -> Result<Problem> {
    if m == 0 {
        return Err(ProblemError::InvalidSizes("m must be at least 1".into()));
    }
    let skew = random_skew(rng, m, 1.0)?;
    let start = rng.uniform_vector(m, -1.0, 1.0)?;
    Ok(oracle_strong_problem(rho, skew)?.with_initial_points(start.clone(), start)?)
}

/// `A(x) = ρx + Sx` for a given skew-symmetric `S`.
pub fn oracle_strong_problem(rho: f64, skew: Matrix) -> Result<Problem> {
    if !(rho > 0.0) {
        return Err(OperatorError::InvalidParameter { name: "rho", value: rho }.into());
    }
    let m = skew.rows();
    let skew_norm = skew.spectral_norm_estimate(2000);
    let matrix = Matrix::diagonal(&vec![rho; m])?.add(&skew)?;
    let forward = affine_forward(matrix, Vector::zeros(m))?
        .with_lipschitz(LipschitzBound::exact((rho * rho + skew_norm * skew_norm).sqrt()))
        .with_strong_monotone_modulus(rho);
    let problem = Problem::new(
        "oracle_strong",
        forward,
        projector_as_resolvent(orthant_projector(m)),
        m,
    )
    .with_known_solution(Vector::zeros(m))?;
    Ok(problem)
}

fn nested_rows<S: serde::Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&m.to_rows(), s)
}

fn from_nested_rows<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
    let rows: Vec<Vec<f64>> = serde::Deserialize::deserialize(d)?;
    Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
}

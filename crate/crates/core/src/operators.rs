//! Forward operators `A`, resolvents `J_{λB} = (I + λB)⁻¹` and convex-set
//! projectors, each carrying the structural metadata (Lipschitz constant,
//! strong-monotonicity modulus) that validators and certificates consume.
//!
//! The solver itself never reads the Lipschitz metadata: its step size is
//! self-adaptive.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix, Metric, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("resolvent step λ must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("operator matrix must be square, got {rows}×{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("hyperplane normal must be nonzero")]
    ZeroNormal,
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

pub type Result<T, E = OperatorError> = std::result::Result<T, E>;

/// A single-valued map `x ↦ Ax`.
pub trait ForwardMap: Send + Sync {
    fn apply(&self, x: &Vector) -> Result<Vector>;
}

impl<F> ForwardMap for F
where
    F: Fn(&Vector) -> Result<Vector> + Send + Sync,
{
    fn apply(&self, x: &Vector) -> Result<Vector> {
        self(x)
    }
}

/// A parameterized map `(x, λ) ↦ J_{λB}(x)`.
pub trait ResolventMap: Send + Sync {
    fn apply(&self, x: &Vector, lambda: f64) -> Result<Vector>;
}

impl<F> ResolventMap for F
where
    F: Fn(&Vector, f64) -> Result<Vector> + Send + Sync,
{
    fn apply(&self, x: &Vector, lambda: f64) -> Result<Vector> {
        self(x, lambda)
    }
}

/// Whether a declared constant is analytically exact or a numerical estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBound {
    pub value: f64,
    pub kind: BoundKind,
}

impl LipschitzBound {
    pub fn exact(value: f64) -> Self {
        LipschitzBound {
            value,
            kind: BoundKind::Exact,
        }
    }

    pub fn estimate(value: f64) -> Self {
        LipschitzBound {
            value,
            kind: BoundKind::Estimate,
        }
    }
}

#[derive(Clone)]
pub struct ForwardOperator {
    map: Arc<dyn ForwardMap>,
    lipschitz: Option<LipschitzBound>,
    strong_monotone_modulus: Option<f64>,
    label: String,
}

impl fmt::Debug for ForwardOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForwardOperator")
            .field("label", &self.label)
            .field("lipschitz", &self.lipschitz)
            .field("strong_monotone_modulus", &self.strong_monotone_modulus)
            .finish()
    }
}

impl ForwardOperator {
    pub fn new(label: impl Into<String>, map: impl ForwardMap + 'static) -> Self {
        ForwardOperator {
            map: Arc::new(map),
            lipschitz: None,
            strong_monotone_modulus: None,
            label: label.into(),
        }
    }

    pub fn with_lipschitz(mut self, bound: LipschitzBound) -> Self {
        self.lipschitz = Some(bound);
        self
    }

    pub fn with_strong_monotone_modulus(mut self, r: f64) -> Self {
        self.strong_monotone_modulus = Some(r);
        self
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        self.map.apply(x)
    }

    pub fn lipschitz(&self) -> Option<LipschitzBound> {
        self.lipschitz
    }

    pub fn strong_monotone_modulus(&self) -> Option<f64> {
        self.strong_monotone_modulus
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

#[derive(Clone)]
pub struct Resolvent {
    map: Arc<dyn ResolventMap>,
    strong_monotone_modulus: Option<f64>,
    label: String,
}

impl fmt::Debug for Resolvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Resolvent")
            .field("label", &self.label)
            .field("strong_monotone_modulus", &self.strong_monotone_modulus)
            .finish()
    }
}

impl Resolvent {
    pub fn new(label: impl Into<String>, map: impl ResolventMap + 'static) -> Self {
        Resolvent {
            map: Arc::new(map),
            strong_monotone_modulus: None,
            label: label.into(),
        }
    }

    /// Resolvent of `B = 0`.
    pub fn identity() -> Self {
        Resolvent::new("identity", |x: &Vector, _lambda: f64| Ok(x.clone()))
    }

    pub fn with_strong_monotone_modulus(mut self, r: f64) -> Self {
        self.strong_monotone_modulus = Some(r);
        self
    }

    pub fn eval(&self, x: &Vector, lambda: f64) -> Result<Vector> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(OperatorError::NonPositiveStep(lambda));
        }
        self.map.apply(x, lambda)
    }

    pub fn strong_monotone_modulus(&self) -> Option<f64> {
        self.strong_monotone_modulus
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

type ProjectFn = dyn Fn(&Vector) -> Result<Vector> + Send + Sync;
type ResidualFn = dyn Fn(&Vector) -> Result<f64> + Send + Sync;

/// Metric projection onto a closed convex set `C`, plus a membership
/// residual that is zero exactly on `C`.
#[derive(Clone)]
pub struct ConvexSetProjector {
    project: Arc<ProjectFn>,
    residual: Arc<ResidualFn>,
    label: String,
}

impl fmt::Debug for ConvexSetProjector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexSetProjector")
            .field("label", &self.label)
            .finish()
    }
}

impl ConvexSetProjector {
    pub fn new(
        label: impl Into<String>,
        project: impl Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
        residual: impl Fn(&Vector) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        ConvexSetProjector {
            project: Arc::new(project),
            residual: Arc::new(residual),
            label: label.into(),
        }
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        (self.project)(x)
    }

    pub fn membership_residual(&self, x: &Vector) -> Result<f64> {
        (self.residual)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// `A(x) = Mx + q`.
///
/// The Lipschitz constant is a 100-step power-iteration estimate of `‖M‖₂`;
/// the strong-monotonicity modulus is `max(0, λ_min((M + Mᵀ)/2))`.
pub fn affine_forward(matrix: Matrix, offset: Vector) -> Result<ForwardOperator> {
    if !matrix.is_square() {
        return Err(OperatorError::NotSquare {
            rows: matrix.rows(),
            cols: matrix.cols(),
        });
    }
    if matrix.cols() != offset.dim() {
        return Err(LinalgError::DimensionMismatch {
            left: matrix.cols(),
            right: offset.dim(),
        }
        .into());
    }
    let lipschitz = matrix.spectral_norm_estimate(100);
    let min_eig = matrix.symmetric_eigenvalues()?[0];
    let op = ForwardOperator::new("affine", move |x: &Vector| {
        Ok(matrix.matvec(x)?.add(&offset)?)
    })
    .with_lipschitz(LipschitzBound::estimate(lipschitz))
    .with_strong_monotone_modulus(min_eig.max(0.0));
    Ok(op)
}

/// `x ↦ Aᵀ(Ax − y)`, the gradient of `½‖Ax − y‖²`.
pub fn least_squares_gradient(design: Matrix, observed: Vector) -> Result<ForwardOperator> {
    if design.rows() != observed.dim() {
        return Err(LinalgError::DimensionMismatch {
            left: design.rows(),
            right: observed.dim(),
        }
        .into());
    }
    let norm = design.spectral_norm_estimate(100);
    let op = ForwardOperator::new("least_squares_gradient", move |x: &Vector| {
        let residual = design.matvec(x)?.sub(&observed)?;
        Ok(design.matvec_transpose(&residual)?)
    })
    .with_lipschitz(LipschitzBound::estimate(norm * norm));
    Ok(op)
}

/// `A(x)ᵢ = max(xᵢ, 0)`; exactly 1-Lipschitz, monotone but not strongly so.
pub fn pointwise_max_zero() -> ForwardOperator {
    ForwardOperator::new("pointwise_max_zero", |x: &Vector| Ok(x.map(|v| v.max(0.0))?))
        .with_lipschitz(LipschitzBound::exact(1.0))
}

/// Resolvent of `∂(ρ‖·‖₁)`: componentwise soft thresholding at `λρ`.
pub fn soft_threshold_resolvent(rho: f64) -> Result<Resolvent> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(OperatorError::InvalidParameter {
            name: "rho",
            value: rho,
        });
    }
    Ok(Resolvent::new("soft_threshold", move |x: &Vector, lambda: f64| {
        let cut = lambda * rho;
        Ok(x.map(|v| v.signum() * (v.abs() - cut).max(0.0))?)
    }))
}

fn check_projector_dim(expected: usize, x: &Vector) -> Result<()> {
    if x.dim() == expected {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch {
            left: expected,
            right: x.dim(),
        }
        .into())
    }
}

/// Projection onto the nonnegative orthant of `R^m`.
pub fn orthant_projector(dim: usize) -> ConvexSetProjector {
    ConvexSetProjector::new(
        "nonnegative_orthant",
        move |x: &Vector| {
            check_projector_dim(dim, x)?;
            Ok(x.map(|v| v.max(0.0))?)
        },
        move |x: &Vector| {
            check_projector_dim(dim, x)?;
            Ok(x.as_slice().iter().map(|v| v.min(0.0).powi(2)).sum::<f64>().sqrt())
        },
    )
}

/// Euclidean projection onto the hyperplane `{x : ⟨w, x⟩ = b}`.
pub fn weighted_hyperplane_projector(normal: Vector, offset: f64) -> Result<ConvexSetProjector> {
    hyperplane_projector(normal, offset, Metric::Euclidean)
}

/// Projection onto `{x : ⟨n, x⟩_G = b}` orthogonal in the geometry `G`:
/// `P(x) = x − ((⟨n, x⟩_G − b)/⟨n, n⟩_G)·n`.
///
/// With trapezoid weights and `n` the grid of `t`, this is the discretized
/// L² projection onto `{x : ∫ t x(t) dt = b}`.
pub fn hyperplane_projector(normal: Vector, offset: f64, metric: Metric) -> Result<ConvexSetProjector> {
    let nn = metric.inner(&normal, &normal)?;
    if !(nn > 0.0) {
        return Err(OperatorError::ZeroNormal);
    }
    let normal_r = normal.clone();
    let metric_r = metric.clone();
    Ok(ConvexSetProjector::new(
        "hyperplane",
        move |x: &Vector| {
            let gap = metric.inner(&normal, x)? - offset;
            Ok(Vector::axpby(1.0, x, -gap / nn, &normal)?)
        },
        move |x: &Vector| Ok((metric_r.inner(&normal_r, x)? - offset).abs()),
    ))
}

/// Resolvent of the normal cone `N_C`: the projection onto `C`, for every λ.
pub fn projector_as_resolvent(projector: ConvexSetProjector) -> Resolvent {
    let label = format!("normal_cone[{}]", projector.label());
    Resolvent::new(label, move |x: &Vector, _lambda: f64| projector.project(x))
}

/// `T_λ(x) = J_{λB}(x − λAx)`. Its fixed points are exactly the zeros of
/// `A + B`.
pub fn forward_backward_map(
    forward: &ForwardOperator,
    backward: &Resolvent,
    x: &Vector,
    lambda: f64,
) -> Result<Vector> {
    let ax = forward.eval(x)?;
    backward.eval(&Vector::axpby(1.0, x, -lambda, &ax)?, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RngStream;

    fn v(xs: &[f64]) -> Vector {
        Vector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn affine_identity_and_arithmetic() {
        let id = affine_forward(Matrix::identity(2), Vector::zeros(2)).unwrap();
        assert_eq!(id.eval(&v(&[2.0, 3.0])).unwrap(), v(&[2.0, 3.0]));
        let a = affine_forward(Matrix::diagonal(&[2.0, 2.0]).unwrap(), v(&[1.0, -1.0])).unwrap();
        assert_eq!(a.eval(&v(&[1.0, 1.0])).unwrap(), v(&[3.0, 1.0]));
        assert!((a.lipschitz().unwrap().value - 2.0).abs() < 1e-12);
        assert!((a.strong_monotone_modulus().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn affine_rejects_bad_shapes() {
        let rect = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            affine_forward(rect, v(&[0.0, 0.0])),
            Err(OperatorError::NotSquare { .. })
        ));
        assert!(affine_forward(Matrix::identity(2), v(&[0.0])).is_err());
    }

    #[test]
    fn least_squares_examples() {
        let design = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let x = v(&[0.5, -1.0]);
        let y = design.matvec(&x).unwrap();
        let grad = least_squares_gradient(design, y).unwrap();
        assert_eq!(grad.eval(&x).unwrap(), Vector::zeros(2));

        let grad = least_squares_gradient(Matrix::identity(3), Vector::zeros(3)).unwrap();
        assert_eq!(grad.eval(&v(&[1.0, -2.0, 3.0])).unwrap(), v(&[1.0, -2.0, 3.0]));
        assert!(least_squares_gradient(Matrix::identity(3), Vector::zeros(2)).is_err());
    }

    #[test]
    fn pointwise_max_examples() {
        let a = pointwise_max_zero();
        assert_eq!(a.eval(&v(&[-1.0, 2.0])).unwrap(), v(&[0.0, 2.0]));
        assert_eq!(a.eval(&v(&[-1.0, -2.0])).unwrap(), Vector::zeros(2));
        assert_eq!(a.lipschitz(), Some(LipschitzBound::exact(1.0)));
        assert_eq!(a.strong_monotone_modulus(), None);
    }

    #[test]
    fn soft_threshold_examples() {
        let j = soft_threshold_resolvent(1.0).unwrap();
        assert_eq!(j.eval(&Vector::zeros(3), 0.7).unwrap(), Vector::zeros(3));
        assert_eq!(j.eval(&v(&[3.0]), 1.0).unwrap(), v(&[2.0]));
        assert_eq!(j.eval(&v(&[-3.0, 0.5]), 1.0).unwrap(), v(&[-2.0, 0.0]));
        assert!(matches!(j.eval(&v(&[1.0]), 0.0), Err(OperatorError::NonPositiveStep(_))));
        assert!(soft_threshold_resolvent(0.0).is_err());
    }

    #[test]
    fn soft_threshold_satisfies_subgradient_optimality() {
        // 0 ∈ (out − x)/λ + ρ ∂‖out‖₁ componentwise.
        let mut rng = RngStream::new(5);
        let rho = 0.3;
        let j = soft_threshold_resolvent(rho).unwrap();
        for _ in 0..200 {
            let x = rng.uniform_vector(8, -2.0, 2.0).unwrap();
            let lambda = rng.uniform(0.01, 3.0);
            let out = j.eval(&x, lambda).unwrap();
            for (&o, &xi) in out.as_slice().iter().zip(x.as_slice()) {
                let g = (xi - o) / lambda;
                if o != 0.0 {
                    assert!((g - rho * o.signum()).abs() <= 1e-10);
                } else {
                    assert!(g.abs() <= rho + 1e-10);
                }
            }
        }
    }

    #[test]
    fn orthant_examples() {
        let p = orthant_projector(2);
        assert_eq!(p.project(&v(&[-1.0, 2.0])).unwrap(), v(&[0.0, 2.0]));
        assert_eq!(p.project(&v(&[0.0, 2.0])).unwrap(), v(&[0.0, 2.0]));
        assert_eq!(p.membership_residual(&v(&[-3.0, 2.0])).unwrap(), 3.0);
        assert!(p.project(&v(&[1.0])).is_err());
    }

    #[test]
    fn hyperplane_examples() {
        let w = v(&[1.0, 2.0, 2.0]);
        let p = weighted_hyperplane_projector(w.clone(), 4.0).unwrap();
        let on = v(&[0.0, 1.0, 1.0]);
        assert_eq!(p.project(&on).unwrap(), on);
        let out = p.project(&v(&[5.0, -1.0, 3.0])).unwrap();
        assert!((w.inner(&out).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(
            weighted_hyperplane_projector(Vector::zeros(3), 1.0),
            Err(OperatorError::ZeroNormal)
        ));
    }

    #[test]
    fn projector_resolvent_ignores_lambda() {
        let j = projector_as_resolvent(orthant_projector(2));
        assert_eq!(j.eval(&v(&[-1.0, 2.0]), 0.5).unwrap(), v(&[0.0, 2.0]));
        let mut rng = RngStream::new(1);
        let x = rng.uniform_vector(2, -3.0, 3.0).unwrap();
        assert_eq!(j.eval(&x, 0.1).unwrap(), j.eval(&x, 10.0).unwrap());
    }

    #[test]
    fn forward_backward_map_fixes_solutions() {
        // A(x) = x + q on the orthant has solution max(0, −q).
        let a = affine_forward(Matrix::identity(2), v(&[-1.0, 1.0])).unwrap();
        let j = projector_as_resolvent(orthant_projector(2));
        let star = v(&[1.0, 0.0]);
        for lambda in [0.01, 0.1, 1.0] {
            let t = forward_backward_map(&a, &j, &star, lambda).unwrap();
            assert!(t.distance(&star).unwrap() <= 1e-8);
        }
        let t = forward_backward_map(&a, &j, &v(&[0.0, 0.0]), 0.5).unwrap();
        assert!(t.distance(&v(&[0.0, 0.0])).unwrap() > 0.1);
    }
}

//! Dense vectors and matrices over `f64`, weighted inner products and a
//! seeded random stream.
//!
//! Every fallible operation checks dimensions and refuses to hand back a
//! non-finite coordinate, so NaN/Inf surface as errors at the operation that
//! produced them instead of propagating silently through an iteration.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("vectors and matrices must have at least one entry")]
    Empty,
    #[error("invalid bounds: need lo < hi, got ({lo}, {hi})")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("ragged matrix rows: expected {expected} columns, found {found}")]
    Ragged { expected: usize, found: usize },
}

pub type Result<T, E = LinalgError> = std::result::Result<T, E>;

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { left, right })
    }
}

fn finite_or(values: &[f64], op: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite(op))
    }
}

/// A dense real vector of fixed dimension with finite coordinates.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = LinalgError;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(LinalgError::Empty);
        }
        finite_or(&coords, "construction")?;
        Ok(Vector(coords))
    }

    /// The zero vector of dimension `dim`.
    ///
    /// # Panics
    ///
    /// If `dim` is zero.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        Vector(vec![0.0; dim])
    }

    /// Builds a vector coordinate by coordinate.
    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Vector::new((0..dim).map(f).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Applies `f` to every coordinate.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Vector> {
        let out: Vec<f64> = self.0.iter().map(|&v| f(v)).collect();
        finite_or(&out, "map")?;
        Ok(Vector(out))
    }

    /// Euclidean inner product `Σ aᵢbᵢ`.
    pub fn inner(&self, other: &Vector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Number of coordinates whose magnitude exceeds `threshold`.
    pub fn count_above(&self, threshold: f64) -> usize {
        self.0.iter().filter(|v| v.abs() > threshold).count()
    }

    /// Coordinatewise `alpha·a + beta·b`.
    pub fn axpby(alpha: f64, a: &Vector, beta: f64, b: &Vector) -> Result<Vector> {
        check_dims(a.dim(), b.dim())?;
        let out: Vec<f64> = a
            .0
            .iter()
            .zip(&b.0)
            .map(|(x, y)| alpha * x + beta * y)
            .collect();
        finite_or(&out, "axpby")?;
        Ok(Vector(out))
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        Vector::axpby(1.0, self, 1.0, other)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        Vector::axpby(1.0, self, -1.0, other)
    }

    pub fn scale(&self, factor: f64) -> Result<Vector> {
        self.map(|v| factor * v)
    }

    /// Euclidean distance `‖a − b‖`.
    pub fn distance(&self, other: &Vector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

/// The inner product a problem lives in.
///
/// `Weighted` carries positive quadrature weights, so that `⟨a, b⟩ = Σ wᵢaᵢbᵢ`
/// approximates an L² inner product on a grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    Weighted(Vec<f64>),
}

impl Metric {
    pub fn inner(&self, a: &Vector, b: &Vector) -> Result<f64> {
        match self {
            Metric::Euclidean => a.inner(b),
            Metric::Weighted(w) => {
                check_dims(a.dim(), b.dim())?;
                check_dims(a.dim(), w.len())?;
                Ok(w
                    .iter()
                    .zip(a.as_slice().iter().zip(b.as_slice()))
                    .map(|(w, (x, y))| w * x * y)
                    .sum())
            }
        }
    }

    pub fn norm(&self, a: &Vector) -> Result<f64> {
        Ok(self.inner(a, a)?.max(0.0).sqrt())
    }

    pub fn distance(&self, a: &Vector, b: &Vector) -> Result<f64> {
        match self {
            Metric::Euclidean => a.distance(b),
            Metric::Weighted(_) => self.norm(&a.sub(b)?),
        }
    }
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Matrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        check_dims(rows * cols, data.len())?;
        finite_or(&data, "matrix construction")?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).ok_or(LinalgError::Empty)?;
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(LinalgError::Ragged {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::from_row_major(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix::from_row_major(rows, cols, data)
    }

    pub fn identity(dim: usize) -> Self {
        Matrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { 0.0 })
            .expect("identity of positive dimension")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Matrix::from_fn(diag.len(), diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `M x`.
    pub fn matvec(&self, x: &Vector) -> Result<Vector> {
        check_dims(self.cols, x.dim())?;
        let xs = x.as_slice();
        let out: Vec<f64> = (0..self.rows)
            .map(|i| self.row(i).iter().zip(xs).map(|(a, b)| a * b).sum())
            .collect();
        finite_or(&out, "matvec")?;
        Ok(Vector(out))
    }

    /// `Mᵀ x` without forming the transpose.
    pub fn matvec_transpose(&self, x: &Vector) -> Result<Vector> {
        check_dims(self.rows, x.dim())?;
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.as_slice().iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        finite_or(&out, "matvec_transpose")?;
        Ok(Vector(out))
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i)).expect("transpose of valid matrix")
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_dims(self.cols, other.rows)?;
        let mut data = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            let out = &mut data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                for (o, b) in out.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Matrix::from_row_major(self.rows, other.cols, data)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        check_dims(self.rows, other.rows)?;
        check_dims(self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix::from_row_major(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        check_dims(self.rows, other.rows)?;
        check_dims(self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix::from_row_major(self.rows, self.cols, data)
    }

    /// `(M + Mᵀ)/2`.
    pub fn symmetric_part(&self) -> Result<Matrix> {
        check_dims(self.rows, self.cols)?;
        Matrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    /// Power-iteration estimate of the spectral norm `‖M‖₂`, run on `MᵀM`.
    ///
    /// The estimate approaches the true norm from below.
    pub fn spectral_norm_estimate(&self, iters: usize) -> f64 {
        let mut v = deterministic_start(self.cols);
        let mut estimate = 0.0;
        for _ in 0..iters.max(1) {
            let Ok(mtmv) = self.matvec(&v).and_then(|mv| {
                estimate = mv.norm();
                self.matvec_transpose(&mv)
            }) else {
                return f64::INFINITY;
            };
            let n = mtmv.norm();
            if n == 0.0 {
                return 0.0;
            }
            v = Vector(mtmv.0.iter().map(|x| x / n).collect());
        }
        estimate.max(self.matvec(&v).map(|mv| mv.norm()).unwrap_or(f64::INFINITY))
    }

    /// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi
    /// rotations. Only the symmetric part of `self` is used.
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<f64>> {
        check_dims(self.rows, self.cols)?;
        let n = self.rows;
        let mut a = self.symmetric_part()?.data;
        let off = |a: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += a[i * n + j] * a[i * n + j];
                    }
                }
            }
            s
        };
        let scale = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        for _sweep in 0..100 {
            if off(&a) <= 1e-30 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        eig.sort_by(f64::total_cmp);
        finite_or(&eig, "symmetric_eigenvalues")?;
        Ok(eig)
    }
}

fn deterministic_start(dim: usize) -> Vector {
    let mut rng = RngStream::new(0x005e_ed0f_90e4);
    let v: Vec<f64> = (0..dim).map(|_| rng.uniform(0.5, 1.5)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Vector(v.into_iter().map(|x| x / n).collect())
}

/// Reproducible random stream backed by ChaCha20, so draws are identical
/// across platforms for the same seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub const ALGORITHM: &'static str = "chacha20";

    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A draw strictly inside `(lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        loop {
            let u: f64 = self.inner.sample(Open01);
            let v = lo + (hi - lo) * u;
            if v > lo && v < hi {
                return v;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn uniform_vector(&mut self, dim: usize, lo: f64, hi: f64) -> Result<Vector> {
        if !(lo < hi) {
            return Err(LinalgError::InvalidBounds { lo, hi });
        }
        Vector::from_fn(dim, |_| self.uniform(lo, hi))
    }

    /// `k` distinct indices drawn uniformly from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.inner, n, k).into_vec()
    }
}

/// A `rows × cols` matrix with i.i.d. entries uniform on `(lo, hi)`.
pub fn uniform_matrix(rng: &mut RngStream, rows: usize, cols: usize, lo: f64, hi: f64) -> Result<Matrix> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(LinalgError::InvalidBounds { lo, hi });
    }
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(lo, hi))
}

/// A `rows × cols` matrix with i.i.d. standard normal entries.
pub fn normal_matrix(rng: &mut RngStream, rows: usize, cols: usize) -> Result<Matrix> {
    Matrix::from_fn(rows, cols, |_, _| rng.standard_normal())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn inner_examples() {
        assert_eq!(v(&[1.0, 0.0]).inner(&v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(v(&[1.0, 2.0]).inner(&v(&[3.0, 4.0])).unwrap(), 11.0);
        assert!(matches!(
            v(&[1.0]).inner(&v(&[1.0, 2.0])),
            Err(LinalgError::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn inner_matches_norm_on_random_vectors() {
        let mut rng = RngStream::new(7);
        for _ in 0..100 {
            let a = rng.uniform_vector(17, -3.0, 3.0).unwrap();
            let n = a.norm();
            assert!((a.inner(&a).unwrap() - n * n).abs() <= 1e-12 * n * n.max(1.0));
        }
    }

    #[test]
    fn norm_examples() {
        assert_eq!(Vector::zeros(3).norm(), 0.0);
        assert_eq!(v(&[3.0, 4.0]).norm(), 5.0);
    }

    #[test]
    fn axpby_examples() {
        let a = v(&[1.0, -2.0]);
        let b = v(&[7.0, 9.0]);
        assert_eq!(Vector::axpby(1.0, &a, 0.0, &b).unwrap(), a);
        assert_eq!(
            Vector::axpby(1.0, &v(&[1.0, 1.0]), 1.0, &v(&[2.0, 3.0])).unwrap(),
            v(&[3.0, 4.0])
        );
        assert_eq!(Vector::axpby(0.5, &a, 0.5, &a).unwrap(), a);
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(Vector::new(vec![f64::NAN]).is_err());
        let big = v(&[f64::MAX]);
        assert_eq!(
            Vector::axpby(2.0, &big, 0.0, &big),
            Err(LinalgError::NonFinite("axpby"))
        );
        assert_eq!(Vector::new(vec![]), Err(LinalgError::Empty));
    }

    #[test]
    fn uniform_matrix_is_reproducible() {
        let a = uniform_matrix(&mut RngStream::new(11), 4, 6, -5.0, 5.0).unwrap();
        let b = uniform_matrix(&mut RngStream::new(11), 4, 6, -5.0, 5.0).unwrap();
        assert_eq!(a, b);
        assert!(a.as_row_major().iter().all(|&x| x > -5.0 && x < 5.0));
        let c = uniform_matrix(&mut RngStream::new(12), 4, 6, -5.0, 5.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_matrix_rejects_bad_bounds() {
        let mut rng = RngStream::new(0);
        assert!(uniform_matrix(&mut rng, 2, 2, 1.0, 1.0).is_err());
        assert!(uniform_matrix(&mut rng, 2, 2, 2.0, 1.0).is_err());
        assert!(uniform_matrix(&mut rng, 0, 2, 0.0, 1.0).is_err());
    }

    #[test]
    fn uniform_mean_law_of_large_numbers() {
        let m = uniform_matrix(&mut RngStream::new(3), 1000, 1000, 0.0, 1.0).unwrap();
        let mean = m.as_row_major().iter().sum::<f64>() / 1e6;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn matvec_and_transpose_agree() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.matvec(&v(&[1.0, 0.0, -1.0])).unwrap(), v(&[-2.0, -2.0]));
        assert_eq!(
            m.matvec_transpose(&v(&[1.0, 1.0])).unwrap(),
            m.transpose().matvec(&v(&[1.0, 1.0])).unwrap()
        );
        assert!(m.matvec(&v(&[1.0, 1.0])).is_err());
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = Matrix::diagonal(&[3.0, -7.0, 2.0]).unwrap();
        assert!((m.spectral_norm_estimate(100) - 7.0).abs() < 1e-9);
        let eig = m.symmetric_eigenvalues().unwrap();
        assert!((eig[0] + 7.0).abs() < 1e-12 && (eig[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_metric() {
        let metric = Metric::Weighted(vec![0.25, 0.5, 0.25]);
        let a = v(&[2.0, 1.0, 0.0]);
        assert!((metric.inner(&a, &a).unwrap() - 1.5).abs() < 1e-15);
        assert!(metric.inner(&a, &v(&[1.0])).is_err());
        assert_eq!(Metric::Euclidean.norm(&v(&[3.0, 4.0])).unwrap(), 5.0);
    }
}

//! Dense real linear algebra, self-contained.
//!
//! Everything the moment solvers need: the Kronecker product, column-major
//! vectorization, Gaussian elimination with partial pivoting, and a power
//! iteration for the spectral norm. Matrices are small (`d ≤ 8`, systems up
//! to `d² = 64`), so plain dense storage and O(n³) algorithms are the right
//! tools; no explicit inverse is ever formed.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::rng::SplitMix64;

/// Pivot magnitudes below `SINGULAR_PIVOT_RTOL` times the pivot row's initial
/// max-magnitude scale are treated as singular.
const SINGULAR_PIVOT_RTOL: f64 = 1e-14;

/// Relative convergence tolerance for the spectral-norm power iteration.
const POWER_ITER_RTOL: f64 = 1e-12;
const POWER_ITER_MAX: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Entry count does not match the declared shape.
    ShapeMismatch { expected: usize, got: usize },
    /// A NaN or infinity was passed to a constructor.
    NonFinite,
    /// The pivot in the given elimination column fell below the singularity
    /// threshold; the system has no reliable solution.
    SingularSystem { column: usize },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {expected} entries, got {got}")
            }
            LinalgError::NonFinite => write!(f, "non-finite entry (NaN or infinity)"),
            LinalgError::SingularSystem { column } => {
                write!(f, "singular system: negligible pivot in column {column}")
            }
        }
    }
}

impl core::error::Error for LinalgError {}

/// Dense real matrix, row-major storage.
///
/// All entries are finite; constructors reject NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Dense real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from nested row slices, rejecting ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            let row = row.as_ref();
            if row.len() != c {
                return Err(LinalgError::ShapeMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows as owned nested vectors (convenient for serialization).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// In-place `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Matrix) {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "axpy shape mismatch"
        );
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &Vector) -> Vector {
        assert_eq!(self.cols, v.dim(), "matvec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        Vector { data: out }
    }

    /// Largest entry magnitude (the entrywise ∞-norm used by agreement checks).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Column-major stacking: column 0 first. Chosen so that
    /// `vec(A·M·Aᵀ) = (A⊗A)·vec(M)` holds exactly.
    pub fn vec_cols(&self) -> Vector {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self[(i, j)]);
            }
        }
        Vector { data }
    }

    /// `(self + selfᵀ) / 2`; scrubs roundoff asymmetry from solver output.
    pub fn symmetrized(&self) -> Matrix {
        assert!(self.is_square(), "symmetrized requires a square matrix");
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..i {
                let s = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Mul<&Vector> for &Matrix {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        self.matvec(rhs)
    }
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.is_empty() {
            return Err(LinalgError::ShapeMismatch { expected: 1, got: 0 });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        Self {
            data: vec![0.0; dim],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.data.clone()
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector {
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// In-place `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Vector) {
        assert_eq!(self.dim(), other.dim(), "axpy dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Euclidean norm.
    pub fn norm2(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Outer product `self · otherᵀ`.
    pub fn outer(&self, other: &Vector) -> Matrix {
        let mut out = Matrix::zeros(self.dim(), other.dim());
        for i in 0..self.dim() {
            for j in 0..other.dim() {
                out[(i, j)] = self[i] * other[j];
            }
        }
        out
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim());
        Vector {
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim());
        Vector {
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Kahan compensated accumulator; keeps k-indexed sums independent of input
/// permutation to well below test tolerances.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Kronecker product: block `(i,j)` of the result equals `a[i,j] · b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (m, n) = (a.rows(), a.cols());
    let (p, q) = (b.rows(), b.cols());
    let mut out = Matrix::zeros(m * p, n * q);
    for i in 0..m {
        for j in 0..n {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..p {
                for l in 0..q {
                    out[(i * p + k, j * q + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Inverse of [`Matrix::vec_cols`] for square matrices: `unvec(vec(M), d) = M`.
pub fn unvec(v: &Vector, d: usize) -> Result<Matrix, LinalgError> {
    if v.dim() != d * d {
        return Err(LinalgError::ShapeMismatch {
            expected: d * d,
            got: v.dim(),
        });
    }
    let mut out = Matrix::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            out[(i, j)] = v[j * d + i];
        }
    }
    Ok(out)
}

/// Solve `m · x = rhs` by Gaussian elimination with partial (row) pivoting.
///
/// A pivot whose magnitude falls below `1e-14` times the pivot row's initial
/// max-magnitude scale signals a singular or near-singular system — for the
/// moment solvers this means a non-contractive or degenerate input escaped
/// validation.
pub fn solve(m: &Matrix, rhs: &Vector) -> Result<Vector, LinalgError> {
    assert!(m.is_square(), "solve requires a square system");
    let n = m.rows();
    assert_eq!(rhs.dim(), n, "solve rhs dimension mismatch");

    let mut a = m.data.clone();
    let mut x = rhs.data.clone();

    let mut scales = vec![0.0f64; n];
    for i in 0..n {
        let s = a[i * n..(i + 1) * n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if s == 0.0 {
            return Err(LinalgError::SingularSystem { column: i });
        }
        scales[i] = s;
    }

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = a[col * n + col].abs();
        for r in col + 1..n {
            let mag = a[r * n + col].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag < SINGULAR_PIVOT_RTOL * scales[pivot_row] {
            return Err(LinalgError::SingularSystem { column: col });
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
            scales.swap(col, pivot_row);
        }

        let pivot = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[r * n + col] = 0.0;
            for j in col + 1..n {
                a[r * n + j] -= factor * a[col * n + j];
            }
            x[r] -= factor * x[col];
        }
    }

    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= a[i * n + j] * x[j];
        }
        x[i] = acc / a[i * n + i];
    }

    Ok(Vector { data: x })
}

/// Spectral norm `√λ_max(mᵀm)` via power iteration.
///
/// Starts from the normalized all-ones vector; one fallback restart from a
/// fixed pseudorandom vector guards against a start that is (numerically) an
/// exact eigenvector of a non-dominant eigenvalue, which would otherwise look
/// converged immediately.
pub fn spectral_norm(m: &Matrix) -> f64 {
    assert!(m.is_square(), "spectral_norm requires a square matrix");
    let d = m.rows();
    if m.max_abs() == 0.0 {
        return 0.0;
    }
    let gram = &m.transpose() * m;

    let ones = Vector {
        data: vec![1.0 / libm::sqrt(d as f64); d],
    };
    let (lambda, iters, converged) = power_iteration(&gram, ones);

    // A stall (no convergence, a zero image, or instant convergence from the
    // deterministic start) triggers the single pseudorandom restart.
    let suspicious = !converged || iters <= 2;
    let best = if suspicious {
        let (lambda2, _, _) = power_iteration(&gram, pseudorandom_unit(d));
        lambda.max(lambda2)
    } else {
        lambda
    };
    libm::sqrt(best.max(0.0))
}

/// Rayleigh-quotient power iteration on a symmetric PSD matrix.
/// Returns (largest eigenvalue estimate, iterations used, converged flag).
fn power_iteration(b: &Matrix, start: Vector) -> (f64, usize, bool) {
    let mut v = start;
    let mut lambda_prev = f64::NAN;
    let mut best = 0.0f64;
    for it in 0..POWER_ITER_MAX {
        let w = b * &v;
        let lambda = v.dot(&w);
        best = best.max(lambda);
        let wnorm = w.norm2();
        if wnorm == 0.0 {
            // v is (numerically) in the null space; nothing more to learn here.
            return (best, it, false);
        }
        v = w.scale(1.0 / wnorm);
        if !lambda_prev.is_nan() {
            let delta = (lambda - lambda_prev).abs();
            if delta <= POWER_ITER_RTOL * lambda.abs().max(f64::MIN_POSITIVE) {
                return (best, it, true);
            }
        }
        lambda_prev = lambda;
    }
    (best, POWER_ITER_MAX, false)
}

fn pseudorandom_unit(d: usize) -> Vector {
    let mut rng = SplitMix64::new(0x5EED_0F_5A175E17);
    loop {
        let data: Vec<f64> = (0..d)
            .map(|_| 2.0 * rng.next_f64() - 1.0)
            .collect();
        let v = Vector { data };
        let norm = v.norm2();
        if norm > 1e-3 {
            return v.scale(1.0 / norm);
        }
    }
}

/// Gershgorin lower bound on the eigenvalues of a symmetric matrix.
/// Cheap but crude; a negative bound does not prove indefiniteness.
pub fn gershgorin_lower_bound(m: &Matrix) -> f64 {
    assert!(m.is_square());
    let n = m.rows();
    let mut bound = f64::INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        for j in 0..n {
            if j != i {
                radius += m[(i, j)].abs();
            }
        }
        bound = bound.min(m[(i, i)] - radius);
    }
    bound
}

/// True when the symmetric matrix `m` is positive semidefinite within `tol`,
/// i.e. its minimum eigenvalue is at least `-tol`.
///
/// Tries the iteration-free Gershgorin bound first and falls back to a
/// Cholesky factorization of the shifted matrix `m + tol·I`.
pub fn is_psd_within(m: &Matrix, tol: f64) -> bool {
    assert!(m.is_square());
    if gershgorin_lower_bound(m) >= -tol {
        return true;
    }
    // Shift slightly beyond tol so factorization roundoff cannot flip the
    // verdict for a matrix sitting exactly on the boundary.
    let n = m.rows();
    let maxdiag = (0..n).fold(0.0f64, |acc, i| acc.max(m[(i, i)].abs()));
    let shift = tol + 16.0 * f64::EPSILON * maxdiag.max(1.0);
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    cholesky_succeeds(&shifted)
}

fn cholesky_succeeds(a: &Matrix) -> bool {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 {
            return false;
        }
        let ljj = libm::sqrt(d);
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    true
}

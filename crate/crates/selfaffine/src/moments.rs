//! Exact moments of the invariant measure.
//!
//! Three routes to the same numbers, kept deliberately independent:
//!
//! * the mean solves `[I − Σ p_k A_k]·EX = EB` (a d×d system);
//! * the second moment solves the d²×d² Kronecker system
//!   `[I⊗I − Σ p_k A_k⊗A_k]·vec(E XXᵀ) = vec(Σ p_k [b_k(A_k EX)ᵀ + (A_k EX)b_kᵀ + b_k b_kᵀ])`,
//!   and the covariance follows by subtracting `EX·EXᵀ`;
//! * when every map shares one linear part `A`, the covariance solves the
//!   discrete Lyapunov identity `C − A·C·Aᵀ = D²B` directly (the fast path);
//! * [`covariance_by_iteration`] iterates the moment pushforward to its fixed
//!   point and never touches the solver or the Kronecker product, so it can
//!   serve as an oracle for both exact paths.
//!
//! Every inverse in the formulas is realized as a pivoted linear solve.

use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{kron, solve, unvec, LinalgError, Matrix, Vector};
use crate::model::{IfsModel, ValidationReport};

/// Default tolerance for the fixed-point iteration oracle.
pub const DEFAULT_ITERATION_TOL: f64 = 1e-12;

/// Default iteration cap; covers contraction rates up to roughly 0.9997.
pub const DEFAULT_ITERATION_MAX: u64 = 100_000;

/// Off-diagonal tolerance when deciding that a shared linear part is diagonal.
const DIAGONAL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum MomentError {
    /// The model failed validation; exact solvers refuse it.
    InvalidModel(ValidationReport),
    /// The linear system was singular — the contraction assumption is broken.
    Singular(LinalgError),
    /// The fast path was forced but the maps do not share a linear part.
    UnequalLinearParts,
    /// The fixed-point iteration hit its cap; carries the partial state.
    NoConvergence { report: MomentReport },
    /// Iteration tolerance must be positive.
    InvalidTolerance { tol: f64 },
    /// Coordinate index out of range.
    IndexOutOfRange { index: usize, dim: usize },
}

impl fmt::Display for MomentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentError::InvalidModel(report) => {
                write!(f, "model failed validation (weight sum {})", report.weight_sum)
            }
            MomentError::Singular(e) => write!(f, "{e}"),
            MomentError::UnequalLinearParts => {
                write!(f, "equal-linear fast path requires all maps to share one linear part")
            }
            MomentError::NoConvergence { report } => write!(
                f,
                "fixed-point iteration did not converge within {} iterations (last delta {:e})",
                report.iterations.unwrap_or(0),
                report.residual
            ),
            MomentError::InvalidTolerance { tol } => {
                write!(f, "iteration tolerance must be positive, got {tol}")
            }
            MomentError::IndexOutOfRange { index, dim } => {
                write!(f, "coordinate index {index} out of range for dimension {dim}")
            }
        }
    }
}

impl core::error::Error for MomentError {}

/// Which formula produced a [`MomentReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentPath {
    /// Lyapunov solve on the shared linear part.
    EqualLinearFastPath,
    /// The general d²×d² Kronecker system.
    GeneralKroneckerPath,
    /// Fixed-point moment iteration.
    FixedPointIteration,
}

/// Path selection for [`covariance_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathSelect {
    /// Fast path when the linear parts agree, general path otherwise.
    Auto,
    /// Always the general Kronecker system.
    ForceGeneral,
    /// Always the Lyapunov fast path; errors on mixed linear parts.
    ForceEqualLinear,
}

/// Exact (or iterated) mean, second moment and covariance, with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// `EX`.
    pub mean: Vector,
    /// `E(X Xᵀ)`; entry (i,j) is `E[x_i x_j]`.
    pub second_moment: Matrix,
    /// `D²X = E(X Xᵀ) − EX·EXᵀ`, symmetric by construction.
    pub cov: Matrix,
    pub path: MomentPath,
    /// ∞-norm residual of the underlying solve (largest of the solves
    /// performed), or the last iteration delta on the iteration path.
    pub residual: f64,
    /// Iteration count; present only on the iteration path.
    pub iterations: Option<u64>,
}

/// Result of [`uncorrelated_test`].
#[derive(Debug, Clone, PartialEq)]
pub struct UncorrelatedReport {
    /// `cov(X_i, X_j)` from the exact solver.
    pub cov_x_ij: f64,
    /// `cov(B_i, B_j)` of the discrete offset variable.
    pub cov_b_ij: f64,
    pub x_uncorrelated: bool,
    pub b_uncorrelated: bool,
    /// True when the maps share a diagonal linear part, i.e. the
    /// equivalence "X_i, X_j uncorrelated iff B_i, B_j uncorrelated" applies.
    pub corollary_applicable: bool,
}

fn ensure_valid(model: &IfsModel) -> Result<(), MomentError> {
    let report = model.validate();
    if report.pass {
        Ok(())
    } else {
        Err(MomentError::InvalidModel(report))
    }
}

fn solve_with_residual(sys: &Matrix, rhs: &Vector) -> Result<(Vector, f64), LinalgError> {
    let x = solve(sys, rhs)?;
    let residual = (&sys.matvec(&x) - rhs).max_abs();
    Ok((x, residual))
}

/// `[I − Σ p_k A_k]·EX = EB`, solved without forming an inverse.
fn mean_solve(model: &IfsModel) -> Result<(Vector, f64), LinalgError> {
    let d = model.dim();
    let mut sys = Matrix::identity(d);
    for (map, w) in model.maps().iter().zip(model.weights()) {
        sys.axpy(-w, map.linear());
    }
    solve_with_residual(&sys, &model.b_stats().mean)
}

/// Exact mean `EX` of the invariant measure.
pub fn mean(model: &IfsModel) -> Result<Vector, MomentError> {
    ensure_valid(model)?;
    mean_solve(model)
        .map(|(x, _)| x)
        .map_err(MomentError::Singular)
}

fn second_moment_solve(model: &IfsModel) -> Result<(Vector, Matrix, f64), LinalgError> {
    let d = model.dim();
    let (ex, mean_res) = mean_solve(model)?;

    let mut sys = Matrix::identity(d * d);
    for (map, w) in model.maps().iter().zip(model.weights()) {
        sys.axpy(-w, &kron(map.linear(), map.linear()));
    }

    let mut rhs = Matrix::zeros(d, d);
    for (map, w) in model.maps().iter().zip(model.weights()) {
        let b = map.offset();
        let aex = map.linear().matvec(&ex);
        rhs.axpy(*w, &b.outer(&aex));
        rhs.axpy(*w, &aex.outer(b));
        rhs.axpy(*w, &b.outer(b));
    }

    let (x, res) = solve_with_residual(&sys, &rhs.vec_cols())?;
    let second = unvec(&x, d).expect("solution length is d^2").symmetrized();
    Ok((ex, second, mean_res.max(res)))
}

/// Exact second-moment matrix `E(X Xᵀ)` via the general Kronecker system.
pub fn second_moment(model: &IfsModel) -> Result<Matrix, MomentError> {
    ensure_valid(model)?;
    second_moment_solve(model)
        .map(|(_, s, _)| s)
        .map_err(MomentError::Singular)
}

fn equal_linear_solve(a: &Matrix, b_cov: &Matrix) -> Result<(Matrix, f64), LinalgError> {
    let d = a.rows();
    let mut sys = Matrix::identity(d * d);
    sys.axpy(-1.0, &kron(a, a));
    let (x, res) = solve_with_residual(&sys, &b_cov.vec_cols())?;
    Ok((unvec(&x, d).expect("solution length is d^2").symmetrized(), res))
}

/// Solve `C − A·C·Aᵀ = b_cov` for the covariance `C` (the equal-linear-part
/// fast path). Requires `‖a‖ < 1` and a symmetric PSD `b_cov`.
pub fn covariance_equal_linear(a: &Matrix, b_cov: &Matrix) -> Result<Matrix, MomentError> {
    assert!(a.is_square(), "linear part must be square");
    assert_eq!(a.rows(), b_cov.rows(), "dimension mismatch");
    assert!(b_cov.is_square(), "b_cov must be square");
    equal_linear_solve(a, b_cov)
        .map(|(c, _)| c)
        .map_err(MomentError::Singular)
}

/// Exact covariance with automatic path selection.
pub fn covariance(model: &IfsModel) -> Result<MomentReport, MomentError> {
    covariance_with(model, PathSelect::Auto)
}

/// Exact covariance via the selected path.
pub fn covariance_with(model: &IfsModel, select: PathSelect) -> Result<MomentReport, MomentError> {
    ensure_valid(model)?;
    let shared = model.uniform_linear_part();
    let use_fast = match select {
        PathSelect::Auto => shared.is_some(),
        PathSelect::ForceGeneral => false,
        PathSelect::ForceEqualLinear => {
            if shared.is_none() {
                return Err(MomentError::UnequalLinearParts);
            }
            true
        }
    };

    if use_fast {
        let a = shared.expect("checked above");
        let (ex, mean_res) = mean_solve(model).map_err(MomentError::Singular)?;
        let b_cov = model.b_stats().cov;
        let (cov, res) = equal_linear_solve(&a, &b_cov).map_err(MomentError::Singular)?;
        let second = &cov + &ex.outer(&ex);
        Ok(MomentReport {
            mean: ex,
            second_moment: second,
            cov,
            path: MomentPath::EqualLinearFastPath,
            residual: mean_res.max(res),
            iterations: None,
        })
    } else {
        let (ex, second, residual) = second_moment_solve(model).map_err(MomentError::Singular)?;
        let cov = &second - &ex.outer(&ex);
        Ok(MomentReport {
            mean: ex,
            second_moment: second,
            cov,
            path: MomentPath::GeneralKroneckerPath,
            residual,
            iterations: None,
        })
    }
}

/// Fixed-point iteration oracle: pushes the zero moments through
/// `m ← Σ p_k (A_k m + b_k)` and
/// `M ← Σ p_k [A_k M A_kᵀ + (A_k m) b_kᵀ + b_k (A_k m)ᵀ + b_k b_kᵀ]`
/// until both updates move less than `tol` in the ∞-norm.
///
/// Deliberately never calls the linear solver or the Kronecker product, so
/// agreement with [`covariance`] genuinely cross-checks the direct route.
pub fn covariance_by_iteration(
    model: &IfsModel,
    tol: f64,
    max_iter: u64,
) -> Result<MomentReport, MomentError> {
    ensure_valid(model)?;
    if !(tol > 0.0) {
        return Err(MomentError::InvalidTolerance { tol });
    }

    let d = model.dim();
    let transposes: Vec<Matrix> = model.maps().iter().map(|m| m.linear().transpose()).collect();
    let mut mean = Vector::zeros(d);
    let mut second = Matrix::zeros(d, d);
    let mut delta = f64::INFINITY;
    let mut iterations = 0u64;

    while iterations < max_iter {
        let mut next_mean = Vector::zeros(d);
        let mut next_second = Matrix::zeros(d, d);
        for ((map, w), at) in model.maps().iter().zip(model.weights()).zip(&transposes) {
            let b = map.offset();
            let am = map.linear().matvec(&mean);
            next_mean.axpy(*w, &am);
            next_mean.axpy(*w, b);

            let amat = map.linear().matmul(&second).matmul(at);
            next_second.axpy(*w, &amat);
            next_second.axpy(*w, &am.outer(b));
            next_second.axpy(*w, &b.outer(&am));
            next_second.axpy(*w, &b.outer(b));
        }
        iterations += 1;
        delta = (&next_mean - &mean)
            .max_abs()
            .max((&next_second - &second).max_abs());
        mean = next_mean;
        second = next_second;
        if delta < tol {
            break;
        }
    }

    let second = second.symmetrized();
    let cov = &second - &mean.outer(&mean);
    let report = MomentReport {
        mean,
        second_moment: second,
        cov,
        path: MomentPath::FixedPointIteration,
        residual: delta,
        iterations: Some(iterations),
    };
    if delta < tol {
        Ok(report)
    } else {
        Err(MomentError::NoConvergence { report })
    }
}

/// Exact uncorrelatedness check for coordinates `i` and `j`, paired with the
/// same check on the discrete offset variable.
pub fn uncorrelated_test(
    model: &IfsModel,
    i: usize,
    j: usize,
    tol: f64,
) -> Result<UncorrelatedReport, MomentError> {
    let d = model.dim();
    for index in [i, j] {
        if index >= d {
            return Err(MomentError::IndexOutOfRange { index, dim: d });
        }
    }
    let report = covariance(model)?;
    let b_stats = model.b_stats();
    let cov_x_ij = report.cov[(i, j)];
    let cov_b_ij = b_stats.cov[(i, j)];
    let corollary_applicable = model
        .uniform_linear_part()
        .is_some_and(|a| is_diagonal(&a));
    Ok(UncorrelatedReport {
        cov_x_ij,
        cov_b_ij,
        x_uncorrelated: cov_x_ij.abs() < tol,
        b_uncorrelated: cov_b_ij.abs() < tol,
        corollary_applicable,
    })
}

fn is_diagonal(m: &Matrix) -> bool {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j && m[(i, j)].abs() > DIAGONAL_TOL {
                return false;
            }
        }
    }
    true
}

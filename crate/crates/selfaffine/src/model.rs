//! The iterated function system `{S_k(x) = A_k x + b_k, p_k}` and the
//! statistics of the discrete offset variable `B` (value `b_k` with
//! probability `p_k`).
//!
//! Construction checks structure only (shared dimension, matching lengths,
//! finite entries); the probabilistic and contraction invariants are checked
//! by [`IfsModel::validate`], which reports failures instead of erroring so a
//! CLI can show the user every violated condition at once. The exact moment
//! solvers refuse models whose validation report fails.

use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{solve, spectral_norm, KahanSum, LinalgError, Matrix, Vector};

/// Weights must be nonnegative and sum to 1 within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Contraction is enforced strictly: `‖A_k‖ < 1 − CONTRACTION_MARGIN`.
pub const CONTRACTION_MARGIN: f64 = 1e-12;

/// Linear parts are considered shared when they agree entrywise within this
/// absolute tolerance.
pub const UNIFORM_LINEAR_TOL: f64 = 1e-14;

/// Operator norm used by validation (resolves the ambiguity of "operator
/// norm": this crate uses the spectral, i.e. Euclidean, norm).
pub const OPERATOR_NORM: &str = "spectral";

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// A model needs at least one map.
    Empty,
    /// The linear part of a map is not square.
    NonSquareLinear { rows: usize, cols: usize },
    /// A map's dimension disagrees with the model's (or its own offset's).
    DimensionMismatch { expected: usize, got: usize },
    /// maps and weights have different lengths.
    WeightCountMismatch { maps: usize, weights: usize },
    /// A weight is NaN or infinite.
    NonFiniteWeight { index: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Empty => write!(f, "model has no maps"),
            ModelError::NonSquareLinear { rows, cols } => {
                write!(f, "linear part must be square, got {rows}x{cols}")
            }
            ModelError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            ModelError::WeightCountMismatch { maps, weights } => {
                write!(f, "{maps} maps but {weights} weights")
            }
            ModelError::NonFiniteWeight { index } => {
                write!(f, "weight {index} is not finite")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// One affine contraction `S(x) = A·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    linear: Matrix,
    offset: Vector,
}

impl AffineMap {
    pub fn new(linear: Matrix, offset: Vector) -> Result<Self, ModelError> {
        if !linear.is_square() {
            return Err(ModelError::NonSquareLinear {
                rows: linear.rows(),
                cols: linear.cols(),
            });
        }
        if linear.rows() != offset.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: linear.rows(),
                got: offset.dim(),
            });
        }
        Ok(Self { linear, offset })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.offset.dim()
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    /// `A·x + b`.
    pub fn apply(&self, x: &Vector) -> Vector {
        let mut out = self.linear.matvec(x);
        out.axpy(1.0, &self.offset);
        out
    }

    /// The unique fixed point `(I − A)⁻¹ b` of a contractive map.
    pub fn fixed_point(&self) -> Result<Vector, LinalgError> {
        let mut system = Matrix::identity(self.dim());
        system.axpy(-1.0, &self.linear);
        solve(&system, &self.offset)
    }
}

/// A validated-on-demand IFS: affine maps plus probability weights.
/// Immutable after construction; houses the invariant measure implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct IfsModel {
    dim: usize,
    maps: Vec<AffineMap>,
    weights: Vec<f64>,
}

/// Per-map entry of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct MapCheck {
    /// Spectral norm of the map's linear part.
    pub norm: f64,
    /// Whether the norm satisfies the strict contraction bound.
    pub contractive: bool,
}

/// Outcome of [`IfsModel::validate`]. Failures are entries, not errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub maps: Vec<MapCheck>,
    pub weight_sum: f64,
    pub weights_nonnegative: bool,
    pub weight_sum_ok: bool,
    pub pass: bool,
}

/// Mean, second moment and covariance of the discrete offset variable `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStats {
    /// `Σ p_k b_k`.
    pub mean: Vector,
    /// `Σ p_k b_k b_kᵀ`.
    pub second_moment: Matrix,
    /// `second_moment − mean·meanᵀ`.
    pub cov: Matrix,
}

impl IfsModel {
    /// Structural construction: shared dimension, matching lengths, finite
    /// weights. Does not check contraction or stochasticity — see
    /// [`IfsModel::validate`].
    pub fn new(maps: Vec<AffineMap>, weights: Vec<f64>) -> Result<Self, ModelError> {
        let first = maps.first().ok_or(ModelError::Empty)?;
        let dim = first.dim();
        for map in &maps {
            if map.dim() != dim {
                return Err(ModelError::DimensionMismatch {
                    expected: dim,
                    got: map.dim(),
                });
            }
        }
        if weights.len() != maps.len() {
            return Err(ModelError::WeightCountMismatch {
                maps: maps.len(),
                weights: weights.len(),
            });
        }
        for (index, w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(ModelError::NonFiniteWeight { index });
            }
        }
        Ok(Self { dim, maps, weights })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of maps.
    #[inline]
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one map
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Check the contraction bound for every map and the stochasticity of the
    /// weights. Zero-weight maps are still required to be contractive; they
    /// are legal but must not hide an invalid map.
    pub fn validate(&self) -> ValidationReport {
        let maps: Vec<MapCheck> = self
            .maps
            .iter()
            .map(|map| {
                let norm = spectral_norm(map.linear());
                MapCheck {
                    norm,
                    contractive: norm < 1.0 - CONTRACTION_MARGIN,
                }
            })
            .collect();

        let mut sum = KahanSum::new();
        for w in &self.weights {
            sum.add(*w);
        }
        let weight_sum = sum.value();
        let weights_nonnegative = self.weights.iter().all(|w| *w >= 0.0);
        let weight_sum_ok = (weight_sum - 1.0).abs() <= WEIGHT_SUM_TOL;

        let pass = weights_nonnegative && weight_sum_ok && maps.iter().all(|c| c.contractive);
        ValidationReport {
            maps,
            weight_sum,
            weights_nonnegative,
            weight_sum_ok,
            pass,
        }
    }

    /// Statistics of the discrete offset variable `B`. Sums run in ascending
    /// map order with compensated accumulation.
    pub fn b_stats(&self) -> DiscreteStats {
        let d = self.dim;
        let mut mean = Vector::zeros(d);
        for i in 0..d {
            let mut acc = KahanSum::new();
            for (map, w) in self.maps.iter().zip(&self.weights) {
                acc.add(w * map.offset()[i]);
            }
            mean[i] = acc.value();
        }

        let mut second = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = KahanSum::new();
                for (map, w) in self.maps.iter().zip(&self.weights) {
                    let b = map.offset();
                    acc.add(w * (b[i] * b[j]));
                }
                second[(i, j)] = acc.value();
            }
        }

        let cov = &second - &mean.outer(&mean);
        DiscreteStats {
            mean,
            second_moment: second,
            cov,
        }
    }

    /// The shared linear part `A`, when all maps agree entrywise within
    /// [`UNIFORM_LINEAR_TOL`]. Returns the first map's matrix.
    pub fn uniform_linear_part(&self) -> Option<Matrix> {
        let first = self.maps[0].linear();
        for map in &self.maps[1..] {
            let a = map.linear();
            for i in 0..self.dim {
                for j in 0..self.dim {
                    if (a[(i, j)] - first[(i, j)]).abs() > UNIFORM_LINEAR_TOL {
                        return None;
                    }
                }
            }
        }
        Some(first.clone())
    }
}

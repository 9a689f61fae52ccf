//! Exact means and covariance matrices of self-affine measures.
//!
//! A self-affine measure is the unique probability measure `μ` left invariant
//! by an iterated function system (IFS) of affine contractions
//! `S_k(x) = A_k x + b_k` with probability weights `p_k`:
//!
//! ```text
//! μ = Σ_k p_k · μ ∘ S_k⁻¹
//! ```
//!
//! Although `μ` itself has no closed form in general, its first and second
//! moments do: the mean solves a small `d × d` linear system, and the second
//! moment matrix solves a `d² × d²` Kronecker-product system. When every map
//! shares one linear part `A`, the covariance additionally satisfies the
//! discrete Lyapunov identity `C − A·C·Aᵀ = D²B`, where `D²B` is the
//! covariance of the discrete offset variable. This crate computes all of
//! these exactly (up to linear-solver roundoff) and cross-checks them with
//! two independent oracles: a fixed-point moment iteration and a chaos-game
//! Monte Carlo sampler.
//!
//! The crate is `no_std` (it requires `alloc`); file formats, rendering and
//! the command-line interface live in the companion `selfaffine-cli` crate.
//!
//! * [`linalg`] — dense kernels: Kronecker product, column-major `vec`,
//!   pivoted Gaussian elimination, spectral norm.
//! * [`model`] — the validated IFS definition and offset statistics.
//! * [`moments`] — exact mean / second-moment / covariance solvers plus the
//!   fixed-point iteration oracle.
//! * [`chaos`] — reproducible chaos-game sampling and rasterization.
//! * [`rng`] — the pinned splitmix64 / xoshiro256** generators.

#![no_std]

extern crate alloc;

pub mod chaos;
pub mod linalg;
pub mod model;
pub mod moments;
pub mod rng;

#[cfg(test)]
pub(crate) mod testutil;

pub use chaos::{
    default_bbox, raster, sample, sample_sharded, BoundingBox, ChaosError, EmpiricalStats,
    RasterImage,
};
pub use linalg::{kron, solve, spectral_norm, unvec, LinalgError, Matrix, Vector};
pub use model::{AffineMap, DiscreteStats, IfsModel, ModelError, ValidationReport};
pub use moments::{
    covariance, covariance_by_iteration, covariance_equal_linear, covariance_with, mean,
    second_moment, uncorrelated_test, MomentError, MomentPath, MomentReport, PathSelect,
    UncorrelatedReport,
};

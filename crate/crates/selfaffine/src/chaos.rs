//! Chaos-game sampling of the invariant measure.
//!
//! The chaos game draws a trajectory `x ← A_k x + b_k`, picking map `k` with
//! probability `p_k` each step; after a burn-in the visited points are
//! distributed like μ. Statistics stream through a multivariate Welford
//! accumulator (numerically stable, single pass), shards merge exactly via
//! pairwise pooling, and everything is bit-reproducible for a given seed.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{LinalgError, Matrix, Vector};
use crate::model::{IfsModel, ValidationReport};
use crate::rng::Xoshiro256StarStar;

/// Default number of burn-in steps before statistics start accumulating.
pub const DEFAULT_BURN_IN: u64 = 100;

/// Fraction of the fixed-point hull span added on each side of the default
/// raster bounding box.
const BBOX_MARGIN: f64 = 0.05;

/// Half-width used per axis when the fixed-point hull is degenerate there.
const BBOX_DEGENERATE_HALF_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum ChaosError {
    /// The model failed validation; the sampler refuses it.
    InvalidModel(ValidationReport),
    /// Unbiased covariance needs at least two samples.
    TooFewSamples { n: u64 },
    /// Sharded sampling needs at least one shard.
    ZeroShards,
    /// Rasterization is defined for two-dimensional models only.
    DimensionUnsupported { dim: usize },
    /// Raster dimensions must be at least 1×1.
    InvalidRasterSize { width: u32, height: u32 },
    /// Bounding-box corners must be finite with positive extent on each axis.
    InvalidBoundingBox,
    /// A fixed-point solve failed while deriving the default bounding box.
    Singular(LinalgError),
}

impl fmt::Display for ChaosError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChaosError::InvalidModel(report) => {
                write!(f, "model failed validation (weight sum {})", report.weight_sum)
            }
            ChaosError::TooFewSamples { n } => {
                write!(f, "need at least 2 samples for unbiased covariance, got {n}")
            }
            ChaosError::ZeroShards => write!(f, "shard count must be at least 1"),
            ChaosError::DimensionUnsupported { dim } => {
                write!(f, "rasterization requires a 2-dimensional model, got dimension {dim}")
            }
            ChaosError::InvalidRasterSize { width, height } => {
                write!(f, "raster size must be at least 1x1, got {width}x{height}")
            }
            ChaosError::InvalidBoundingBox => {
                write!(f, "bounding box must be finite with min < max on both axes")
            }
            ChaosError::Singular(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ChaosError {}

/// Axis-aligned box in the plane, used to frame raster output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn new(min_x: f64, max_x: f64, min_y: f64, max_y: f64) -> Result<Self, ChaosError> {
        let all_finite = [min_x, max_x, min_y, max_y].iter().all(|v| v.is_finite());
        if !all_finite || !(min_x < max_x) || !(min_y < max_y) {
            return Err(ChaosError::InvalidBoundingBox);
        }
        Ok(BoundingBox { min_x, max_x, min_y, max_y })
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

/// Streaming sample statistics from [`sample`] or [`sample_sharded`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats {
    /// Number of post-burn-in samples pooled into the estimate.
    pub n: u64,
    /// Sample mean.
    pub mean: Vector,
    /// Unbiased sample covariance (divisor `n − 1`), exactly symmetric.
    pub cov: Matrix,
    /// Per-coordinate standard error of the mean, `√(cov[i][i] / n)`.
    pub mean_stderr: Vector,
    /// Base seed the estimate was produced from.
    pub seed: u64,
    /// Burn-in steps discarded per chain.
    pub burn_in: u64,
}

/// Hit-count image produced by [`raster`]. Row 0 is the top of the bounding
/// box; counts are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub bbox: BoundingBox,
    pub counts: Vec<u64>,
    /// Trajectory points that fell outside the bounding box.
    pub dropped: u64,
}

impl RasterImage {
    pub fn count(&self, row: u32, col: u32) -> u64 {
        self.counts[row as usize * self.width as usize + col as usize]
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// One chaos-game trajectory: deterministic function of the seed.
struct ChaosGame<'a> {
    model: &'a IfsModel,
    cumulative: Vec<f64>,
    rng: Xoshiro256StarStar,
    x: Vector,
}

impl<'a> ChaosGame<'a> {
    fn new(model: &'a IfsModel, seed: u64) -> Self {
        let mut cumulative = Vec::with_capacity(model.len());
        let mut running = 0.0;
        for w in model.weights() {
            running += w;
            cumulative.push(running);
        }

        // Start at the unweighted mean of the offsets: always well inside
        // the attractor's basin, and independent of the weights.
        let mut x = Vector::zeros(model.dim());
        for map in model.maps() {
            x.axpy(1.0 / model.len() as f64, map.offset());
        }

        ChaosGame { model, cumulative, rng: Xoshiro256StarStar::from_seed(seed), x }
    }

    fn step(&mut self) -> &Vector {
        let u = self.rng.next_f64();
        let mut k = self.cumulative.len() - 1;
        for (index, bound) in self.cumulative.iter().enumerate() {
            if u < *bound {
                k = index;
                break;
            }
        }
        self.x = self.model.maps()[k].apply(&self.x);
        &self.x
    }
}

/// Multivariate Welford accumulator; `m2` holds the upper triangle of the
/// centered second-moment sums.
struct Accumulator {
    dim: usize,
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Accumulator {
    fn new(dim: usize) -> Self {
        Accumulator { dim, n: 0, mean: vec![0.0; dim], m2: vec![0.0; dim * dim] }
    }

    fn push(&mut self, x: &Vector) {
        let d = self.dim;
        self.n += 1;
        let count = self.n as f64;
        let mut delta = vec![0.0; d];
        for i in 0..d {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / count;
        }
        for i in 0..d {
            // delta uses the old mean, the second factor the updated one.
            let delta2_i = x[i] - self.mean[i];
            for j in 0..=i {
                self.m2[j * d + i] += delta[j] * delta2_i;
            }
        }
    }

    /// Exact pairwise pooling of two disjoint accumulators.
    fn merge(mut self, other: Accumulator) -> Accumulator {
        debug_assert_eq!(self.dim, other.dim);
        if other.n == 0 {
            return self;
        }
        if self.n == 0 {
            return other;
        }
        let d = self.dim;
        let n1 = self.n as f64;
        let n2 = other.n as f64;
        let n = n1 + n2;
        let mut delta = vec![0.0; d];
        for i in 0..d {
            delta[i] = other.mean[i] - self.mean[i];
        }
        for i in 0..d {
            for j in i..d {
                self.m2[i * d + j] += other.m2[i * d + j] + delta[i] * delta[j] * n1 * n2 / n;
            }
        }
        for i in 0..d {
            self.mean[i] += delta[i] * n2 / n;
        }
        self.n += other.n;
        self
    }

    fn finalize(self, seed: u64, burn_in: u64) -> EmpiricalStats {
        let d = self.dim;
        let denom = (self.n - 1) as f64;
        let mut cov = Matrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let value = self.m2[i * d + j] / denom;
                cov[(i, j)] = value;
                cov[(j, i)] = value;
            }
        }
        let mut stderr = Vector::zeros(d);
        for i in 0..d {
            stderr[i] = libm::sqrt(cov[(i, i)] / self.n as f64);
        }
        EmpiricalStats {
            n: self.n,
            mean: Vector::new(self.mean).expect("finite accumulator state"),
            cov,
            mean_stderr: stderr,
            seed,
            burn_in,
        }
    }
}

fn ensure_valid(model: &IfsModel) -> Result<(), ChaosError> {
    let report = model.validate();
    if report.pass {
        Ok(())
    } else {
        Err(ChaosError::InvalidModel(report))
    }
}

fn run_chain(model: &IfsModel, n: u64, burn_in: u64, seed: u64) -> Accumulator {
    let mut game = ChaosGame::new(model, seed);
    for _ in 0..burn_in {
        game.step();
    }
    let mut acc = Accumulator::new(model.dim());
    for _ in 0..n {
        let x = game.step();
        acc.push(x);
    }
    acc
}

/// Run the chaos game for `n` post-burn-in steps and stream mean and
/// covariance. Bit-reproducible: the same arguments always give the same
/// result.
pub fn sample(
    model: &IfsModel,
    n: u64,
    burn_in: u64,
    seed: u64,
) -> Result<EmpiricalStats, ChaosError> {
    ensure_valid(model)?;
    if n < 2 {
        return Err(ChaosError::TooFewSamples { n });
    }
    Ok(run_chain(model, n, burn_in, seed).finalize(seed, burn_in))
}

/// Run `shards` independent chains (shard `s` is seeded `seed + s` and runs
/// its own burn-in) and pool them exactly. `shards = 1` is bit-identical to
/// [`sample`]. Samples split as evenly as possible, earlier shards taking the
/// remainder.
pub fn sample_sharded(
    model: &IfsModel,
    n: u64,
    burn_in: u64,
    seed: u64,
    shards: u64,
) -> Result<EmpiricalStats, ChaosError> {
    ensure_valid(model)?;
    if shards == 0 {
        return Err(ChaosError::ZeroShards);
    }
    if n < 2 {
        return Err(ChaosError::TooFewSamples { n });
    }
    let base = n / shards;
    let remainder = n % shards;
    let mut pooled = Accumulator::new(model.dim());
    for s in 0..shards {
        let share = base + u64::from(s < remainder);
        if share == 0 {
            continue;
        }
        let shard_seed = seed.wrapping_add(s);
        pooled = pooled.merge(run_chain(model, share, burn_in, shard_seed));
    }
    Ok(pooled.finalize(seed, burn_in))
}

/// Default bounding box: the axis-aligned hull of the maps' fixed points,
/// expanded by 5% of the span on each side; axes with zero span get ±0.5.
pub fn default_bbox(model: &IfsModel) -> Result<BoundingBox, ChaosError> {
    ensure_valid(model)?;
    if model.dim() != 2 {
        return Err(ChaosError::DimensionUnsupported { dim: model.dim() });
    }
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for map in model.maps() {
        let fp = map.fixed_point().map_err(ChaosError::Singular)?;
        for axis in 0..2 {
            min[axis] = min[axis].min(fp[axis]);
            max[axis] = max[axis].max(fp[axis]);
        }
    }
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for axis in 0..2 {
        let span = max[axis] - min[axis];
        if span > 0.0 {
            lo[axis] = min[axis] - BBOX_MARGIN * span;
            hi[axis] = max[axis] + BBOX_MARGIN * span;
        } else {
            lo[axis] = min[axis] - BBOX_DEGENERATE_HALF_WIDTH;
            hi[axis] = max[axis] + BBOX_DEGENERATE_HALF_WIDTH;
        }
    }
    BoundingBox::new(lo[0], hi[0], lo[1], hi[1])
}

/// Rasterize a chaos-game trajectory into per-pixel hit counts.
///
/// Points on the box edges land in the outermost pixels; points outside the
/// box are counted in `dropped`. Row 0 of the image is the top of the box.
pub fn raster(
    model: &IfsModel,
    width: u32,
    height: u32,
    n: u64,
    burn_in: u64,
    seed: u64,
    bbox: Option<BoundingBox>,
) -> Result<RasterImage, ChaosError> {
    ensure_valid(model)?;
    if model.dim() != 2 {
        return Err(ChaosError::DimensionUnsupported { dim: model.dim() });
    }
    if width == 0 || height == 0 {
        return Err(ChaosError::InvalidRasterSize { width, height });
    }
    let bbox = match bbox {
        Some(b) => b,
        None => default_bbox(model)?,
    };

    let w = width as usize;
    let h = height as usize;
    let mut counts = vec![0u64; w * h];
    let mut dropped = 0u64;
    let span_x = bbox.width();
    let span_y = bbox.height();

    let mut game = ChaosGame::new(model, seed);
    for _ in 0..burn_in {
        game.step();
    }
    for _ in 0..n {
        let x = game.step();
        let (px, py) = (x[0], x[1]);
        if !bbox.contains(px, py) {
            dropped += 1;
            continue;
        }
        let col = (((px - bbox.min_x) / span_x * width as f64) as usize).min(w - 1);
        let row_up = (((py - bbox.min_y) / span_y * height as f64) as usize).min(h - 1);
        let row = h - 1 - row_up;
        counts[row * w + col] += 1;
    }

    Ok(RasterImage { width, height, bbox, counts, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AffineMap;
    use crate::testutil::{bernoulli, sierpinski, single_map};

    fn two_point_model(a: (f64, f64), b: (f64, f64)) -> IfsModel {
        // Zero linear parts: the trajectory alternates over the offsets.
        let maps = vec![
            AffineMap::new(Matrix::zeros(2, 2), Vector::new(vec![a.0, a.1]).unwrap()).unwrap(),
            AffineMap::new(Matrix::zeros(2, 2), Vector::new(vec![b.0, b.1]).unwrap()).unwrap(),
        ];
        IfsModel::new(maps, vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let model = sierpinski(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
        let a = sample(&model, 10_000, 100, 42).unwrap();
        let b = sample(&model, 10_000, 100, 42).unwrap();
        assert_eq!(a.mean.as_slice(), b.mean.as_slice());
        assert_eq!(a.cov.as_slice(), b.cov.as_slice());
        assert_eq!(a.mean_stderr.as_slice(), b.mean_stderr.as_slice());

        let c = sample(&model, 10_000, 100, 43).unwrap();
        assert_ne!(a.mean.as_slice(), c.mean.as_slice());
    }

    #[test]
    fn sample_matches_exact_moments_statistically() {
        let model = sierpinski(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
        let stats = sample(&model, 200_000, 100, 7).unwrap();
        let exact = crate::moments::covariance(&model).unwrap();
        for i in 0..2 {
            let z = (stats.mean[i] - exact.mean[i]) / stats.mean_stderr[i];
            assert!(z.abs() < 5.0, "coordinate {i}: z = {z}");
        }
        assert!((&stats.cov - &exact.cov).max_abs() < 0.01);
    }

    #[test]
    fn bernoulli_variance_statistical() {
        let stats = sample(&bernoulli(0.5), 200_000, 100, 11).unwrap();
        assert!(stats.mean[0].abs() < 5.0 * stats.mean_stderr[0]);
        assert!((stats.cov[(0, 0)] - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn point_mass_has_zero_spread() {
        let stats = sample(&single_map(), 1_000, 200, 5).unwrap();
        assert!((stats.mean[0] - 2.0).abs() < 1e-9);
        assert!((stats.mean[1] - 2.0).abs() < 1e-9);
        assert!(stats.cov.max_abs() < 1e-18);
        assert!(stats.mean_stderr.max_abs() < 1e-12);
    }

    #[test]
    fn welford_matches_two_pass_reference() {
        // Small stream, two-pass reference computed in the test.
        let model = bernoulli(0.6);
        let stats = sample(&model, 1_000, 0, 99).unwrap();

        let mut game = ChaosGame::new(&model, 99);
        let xs: Vec<f64> = (0..1_000).map(|_| game.step()[0]).collect();
        let mean: f64 = xs.iter().sum::<f64>() / 1_000.0;
        let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        let var = ss / 999.0;

        assert!((stats.mean[0] - mean).abs() < 1e-12);
        assert!((stats.cov[(0, 0)] - var).abs() < 1e-12);
    }

    #[test]
    fn merge_equals_single_pass() {
        let model = sierpinski(0.2, 0.3, 0.5);
        let mut game = ChaosGame::new(&model, 1234);
        let points: Vec<Vector> = (0..1_000).map(|_| game.step().clone()).collect();

        let mut whole = Accumulator::new(2);
        for p in &points {
            whole.push(p);
        }
        let mut left = Accumulator::new(2);
        let mut right = Accumulator::new(2);
        for p in &points[..400] {
            left.push(p);
        }
        for p in &points[400..] {
            right.push(p);
        }
        let merged = left.merge(right);

        assert_eq!(merged.n, whole.n);
        for i in 0..2 {
            assert!((merged.mean[i] - whole.mean[i]).abs() < 1e-12);
        }
        for i in 0..2 {
            for j in i..2 {
                assert!((merged.m2[i * 2 + j] - whole.m2[i * 2 + j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_shard_is_bit_identical_to_sample() {
        let model = sierpinski(0.5, 0.25, 0.25);
        let direct = sample(&model, 5_000, 100, 77).unwrap();
        let sharded = sample_sharded(&model, 5_000, 100, 77, 1).unwrap();
        assert_eq!(direct, sharded);
    }

    #[test]
    fn sharded_pooling_is_consistent() {
        let model = sierpinski(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
        let stats = sample_sharded(&model, 100_001, 100, 31, 4).unwrap();
        assert_eq!(stats.n, 100_001);
        let exact = crate::moments::covariance(&model).unwrap();
        for i in 0..2 {
            let z = (stats.mean[i] - exact.mean[i]) / stats.mean_stderr[i];
            assert!(z.abs() < 5.0, "coordinate {i}: z = {z}");
        }
        assert!((&stats.cov - &exact.cov).max_abs() < 0.02);

        // Same arguments, same pooled result.
        let again = sample_sharded(&model, 100_001, 100, 31, 4).unwrap();
        assert_eq!(stats, again);
    }

    #[test]
    fn sampler_rejects_bad_arguments() {
        let model = bernoulli(0.5);
        assert!(matches!(
            sample(&model, 1, 0, 0),
            Err(ChaosError::TooFewSamples { n: 1 })
        ));
        assert!(matches!(
            sample_sharded(&model, 100, 0, 0, 0),
            Err(ChaosError::ZeroShards)
        ));

        let expanding = AffineMap::new(
            Matrix::new(1, 1, vec![1.5]).unwrap(),
            Vector::zeros(1),
        )
        .unwrap();
        let invalid = IfsModel::new(vec![expanding], vec![1.0]).unwrap();
        assert!(matches!(
            sample(&invalid, 100, 0, 0),
            Err(ChaosError::InvalidModel(_))
        ));
    }

    #[test]
    fn default_bbox_covers_sierpinski() {
        let model = sierpinski(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
        // Fixed points are the triangle's vertices: (0,0), (1,0), (0.5, √3/2).
        let bbox = default_bbox(&model).unwrap();
        assert!((bbox.min_x + 0.05).abs() < 1e-12);
        assert!((bbox.max_x - 1.05).abs() < 1e-12);
        let top = libm::sqrt(3.0) / 2.0;
        assert!((bbox.min_y + 0.05 * top).abs() < 1e-12);
        assert!((bbox.max_y - 1.05 * top).abs() < 1e-12);
    }

    #[test]
    fn default_bbox_degenerate_axis() {
        let bbox = default_bbox(&single_map()).unwrap();
        assert!((bbox.min_x - 1.5).abs() < 1e-12);
        assert!((bbox.max_x - 2.5).abs() < 1e-12);
        assert!((bbox.min_y - 1.5).abs() < 1e-12);
        assert!((bbox.max_y - 2.5).abs() < 1e-12);
    }

    #[test]
    fn raster_row_zero_is_top() {
        let model = two_point_model((0.25, 0.25), (0.75, 0.75));
        let bbox = BoundingBox::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let image = raster(&model, 4, 4, 1_000, 0, 9, Some(bbox)).unwrap();
        assert_eq!(image.dropped, 0);
        let total: u64 = image.counts.iter().sum();
        assert_eq!(total, 1_000);
        // High-y point (0.75, 0.75) must land in the top-most row.
        assert!(image.count(0, 3) > 0);
        assert!(image.count(2, 1) > 0);
        assert_eq!(image.count(0, 3) + image.count(2, 1), 1_000);
    }

    #[test]
    fn raster_clamps_edge_points() {
        let model = two_point_model((0.0, 0.0), (1.0, 1.0));
        let bbox = BoundingBox::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let image = raster(&model, 8, 8, 500, 0, 21, Some(bbox)).unwrap();
        // (1,1) is exactly on the max corner: kept, clamped into the last
        // column and first row.
        assert_eq!(image.dropped, 0);
        assert_eq!(image.counts.iter().sum::<u64>(), 500);
        assert!(image.count(0, 7) > 0);
        assert!(image.count(7, 0) > 0);
    }

    #[test]
    fn raster_counts_dropped_points() {
        let model = two_point_model((0.25, 0.25), (0.75, 0.75));
        let bbox = BoundingBox::new(0.0, 0.5, 0.0, 0.5).unwrap();
        let image = raster(&model, 4, 4, 1_000, 0, 13, Some(bbox)).unwrap();
        assert!(image.dropped > 0);
        assert_eq!(image.counts.iter().sum::<u64>() + image.dropped, 1_000);
    }

    #[test]
    fn raster_point_mass_hits_one_pixel() {
        let image = raster(&single_map(), 8, 8, 2_000, 100, 3, None).unwrap();
        assert_eq!(image.dropped, 0);
        assert_eq!(image.max_count(), 2_000);
        // Default box is (2 ± 0.5)²; the fixed point (2,2) sits at its
        // center, i.e. column 4 and the 4th row from the bottom.
        assert_eq!(image.count(3, 4), 2_000);
    }

    #[test]
    fn raster_rejects_bad_arguments() {
        assert!(matches!(
            raster(&single_map(), 0, 8, 100, 0, 0, None),
            Err(ChaosError::InvalidRasterSize { .. })
        ));
        let one_d = bernoulli(0.5);
        assert!(matches!(
            raster(&one_d, 8, 8, 100, 0, 0, None),
            Err(ChaosError::DimensionUnsupported { dim: 1 })
        ));
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, f64::NAN, 0.0, 1.0).is_err());
    }
}

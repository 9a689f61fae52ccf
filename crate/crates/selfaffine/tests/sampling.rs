//! Statistical gates for the chaos-game sampler against the exact solvers,
//! plus the raster geometry check on the Sierpinski attractor.

use selfaffine::rng::SplitMix64;
use selfaffine::{
    covariance, mean, raster, sample, spectral_norm, AffineMap, IfsModel, Matrix, Vector,
};

fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

fn random_contraction(rng: &mut SplitMix64, d: usize) -> Matrix {
    loop {
        let m = Matrix::new(d, d, (0..d * d).map(|_| uniform(rng, -1.0, 1.0)).collect()).unwrap();
        let norm = spectral_norm(&m);
        if norm > 1e-6 {
            return m.scale(uniform(rng, 0.1, 0.8) / norm);
        }
    }
}

fn random_model_2d(rng: &mut SplitMix64, l: usize) -> IfsModel {
    let maps: Vec<AffineMap> = (0..l)
        .map(|_| {
            let a = random_contraction(rng, 2);
            let b = Vector::new(vec![uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)]).unwrap();
            AffineMap::new(a, b).unwrap()
        })
        .collect();
    let raw: Vec<f64> = (0..l).map(|_| uniform(rng, 0.05, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.into_iter().map(|w| w / total).collect();
    IfsModel::new(maps, weights).unwrap()
}

fn sierpinski() -> IfsModel {
    let a = Matrix::identity(2).scale(0.5);
    let offsets = [
        [0.0, 0.0],
        [0.5, 0.0],
        [0.25, libm::sqrt(3.0) / 4.0],
    ];
    let maps: Vec<AffineMap> = offsets
        .iter()
        .map(|b| AffineMap::new(a.clone(), Vector::new(b.to_vec()).unwrap()).unwrap())
        .collect();
    IfsModel::new(maps, vec![1.0 / 3.0; 3]).unwrap()
}

#[test]
fn two_seeds_agree_within_combined_stderr() {
    let mut rng = SplitMix64::new(0x5EED);
    let mut models = vec![sierpinski()];
    for _ in 0..3 {
        let l = 2 + (rng.next_u64() % 3) as usize;
        models.push(random_model_2d(&mut rng, l));
    }
    for (index, model) in models.iter().enumerate() {
        let a = sample(model, 100_000, 100, 2_000 + index as u64).unwrap();
        let b = sample(model, 100_000, 100, 3_000 + index as u64).unwrap();
        for i in 0..model.dim() {
            let gap = (a.mean[i] - b.mean[i]).abs();
            let bound = 10.0 * (a.mean_stderr[i] + b.mean_stderr[i]);
            assert!(gap < bound, "model {index}, coordinate {i}: {gap} vs {bound}");
        }
    }
}

#[test]
fn empirical_means_match_exact_means_on_10_models() {
    let mut rng = SplitMix64::new(0xE4AC7);
    for index in 0..10u64 {
        let l = 1 + (rng.next_u64() % 4) as usize;
        let model = random_model_2d(&mut rng, l);
        let exact = mean(&model).unwrap();
        let stats = sample(&model, 1_000_000, 100, 1_000 + index).unwrap();
        for i in 0..2 {
            // Floor the stderr so point masses (l = 1, zero spread) fall back
            // to a 1e-10 absolute gate instead of a 0/0 z-score.
            let stderr = stats.mean_stderr[i].max(2e-11);
            let z = (stats.mean[i] - exact[i]) / stderr;
            assert!(z.abs() < 5.0, "model {index}, coordinate {i}: z = {z}");
        }
    }
}

#[test]
fn empirical_covariance_tracks_exact_covariance() {
    let model = sierpinski();
    let exact = covariance(&model).unwrap();
    let stats = sample(&model, 1_000_000, 100, 42).unwrap();
    assert!((&stats.cov - &exact.cov).max_abs() < 5e-3);
}

#[test]
fn sierpinski_central_hole_is_empty() {
    let model = sierpinski();
    let image = raster(&model, 256, 256, 100_000, 100, 42, None).unwrap();
    assert_eq!(image.dropped, 0, "default bbox must cover the attractor");

    // An axis-aligned region strictly inside the central removed triangle
    // (vertices (0.5,0), (0.25,√3/4), (0.75,√3/4)).
    let (box_x0, box_x1) = (0.42, 0.58);
    let (box_y0, box_y1) = (0.18, 0.40);

    let bbox = image.bbox;
    let mut inside = 0u64;
    let mut total = 0u64;
    for row in 0..256u32 {
        for col in 0..256u32 {
            let count = image.count(row, col);
            total += count;
            let cx = bbox.min_x + (col as f64 + 0.5) / 256.0 * bbox.width();
            let cy = bbox.max_y - (row as f64 + 0.5) / 256.0 * bbox.height();
            if cx >= box_x0 && cx <= box_x1 && cy >= box_y0 && cy <= box_y1 {
                inside += count;
            }
        }
    }
    assert_eq!(total, 100_000);
    assert!(
        (inside as f64) < 0.001 * total as f64,
        "hole received {inside} of {total} points"
    );
}

#[test]
fn raster_with_zero_samples_is_all_zero() {
    let image = raster(&sierpinski(), 32, 32, 0, 100, 1, None).unwrap();
    assert!(image.counts.iter().all(|c| *c == 0));
    assert_eq!(image.dropped, 0);
}

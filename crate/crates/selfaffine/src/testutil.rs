//! Shared model builders for unit tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Matrix, Vector};
use crate::model::{AffineMap, IfsModel};

/// Sierpinski triangle with vertices (0,0), (1,0), (1/2, √3/2): three maps
/// with linear part I/2 and offsets (0,0), (1/2,0), (1/4, √3/4).
pub fn sierpinski(p1: f64, p2: f64, p3: f64) -> IfsModel {
    let half = Matrix::identity(2).scale(0.5);
    let sqrt3 = libm::sqrt(3.0);
    let offsets = [
        vec![0.0, 0.0],
        vec![0.5, 0.0],
        vec![0.25, sqrt3 / 4.0],
    ];
    let maps: Vec<AffineMap> = offsets
        .into_iter()
        .map(|b| AffineMap::new(half.clone(), Vector::new(b).unwrap()).unwrap())
        .collect();
    IfsModel::new(maps, vec![p1, p2, p3]).unwrap()
}

/// Bernoulli convolution: S₁(x) = β(x+1), S₂(x) = β(x−1), equal weights.
pub fn bernoulli(beta: f64) -> IfsModel {
    let a = Matrix::new(1, 1, vec![beta]).unwrap();
    let maps = vec![
        AffineMap::new(a.clone(), Vector::new(vec![beta]).unwrap()).unwrap(),
        AffineMap::new(a, Vector::new(vec![-beta]).unwrap()).unwrap(),
    ];
    IfsModel::new(maps, vec![0.5, 0.5]).unwrap()
}

/// One map S(x) = x/2 + (1,1); the invariant measure is the point mass at (2,2).
pub fn single_map() -> IfsModel {
    let map = AffineMap::new(
        Matrix::identity(2).scale(0.5),
        Vector::new(vec![1.0, 1.0]).unwrap(),
    )
    .unwrap();
    IfsModel::new(vec![map], vec![1.0]).unwrap()
}

//! Binary PGM (P5) encoding of raster hit counts.
//!
//! Counts are compressed with `c ↦ round(255·ln(1+c)/ln(1+c_max))` so sparse
//! attractor images stay visible; an empty image is all black.

use selfaffine::RasterImage;

pub fn encode_pgm(image: &RasterImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    let c_max = image.max_count();
    if c_max == 0 {
        out.resize(out.len() + image.counts.len(), 0);
        return out;
    }
    let denom = (1.0 + c_max as f64).ln();
    out.extend(
        image
            .counts
            .iter()
            .map(|&c| (255.0 * (1.0 + c as f64).ln() / denom).round() as u8),
    );
    out
}

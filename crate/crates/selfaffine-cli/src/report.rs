//! Machine-readable JSON shapes for every CLI report.

use selfaffine::model::OPERATOR_NORM;
use selfaffine::{
    BoundingBox, EmpiricalStats, MomentPath, MomentReport, RasterImage, ValidationReport,
};
use serde::Serialize;

#[derive(Serialize)]
pub struct MapValidationJson {
    pub norm: f64,
    pub contractive: bool,
}

#[derive(Serialize)]
pub struct ValidationJson {
    pub pass: bool,
    /// Which operator norm the contraction check uses.
    pub operator_norm: &'static str,
    pub weight_sum: f64,
    pub weight_sum_ok: bool,
    pub weights_nonnegative: bool,
    pub maps: Vec<MapValidationJson>,
}

impl From<&ValidationReport> for ValidationJson {
    fn from(report: &ValidationReport) -> Self {
        ValidationJson {
            pass: report.pass,
            operator_norm: OPERATOR_NORM,
            weight_sum: report.weight_sum,
            weight_sum_ok: report.weight_sum_ok,
            weights_nonnegative: report.weights_nonnegative,
            maps: report
                .maps
                .iter()
                .map(|m| MapValidationJson { norm: m.norm, contractive: m.contractive })
                .collect(),
        }
    }
}

pub fn path_name(path: MomentPath) -> &'static str {
    match path {
        MomentPath::EqualLinearFastPath => "fast",
        MomentPath::GeneralKroneckerPath => "general",
        MomentPath::FixedPointIteration => "iterate",
    }
}

#[derive(Serialize)]
pub struct MomentJson {
    pub path: &'static str,
    pub mean: Vec<f64>,
    pub second_moment: Vec<Vec<f64>>,
    pub cov: Vec<Vec<f64>>,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
}

impl From<&MomentReport> for MomentJson {
    fn from(report: &MomentReport) -> Self {
        MomentJson {
            path: path_name(report.path),
            mean: report.mean.to_vec(),
            second_moment: report.second_moment.to_rows(),
            cov: report.cov.to_rows(),
            residual: report.residual,
            iterations: report.iterations,
        }
    }
}

#[derive(Serialize)]
pub struct EmpiricalJson {
    pub n: u64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub mean_stderr: Vec<f64>,
    pub seed: u64,
    pub burn_in: u64,
    pub shards: u64,
}

impl EmpiricalJson {
    pub fn new(stats: &EmpiricalStats, shards: u64) -> Self {
        EmpiricalJson {
            n: stats.n,
            mean: stats.mean.to_vec(),
            cov: stats.cov.to_rows(),
            mean_stderr: stats.mean_stderr.to_vec(),
            seed: stats.seed,
            burn_in: stats.burn_in,
            shards,
        }
    }
}

#[derive(Serialize)]
pub struct ComparisonJson {
    pub verdict: &'static str,
    pub tol: f64,
    pub sigma: f64,
    pub max_abs_diff_exact_vs_iterated: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zscores_exact_vs_empirical: Option<Vec<f64>>,
    pub exact: MomentJson,
    pub iterated: MomentJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical: Option<EmpiricalJson>,
}

#[derive(Serialize)]
pub struct BoundingBoxJson {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl From<&BoundingBox> for BoundingBoxJson {
    fn from(b: &BoundingBox) -> Self {
        BoundingBoxJson { min: [b.min_x, b.min_y], max: [b.max_x, b.max_y] }
    }
}

/// Summary printed by `render`; the pixels themselves go to the PGM file.
#[derive(Serialize)]
pub struct RenderJson {
    pub out: String,
    pub width: u32,
    pub height: u32,
    pub n: u64,
    pub dropped: u64,
    pub max_count: u64,
    pub seed: u64,
    pub bbox: BoundingBoxJson,
}

impl RenderJson {
    pub fn new(image: &RasterImage, out: &str, n: u64, seed: u64) -> Self {
        RenderJson {
            out: out.to_owned(),
            width: image.width,
            height: image.height,
            n,
            dropped: image.dropped,
            max_count: image.max_count(),
            seed,
            bbox: BoundingBoxJson::from(&image.bbox),
        }
    }
}

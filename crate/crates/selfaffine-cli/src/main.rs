//! `selfaffine` — exact and sampled moments of self-affine measures.
//!
//! Subcommands: `validate`, `moments`, `sample`, `compare`, `render`.
//! Reports go to stdout as single-line JSON; prose diagnostics go to stderr.
//!
//! Exit codes are a stable contract:
//! 0 success / comparison agrees, 1 unreadable or malformed input,
//! 2 model fails validation (or a solve turns out singular),
//! 3 precondition violated (wrong path forced, bad sampler arguments,
//! iteration budget exhausted), 4 comparison disagrees.

use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use selfaffine::moments::{DEFAULT_ITERATION_MAX, DEFAULT_ITERATION_TOL};
use selfaffine::{
    covariance_by_iteration, covariance_with, raster, sample, sample_sharded, BoundingBox,
    ChaosError, IfsModel, MomentError, MomentReport, PathSelect,
};
use selfaffine_cli::format::parse_ifs;
use selfaffine_cli::pgm::encode_pgm;
use selfaffine_cli::report::{
    ComparisonJson, EmpiricalJson, MomentJson, RenderJson, ValidationJson,
};

const EXIT_OK: i32 = 0;
const EXIT_PARSE: i32 = 1;
const EXIT_VALIDATION: i32 = 2;
const EXIT_PRECONDITION: i32 = 3;
const EXIT_DISAGREE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "selfaffine",
    version,
    about = "Exact means and covariances of self-affine (IFS-invariant) measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check contraction norms and probability weights of a model file.
    Validate {
        /// IFS model JSON file.
        file: PathBuf,
    },
    /// Compute the exact mean, second moment and covariance.
    Moments {
        /// IFS model JSON file.
        file: PathBuf,
        /// Formula to use: auto picks fast when all linear parts agree.
        #[arg(long = "path", value_enum, default_value_t = PathChoice::Auto)]
        path: PathChoice,
        /// Convergence tolerance for --path=iterate.
        #[arg(long, default_value_t = DEFAULT_ITERATION_TOL)]
        tol: f64,
        /// Iteration cap for --path=iterate.
        #[arg(long = "max-iter", default_value_t = DEFAULT_ITERATION_MAX)]
        max_iter: u64,
    },
    /// Estimate moments by chaos-game sampling.
    Sample {
        /// IFS model JSON file.
        file: PathBuf,
        /// Number of post-burn-in samples.
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        /// Steps discarded before statistics start.
        #[arg(long = "burn-in", default_value_t = 100)]
        burn_in: u64,
        /// Base RNG seed; results are bit-reproducible.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Independent chains pooled exactly; shard s is seeded seed+s.
        #[arg(long, default_value_t = 1)]
        shards: u64,
    },
    /// Cross-check the exact solver against the iteration oracle and sampler.
    Compare {
        /// IFS model JSON file.
        file: PathBuf,
        /// Samples for the empirical check; 0 skips it.
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long = "burn-in", default_value_t = 100)]
        burn_in: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Max allowed |exact − iterated| (infinity norm).
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Max allowed |z| of empirical means against exact means.
        #[arg(long, default_value_t = 5.0)]
        sigma: f64,
    },
    /// Render chaos-game samples of a 2-D attractor to a PGM image.
    Render {
        /// IFS model JSON file.
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long = "burn-in", default_value_t = 100)]
        burn_in: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 512)]
        width: u32,
        #[arg(long, default_value_t = 512)]
        height: u32,
        /// Output PGM file.
        #[arg(long)]
        out: PathBuf,
        /// Explicit frame as minx,maxx,miny,maxy (default: fixed-point hull +5%).
        #[arg(long)]
        bbox: Option<String>,
    },
}

#[derive(ValueEnum, Clone, Copy)]
enum PathChoice {
    Auto,
    General,
    Fast,
    Iterate,
}

struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

fn fail(code: i32, kind: &'static str, message: String) -> Failure {
    Failure { code, kind, message }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_PARSE,
            };
            let _ = e.print();
            process::exit(code);
        }
    };
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(f) => {
            let body = serde_json::json!({ "error": { "kind": f.kind, "message": f.message } });
            println!("{body}");
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    process::exit(code);
}

fn run(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Moments { file, path, tol, max_iter } => cmd_moments(&file, path, tol, max_iter),
        Command::Sample { file, n, burn_in, seed, shards } => {
            cmd_sample(&file, n, burn_in, seed, shards)
        }
        Command::Compare { file, n, burn_in, seed, tol, sigma } => {
            cmd_compare(&file, n, burn_in, seed, tol, sigma)
        }
        Command::Render { file, n, burn_in, seed, width, height, out, bbox } => {
            cmd_render(&file, n, burn_in, seed, width, height, &out, bbox.as_deref())
        }
    }
}

fn load_model(path: &Path) -> Result<IfsModel, Failure> {
    let text = fs::read_to_string(path).map_err(|e| {
        fail(EXIT_PARSE, "io", format!("cannot read {}: {e}", path.display()))
    })?;
    parse_ifs(&text).map_err(|e| fail(EXIT_PARSE, "parse", e.to_string()))
}

fn moment_failure(e: MomentError) -> Failure {
    let message = e.to_string();
    match e {
        MomentError::InvalidModel(_) => fail(EXIT_VALIDATION, "validation", message),
        MomentError::Singular(_) => fail(EXIT_VALIDATION, "singular", message),
        MomentError::UnequalLinearParts
        | MomentError::NoConvergence { .. }
        | MomentError::InvalidTolerance { .. }
        | MomentError::IndexOutOfRange { .. } => fail(EXIT_PRECONDITION, "precondition", message),
    }
}

fn chaos_failure(e: ChaosError) -> Failure {
    let message = e.to_string();
    match e {
        ChaosError::InvalidModel(_) => fail(EXIT_VALIDATION, "validation", message),
        ChaosError::Singular(_) => fail(EXIT_VALIDATION, "singular", message),
        _ => fail(EXIT_PRECONDITION, "precondition", message),
    }
}

fn emit<T: serde::Serialize>(report: &T) {
    println!("{}", serde_json::to_string(report).expect("reports serialize"));
}

fn cmd_validate(file: &Path) -> Result<i32, Failure> {
    let model = load_model(file)?;
    let report = model.validate();
    emit(&ValidationJson::from(&report));
    if report.pass {
        Ok(EXIT_OK)
    } else {
        eprintln!("validation failed: see report on stdout");
        Ok(EXIT_VALIDATION)
    }
}

fn cmd_moments(file: &Path, path: PathChoice, tol: f64, max_iter: u64) -> Result<i32, Failure> {
    let model = load_model(file)?;
    let report = match path {
        PathChoice::Auto => covariance_with(&model, PathSelect::Auto),
        PathChoice::General => covariance_with(&model, PathSelect::ForceGeneral),
        PathChoice::Fast => covariance_with(&model, PathSelect::ForceEqualLinear),
        PathChoice::Iterate => covariance_by_iteration(&model, tol, max_iter),
    }
    .map_err(moment_failure)?;
    emit(&MomentJson::from(&report));
    Ok(EXIT_OK)
}

fn cmd_sample(file: &Path, n: u64, burn_in: u64, seed: u64, shards: u64) -> Result<i32, Failure> {
    let model = load_model(file)?;
    let stats = sample_sharded(&model, n, burn_in, seed, shards).map_err(chaos_failure)?;
    emit(&EmpiricalJson::new(&stats, shards));
    Ok(EXIT_OK)
}

fn report_gap(a: &MomentReport, b: &MomentReport) -> f64 {
    let mean = (&a.mean - &b.mean).max_abs();
    let second = (&a.second_moment - &b.second_moment).max_abs();
    let cov = (&a.cov - &b.cov).max_abs();
    mean.max(second).max(cov)
}

fn cmd_compare(
    file: &Path,
    n: u64,
    burn_in: u64,
    seed: u64,
    tol: f64,
    sigma: f64,
) -> Result<i32, Failure> {
    if !(tol >= 0.0) {
        return Err(fail(EXIT_PRECONDITION, "precondition", format!("--tol must be >= 0, got {tol}")));
    }
    if !(sigma > 0.0) {
        return Err(fail(EXIT_PRECONDITION, "precondition", format!("--sigma must be > 0, got {sigma}")));
    }

    let model = load_model(file)?;
    let exact = covariance_with(&model, PathSelect::Auto).map_err(moment_failure)?;
    let iterated = covariance_by_iteration(&model, DEFAULT_ITERATION_TOL, DEFAULT_ITERATION_MAX)
        .map_err(moment_failure)?;
    let max_abs_diff = report_gap(&exact, &iterated);

    let (empirical, zscores) = if n > 0 {
        let stats = sample(&model, n, burn_in, seed).map_err(chaos_failure)?;
        // Floor the stderr at tol/sigma so degenerate (point-mass) models
        // cannot turn solver roundoff into an infinite z-score.
        let floor = (tol / sigma).max(1e-300);
        let z: Vec<f64> = (0..model.dim())
            .map(|i| (stats.mean[i] - exact.mean[i]) / stats.mean_stderr[i].max(floor))
            .collect();
        (Some(EmpiricalJson::new(&stats, 1)), Some(z))
    } else {
        (None, None)
    };

    let within_sigma = zscores
        .as_ref()
        .is_none_or(|z| z.iter().all(|z| z.abs() <= sigma));
    let agree = max_abs_diff <= tol && within_sigma;

    emit(&ComparisonJson {
        verdict: if agree { "Agree" } else { "Disagree" },
        tol,
        sigma,
        max_abs_diff_exact_vs_iterated: max_abs_diff,
        zscores_exact_vs_empirical: zscores,
        exact: MomentJson::from(&exact),
        iterated: MomentJson::from(&iterated),
        empirical,
    });

    if agree {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "disagreement: max |exact - iterated| = {max_abs_diff:e} (tol {tol:e}), sigma bound {sigma}"
        );
        Ok(EXIT_DISAGREE)
    }
}

fn parse_bbox(text: &str) -> Result<BoundingBox, Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    let values: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match values {
        Some(v) if v.len() == 4 => BoundingBox::new(v[0], v[1], v[2], v[3]).map_err(|e| {
            fail(EXIT_PRECONDITION, "precondition", format!("--bbox: {e}"))
        }),
        _ => Err(fail(
            EXIT_PRECONDITION,
            "precondition",
            format!("--bbox: expected minx,maxx,miny,maxy, got {text:?}"),
        )),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_render(
    file: &Path,
    n: u64,
    burn_in: u64,
    seed: u64,
    width: u32,
    height: u32,
    out: &Path,
    bbox: Option<&str>,
) -> Result<i32, Failure> {
    let model = load_model(file)?;
    let bbox = bbox.map(parse_bbox).transpose()?;
    let image = raster(&model, width, height, n, burn_in, seed, bbox).map_err(chaos_failure)?;
    fs::write(out, encode_pgm(&image)).map_err(|e| {
        fail(EXIT_PARSE, "io", format!("cannot write {}: {e}", out.display()))
    })?;
    emit(&RenderJson::new(&image, &out.display().to_string(), n, seed));
    Ok(EXIT_OK)
}

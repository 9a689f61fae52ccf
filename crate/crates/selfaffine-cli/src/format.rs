//! The IFS model document.
//!
//! ```json
//! { "dim": 2,
//!   "maps": [ { "A": [[0.5,0.0],[0.0,0.5]], "b": [0.0,0.0], "p": 0.3333333333333333 }, ... ] }
//! ```
//!
//! `A` is row-major (d rows of d entries), `b` has d entries. Weights are
//! given either per map as `"p"` or once as a top-level `"weights"` array —
//! exactly one of the two forms. Unknown keys are rejected so typos surface
//! as errors instead of being silently ignored.

use std::fmt;

use selfaffine::{AffineMap, IfsModel, Matrix, Vector};
use serde::Deserialize;

#[derive(Debug)]
pub enum ParseError {
    /// Malformed JSON (syntax or primitive type mismatch).
    Json { line: usize, column: usize, message: String },
    /// Well-formed JSON that does not describe a valid model document.
    Structure { context: String, message: String },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Json { line, column, message } => {
                write!(f, "invalid JSON at line {line}, column {column}: {message}")
            }
            ParseError::Structure { context, message } => write!(f, "{context}: {message}"),
        }
    }
}

impl std::error::Error for ParseError {}

fn structure(context: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Structure { context: context.into(), message: message.into() }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    dim: usize,
    maps: Vec<MapDoc>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default)]
    p: Option<f64>,
}

/// Parse a model document into a constructed (not yet validated) model:
/// contraction and weight-sum checks are a separate, reportable step.
pub fn parse_ifs(text: &str) -> Result<IfsModel, ParseError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| ParseError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let d = doc.dim;
    if d == 0 {
        return Err(structure("dim", "dimension must be at least 1"));
    }
    if doc.maps.is_empty() {
        return Err(structure("maps", "at least one map is required"));
    }

    let weights = resolve_weights(&doc)?;

    let mut maps = Vec::with_capacity(doc.maps.len());
    for (k, map) in doc.maps.iter().enumerate() {
        let context = format!("maps[{k}]");
        if map.a.len() != d {
            return Err(structure(
                format!("{context}.A"),
                format!("expected {d} rows, got {}", map.a.len()),
            ));
        }
        let mut flat = Vec::with_capacity(d * d);
        for (r, row) in map.a.iter().enumerate() {
            if row.len() != d {
                return Err(structure(
                    format!("{context}.A row {r}"),
                    format!("expected {d} entries, got {}", row.len()),
                ));
            }
            flat.extend_from_slice(row);
        }
        let linear = Matrix::new(d, d, flat)
            .map_err(|e| structure(format!("{context}.A"), e.to_string()))?;

        if map.b.len() != d {
            return Err(structure(
                format!("{context}.b"),
                format!("expected {d} entries, got {}", map.b.len()),
            ));
        }
        let offset = Vector::new(map.b.clone())
            .map_err(|e| structure(format!("{context}.b"), e.to_string()))?;

        maps.push(
            AffineMap::new(linear, offset)
                .map_err(|e| structure(context.clone(), e.to_string()))?,
        );
    }

    IfsModel::new(maps, weights).map_err(|e| structure("model", e.to_string()))
}

fn resolve_weights(doc: &ModelDoc) -> Result<Vec<f64>, ParseError> {
    let per_map = doc.maps.iter().any(|m| m.p.is_some());
    match (&doc.weights, per_map) {
        (Some(_), true) => Err(structure(
            "weights",
            "give either per-map \"p\" or a top-level \"weights\" array, not both",
        )),
        (Some(weights), false) => {
            if weights.len() != doc.maps.len() {
                Err(structure(
                    "weights",
                    format!("{} maps but {} weights", doc.maps.len(), weights.len()),
                ))
            } else {
                Ok(weights.clone())
            }
        }
        (None, _) => doc
            .maps
            .iter()
            .enumerate()
            .map(|(k, m)| {
                m.p.ok_or_else(|| {
                    structure(format!("maps[{k}].p"), "missing weight (no top-level \"weights\")")
                })
            })
            .collect(),
    }
}

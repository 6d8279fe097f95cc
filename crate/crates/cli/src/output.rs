//! JSON documents written by the CLI.
//!
//! Result (`--out`):
//!
//! ```json
//! {
//!   "family": "binomial", "method": "hessian-weighted", "S": 10, "n": 20000,
//!   "confidence": 0.95, "stat": "z", "converged": true,
//!   "coefficients": [
//!     {"label": "(Intercept)", "estimate": -1.2, "se": 0.05, "stat": -24.0,
//!      "p": 1e-127, "ci_low": -1.3, "ci_high": -1.1}
//!   ],
//!   "zero_se": [], "warnings": [], "manifest_ref": "result.manifest.json"
//! }
//! ```
//!
//! `df` (residual degrees of freedom) is present for gaussian fits and
//! `categories` for multinomial fits. Non-finite numbers are written as the
//! strings `"Infinity"`, `"-Infinity"` or `"NaN"`.
//!
//! Errors go to stderr as `{"error": {"kind", "message", "exit_code", ...}}`,
//! with `subsets` listing offending subset indices when known.

use std::fs;
use std::io::{self, Read};
use std::path::Path;

use drglm::data::ModelSpec;
use drglm::partition::PlanDocument;
use drglm::pipeline::{RunOutput, SubsetRecord};
use drglm::recombine::CombinedFit;
use drglm::Error;
use serde::{Deserialize, Serialize};

/// Serde adapter writing non-finite floats as strings.
pub mod float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("Infinity")
        } else {
            s.serialize_str("-Infinity")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "Infinity" => Ok(f64::INFINITY),
                "-Infinity" => Ok(f64::NEG_INFINITY),
                "NaN" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientJson {
    pub label: String,
    #[serde(with = "float")]
    pub estimate: f64,
    #[serde(with = "float")]
    pub se: f64,
    #[serde(with = "float")]
    pub stat: f64,
    #[serde(with = "float")]
    pub p: f64,
    #[serde(with = "float")]
    pub ci_low: f64,
    #[serde(with = "float")]
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultJson {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<usize>,
    pub method: String,
    #[serde(rename = "S")]
    pub subsets: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<usize>,
    pub confidence: f64,
    pub stat: String,
    pub converged: bool,
    pub coefficients: Vec<CoefficientJson>,
    /// Labels whose standard error is exactly zero.
    pub zero_se: Vec<String>,
    pub warnings: Vec<String>,
    pub manifest_ref: String,
}

impl ResultJson {
    pub fn new(
        fit: &CombinedFit,
        converged: bool,
        warnings: Vec<String>,
        manifest_ref: String,
    ) -> Self {
        Self {
            family: fit.family.name().to_string(),
            categories: fit.categories,
            method: fit.method.name().to_string(),
            subsets: fit.subsets,
            n: fit.n,
            df: fit.df,
            confidence: fit.confidence,
            stat: fit.stat_name().to_string(),
            converged,
            coefficients: fit
                .rows()
                .into_iter()
                .map(|r| CoefficientJson {
                    label: r.label,
                    estimate: r.estimate,
                    se: r.se,
                    stat: r.stat,
                    p: r.p,
                    ci_low: r.ci_low,
                    ci_high: r.ci_high,
                })
                .collect(),
            zero_se: fit.zero_se.iter().map(|&j| fit.labels[j].clone()).collect(),
            warnings,
            manifest_ref,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingMs {
    pub scan: f64,
    pub plan: f64,
    pub fit: f64,
    pub recombine: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: ToolInfo,
    pub input: FileDigest,
    /// SHA-256 of the spec after parsing and re-serializing with defaults.
    pub spec_sha256: String,
    pub method: String,
    pub plan: PlanDocument,
    pub subsets: Vec<SubsetRecord>,
    pub timing_ms: TimingMs,
    pub peak_chunk_rows: usize,
    pub chunk_rows: usize,
    pub threads: usize,
    pub schema_cache_hit: bool,
    pub result: String,
}

pub fn file_digest(path: &Path) -> io::Result<FileDigest> {
    use drglm::sha256_hex_reader;
    let mut f = fs::File::open(path)?;
    let bytes = f.metadata()?.len();
    let sha256 = sha256_hex_reader(&mut f as &mut dyn Read)?;
    Ok(FileDigest {
        path: path.display().to_string(),
        bytes,
        sha256,
    })
}

pub fn spec_digest(spec: &ModelSpec) -> Result<String, Error> {
    let canonical = serde_json::to_vec(spec)?;
    Ok(drglm::sha256_hex(&canonical))
}

#[allow(clippy::too_many_arguments)]
pub fn manifest(
    run: &RunOutput,
    method: &str,
    input: FileDigest,
    spec_sha256: String,
    chunk_rows: usize,
    total_ms: f64,
    result: String,
) -> Manifest {
    Manifest {
        tool: ToolInfo {
            name: "drglm".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        input,
        spec_sha256,
        method: method.to_string(),
        plan: run.plan.document(),
        subsets: run.subsets.clone(),
        timing_ms: TimingMs {
            scan: run.timings.scan_ms,
            plan: run.timings.plan_ms,
            fit: run.timings.fit_ms,
            recombine: run.timings.recombine_ms,
            total: total_ms,
        },
        peak_chunk_rows: run.peak_chunk_rows,
        chunk_rows,
        threads: run.threads,
        schema_cache_hit: run.schema_cache_hit,
        result,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subsets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorJson {
    pub error: ErrorBody,
}

impl ErrorJson {
    pub fn from_error(e: &Error, exit_code: i32) -> Self {
        let subsets = match e {
            Error::CombineRejected { subsets } => subsets.clone(),
            Error::SingularInformation {
                subset: Some(s), ..
            }
            | Error::Separation {
                subset: Some(s), ..
            } => {
                vec![*s]
            }
            _ => Vec::new(),
        };
        let path = match e {
            Error::InvalidConfig { path, .. } => Some(path.clone()),
            _ => None,
        };
        Self {
            error: ErrorBody {
                kind: e.kind().to_string(),
                message: e.to_string(),
                exit_code,
                subsets,
                path,
            },
        }
    }

    pub fn usage(message: String) -> Self {
        Self {
            error: ErrorBody {
                kind: "usage".into(),
                message,
                exit_code: 2,
                subsets: Vec::new(),
                path: None,
            },
        }
    }
}

/// Write pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coefficient(label: &str, estimate: f64, se: f64, stat: f64) -> CoefficientJson {
        CoefficientJson {
            label: label.into(),
            estimate,
            se,
            stat,
            p: if stat.is_finite() { 0.5 } else { 0.0 },
            ci_low: estimate - 1.96 * se,
            ci_high: estimate + 1.96 * se,
        }
    }

    #[test]
    fn result_round_trips_with_non_finite_values() {
        let result = ResultJson {
            family: "gaussian".into(),
            categories: None,
            method: "gram-sum".into(),
            subsets: 10,
            n: 1000,
            df: Some(996),
            confidence: 0.95,
            stat: "t".into(),
            converged: true,
            coefficients: vec![
                coefficient("(Intercept)", 0.1 + 0.2, 1.0 / 3.0, (0.1 + 0.2) * 3.0),
                coefficient("x", 2.5, 0.0, f64::INFINITY),
                coefficient("z", -1e-300, 0.0, f64::NEG_INFINITY),
            ],
            zero_se: vec!["x".into(), "z".into()],
            warnings: vec![],
            manifest_ref: "r.manifest.json".into(),
        };
        let text = serde_json::to_string_pretty(&result).unwrap();
        assert!(text.contains("\"Infinity\"") && text.contains("\"-Infinity\""));
        assert!(text.contains("\"S\": 10"));
        let back: ResultJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back, result);
    }

    #[test]
    fn result_rejects_unknown_fields_and_bad_strings() {
        let text = r#"{"family":"poisson","method":"mean","S":2,"n":10,"confidence":0.95,"stat":"z",
            "converged":true,"coefficients":[],"zero_se":[],"warnings":[],"manifest_ref":"m","extra":1}"#;
        assert!(serde_json::from_str::<ResultJson>(text).is_err());
        let bad = r#"{"label":"a","estimate":"big","se":1,"stat":1,"p":1,"ci_low":0,"ci_high":2}"#;
        assert!(serde_json::from_str::<CoefficientJson>(bad).is_err());
    }

    #[test]
    fn error_json_carries_path_and_subsets() {
        let e = Error::InvalidConfig {
            path: "columns[0].mean".into(),
            message: "bad".into(),
        };
        let json = ErrorJson::from_error(&e, 2);
        assert_eq!(json.error.path.as_deref(), Some("columns[0].mean"));
        assert_eq!(json.error.exit_code, 2);
        let e = Error::CombineRejected {
            subsets: vec![3, 7],
        };
        assert_eq!(ErrorJson::from_error(&e, 1).error.subsets, [3, 7]);
    }
}

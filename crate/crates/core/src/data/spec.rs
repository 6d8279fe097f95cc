use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{ColumnType, Declarations};
use crate::error::{Error, Result};
use crate::glm::{FamilyKind, FitConfig};

fn default_true() -> bool {
    true
}

fn default_confidence() -> f64 {
    0.95
}

/// Declarative model description, read from JSON.
///
/// ```json
/// {
///   "response": "Serum_cholesterol",
///   "predictors": ["Age", "Sex", "Chest_Pain_Type"],
///   "family": "gaussian",
///   "intercept": true,
///   "reference_levels": {"Chest_Pain_Type": "1"},
///   "confidence": 0.95,
///   "column_types": {"Sex": "binary", "Chest_Pain_Type": "categorical"}
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub response: String,
    pub predictors: Vec<String>,
    pub family: FamilyKind,
    #[serde(default = "default_true")]
    pub intercept: bool,
    #[serde(default)]
    pub reference_levels: BTreeMap<String, String>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Column type declarations; columns not listed are inferred.
    #[serde(default)]
    pub column_types: Declarations,
    #[serde(default)]
    pub fit: FitConfig,
}

impl ModelSpec {
    pub fn new(response: &str, predictors: &[&str], family: FamilyKind) -> Self {
        Self {
            response: response.to_string(),
            predictors: predictors.iter().map(|s| s.to_string()).collect(),
            family,
            intercept: true,
            reference_levels: BTreeMap::new(),
            confidence: default_confidence(),
            column_types: BTreeMap::new(),
            fit: FitConfig::default(),
        }
    }

    /// Parse JSON, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: ModelSpec =
            serde_path_to_error::deserialize(de).map_err(|e| Error::InvalidConfig {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        spec.check()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks that do not need the data.
    pub fn check(&self) -> Result<()> {
        let bad = |path: &str, message: String| Error::InvalidConfig {
            path: path.to_string(),
            message,
        };
        if self.response.is_empty() {
            return Err(bad("response", "must not be empty".into()));
        }
        if self.predictors.contains(&self.response) {
            return Err(bad(
                "predictors",
                format!("response {:?} is also listed as a predictor", self.response),
            ));
        }
        for (i, p) in self.predictors.iter().enumerate() {
            if self.predictors[..i].contains(p) {
                return Err(bad(
                    &format!("predictors[{i}]"),
                    format!("duplicate predictor {p:?}"),
                ));
            }
        }
        if !self.intercept && self.predictors.is_empty() {
            return Err(bad("predictors", "model has no columns".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(bad(
                "confidence",
                format!("must lie in (0, 1), got {}", self.confidence),
            ));
        }
        self.fit.validate()
    }

    /// Type declarations to scan with. A multinomial response is always
    /// scanned as categorical so its levels are collected.
    pub fn declarations(&self) -> Declarations {
        let mut decl = self.column_types.clone();
        if self.family == FamilyKind::Multinomial {
            decl.entry(self.response.clone())
                .or_insert(ColumnType::Categorical);
        }
        decl
    }
}

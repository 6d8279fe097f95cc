use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{ColumnType, ModelSpec, INTERCEPT_LABEL};
use crate::error::{Error, Result};
use crate::glm::{logistic, FamilyKind};

/// Marginal distribution of one generated predictor column.
///
/// * `numeric`: normal with `mean` and `sd`, optionally rounded to `decimals`;
/// * `categorical` / `binary`: `levels` drawn with `probabilities`;
/// * `count`: Poisson with `mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ColumnType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimals: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probabilities: Vec<f64>,
}

impl ColumnSpec {
    pub fn numeric(name: &str, mean: f64, sd: f64, decimals: Option<u32>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnType::Numeric,
            mean: Some(mean),
            sd: Some(sd),
            decimals,
            levels: Vec::new(),
            probabilities: Vec::new(),
        }
    }

    pub fn factor(name: &str, kind: ColumnType, levels: &[&str], probabilities: &[f64]) -> Self {
        Self {
            name: name.into(),
            kind,
            mean: None,
            sd: None,
            decimals: None,
            levels: levels.iter().map(|s| s.to_string()).collect(),
            probabilities: probabilities.to_vec(),
        }
    }

    pub fn count(name: &str, mean: f64) -> Self {
        Self {
            name: name.into(),
            kind: ColumnType::Count,
            mean: Some(mean),
            sd: None,
            decimals: None,
            levels: Vec::new(),
            probabilities: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn sorted_levels(&self) -> Option<Vec<String>> {
        self.kind.is_factor().then(|| {
            let mut l = self.levels.clone();
            l.sort();
            l
        })
    }

    fn validate(&self, path: &str) -> Result<()> {
        let unused = |field: &str, present: bool| {
            if present {
                Err(invalid(
                    format!("{path}.{field}"),
                    format!("not used by {} columns", self.kind.name()),
                ))
            } else {
                Ok(())
            }
        };
        match self.kind {
            ColumnType::Numeric => {
                match self.mean {
                    Some(m) if m.is_finite() => {}
                    Some(_) => return Err(invalid(format!("{path}.mean"), "must be finite")),
                    None => {
                        return Err(invalid(
                            format!("{path}.mean"),
                            "required for numeric columns",
                        ))
                    }
                }
                match self.sd {
                    Some(sd) if sd.is_finite() && sd >= 0.0 => {}
                    Some(_) => {
                        return Err(invalid(
                            format!("{path}.sd"),
                            "must be finite and nonnegative",
                        ))
                    }
                    None => {
                        return Err(invalid(
                            format!("{path}.sd"),
                            "required for numeric columns",
                        ))
                    }
                }
                unused("levels", !self.levels.is_empty())?;
                unused("probabilities", !self.probabilities.is_empty())
            }
            ColumnType::Count => {
                match self.mean {
                    Some(m) if m.is_finite() && m > 0.0 => {}
                    Some(_) => return Err(invalid(format!("{path}.mean"), "must be positive")),
                    None => {
                        return Err(invalid(
                            format!("{path}.mean"),
                            "required for count columns",
                        ))
                    }
                }
                unused("sd", self.sd.is_some())?;
                unused("decimals", self.decimals.is_some())?;
                unused("levels", !self.levels.is_empty())?;
                unused("probabilities", !self.probabilities.is_empty())
            }
            ColumnType::Categorical | ColumnType::Binary => {
                unused("mean", self.mean.is_some())?;
                unused("sd", self.sd.is_some())?;
                unused("decimals", self.decimals.is_some())?;
                check_probabilities(path, &self.levels, &self.probabilities)?;
                if self.kind == ColumnType::Binary && self.levels.len() > 2 {
                    return Err(invalid(
                        format!("{path}.levels"),
                        "binary columns have at most 2 levels",
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Response column generated from the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseConfig {
    pub name: String,
    /// Position in the header; appended last when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    /// Gaussian noise standard deviation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
    /// Written labels for binomial (2) and multinomial (≥ 3) responses. The
    /// first sorted level is the reference. Defaults to "0"/"1" for binomial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
    /// Round gaussian responses to this many decimals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimals: Option<u32>,
}

/// Parametric synthetic data description.
///
/// Every column other than the response is a predictor. `beta_true` maps
/// design labels (`(Intercept)`, `<numeric>`, `<factor><level>`, and for
/// multinomial models `<level>:<label>`) to true coefficients; labels not
/// listed are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub family: FamilyKind,
    pub columns: Vec<ColumnSpec>,
    pub response: ResponseConfig,
    #[serde(default)]
    pub beta_true: BTreeMap<String, f64>,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        path: path.into(),
        message: message.into(),
    }
}

fn check_probabilities(path: &str, levels: &[String], probabilities: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(invalid(
            format!("{path}.levels"),
            "at least one level is required",
        ));
    }
    let distinct: BTreeSet<&String> = levels.iter().collect();
    if distinct.len() != levels.len() {
        return Err(invalid(format!("{path}.levels"), "levels must be distinct"));
    }
    if let Some(bad) = levels
        .iter()
        .find(|l| l.is_empty() || l.contains(',') || l.as_str() == "NA")
    {
        return Err(invalid(
            format!("{path}.levels"),
            format!("unusable level {bad:?}"),
        ));
    }
    if probabilities.len() != levels.len() {
        return Err(invalid(
            format!("{path}.probabilities"),
            format!(
                "expected {} probabilities, got {}",
                levels.len(),
                probabilities.len()
            ),
        ));
    }
    if let Some(i) = probabilities
        .iter()
        .position(|p| !(p.is_finite() && *p >= 0.0))
    {
        return Err(invalid(
            format!("{path}.probabilities[{i}]"),
            "must be a nonnegative number",
        ));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(
            format!("{path}.probabilities"),
            format!("sum to {total}, not 1"),
        ));
    }
    Ok(())
}

impl SynthConfig {
    /// Parse JSON and validate, reporting field paths on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: SynthConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| invalid(e.path().to_string(), e.inner().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        let mut names = BTreeSet::new();
        for (i, col) in self.columns.iter().enumerate() {
            let path = format!("columns[{i}]");
            let name = col.name();
            if name.is_empty() || name.contains(',') {
                return Err(invalid(
                    format!("{path}.name"),
                    format!("unusable column name {name:?}"),
                ));
            }
            if !names.insert(name) {
                return Err(invalid(
                    format!("{path}.name"),
                    format!("duplicate column {name:?}"),
                ));
            }
            col.validate(&path)?;
        }
        let r = &self.response;
        if r.name.is_empty() || r.name.contains(',') {
            return Err(invalid(
                "response.name",
                format!("unusable column name {:?}", r.name),
            ));
        }
        if names.contains(r.name.as_str()) {
            return Err(invalid(
                "response.name",
                format!("{:?} is also a predictor column", r.name),
            ));
        }
        if let Some(pos) = r.position {
            if pos > self.columns.len() {
                return Err(invalid(
                    "response.position",
                    format!("must be at most {}", self.columns.len()),
                ));
            }
        }
        match self.family {
            FamilyKind::Gaussian => match r.noise_sd {
                Some(sd) if sd.is_finite() && sd >= 0.0 => {}
                Some(_) => {
                    return Err(invalid(
                        "response.noise_sd",
                        "must be finite and nonnegative",
                    ))
                }
                None => {
                    return Err(invalid(
                        "response.noise_sd",
                        "required for gaussian responses",
                    ))
                }
            },
            _ if r.noise_sd.is_some() => {
                return Err(invalid(
                    "response.noise_sd",
                    "only gaussian responses take noise",
                ))
            }
            _ => {}
        }
        let want = match self.family {
            FamilyKind::Binomial => Some((2, 2)),
            FamilyKind::Multinomial => Some((3, usize::MAX)),
            _ => None,
        };
        match (want, &r.levels) {
            (Some((lo, hi)), Some(levels)) => {
                if levels.len() < lo || levels.len() > hi {
                    return Err(invalid(
                        "response.levels",
                        format!(
                            "{} response needs {lo}..={hi} levels, got {}",
                            self.family,
                            levels.len()
                        ),
                    ));
                }
                let uniform = vec![1.0 / levels.len() as f64; levels.len()];
                check_probabilities("response", levels, &uniform).map_err(|_| {
                    invalid("response.levels", "levels must be distinct and usable")
                })?;
            }
            (Some(_), None) if self.family == FamilyKind::Multinomial => {
                return Err(invalid(
                    "response.levels",
                    "required for multinomial responses",
                ));
            }
            (None, Some(_)) => {
                return Err(invalid(
                    "response.levels",
                    format!("not used by {} responses", self.family),
                ));
            }
            _ => {}
        }
        let labels: BTreeSet<String> = self.coefficient_labels().into_iter().collect();
        for (label, value) in &self.beta_true {
            if !labels.contains(label) {
                return Err(invalid(
                    format!("beta_true.{label}"),
                    "not a coefficient of this model",
                ));
            }
            if !value.is_finite() {
                return Err(invalid(format!("beta_true.{label}"), "must be finite"));
            }
        }
        Ok(())
    }

    /// Design column labels in encoder order.
    pub fn design_labels(&self) -> Vec<String> {
        let mut labels = vec![INTERCEPT_LABEL.to_string()];
        for col in &self.columns {
            match col.sorted_levels() {
                Some(levels) => {
                    labels.extend(levels[1..].iter().map(|l| format!("{}{l}", col.name())))
                }
                None => labels.push(col.name().to_string()),
            }
        }
        labels
    }

    fn response_levels(&self) -> Option<Vec<String>> {
        let mut levels = match (&self.response.levels, self.family) {
            (Some(l), _) => l.clone(),
            (None, FamilyKind::Binomial) => vec!["0".into(), "1".into()],
            _ => return None,
        };
        levels.sort();
        Some(levels)
    }

    /// Coefficient labels in encoder order.
    pub fn coefficient_labels(&self) -> Vec<String> {
        let design = self.design_labels();
        match (self.family, self.response_levels()) {
            (FamilyKind::Multinomial, Some(levels)) => levels[1..]
                .iter()
                .flat_map(|level| design.iter().map(move |l| format!("{level}:{l}")))
                .collect(),
            _ => design,
        }
    }

    /// True coefficients aligned with [`coefficient_labels`](Self::coefficient_labels).
    pub fn beta_vector(&self) -> Vec<f64> {
        self.coefficient_labels()
            .iter()
            .map(|l| self.beta_true.get(l).copied().unwrap_or(0.0))
            .collect()
    }

    /// Header in written order.
    pub fn header(&self) -> Vec<String> {
        let mut header: Vec<String> = self.columns.iter().map(|c| c.name().to_string()).collect();
        let pos = self.response.position.unwrap_or(header.len());
        header.insert(pos, self.response.name.clone());
        header
    }

    /// Model spec that fits the generated file with every other column as a
    /// predictor, in header order.
    pub fn model_spec(&self) -> ModelSpec {
        let header = self.header();
        let predictors: Vec<&str> = header
            .iter()
            .filter(|h| **h != self.response.name)
            .map(String::as_str)
            .collect();
        let mut spec = ModelSpec::new(&self.response.name, &predictors, self.family);
        for col in &self.columns {
            spec.column_types.insert(col.name().to_string(), col.kind);
        }
        match self.family {
            FamilyKind::Binomial => {
                spec.column_types
                    .insert(self.response.name.clone(), ColumnType::Binary);
            }
            FamilyKind::Multinomial => {
                spec.column_types
                    .insert(self.response.name.clone(), ColumnType::Categorical);
            }
            FamilyKind::Poisson => {
                spec.column_types
                    .insert(self.response.name.clone(), ColumnType::Count);
            }
            FamilyKind::Gaussian => {
                spec.column_types
                    .insert(self.response.name.clone(), ColumnType::Numeric);
            }
        }
        spec
    }
}

/// Ground truth written next to generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub n: usize,
    pub family: FamilyKind,
    pub labels: Vec<String>,
    pub beta_true: Vec<f64>,
    /// SHA-256 of the written CSV.
    pub data_digest: String,
}

/// Files produced by [`generate_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub data: PathBuf,
    pub truth: PathBuf,
    pub spec: PathBuf,
    pub ground_truth: GroundTruth,
}

/// `<out>` with `suffix` appended to the file name.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn round_to(v: f64, decimals: Option<u32>) -> f64 {
    match decimals {
        Some(d) => {
            let scale = 10f64.powi(d as i32);
            (v * scale).round() / scale
        }
        None => v,
    }
}

enum Sampler<'a> {
    Numeric(Normal<f64>, Option<u32>),
    Factor {
        levels: &'a [String],
        sorted: Vec<String>,
        index: WeightedIndex<f64>,
    },
    Count(Poisson<f64>),
}

/// Write `config.n` rows to `out`, plus `<out>.truth.json` and
/// `<out>.spec.json`. Output is a pure function of the config.
pub fn generate_synthetic(config: &SynthConfig, out: &Path) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let samplers = config
        .columns
        .iter()
        .enumerate()
        .map(|(i, col)| {
            Ok(match col.kind {
                ColumnType::Numeric => Sampler::Numeric(
                    Normal::new(col.mean.unwrap_or(0.0), col.sd.unwrap_or(0.0))
                        .map_err(|e| invalid(format!("columns[{i}].sd"), e.to_string()))?,
                    col.decimals,
                ),
                ColumnType::Categorical | ColumnType::Binary => Sampler::Factor {
                    levels: &col.levels,
                    sorted: col.sorted_levels().unwrap_or_default(),
                    index: WeightedIndex::new(&col.probabilities).map_err(|e| {
                        invalid(format!("columns[{i}].probabilities"), e.to_string())
                    })?,
                },
                ColumnType::Count => Sampler::Count(
                    Poisson::new(col.mean.unwrap_or(1.0))
                        .map_err(|e| invalid(format!("columns[{i}].mean"), e.to_string()))?,
                ),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let beta = config.beta_vector();
    let p = config.design_labels().len();
    let response_levels = config.response_levels();
    let noise = Normal::new(0.0, config.response.noise_sd.unwrap_or(0.0))
        .map_err(|e| invalid("response.noise_sd", e.to_string()))?;
    let position = config.response.position.unwrap_or(config.columns.len());

    let file = fs::File::create(out)?;
    let mut writer = csv::WriterBuilder::new().from_writer(std::io::BufWriter::new(file));
    writer.write_record(config.header())?;

    let mut design = Vec::with_capacity(p);
    let mut cells: Vec<String> = Vec::with_capacity(config.columns.len() + 1);
    for row in 0..config.n {
        design.clear();
        cells.clear();
        design.push(1.0);
        for sampler in &samplers {
            match sampler {
                Sampler::Numeric(dist, decimals) => {
                    let v = round_to(dist.sample(&mut rng), *decimals);
                    design.push(v);
                    cells.push(v.to_string());
                }
                Sampler::Factor {
                    levels,
                    sorted,
                    index,
                } => {
                    let level = &levels[index.sample(&mut rng)];
                    design.extend(
                        sorted[1..]
                            .iter()
                            .map(|l| if l == level { 1.0 } else { 0.0 }),
                    );
                    cells.push(level.clone());
                }
                Sampler::Count(dist) => {
                    let v = dist.sample(&mut rng);
                    design.push(v);
                    cells.push(format!("{v:.0}"));
                }
            }
        }
        let eta = |block: usize| -> f64 {
            design
                .iter()
                .zip(&beta[block * p..(block + 1) * p])
                .map(|(x, b)| x * b)
                .sum()
        };
        let y = match config.family {
            FamilyKind::Gaussian => {
                round_to(eta(0) + noise.sample(&mut rng), config.response.decimals).to_string()
            }
            FamilyKind::Binomial => {
                let levels = response_levels.as_deref().unwrap_or_default();
                let hit = rng.random::<f64>() < logistic(eta(0));
                levels[usize::from(hit)].clone()
            }
            FamilyKind::Poisson => {
                let mean = eta(0).exp();
                if !(mean.is_finite() && mean < 1e12) {
                    return Err(Error::Overflow { row, eta: eta(0) });
                }
                if mean == 0.0 {
                    "0".to_string()
                } else {
                    let dist =
                        Poisson::new(mean).map_err(|_| Error::Overflow { row, eta: eta(0) })?;
                    format!("{:.0}", dist.sample(&mut rng))
                }
            }
            FamilyKind::Multinomial => {
                let levels = response_levels.as_deref().unwrap_or_default();
                let mut etas = vec![0.0];
                etas.extend((0..levels.len() - 1).map(eta));
                let top = etas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = etas.iter().map(|e| (e - top).exp()).collect();
                let total: f64 = weights.iter().sum();
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = levels.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                levels[pick].clone()
            }
        };
        cells.insert(position, y);
        writer.write_record(&cells)?;
    }
    writer.flush()?;
    drop(writer);

    let digest = crate::sha256_hex(&fs::read(out)?);
    let ground_truth = GroundTruth {
        seed: config.seed,
        n: config.n,
        family: config.family,
        labels: config.coefficient_labels(),
        beta_true: beta,
        data_digest: digest,
    };
    let truth = sidecar(out, ".truth.json");
    let spec = sidecar(out, ".spec.json");
    let mut f = fs::File::create(&truth)?;
    serde_json::to_writer_pretty(&mut f, &ground_truth)?;
    writeln!(f)?;
    let mut f = fs::File::create(&spec)?;
    serde_json::to_writer_pretty(&mut f, &config.model_spec())?;
    writeln!(f)?;
    Ok(SynthOutput {
        data: out.to_path_buf(),
        truth,
        spec,
        ground_truth,
    })
}

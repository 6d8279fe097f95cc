use std::collections::HashMap;

use super::schema::{factor_cell, parse_number, ColumnType, Schema};
use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::glm::{DesignBlock, Family, FamilyKind, ResponseBlock};

pub const INTERCEPT_LABEL: &str = "(Intercept)";

#[derive(Debug, Clone)]
enum Term {
    Numeric {
        index: usize,
        name: String,
    },
    /// Indicator per non-reference level; `slots` maps a level to its
    /// offset, `None` for the reference.
    Dummy {
        index: usize,
        name: String,
        width: usize,
        slots: HashMap<String, Option<usize>>,
    },
}

#[derive(Debug, Clone)]
enum ResponseCoding {
    Numeric,
    /// Level to response code (0/1 for binomial, 1..=r for multinomial).
    Factor(HashMap<String, f64>),
}

/// Turns CSV records into design and response rows with a fixed layout.
///
/// Column order: intercept (if any), then predictors in spec order. A factor
/// with `L` levels contributes `L - 1` indicators labelled `<name><level>`,
/// dropping its reference level (first sorted level unless overridden).
#[derive(Debug, Clone)]
pub struct Encoder {
    family: Family,
    intercept: bool,
    terms: Vec<Term>,
    response_index: usize,
    response_name: String,
    response: ResponseCoding,
    response_levels: Option<Vec<String>>,
    labels: Vec<String>,
    predictor_labels: Vec<String>,
    fields: usize,
}

fn reference_for<'a>(spec: &'a ModelSpec, name: &str, levels: &'a [String]) -> Result<&'a str> {
    match spec.reference_levels.get(name) {
        Some(r) if levels.contains(r) => Ok(r),
        Some(r) => Err(Error::InvalidSpec(format!(
            "reference level {r:?} of column {name:?} is not among its levels {levels:?}"
        ))),
        None => levels
            .first()
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidSpec(format!("column {name:?} has no levels"))),
    }
}

impl Encoder {
    pub fn new(schema: &Schema, spec: &ModelSpec) -> Result<Self> {
        spec.check()?;
        let lookup = |name: &str| {
            schema
                .index_of(name)
                .ok_or_else(|| Error::InvalidSpec(format!("column {name:?} is not in the data")))
        };
        for key in spec.reference_levels.keys() {
            if key != &spec.response && !spec.predictors.contains(key) {
                return Err(Error::InvalidSpec(format!(
                    "reference level given for {key:?}, which is not in the model"
                )));
            }
        }

        let mut terms = Vec::with_capacity(spec.predictors.len());
        let mut predictor_labels = Vec::new();
        if spec.intercept {
            predictor_labels.push(INTERCEPT_LABEL.to_string());
        }
        for name in &spec.predictors {
            let index = lookup(name)?;
            let kind = schema.columns[index].kind;
            if kind.is_factor() {
                let levels = schema.levels(name).unwrap_or(&[]);
                let reference = reference_for(spec, name, levels)?;
                let mut slots = HashMap::with_capacity(levels.len());
                let mut width = 0;
                for level in levels {
                    if level == reference {
                        slots.insert(level.clone(), None);
                    } else {
                        slots.insert(level.clone(), Some(width));
                        predictor_labels.push(format!("{name}{level}"));
                        width += 1;
                    }
                }
                terms.push(Term::Dummy {
                    index,
                    name: name.clone(),
                    width,
                    slots,
                });
            } else {
                if spec.reference_levels.contains_key(name) {
                    return Err(Error::InvalidSpec(format!(
                        "reference level given for non-categorical column {name:?}"
                    )));
                }
                predictor_labels.push(name.clone());
                terms.push(Term::Numeric {
                    index,
                    name: name.clone(),
                });
            }
        }
        if predictor_labels.is_empty() {
            return Err(Error::InvalidSpec("model has no design columns".into()));
        }

        let response_index = lookup(&spec.response)?;
        let response_kind = schema.columns[response_index].kind;
        let (family, response, response_levels) = match (spec.family, response_kind) {
            (FamilyKind::Gaussian | FamilyKind::Poisson, k) if k.is_factor() => {
                return Err(Error::InvalidSpec(format!(
                    "{} response {:?} must be numeric, not {}",
                    spec.family,
                    spec.response,
                    k.name()
                )))
            }
            (FamilyKind::Gaussian, _) => (Family::Gaussian, ResponseCoding::Numeric, None),
            (FamilyKind::Poisson, _) => (Family::Poisson, ResponseCoding::Numeric, None),
            (FamilyKind::Binomial, k) if k.is_factor() => {
                let levels = schema.levels(&spec.response).unwrap_or(&[]);
                if levels.len() != 2 {
                    return Err(Error::InvalidSpec(format!(
                        "binomial response {:?} needs exactly 2 levels, found {}",
                        spec.response,
                        levels.len()
                    )));
                }
                let reference = reference_for(spec, &spec.response, levels)?;
                let codes = levels
                    .iter()
                    .map(|l| (l.clone(), if l == reference { 0.0 } else { 1.0 }))
                    .collect();
                (
                    Family::Binomial,
                    ResponseCoding::Factor(codes),
                    Some(levels.to_vec()),
                )
            }
            (FamilyKind::Binomial, _) => (Family::Binomial, ResponseCoding::Numeric, None),
            (FamilyKind::Multinomial, k) if k.is_factor() => {
                let levels = schema.levels(&spec.response).unwrap_or(&[]);
                if levels.len() < 3 {
                    return Err(Error::InvalidSpec(format!(
                        "multinomial response {:?} needs at least 3 levels, found {}",
                        spec.response,
                        levels.len()
                    )));
                }
                let reference = reference_for(spec, &spec.response, levels)?;
                let mut ordered = vec![reference.to_string()];
                ordered.extend(levels.iter().filter(|l| *l != reference).cloned());
                let codes = ordered
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.clone(), (i + 1) as f64))
                    .collect();
                (
                    Family::multinomial(levels.len())?,
                    ResponseCoding::Factor(codes),
                    Some(ordered),
                )
            }
            (FamilyKind::Multinomial, _) => {
                return Err(Error::InvalidSpec(format!(
                    "multinomial response {:?} must be categorical",
                    spec.response
                )))
            }
        };
        if let (ResponseCoding::Numeric, Some(_)) =
            (&response, spec.reference_levels.get(&spec.response))
        {
            return Err(Error::InvalidSpec(format!(
                "reference level given for numeric response {:?}",
                spec.response
            )));
        }

        let labels = match (&family, &response_levels) {
            (Family::Multinomial(_), Some(levels)) => levels[1..]
                .iter()
                .flat_map(|level| predictor_labels.iter().map(move |l| format!("{level}:{l}")))
                .collect(),
            _ => predictor_labels.clone(),
        };

        Ok(Self {
            family,
            intercept: spec.intercept,
            terms,
            response_index,
            response_name: spec.response.clone(),
            response,
            response_levels,
            labels,
            predictor_labels,
            fields: schema.columns.len(),
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Number of design columns `p`.
    pub fn width(&self) -> usize {
        self.predictor_labels.len()
    }

    /// Coefficient labels, one per parameter.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn design_labels(&self) -> &[String] {
        &self.predictor_labels
    }

    /// Response levels in code order (reference first), for factor responses.
    pub fn response_levels(&self) -> Option<&[String]> {
        self.response_levels.as_deref()
    }

    /// Append one design row to `design` and return the coded response.
    /// `row` is the 1-based data row, used in error messages.
    pub fn encode_record(
        &self,
        record: &csv::StringRecord,
        row: usize,
        design: &mut Vec<f64>,
    ) -> Result<f64> {
        if record.len() != self.fields {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", self.fields, record.len()),
            });
        }
        let cell = |i: usize| record.get(i).unwrap_or("");
        if self.intercept {
            design.push(1.0);
        }
        for term in &self.terms {
            match term {
                Term::Numeric { index, name } => {
                    design.push(parse_number(cell(*index), row, name)?)
                }
                Term::Dummy {
                    index,
                    name,
                    width,
                    slots,
                } => {
                    let v = factor_cell(cell(*index), row, name)?;
                    let slot = slots.get(v).ok_or_else(|| Error::UnseenLevel {
                        column: name.clone(),
                        level: v.to_string(),
                    })?;
                    let start = design.len();
                    design.resize(start + width, 0.0);
                    if let Some(k) = slot {
                        design[start + k] = 1.0;
                    }
                }
            }
        }
        let raw = cell(self.response_index);
        let y = match &self.response {
            ResponseCoding::Numeric => parse_number(raw, row, &self.response_name)?,
            ResponseCoding::Factor(codes) => {
                let v = factor_cell(raw, row, &self.response_name)?;
                *codes.get(v).ok_or_else(|| Error::UnseenLevel {
                    column: self.response_name.clone(),
                    level: v.to_string(),
                })?
            }
        };
        self.family.check_response(row, y)?;
        Ok(y)
    }

    /// Encode a batch of records; `first_row` is the 1-based row of `rows[0]`.
    pub fn encode_chunk(
        &self,
        rows: &[csv::StringRecord],
        first_row: usize,
    ) -> Result<(DesignBlock, ResponseBlock)> {
        let mut design = Vec::with_capacity(rows.len() * self.width());
        let mut response = Vec::with_capacity(rows.len());
        for (i, record) in rows.iter().enumerate() {
            response.push(self.encode_record(record, first_row + i, &mut design)?);
        }
        Ok((
            DesignBlock::new(rows.len(), self.width(), design)?,
            ResponseBlock::new(response)?,
        ))
    }
}

/// Number of design columns implied by a schema and spec without building
/// the encoder: intercept + numeric predictors + Σ (L − 1) over factors.
pub fn design_width(schema: &Schema, spec: &ModelSpec) -> Result<usize> {
    let mut p = usize::from(spec.intercept);
    for name in &spec.predictors {
        let col = schema
            .column(name)
            .ok_or_else(|| Error::InvalidSpec(format!("column {name:?} is not in the data")))?;
        p += match col.kind {
            ColumnType::Numeric | ColumnType::Count => 1,
            ColumnType::Categorical | ColumnType::Binary => {
                schema.levels(name).map_or(0, |l| l.len().saturating_sub(1))
            }
        };
    }
    Ok(p)
}

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::UNIX_EPOCH;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undeclared columns that fail to parse as numbers become categorical; past
/// this many distinct values the column must be declared explicitly.
pub const MAX_INFERRED_LEVELS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Numeric,
    Categorical,
    Count,
    Binary,
}

impl ColumnType {
    pub fn is_factor(self) -> bool {
        matches!(self, ColumnType::Categorical | ColumnType::Binary)
    }

    pub fn name(self) -> &'static str {
        match self {
            ColumnType::Numeric => "numeric",
            ColumnType::Categorical => "categorical",
            ColumnType::Count => "count",
            ColumnType::Binary => "binary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ColumnType,
}

/// Column layout, factor dictionaries and row count of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
    /// Sorted distinct values of every categorical or binary column.
    pub factor_levels: BTreeMap<String, Vec<String>>,
    pub row_count: usize,
}

impl Schema {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn levels(&self, name: &str) -> Option<&[String]> {
        self.factor_levels.get(name).map(Vec::as_slice)
    }
}

/// Declared column types; undeclared columns are inferred.
pub type Declarations = BTreeMap<String, ColumnType>;

pub(crate) fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

/// Parse a numeric cell. `row` is the 1-based data row.
pub(crate) fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    let cell = cell.trim();
    if is_missing(cell) {
        return Err(Error::MissingValue {
            row,
            column: column.to_string(),
        });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("non-finite number {cell:?}"),
        }),
        Err(e) => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("{e} ({cell:?})"),
        }),
    }
}

pub(crate) fn factor_cell<'a>(cell: &'a str, row: usize, column: &str) -> Result<&'a str> {
    let cell = cell.trim();
    if is_missing(cell) {
        return Err(Error::MissingValue {
            row,
            column: column.to_string(),
        });
    }
    Ok(cell)
}

pub(crate) fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(b',')
        .trim(csv::Trim::None)
        .from_path(path)?)
}

pub(crate) fn headers(rdr: &mut csv::Reader<fs::File>) -> Result<Vec<String>> {
    let names: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = BTreeSet::new();
    for name in &names {
        if name.is_empty() {
            return Err(Error::InvalidSpec("empty column name in header".into()));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::InvalidSpec(format!(
                "duplicate column {name:?} in header"
            )));
        }
    }
    Ok(names)
}

enum Tracker {
    Numeric,
    Count,
    Factor(BTreeSet<String>),
    Inferred {
        numeric: bool,
        levels: BTreeSet<String>,
        overflow: bool,
    },
}

/// One streaming pass collecting column types, factor levels and row count.
pub fn scan_schema(path: &Path, declarations: &Declarations) -> Result<Schema> {
    let mut rdr = reader(path)?;
    let names = headers(&mut rdr)?;
    if let Some(unknown) = declarations.keys().find(|k| !names.contains(k)) {
        return Err(Error::InvalidSpec(format!(
            "declared column {unknown:?} is not in the header"
        )));
    }
    let mut trackers: Vec<Tracker> = names
        .iter()
        .map(|n| match declarations.get(n) {
            Some(ColumnType::Numeric) => Tracker::Numeric,
            Some(ColumnType::Count) => Tracker::Count,
            Some(ColumnType::Categorical | ColumnType::Binary) => Tracker::Factor(BTreeSet::new()),
            None => Tracker::Inferred {
                numeric: true,
                levels: BTreeSet::new(),
                overflow: false,
            },
        })
        .collect();

    let mut record = csv::StringRecord::new();
    let mut rows = 0usize;
    while rdr.read_record(&mut record)? {
        rows += 1;
        if record.len() != names.len() {
            return Err(Error::Parse {
                row: rows,
                column: String::new(),
                message: format!("expected {} fields, found {}", names.len(), record.len()),
            });
        }
        for ((cell, name), tracker) in record.iter().zip(&names).zip(trackers.iter_mut()) {
            match tracker {
                Tracker::Numeric => {
                    parse_number(cell, rows, name)?;
                }
                Tracker::Count => {
                    let v = parse_number(cell, rows, name)?;
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(Error::Parse {
                            row: rows,
                            column: name.clone(),
                            message: format!("count column needs a nonnegative integer, got {v}"),
                        });
                    }
                }
                Tracker::Factor(levels) => {
                    let v = factor_cell(cell, rows, name)?;
                    if !levels.contains(v) {
                        levels.insert(v.to_string());
                    }
                }
                Tracker::Inferred {
                    numeric,
                    levels,
                    overflow,
                } => {
                    let v = factor_cell(cell, rows, name)?;
                    if *numeric && !v.parse::<f64>().is_ok_and(f64::is_finite) {
                        *numeric = false;
                    }
                    if !*overflow && !levels.contains(v) {
                        if levels.len() == MAX_INFERRED_LEVELS {
                            *overflow = true;
                        } else {
                            levels.insert(v.to_string());
                        }
                    }
                    if *overflow && !*numeric {
                        return Err(Error::InvalidSpec(format!(
                            "column {name:?} has more than {MAX_INFERRED_LEVELS} distinct \
                             non-numeric values; declare its type"
                        )));
                    }
                }
            }
        }
    }
    if rows == 0 {
        return Err(Error::NoRows(path.to_path_buf()));
    }

    let mut columns = Vec::with_capacity(names.len());
    let mut factor_levels = BTreeMap::new();
    for (name, tracker) in names.into_iter().zip(trackers) {
        let kind = match tracker {
            Tracker::Numeric => ColumnType::Numeric,
            Tracker::Count => ColumnType::Count,
            Tracker::Factor(levels) => {
                let kind = declarations[&name];
                if kind == ColumnType::Binary && levels.len() > 2 {
                    return Err(Error::InvalidSpec(format!(
                        "binary column {name:?} has {} levels",
                        levels.len()
                    )));
                }
                factor_levels.insert(name.clone(), levels.into_iter().collect());
                kind
            }
            Tracker::Inferred { numeric: true, .. } => ColumnType::Numeric,
            Tracker::Inferred { levels, .. } => {
                factor_levels.insert(name.clone(), levels.into_iter().collect());
                ColumnType::Categorical
            }
        };
        columns.push(Column { name, kind });
    }
    Ok(Schema {
        columns,
        factor_levels,
        row_count: rows,
    })
}

/// Read one column as raw strings (used to build stratified plans).
pub fn read_column(path: &Path, name: &str) -> Result<Vec<String>> {
    let mut rdr = reader(path)?;
    let names = headers(&mut rdr)?;
    let idx = names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::InvalidSpec(format!("column {name:?} is not in the header")))?;
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let row = out.len() + 1;
        let cell = record.get(idx).unwrap_or("");
        out.push(factor_cell(cell, row, name)?.to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheEntry {
    source_len: u64,
    source_modified_ns: u128,
    declarations: Declarations,
    schema: Schema,
}

fn fingerprint(path: &Path) -> Result<(u64, u128)> {
    let meta = fs::metadata(path)?;
    let modified = meta
        .modified()?
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    Ok((meta.len(), modified))
}

/// Default sidecar location: `<data>.schema.json`.
pub fn default_cache_path(data: &Path) -> PathBuf {
    let mut name = data.as_os_str().to_owned();
    name.push(".schema.json");
    PathBuf::from(name)
}

/// Like [`scan_schema`], but reuse `cache` when it was written for a file of
/// the same size and modification time under the same declarations.
///
/// Returns the schema and whether the cache was used. A stale or unreadable
/// cache is replaced.
pub fn scan_schema_cached(
    path: &Path,
    declarations: &Declarations,
    cache: &Path,
) -> Result<(Schema, bool)> {
    let (source_len, source_modified_ns) = fingerprint(path)?;
    if let Ok(text) = fs::read_to_string(cache) {
        if let Ok(entry) = serde_json::from_str::<CacheEntry>(&text) {
            if entry.source_len == source_len
                && entry.source_modified_ns == source_modified_ns
                && &entry.declarations == declarations
            {
                return Ok((entry.schema, true));
            }
        }
    }
    let schema = scan_schema(path, declarations)?;
    let entry = CacheEntry {
        source_len,
        source_modified_ns,
        declarations: declarations.clone(),
        schema,
    };
    fs::write(cache, serde_json::to_string_pretty(&entry)?)?;
    Ok((entry.schema, false))
}

//! Immutable tabular data, CSV ingestion and deterministic sampling.
//!
//! A [`Dataset`] holds `p` typed feature columns of equal length `n` plus an
//! optional numeric target. Numeric columns are guaranteed finite; categorical
//! columns store level codes into an ordered, duplicate-free level list.

mod csv_io;
mod rng;
mod sampling;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use csv_io::{load_csv, read_csv, write_csv};
pub use rng::Rng;
pub use sampling::{sample_replacement_value, sample_row_indices, ValuePool};

/// Errors raised while building or loading a [`Dataset`].
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    MissingFile {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("empty body: the file has a header but no data rows")]
    EmptyBody,
    #[error("duplicate column name `{0}`")]
    DuplicateName(String),
    #[error("target column `{0}` not found")]
    UnknownTarget(String),
    #[error("target column `{name}` is not numeric (row {row}: `{value}`)")]
    NonNumericTarget {
        name: String,
        row: usize,
        value: String,
    },
    #[error("non-finite value `{value}` in numeric column `{column}` (row {row})")]
    NonFinite {
        column: String,
        row: usize,
        value: String,
    },
    #[error("non-numeric value `{value}` in numeric column `{column}` (row {row})")]
    NotNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("missing value in column `{column}` (row {row})")]
    MissingValue { column: String, row: usize },
    #[error("column `{column}`: value `{value}` is not a declared level")]
    UndeclaredLevel { column: String, value: String },
    #[error("invalid categorical levels for `{0}`: levels must be non-empty and unique")]
    InvalidLevels(String),
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("column `{column}` has {found} values, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("dataset has no target column")]
    NoTarget,
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
}

/// Type of a feature column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

impl FeatureKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureKind::Numeric)
    }
}

/// Name and kind of one feature; the unit of a predictor schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

pub type Schema = Vec<FeatureSpec>;

/// A single cell value as seen by predictors.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(Arc<str>),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Cat(_) => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            Value::Cat(s) => Some(s),
            Value::Num(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Cat(s) => f.write_str(s),
        }
    }
}

/// One feature row, ordered like the schema.
pub type Row = Vec<Value>;

/// Column storage.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical {
        levels: Vec<Arc<str>>,
        codes: Vec<u32>,
    },
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, row: usize) -> Value {
        match self {
            ColumnData::Numeric(v) => Value::Num(v[row]),
            ColumnData::Categorical { levels, codes } => {
                Value::Cat(levels[codes[row] as usize].clone())
            }
        }
    }

    fn kind(&self) -> FeatureKind {
        match self {
            ColumnData::Numeric(_) => FeatureKind::Numeric,
            ColumnData::Categorical { levels, .. } => FeatureKind::Categorical {
                levels: levels.iter().map(|l| l.to_string()).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    /// Categorical column with levels in first-appearance order.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, values: &[S]) -> Self {
        let mut levels: Vec<Arc<str>> = Vec::new();
        let mut codes = Vec::with_capacity(values.len());
        for v in values {
            let v = v.as_ref();
            let code = match levels.iter().position(|l| &**l == v) {
                Some(c) => c,
                None => {
                    levels.push(Arc::from(v));
                    levels.len() - 1
                }
            };
            codes.push(code as u32);
        }
        Column {
            name: name.into(),
            data: ColumnData::Categorical { levels, codes },
        }
    }

    /// Categorical column over an explicit level list.
    pub fn categorical_with_levels<S: AsRef<str>>(
        name: impl Into<String>,
        levels: &[String],
        values: &[S],
    ) -> Result<Self, DataError> {
        let name = name.into();
        let unique: HashSet<&str> = levels.iter().map(String::as_str).collect();
        if levels.is_empty() || unique.len() != levels.len() {
            return Err(DataError::InvalidLevels(name));
        }
        let codes = values
            .iter()
            .map(|v| {
                levels
                    .iter()
                    .position(|l| l == v.as_ref())
                    .map(|c| c as u32)
                    .ok_or_else(|| DataError::UndeclaredLevel {
                        column: name.clone(),
                        value: v.as_ref().to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Column {
            name,
            data: ColumnData::Categorical {
                levels: levels.iter().map(|l| Arc::from(l.as_str())).collect(),
                codes,
            },
        })
    }
}

/// Immutable tabular dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    target: Option<Vec<f64>>,
    target_name: Option<String>,
    n: usize,
}

impl Dataset {
    pub fn new(columns: Vec<Column>, target: Option<(String, Vec<f64>)>) -> Result<Self, DataError> {
        let first = columns.first().ok_or(DataError::NoFeatures)?;
        let n = first.data.len();
        if n == 0 {
            return Err(DataError::EmptyBody);
        }
        let mut seen = HashSet::new();
        for col in &columns {
            if !seen.insert(col.name.as_str()) {
                return Err(DataError::DuplicateName(col.name.clone()));
            }
            if col.data.len() != n {
                return Err(DataError::LengthMismatch {
                    column: col.name.clone(),
                    expected: n,
                    found: col.data.len(),
                });
            }
            match &col.data {
                ColumnData::Numeric(v) => {
                    if let Some(row) = v.iter().position(|x| !x.is_finite()) {
                        return Err(DataError::NonFinite {
                            column: col.name.clone(),
                            row,
                            value: v[row].to_string(),
                        });
                    }
                }
                ColumnData::Categorical { levels, codes } => {
                    let unique: HashSet<&str> = levels.iter().map(|l| &**l).collect();
                    if levels.is_empty() || unique.len() != levels.len() {
                        return Err(DataError::InvalidLevels(col.name.clone()));
                    }
                    if let Some(&c) = codes.iter().find(|&&c| c as usize >= levels.len()) {
                        return Err(DataError::UndeclaredLevel {
                            column: col.name.clone(),
                            value: format!("#{c}"),
                        });
                    }
                }
            }
        }
        let (target_name, target) = match target {
            Some((name, values)) => {
                if seen.contains(name.as_str()) {
                    return Err(DataError::DuplicateName(name));
                }
                if values.len() != n {
                    return Err(DataError::LengthMismatch {
                        column: name,
                        expected: n,
                        found: values.len(),
                    });
                }
                if let Some(row) = values.iter().position(|x| !x.is_finite()) {
                    return Err(DataError::NonFinite {
                        column: name,
                        row,
                        value: values[row].to_string(),
                    });
                }
                (Some(name), Some(values))
            }
            None => (None, None),
        };
        Ok(Dataset {
            columns,
            target,
            target_name,
            n,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn target(&self) -> Option<&[f64]> {
        self.target.as_deref()
    }

    pub fn target_name(&self) -> Option<&str> {
        self.target_name.as_deref()
    }

    pub fn require_target(&self) -> Result<&[f64], DataError> {
        self.target().ok_or(DataError::NoTarget)
    }

    pub fn schema(&self) -> Schema {
        self.columns
            .iter()
            .map(|c| FeatureSpec {
                name: c.name.clone(),
                kind: c.data.kind(),
            })
            .collect()
    }

    pub fn value(&self, row: usize, feature: usize) -> Value {
        self.columns[feature].data.value(row)
    }

    pub fn row(&self, i: usize) -> Row {
        self.columns.iter().map(|c| c.data.value(i)).collect()
    }

    pub fn rows(&self) -> Vec<Row> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    /// Numeric column values, or `None` for a categorical feature.
    pub fn numeric_column(&self, j: usize) -> Option<&[f64]> {
        match &self.columns[j].data {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical { .. } => None,
        }
    }

    /// Subset of rows, keeping every categorical level list intact.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                data: match &c.data {
                    ColumnData::Numeric(v) => {
                        ColumnData::Numeric(indices.iter().map(|&i| v[i]).collect())
                    }
                    ColumnData::Categorical { levels, codes } => ColumnData::Categorical {
                        levels: levels.clone(),
                        codes: indices.iter().map(|&i| codes[i]).collect(),
                    },
                },
            })
            .collect();
        Dataset {
            columns,
            target: self
                .target
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i]).collect()),
            target_name: self.target_name.clone(),
            n: indices.len(),
        }
    }

    /// Replaces the target column.
    pub fn with_target(&self, name: impl Into<String>, values: Vec<f64>) -> Result<Dataset, DataError> {
        Dataset::new(self.columns.clone(), Some((name.into(), values)))
    }

    /// SHA-256 over names, kinds and raw values; stable across platforms.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        for col in &self.columns {
            h.update((col.name.len() as u64).to_le_bytes());
            h.update(col.name.as_bytes());
            match &col.data {
                ColumnData::Numeric(v) => {
                    h.update([0u8]);
                    for x in v {
                        h.update(x.to_bits().to_le_bytes());
                    }
                }
                ColumnData::Categorical { levels, codes } => {
                    h.update([1u8]);
                    for l in levels {
                        h.update((l.len() as u64).to_le_bytes());
                        h.update(l.as_bytes());
                    }
                    for c in codes {
                        h.update(c.to_le_bytes());
                    }
                }
            }
        }
        if let Some(t) = &self.target {
            h.update([2u8]);
            for x in t {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

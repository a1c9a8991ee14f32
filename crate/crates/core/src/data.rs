//! Tabular datasets: schema, CSV ingestion, z-score standardization and moments.

use crate::numerics::{mean_and_covariance, Matrix};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("header mismatch: expected [{expected}], found [{found}]")]
    HeaderMismatch { expected: String, found: String },
    #[error("row {row}, column '{column}': cannot parse '{value}'")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column '{column}': non-finite value '{value}'")]
    NonFinite {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column '{column}': label '{label}' not in declared set")]
    UnknownLabel {
        row: usize,
        column: String,
        label: String,
    },
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("continuous column '{0}' is constant")]
    ConstantColumn(String),
    #[error("continuous column '{0}' has non-finite mean or spread")]
    NonFiniteColumn(String),
    #[error("column '{0}' is categorical")]
    CategoricalColumn(String),
    #[error("no columns selected")]
    NoColumns,
    #[error("column index {0} out of range")]
    ColumnOutOfRange(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid cell at row {row}, column '{column}': {reason}")]
    InvalidCell {
        row: usize,
        column: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Categorical { cardinality: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Categorical labels in code order. Empty means the codes `0..K` are their own labels.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

impl Column {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Continuous,
            labels: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, cardinality: usize) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical { cardinality },
            labels: Vec::new(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, ColumnKind::Continuous)
    }

    pub fn cardinality(&self) -> Option<usize> {
        match self.kind {
            ColumnKind::Continuous => None,
            ColumnKind::Categorical { cardinality } => Some(cardinality),
        }
    }

    fn label_of(&self, code: usize) -> String {
        self.labels
            .get(code)
            .cloned()
            .unwrap_or_else(|| code.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
    pub response_index: usize,
}

/// On-disk schema sidecar: a list of columns, one of them flagged as the response.
#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SchemaDoc {
    columns: Vec<SchemaDocColumn>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SchemaDocColumn {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cardinality: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    response: bool,
}

impl Schema {
    pub fn new(columns: Vec<Column>, response_index: usize) -> Result<Self, DataError> {
        let schema = Self {
            columns,
            response_index,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// `p` continuous features named `x1..xp` followed by the response `y`.
    pub fn regression(p: usize, response: ColumnKind) -> Self {
        let mut columns: Vec<Column> = (1..=p).map(|j| Column::continuous(format!("x{j}"))).collect();
        columns.push(Column {
            name: "y".into(),
            kind: response,
            labels: Vec::new(),
        });
        Self {
            columns,
            response_index: p,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.columns.is_empty() {
            return Err(DataError::InvalidSchema("no columns".into()));
        }
        if self.response_index >= self.columns.len() {
            return Err(DataError::InvalidSchema(format!(
                "response index {} out of range",
                self.response_index
            )));
        }
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::InvalidSchema(format!("duplicate column '{}'", c.name)));
            }
            match c.kind {
                ColumnKind::Categorical { cardinality } if cardinality < 2 => {
                    return Err(DataError::InvalidSchema(format!(
                        "column '{}' has cardinality {cardinality} < 2",
                        c.name
                    )));
                }
                ColumnKind::Categorical { cardinality } if !c.labels.is_empty() => {
                    if c.labels.len() != cardinality {
                        return Err(DataError::InvalidSchema(format!(
                            "column '{}' declares {} labels for cardinality {cardinality}",
                            c.name,
                            c.labels.len()
                        )));
                    }
                }
                ColumnKind::Continuous if !c.labels.is_empty() => {
                    return Err(DataError::InvalidSchema(format!(
                        "continuous column '{}' has labels",
                        c.name
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Column indices of the features (every column except the response), in order.
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&i| i != self.response_index)
            .collect()
    }

    pub fn response(&self) -> &Column {
        &self.columns[self.response_index]
    }

    pub fn continuous_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&i| self.columns[i].is_continuous())
            .collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DataError> {
        let doc: SchemaDoc =
            toml::from_str(text).map_err(|e| DataError::InvalidSchema(e.to_string()))?;
        let mut response_index = None;
        let mut columns = Vec::with_capacity(doc.columns.len());
        for (i, c) in doc.columns.into_iter().enumerate() {
            if c.response {
                if response_index.is_some() {
                    return Err(DataError::InvalidSchema("more than one response column".into()));
                }
                response_index = Some(i);
            }
            let kind = match (c.kind.as_str(), c.cardinality) {
                ("continuous", None) => ColumnKind::Continuous,
                ("continuous", Some(_)) => {
                    return Err(DataError::InvalidSchema(format!(
                        "continuous column '{}' has a cardinality",
                        c.name
                    )))
                }
                ("categorical", Some(k)) => ColumnKind::Categorical { cardinality: k },
                ("categorical", None) if !c.labels.is_empty() => ColumnKind::Categorical {
                    cardinality: c.labels.len(),
                },
                ("categorical", None) => {
                    return Err(DataError::InvalidSchema(format!(
                        "categorical column '{}' needs a cardinality",
                        c.name
                    )))
                }
                (other, _) => {
                    return Err(DataError::InvalidSchema(format!(
                        "column '{}' has unknown kind '{other}'",
                        c.name
                    )))
                }
            };
            let mut labels = c.labels;
            labels.sort();
            columns.push(Column {
                name: c.name,
                kind,
                labels,
            });
        }
        let response_index =
            response_index.ok_or_else(|| DataError::InvalidSchema("no response column".into()))?;
        Schema::new(columns, response_index)
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let doc = SchemaDoc {
            columns: self
                .columns
                .iter()
                .enumerate()
                .map(|(i, c)| SchemaDocColumn {
                    name: c.name.clone(),
                    kind: if c.is_continuous() { "continuous" } else { "categorical" }.into(),
                    cardinality: c.cardinality(),
                    labels: c.labels.clone(),
                    response: i == self.response_index,
                })
                .collect(),
        };
        toml::to_string(&doc).expect("schema serializes")
    }
}

/// An `n × m` table whose categorical cells hold integer codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    values: Matrix,
}

impl Dataset {
    /// Checks every cell against the schema.
    pub fn new(schema: Schema, values: Matrix) -> Result<Self, DataError> {
        schema.validate()?;
        if values.cols() != schema.width() {
            return Err(DataError::DimensionMismatch(format!(
                "{} value columns for {} schema columns",
                values.cols(),
                schema.width()
            )));
        }
        for i in 0..values.rows() {
            for (j, col) in schema.columns.iter().enumerate() {
                let v = values[(i, j)];
                if !v.is_finite() {
                    return Err(DataError::NonFinite {
                        row: i + 1,
                        column: col.name.clone(),
                        value: v.to_string(),
                    });
                }
                if let Some(k) = col.cardinality() {
                    if v.fract() != 0.0 || v < 0.0 || v >= k as f64 {
                        return Err(DataError::InvalidCell {
                            row: i + 1,
                            column: col.name.clone(),
                            reason: format!("code {v} outside 0..{k}"),
                        });
                    }
                }
            }
        }
        Ok(Self { schema, values })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    /// Number of features (columns other than the response).
    pub fn p(&self) -> usize {
        self.schema.width() - 1
    }

    pub fn features(&self) -> Matrix {
        self.values.select_columns(&self.schema.feature_indices())
    }

    pub fn response(&self) -> Vec<f64> {
        self.values.column(self.schema.response_index)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.schema
            .feature_indices()
            .into_iter()
            .map(|i| self.schema.columns[i].name.clone())
            .collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            values: self.values.select_rows(rows),
        }
    }

    /// Continuous columns plus binary categorical columns as 0/1 numbers.
    pub fn numeric_matrix(&self) -> Matrix {
        let cols: Vec<usize> = (0..self.schema.width())
            .filter(|&j| {
                let c = &self.schema.columns[j];
                c.is_continuous() || c.cardinality() == Some(2)
            })
            .collect();
        self.values.select_columns(&cols)
    }

    /// Writes the dataset as CSV with the schema's column names as header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.names())?;
        for i in 0..self.n() {
            let row = self.values.row(i);
            let record: Vec<String> = self
                .schema
                .columns
                .iter()
                .zip(row)
                .map(|(c, &v)| {
                    if c.is_continuous() {
                        format!("{v}")
                    } else {
                        c.label_of(v as usize)
                    }
                })
                .collect();
            w.write_record(&record)?;
        }
        w.flush().map_err(|source| DataError::Io {
            path: "<csv writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Reads a CSV file under `schema`.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset, DataError> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let expected = schema.names();
    if header != expected {
        return Err(DataError::HeaderMismatch {
            expected: expected.join(","),
            found: header.join(","),
        });
    }
    let m = schema.width();
    let mut data = Vec::new();
    let mut n = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != m {
            return Err(DataError::RaggedRow {
                row,
                expected: m,
                found: record.len(),
            });
        }
        for (cell, col) in record.iter().zip(&schema.columns) {
            data.push(parse_cell(cell.trim(), col, row)?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(DataError::EmptyDataset);
    }
    Dataset::new(schema.clone(), Matrix::from_row_major(n, m, data))
}

fn parse_cell(cell: &str, col: &Column, row: usize) -> Result<f64, DataError> {
    match col.kind {
        ColumnKind::Continuous => {
            let v: f64 = cell.parse().map_err(|_| DataError::Parse {
                row,
                column: col.name.clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite {
                    row,
                    column: col.name.clone(),
                    value: cell.to_string(),
                });
            }
            Ok(v)
        }
        ColumnKind::Categorical { cardinality } => {
            if col.labels.is_empty() {
                match cell.parse::<usize>() {
                    Ok(code) if code < cardinality => Ok(code as f64),
                    _ => Err(DataError::UnknownLabel {
                        row,
                        column: col.name.clone(),
                        label: cell.to_string(),
                    }),
                }
            } else {
                col.labels
                    .iter()
                    .position(|l| l == cell)
                    .map(|code| code as f64)
                    .ok_or_else(|| DataError::UnknownLabel {
                        row,
                        column: col.name.clone(),
                        label: cell.to_string(),
                    })
            }
        }
    }
}

/// Per-continuous-column location and scale, aligned with `column_indices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub column_indices: Vec<usize>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Centers and scales every continuous column to sample mean 0 and sample sd 1.
pub fn standardize(d: &Dataset) -> Result<(Dataset, StandardizationStats), DataError> {
    let n = d.n();
    if n < 2 {
        return Err(DataError::TooFewRows(n));
    }
    let column_indices = d.schema.continuous_indices();
    let mut values = d.values.clone();
    let mut means = Vec::with_capacity(column_indices.len());
    let mut sds = Vec::with_capacity(column_indices.len());
    for &j in &column_indices {
        let col = d.values.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if !mean.is_finite() || !sd.is_finite() {
            return Err(DataError::NonFiniteColumn(d.schema.columns[j].name.clone()));
        }
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(DataError::ConstantColumn(d.schema.columns[j].name.clone()));
        }
        for i in 0..n {
            values[(i, j)] = (col[i] - mean) / sd;
        }
        means.push(mean);
        sds.push(sd);
    }
    Ok((
        Dataset {
            schema: d.schema.clone(),
            values,
        },
        StandardizationStats {
            column_indices,
            means,
            sds,
        },
    ))
}

pub fn destandardize(d: &Dataset, stats: &StandardizationStats) -> Result<Dataset, DataError> {
    let expected = d.schema.continuous_indices();
    if stats.column_indices != expected
        || stats.means.len() != expected.len()
        || stats.sds.len() != expected.len()
    {
        return Err(DataError::DimensionMismatch(format!(
            "stats cover {} columns, schema has {} continuous columns",
            stats.means.len(),
            expected.len()
        )));
    }
    let mut values = d.values.clone();
    for (k, &j) in stats.column_indices.iter().enumerate() {
        for i in 0..d.n() {
            values[(i, j)] = values[(i, j)] * stats.sds[k] + stats.means[k];
        }
    }
    Ok(Dataset {
        schema: d.schema.clone(),
        values,
    })
}

/// Mean vector and unbiased covariance of the continuous columns `cols`.
pub fn empirical_moments(d: &Dataset, cols: &[usize]) -> Result<(Vec<f64>, Matrix), DataError> {
    if cols.is_empty() {
        return Err(DataError::NoColumns);
    }
    for &j in cols {
        let col = d
            .schema
            .columns
            .get(j)
            .ok_or(DataError::ColumnOutOfRange(j))?;
        if !col.is_continuous() {
            return Err(DataError::CategoricalColumn(col.name.clone()));
        }
    }
    if d.n() < 2 {
        return Err(DataError::TooFewRows(d.n()));
    }
    Ok(mean_and_covariance(&d.values.select_columns(cols)).expect("n >= 2 checked"))
}

//! CSV ingestion of observed data.
//!
//! The file must start with a header row. One column holds the response;
//! the others are either raw covariates (used through the identity
//! dictionary) or precomputed dictionary values.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use lasso_select_core::dictionary::{DictFn, Dictionary, DictionaryBounds, Sample};
use lasso_select_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnMode {
    #[default]
    Raw,
    Precomputed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub response: String,
    /// Design columns in order; every non-response column when absent.
    #[serde(default)]
    pub columns: Option<Vec<String>>,
    #[serde(default)]
    pub mode: ColumnMode,
}

impl Layout {
    pub fn new(response: impl Into<String>, mode: ColumnMode) -> Self {
        Self { response: response.into(), columns: None, mode }
    }

    pub fn with_columns(mut self, columns: Vec<String>) -> Self {
        self.columns = Some(columns);
        self
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub sample: Sample,
    pub dictionary: Dictionary,
    pub columns: Vec<String>,
}

fn parse_error(line: u64, column: Option<&str>, message: impl Into<String>) -> Error {
    Error::Parse { line, column: column.map(str::to_owned), message: message.into() }
}

pub fn load_dataset<R: Read>(source: R, layout: &Layout) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let csv_error = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        parse_error(line, None, e.to_string())
    };
    let header: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(parse_error(1, None, "missing header row"));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = header.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(parse_error(1, Some(dup), "duplicate column name"));
    }
    let position = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| parse_error(1, Some(name), "column not found in header"))
    };
    let response = position(&layout.response)?;
    let columns: Vec<String> = match &layout.columns {
        Some(cols) => cols.clone(),
        None => header.iter().filter(|h| **h != layout.response).cloned().collect(),
    };
    if columns.is_empty() {
        return Err(parse_error(1, None, "no design columns"));
    }
    let indices = columns.iter().map(|c| position(c)).collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize| -> Result<f64> {
            let name = &header[i];
            let raw = record.get(i).ok_or_else(|| parse_error(line, Some(name), "missing cell"))?;
            let v: f64 = raw.parse().map_err(|_| parse_error(line, Some(name), format!("`{raw}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(line, Some(name), format!("`{raw}` is not a finite number")));
            }
            Ok(v)
        };
        y.push(cell(response)?);
        rows.push(indices.iter().map(|&i| cell(i)).collect::<Result<_>>()?);
    }
    if y.is_empty() {
        return Err(parse_error(1, None, "no observations after the header"));
    }

    let design = Matrix::from_rows(&rows).map_err(Error::Core)?;
    let funcs = (0..columns.len())
        .map(match layout.mode {
            ColumnMode::Raw => DictFn::Coordinate,
            ColumnMode::Precomputed => DictFn::Precomputed,
        })
        .collect();
    let dictionary = Dictionary::new(funcs, DictionaryBounds::unspecified())?;
    let sample = Sample::from_design(design, y)?;
    Ok(Dataset { sample, dictionary, columns })
}

pub fn load_dataset_path(path: &Path, layout: &Layout) -> Result<Dataset> {
    let file = File::open(path).map_err(Error::io(path))?;
    load_dataset(file, layout)
}

//! Data model shared by every detector: validated numeric tables, the
//! reference/current pairing, and reference-statistics standardization.
//!
//! All types here are immutable after construction and all operations are
//! pure, so they can be used from multiple threads without coordination.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Which side of the comparison a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceTag {
    Reference,
    Current,
}

impl SourceTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SourceTag::Reference => "reference",
            SourceTag::Current => "current",
        }
    }
}

/// A validated columnar numeric table: n rows by d named features, with an
/// optional label column kept separate from the features.
///
/// Invariants enforced at construction: n >= 1, d >= 1, every entry finite,
/// feature names unique, label (when present) has one value per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    feature_names: Vec<String>,
    label: Option<Vec<f64>>,
    source_tag: SourceTag,
}

impl Dataset {
    pub fn new(
        features: DMatrix<f64>,
        feature_names: Vec<String>,
        label: Option<Vec<f64>>,
        source_tag: SourceTag,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset("no rows".into()));
        }
        if features.ncols() == 0 {
            return Err(Error::EmptyDataset("no feature columns".into()));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::EmptyDataset(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.ncols()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        for (idx, v) in features.iter().enumerate() {
            if !v.is_finite() {
                // nalgebra iterates column-major
                let row = idx % features.nrows();
                let col = idx / features.nrows();
                return Err(Error::NonFiniteCell {
                    row: row + 1,
                    column: feature_names[col].clone(),
                });
            }
        }
        if let Some(ref lab) = label {
            if lab.len() != features.nrows() {
                return Err(Error::EmptyDataset(format!(
                    "label has {} values for {} rows",
                    lab.len(),
                    features.nrows()
                )));
            }
            if let Some(row) = lab.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteCell {
                    row: row + 1,
                    column: "label".into(),
                });
            }
        }
        Ok(Dataset {
            features,
            feature_names,
            label,
            source_tag,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label(&self) -> Option<&[f64]> {
        self.label.as_deref()
    }

    pub fn source_tag(&self) -> SourceTag {
        self.source_tag
    }

    /// Feature column `j` as a plain vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.features.column(j).iter().copied().collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .map(|j| self.column(j))
    }
}

/// An unvalidated table as parsed from CSV: header plus string cells.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let columns: Vec<String> = csv_reader
            .headers()?
            .iter()
            .map(|h| h.to_string())
            .collect();
        let mut rows = Vec::new();
        for record in csv_reader.records() {
            let record = record?;
            rows.push(record.iter().map(|c| c.to_string()).collect());
        }
        Ok(RawTable { columns, rows })
    }
}

/// Parse and validate a raw table into a [`Dataset`].
///
/// `label` selects a column by name to split off as the label; it is then
/// excluded from the features. Errors name the offending row (1-based, not
/// counting the header) and column.
pub fn validate(table: &RawTable, label: Option<&str>, tag: SourceTag) -> Result<Dataset> {
    if table.rows.is_empty() {
        return Err(Error::EmptyDataset("table has no data rows".into()));
    }
    if table.columns.is_empty() {
        return Err(Error::EmptyDataset("table has no columns".into()));
    }
    let mut seen = HashSet::new();
    for name in &table.columns {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateFeature(name.clone()));
        }
    }
    let label_idx = match label {
        Some(name) => Some(
            table
                .columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))?,
        ),
        None => None,
    };

    let n = table.rows.len();
    let feature_cols: Vec<usize> = (0..table.columns.len())
        .filter(|j| Some(*j) != label_idx)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::EmptyDataset(
            "no feature columns left after selecting the label".into(),
        ));
    }

    let parse_cell = |row: usize, col: usize| -> Result<f64> {
        let cells = &table.rows[row];
        let cell = cells.get(col).map(String::as_str).unwrap_or("");
        let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
            row: row + 1,
            column: table.columns[col].clone(),
            value: cell.to_string(),
        })?;
        if !value.is_finite() {
            return Err(Error::NonFiniteCell {
                row: row + 1,
                column: table.columns[col].clone(),
            });
        }
        Ok(value)
    };

    let mut data = Vec::with_capacity(n * feature_cols.len());
    for row in 0..n {
        for &col in &feature_cols {
            data.push(parse_cell(row, col)?);
        }
    }
    let features = DMatrix::from_row_slice(n, feature_cols.len(), &data);
    let feature_names: Vec<String> = feature_cols
        .iter()
        .map(|&j| table.columns[j].clone())
        .collect();

    let label_values = match label_idx {
        Some(col) => {
            let mut values = Vec::with_capacity(n);
            for row in 0..n {
                values.push(parse_cell(row, col)?);
            }
            Some(values)
        }
        None => None,
    };

    Dataset::new(features, feature_names, label_values, tag)
}

/// Read a CSV file straight into a validated dataset.
pub fn read_csv<P: AsRef<Path>>(path: P, label: Option<&str>, tag: SourceTag) -> Result<Dataset> {
    validate(&RawTable::from_csv_path(path)?, label, tag)
}

/// A reference/current dataset pair with matching schema.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub reference: Dataset,
    pub current: Dataset,
}

impl SplitPair {
    pub fn new(reference: Dataset, current: Dataset) -> Result<Self> {
        if reference.feature_names() != current.feature_names() {
            return Err(Error::FeatureMismatch);
        }
        if reference.label().is_some() != current.label().is_some() {
            return Err(Error::LabelMismatch);
        }
        Ok(SplitPair { reference, current })
    }

    pub fn n_features(&self) -> usize {
        self.reference.n_features()
    }

    pub fn feature_names(&self) -> &[String] {
        self.reference.feature_names()
    }
}

/// Record of what [`standardize`] did: the reference statistics applied to
/// both datasets and any features dropped for having zero reference
/// variance.
#[derive(Debug, Clone)]
pub struct Standardization {
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Sample standard deviation with the n-1 denominator.
///
/// Returns 0.0 for a single observation, which the caller treats the same
/// as a constant column. The n-1 convention matters: KL and MMD magnitudes
/// downstream depend on it.
pub fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (ss / (n - 1) as f64).sqrt()
}

/// Transform both datasets by (x - mean_ref) / std_ref computed from the
/// reference sample only.
///
/// Features with zero reference variance are dropped from both datasets
/// (a shift test on a constant feature is degenerate, but the run should
/// proceed) and listed in the returned [`Standardization`]. Labels pass
/// through untouched. Errors only if every feature is constant.
pub fn standardize(pair: &SplitPair) -> Result<(SplitPair, Standardization)> {
    let d = pair.n_features();
    let mut kept_idx = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();

    for j in 0..d {
        let col = pair.reference.column(j);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let std = sample_std(&col);
        if std == 0.0 {
            dropped.push(pair.feature_names()[j].clone());
        } else {
            kept_idx.push(j);
            kept.push(pair.feature_names()[j].clone());
            means.push(mean);
            stds.push(std);
        }
    }
    if kept_idx.is_empty() {
        return Err(Error::AllFeaturesDropped);
    }

    let transform = |ds: &Dataset| -> Result<Dataset> {
        let n = ds.n_rows();
        let mut data = Vec::with_capacity(n * kept_idx.len());
        for row in 0..n {
            for (slot, &j) in kept_idx.iter().enumerate() {
                data.push((ds.features()[(row, j)] - means[slot]) / stds[slot]);
            }
        }
        Dataset::new(
            DMatrix::from_row_slice(n, kept_idx.len(), &data),
            kept.clone(),
            ds.label().map(|l| l.to_vec()),
            ds.source_tag(),
        )
    };

    let standardized = SplitPair::new(transform(&pair.reference)?, transform(&pair.current)?)?;
    Ok((
        standardized,
        Standardization {
            kept,
            dropped,
            means,
            stds,
        },
    ))
}

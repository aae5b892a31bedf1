//! Tabular dataset ingestion and preprocessing.
//!
//! A [`Dataset`] holds the preprocessed feature matrix (every value in
//! `[0, 1]`), integer class labels and the untouched raw records that the
//! explorer shows when a user inspects a group of instances. Instance ids are
//! the row positions `0..n`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Smallest dataset accepted by [`load_dataset`] and the pipeline.
pub const MIN_INSTANCES: usize = 10;

/// Cells that count as missing (after trimming).
const MISSING_MARKERS: [&str; 3] = ["", "NA", "?"];

/// Untransformed table rows, kept verbatim for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecords {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    raw_records: RawRecords,
}

impl Dataset {
    /// Builds a dataset from already preprocessed features.
    ///
    /// Checks the class structure (at least two classes, two instances per
    /// class) and that every feature value is finite and inside `[0, 1]`.
    /// Raw records are synthesized from the features; use
    /// [`Dataset::with_raw_records`] to attach the original table.
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} rows",
                labels.len(),
                n
            )));
        }
        if feature_names.len() != d {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                d
            )));
        }
        if d == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} outside the {} declared classes",
                class_names.len()
            )));
        }
        if let Some(v) = features
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidDataset(format!(
                "feature value {v} outside [0, 1]"
            )));
        }
        let mut counts = vec![0usize; class_names.len()];
        for &l in &labels {
            counts[l] += 1;
        }
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::TooFewClasses("label".into()));
        }
        for (c, &count) in counts.iter().enumerate() {
            if count < 2 {
                return Err(Error::ClassTooSmall {
                    class: class_names[c].clone(),
                    count,
                    required: 2,
                });
            }
        }

        let mut header = feature_names.clone();
        header.push("class".into());
        let rows = features
            .outer_iter()
            .zip(&labels)
            .map(|(row, &l)| {
                row.iter()
                    .map(|v| v.to_string())
                    .chain(std::iter::once(class_names[l].clone()))
                    .collect()
            })
            .collect();

        Ok(Dataset {
            features,
            labels,
            feature_names,
            class_names,
            raw_records: RawRecords { header, rows },
        })
    }

    /// Min-max scales arbitrary real features and builds a dataset with
    /// generated names (`x0`, `x1`, ... and class names `0`, `1`, ...).
    pub fn from_unscaled(features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
        let names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        let classes = (0..n_classes).map(|c| c.to_string()).collect();
        let mut scaled = features;
        min_max_scale(&mut scaled);
        Dataset::new(scaled, labels, names, classes)
    }

    pub fn with_raw_records(mut self, raw: RawRecords) -> Result<Self> {
        if raw.rows.len() != self.n_instances() {
            return Err(Error::InvalidDataset(format!(
                "{} raw records for {} instances",
                raw.rows.len(),
                self.n_instances()
            )));
        }
        self.raw_records = raw;
        Ok(self)
    }

    /// Replaces class names, keeping the label assignment. Used to check that
    /// renaming classes does not change any derived quantity.
    pub fn with_class_names(mut self, class_names: Vec<String>) -> Result<Self> {
        if class_names.len() != self.class_names.len() {
            return Err(Error::InvalidDataset("class name count changed".into()));
        }
        self.class_names = class_names;
        Ok(self)
    }

    pub fn n_instances(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn raw_records(&self) -> &RawRecords {
        &self.raw_records
    }

    /// Instances per class, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Size requirement shared by the loader and the pipeline.
    pub fn check_min_size(&self) -> Result<()> {
        if self.n_instances() < MIN_INSTANCES {
            return Err(Error::InvalidDataset(format!(
                "{} instances, at least {MIN_INSTANCES} required",
                self.n_instances()
            )));
        }
        Ok(())
    }
}

/// Scales every column to `[0, 1]` in place. Constant columns become 0.
pub fn min_max_scale(x: &mut Array2<f64>) {
    for mut col in x.columns_mut() {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        col.mapv_inplace(|v| {
            if span > 0.0 {
                ((v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        });
    }
}

/// How to read a delimited table.
#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub target: String,
    pub delimiter: u8,
    /// Columns that must parse as numbers. `None` infers the type per column.
    pub numeric_columns: Option<Vec<String>>,
    /// Columns forced to categorical even when they look numeric.
    pub categorical_columns: Vec<String>,
    /// Columns ignored for modelling (still kept in the raw records).
    pub ignore_columns: Vec<String>,
    /// Median / mode imputation instead of rejecting missing cells.
    pub impute_missing: bool,
}

impl IngestOptions {
    pub fn new(target: impl Into<String>) -> Self {
        IngestOptions {
            target: target.into(),
            delimiter: b',',
            numeric_columns: None,
            categorical_columns: Vec::new(),
            ignore_columns: Vec::new(),
            impute_missing: false,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    MISSING_MARKERS.contains(&cell.trim())
}

/// Reads a delimited UTF-8 table with a header row.
///
/// Numeric columns are min-max scaled, categorical columns one-hot encoded
/// (one indicator per category, categories in sorted order). Rows whose
/// target cell is missing are dropped.
pub fn load_dataset(path: impl AsRef<Path>, options: &IngestOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let dataset = read_dataset(file, options)?;
    Ok(dataset)
}

/// Same as [`load_dataset`] over any reader.
pub fn read_dataset<R: std::io::Read>(reader: R, options: &IngestOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let mut seen = BTreeSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::InvalidDataset(format!("duplicate column `{h}`")));
        }
    }
    let target_idx = header
        .iter()
        .position(|h| *h == options.target)
        .ok_or_else(|| Error::InvalidDataset(format!("no target column `{}`", options.target)))?;
    for name in options
        .numeric_columns
        .iter()
        .flatten()
        .chain(&options.categorical_columns)
        .chain(&options.ignore_columns)
    {
        if !header.contains(name) {
            return Err(Error::InvalidDataset(format!("unknown column `{name}`")));
        }
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if is_missing(&record[target_idx]) {
            warn!("dropping row {} with missing target", i + 1);
            continue;
        }
        rows.push(record.iter().map(str::to_string).collect());
    }

    // Classes in sorted name order.
    let class_names: Vec<String> = rows
        .iter()
        .map(|r| r[target_idx].trim().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if class_names.len() < 2 {
        return Err(Error::TooFewClasses(options.target.clone()));
    }
    let labels: Vec<usize> = rows
        .iter()
        .map(|r| {
            let name = r[target_idx].trim();
            class_names
                .iter()
                .position(|c| c == name)
                .expect("class collected above")
        })
        .collect();

    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for (j, name) in header.iter().enumerate() {
        if j == target_idx || options.ignore_columns.contains(name) {
            continue;
        }
        let cells: Vec<&str> = rows.iter().map(|r| r[j].trim()).collect();
        if let Some(row) = cells.iter().position(|c| is_missing(c)) {
            if !options.impute_missing {
                return Err(Error::MissingValue {
                    column: name.clone(),
                    row: row + 1,
                });
            }
        }
        let declared_numeric = options
            .numeric_columns
            .as_ref()
            .map(|cols| cols.contains(name));
        let categorical = options.categorical_columns.contains(name);
        let numeric = match declared_numeric {
            Some(true) => true,
            Some(false) => false,
            None => {
                !categorical
                    && cells
                        .iter()
                        .filter(|c| !is_missing(c))
                        .all(|c| c.parse::<f64>().is_ok_and(f64::is_finite))
            }
        };
        if numeric {
            columns.push((name.clone(), numeric_column(name, &cells)?));
        } else {
            columns.extend(one_hot_column(name, &cells));
        }
    }

    let n = rows.len();
    let d = columns.len();
    let mut features = Array2::zeros((n, d));
    for (j, (_, values)) in columns.iter().enumerate() {
        for (i, v) in values.iter().enumerate() {
            features[[i, j]] = *v;
        }
    }
    min_max_scale(&mut features);

    check_class_sizes(&labels, &class_names)?;
    let feature_names = columns.into_iter().map(|(name, _)| name).collect();
    let dataset = Dataset::new(features, labels, feature_names, class_names)?
        .with_raw_records(RawRecords { header, rows })?;
    dataset.check_min_size()?;
    Ok(dataset)
}

fn check_class_sizes(labels: &[usize], class_names: &[String]) -> Result<()> {
    let mut counts = vec![0usize; class_names.len()];
    for &l in labels {
        counts[l] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        if count < 2 {
            return Err(Error::ClassTooSmall {
                class: class_names[c].clone(),
                count,
                required: 2,
            });
        }
    }
    Ok(())
}

/// Parses a numeric column; missing cells get the median of the present ones.
fn numeric_column(name: &str, cells: &[&str]) -> Result<Vec<f64>> {
    let mut parsed = Vec::with_capacity(cells.len());
    for (row, cell) in cells.iter().enumerate() {
        if is_missing(cell) {
            parsed.push(None);
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => parsed.push(Some(v)),
            _ => {
                return Err(Error::NonNumeric {
                    column: name.to_string(),
                    row: row + 1,
                    value: cell.to_string(),
                })
            }
        }
    }
    let mut present: Vec<f64> = parsed.iter().flatten().copied().collect();
    present.sort_by(f64::total_cmp);
    let median = match present.len() {
        0 => 0.0,
        k if k % 2 == 1 => present[k / 2],
        k => 0.5 * (present[k / 2 - 1] + present[k / 2]),
    };
    Ok(parsed.into_iter().map(|v| v.unwrap_or(median)).collect())
}

/// One indicator column per category; missing cells take the mode
/// (ties resolved to the smallest category name).
fn one_hot_column(name: &str, cells: &[&str]) -> Vec<(String, Vec<f64>)> {
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for cell in cells.iter().filter(|c| !is_missing(c)) {
        *freq.entry(cell).or_default() += 1;
    }
    let mode = freq
        .iter()
        .fold(None::<(&str, usize)>, |best, (&k, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k);
    freq.keys()
        .map(|&category| {
            let values = cells
                .iter()
                .map(|&c| {
                    let c = if is_missing(c) { mode.unwrap_or("") } else { c };
                    if c == category {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            (format!("{name}={category}"), values)
        })
        .collect()
}

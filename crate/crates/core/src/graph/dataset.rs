use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column description for a CSV dataset, stored as a JSON sidecar next to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub label_column: String,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    /// Identifier columns that carry no signal.
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Explicit class order. When absent, classes are the sorted distinct label values.
    #[serde(default)]
    pub classes: Option<Vec<String>>,
}

impl DatasetSchema {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line() as u64,
            message: e.to_string(),
        })
    }
}

/// Tabular dataset with integer class labels and a labeled/unlabeled split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// n×d feature matrix.
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub labeled_mask: Vec<bool>,
    pub class_count: usize,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl Dataset {
    /// Builds a fully labeled dataset after checking the label and feature invariants.
    pub fn new(
        name: impl Into<String>,
        features: DMatrix<f64>,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n} labels"),
                found: format!("{} labels", labels.len()),
            });
        }
        let feature_names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        let class_names = (0..class_count).map(|c| c.to_string()).collect();
        let ds = Dataset {
            name: name.into(),
            features,
            labels,
            labeled_mask: vec![true; n],
            class_count,
            feature_names,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features.ncols()
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labeled_mask[i]).collect()
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.labeled_mask[i]).collect()
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("mask of length {}", self.len()),
                found: format!("{}", mask.len()),
            });
        }
        self.labeled_mask = mask;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labeled_mask.len() != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("mask of length {}", self.labels.len()),
                found: format!("{}", self.labeled_mask.len()),
            });
        }
        if let Some(&bad) = self.labels.iter().find(|&&y| y >= self.class_count) {
            return Err(Error::invalid(format!(
                "class id {bad} out of range for {} classes",
                self.class_count
            )));
        }
        let mut seen = vec![false; self.class_count];
        for (i, &y) in self.labels.iter().enumerate() {
            if self.labeled_mask[i] {
                seen[y] = true;
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::MissingClassLabels(c));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature matrix contains non-finite values"));
        }
        Ok(())
    }

    /// Standardizes features in place, dropping constant columns. Returns the dropped column names.
    pub fn standardize(&mut self) -> Result<Vec<String>> {
        let std = standardize_features(&self.features)?;
        let dropped: Vec<String> = std
            .dropped
            .iter()
            .map(|&j| self.feature_names[j].clone())
            .collect();
        self.feature_names = std
            .kept
            .iter()
            .map(|&j| self.feature_names[j].clone())
            .collect();
        self.features = std.matrix;
        Ok(dropped)
    }
}

/// Parses a CSV file into a [`Dataset`] (unstandardized), one-hot encoding categorical columns.
pub fn load_dataset(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::Csv(e),
        })?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let col_of = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let label_col = col_of(&schema.label_column)?;
    for c in schema
        .categorical_columns
        .iter()
        .chain(schema.drop_columns.iter())
    {
        col_of(c)?;
    }

    let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, record.iter().map(str::to_string).collect()));
    }

    let classes: Vec<String> = match &schema.classes {
        Some(c) => c.clone(),
        None => rows
            .iter()
            .map(|(_, r)| r[label_col].clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let class_index: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let mut labels = Vec::with_capacity(rows.len());
    for (line, r) in &rows {
        let v = &r[label_col];
        match class_index.get(v.as_str()) {
            Some(&c) => labels.push(c),
            None => {
                return Err(Error::UnknownLabel {
                    value: v.clone(),
                    line: *line,
                })
            }
        }
    }

    // Feature columns in header order; categoricals expand in place to sorted category indicators.
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for (j, name) in header.iter().enumerate() {
        if j == label_col || schema.drop_columns.contains(name) {
            continue;
        }
        if schema.categorical_columns.contains(name) {
            let cats: BTreeSet<&str> = rows.iter().map(|(_, r)| r[j].as_str()).collect();
            for cat in cats {
                let col = rows
                    .iter()
                    .map(|(_, r)| if r[j] == cat { 1.0 } else { 0.0 })
                    .collect();
                columns.push((format!("{name}={cat}"), col));
            }
        } else {
            let mut col = Vec::with_capacity(rows.len());
            for (line, r) in &rows {
                let cell = &r[j];
                let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                    column: name.clone(),
                    value: cell.clone(),
                    line: *line,
                })?;
                if !v.is_finite() {
                    return Err(Error::NonNumeric {
                        column: name.clone(),
                        value: cell.clone(),
                        line: *line,
                    });
                }
                col.push(v);
            }
            columns.push((name.clone(), col));
        }
    }

    let n = rows.len();
    let d = columns.len();
    let features = DMatrix::from_fn(n, d, |i, j| columns[j].1[i]);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ds = Dataset {
        name,
        features,
        labels,
        labeled_mask: vec![true; n],
        class_count: classes.len(),
        feature_names: columns.into_iter().map(|(n, _)| n).collect(),
        class_names: classes,
    };
    ds.validate()?;
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub matrix: DMatrix<f64>,
    /// Source column index of every retained column.
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

/// Centers every column and scales it to unit sample standard deviation.
/// Zero-variance columns are dropped (and logged) instead of producing NaNs.
pub fn standardize_features(raw: &DMatrix<f64>) -> Result<Standardized> {
    let n = raw.nrows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "standardization needs at least 2 rows, got {n}"
        )));
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut cols = Vec::new();
    for j in 0..raw.ncols() {
        let col = raw.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        if std <= 1e-12 * mean.abs().max(1.0) {
            log::warn!("dropping constant feature column {j}");
            dropped.push(j);
            continue;
        }
        kept.push(j);
        cols.push(col.map(|v| (v - mean) / std));
    }
    if cols.is_empty() {
        return Err(Error::EmptyFeatures);
    }
    let matrix = DMatrix::from_columns(&cols);
    Ok(Standardized {
        matrix,
        kept,
        dropped,
    })
}

/// Stratified labeled/unlabeled split: each class keeps `round(label_rate * class_size)` labels.
pub fn mask_labels(dataset: &Dataset, label_rate: f64, seed: u64) -> Result<Dataset> {
    if !(label_rate > 0.0 && label_rate <= 1.0) {
        return Err(Error::invalid(format!(
            "label rate must lie in (0, 1], got {label_rate}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; dataset.len()];
    for class in 0..dataset.class_count {
        let mut members: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.labels[i] == class)
            .collect();
        let size = members.len();
        let take = (label_rate * size as f64).round() as usize;
        if take == 0 {
            return Err(Error::LabelRateTooSmall {
                rate: label_rate,
                class,
                size,
            });
        }
        members.shuffle(&mut rng);
        for &i in members.iter().take(take) {
            mask[i] = true;
        }
    }
    dataset.clone().with_mask(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    fn schema(label: &str) -> DatasetSchema {
        DatasetSchema {
            label_column: label.into(),
            categorical_columns: vec![],
            drop_columns: vec![],
            classes: None,
        }
    }

    #[test]
    fn single_row_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "one.csv", "x,y\n1.5,a\n");
        let ds = load_dataset(&p, &schema("y")).unwrap();
        assert_eq!((ds.len(), ds.feature_count(), ds.class_count), (1, 1, 1));
    }

    #[test]
    fn categoricals_are_one_hot_and_rows_keep_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "c.csv",
            "id,color,size,label\n1,red,1.0,b\n2,blue,2.0,a\n3,red,3.0,b\n",
        );
        let s = DatasetSchema {
            label_column: "label".into(),
            categorical_columns: vec!["color".into()],
            drop_columns: vec!["id".into()],
            classes: None,
        };
        let ds = load_dataset(&p, &s).unwrap();
        assert_eq!(ds.feature_names, vec!["color=blue", "color=red", "size"]);
        assert_eq!(ds.labels, vec![1, 0, 1]);
        assert_eq!(
            ds.features.row(1).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 0.0, 2.0]
        );
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = load_dataset(dir.path().join("nope.csv"), &schema("y"));
        assert!(matches!(missing, Err(Error::Io { .. })));

        let p = write_tmp(&dir, "bad.csv", "x,y\n1,a\nfoo,b\n");
        assert!(matches!(
            load_dataset(&p, &schema("y")),
            Err(Error::NonNumeric { line: 3, .. })
        ));

        let p = write_tmp(&dir, "lab.csv", "x,y\n1,a\n2,zzz\n");
        let mut s = schema("y");
        s.classes = Some(vec!["a".into()]);
        assert!(matches!(
            load_dataset(&p, &s),
            Err(Error::UnknownLabel { line: 3, .. })
        ));
    }

    #[test]
    fn standardize_three_point_column() {
        let raw = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let s = standardize_features(&raw).unwrap();
        for (got, want) in s.matrix.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_skewed_column_matches_hand_formula() {
        // mean 10/3; sample variance ((10/3)^2 * 2 + (20/3)^2) / 2 = 100/3
        let raw = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 10.0]);
        let s = standardize_features(&raw).unwrap();
        let sd = (100.0f64 / 3.0).sqrt();
        let want = [-(10.0 / 3.0) / sd, -(10.0 / 3.0) / sd, (20.0 / 3.0) / sd];
        for (got, w) in s.matrix.iter().zip(want) {
            assert!((got - w).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_drops_constant_columns() {
        let raw = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let s = standardize_features(&raw).unwrap();
        assert_eq!(s.kept, vec![0]);
        assert_eq!(s.dropped, vec![1]);
        let all_const = DMatrix::from_element(4, 2, 7.0);
        assert!(matches!(
            standardize_features(&all_const),
            Err(Error::EmptyFeatures)
        ));
        assert!(standardize_features(&DMatrix::from_element(1, 2, 1.0)).is_err());
    }

    fn toy(labels: Vec<usize>, k: usize) -> Dataset {
        let n = labels.len();
        let x = DMatrix::from_fn(n, 1, |i, _| i as f64);
        Dataset::new("toy", x, labels, k).unwrap()
    }

    #[test]
    fn mask_is_stratified_and_deterministic() {
        let ds = toy((0..150).map(|i| i / 50).collect(), 3);
        let a = mask_labels(&ds, 0.30, 7).unwrap();
        let b = mask_labels(&ds, 0.30, 7).unwrap();
        assert_eq!(a.labeled_mask, b.labeled_mask);
        assert_eq!(a.labeled_indices().len(), 45);
        for c in 0..3 {
            let count = a
                .labeled_indices()
                .iter()
                .filter(|&&i| a.labels[i] == c)
                .count();
            assert_eq!(count, 15);
        }
        let full = mask_labels(&ds, 1.0, 1).unwrap();
        assert!(full.labeled_mask.iter().all(|&m| m));
    }

    #[test]
    fn mask_rejects_rates_that_empty_a_class() {
        let ds = toy(vec![0, 0, 0, 0, 0, 0, 0, 0, 1, 1], 2);
        assert!(matches!(
            mask_labels(&ds, 0.1, 0),
            Err(Error::LabelRateTooSmall { class: 1, .. })
        ));
        assert!(mask_labels(&ds, 0.0, 0).is_err());
        assert!(mask_labels(&ds, 1.5, 0).is_err());
    }
}

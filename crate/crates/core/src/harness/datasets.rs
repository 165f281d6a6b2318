use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{load_dataset, Dataset, DatasetSchema};

pub const DATA_DIR_ENV: &str = "QGSSL_DATA_DIR";

pub const BUNDLED: [&str; 4] = ["iris", "wine", "heart_disease", "german_credit"];

/// `$QGSSL_DATA_DIR`, else the `data/` folder at the workspace root.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// CSV path and schema sidecar (`<stem>.schema.json`) for a dataset name or path.
pub fn resolve(dataset: &str) -> Result<(PathBuf, PathBuf)> {
    let as_path = Path::new(dataset);
    let csv = if as_path.extension().is_some_and(|e| e == "csv") {
        as_path.to_path_buf()
    } else {
        data_dir().join(format!("{dataset}.csv"))
    };
    if !csv.is_file() {
        return Err(Error::Config(format!(
            "dataset `{dataset}` not found at {}",
            csv.display()
        )));
    }
    let schema = csv.with_extension("schema.json");
    if !schema.is_file() {
        return Err(Error::Config(format!(
            "schema sidecar {} not found",
            schema.display()
        )));
    }
    Ok((csv, schema))
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub path: PathBuf,
    pub dropped_columns: Vec<String>,
}

/// Loads, one-hot encodes and standardizes a dataset.
pub fn load_standardized(dataset: &str) -> Result<LoadedDataset> {
    let (csv, schema_path) = resolve(dataset)?;
    let schema = DatasetSchema::from_json_file(&schema_path)?;
    let mut ds = load_dataset(&csv, &schema)?;
    let dropped_columns = ds.standardize()?;
    for c in &dropped_columns {
        log::warn!("{}: dropped constant column `{c}`", ds.name);
    }
    Ok(LoadedDataset {
        dataset: ds,
        path: csv,
        dropped_columns,
    })
}

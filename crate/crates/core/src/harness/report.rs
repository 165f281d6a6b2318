use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::run::{write_roc_csv, ExperimentResult};
use crate::error::{Error, Result};
use crate::qelp::Method;

fn find_results(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            find_results(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "result.json") {
            out.push(path);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub method: Method,
    pub name: String,
    pub seeds: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    pub auc_overall: f64,
    pub accuracy_delta_vs_label_propagation: Option<f64>,
}

/// Loads every `result.json` under `dir`. The most recent run wins per experiment name.
pub fn collect_results(dir: &Path) -> Result<Vec<ExperimentResult>> {
    let mut paths = Vec::new();
    find_results(dir, &mut paths)?;
    if paths.is_empty() {
        return Err(Error::invalid(format!(
            "no result.json under {}",
            dir.display()
        )));
    }
    let mut latest: BTreeMap<String, ((String, PathBuf), ExperimentResult)> = BTreeMap::new();
    let mut version: Option<String> = None;
    for p in paths {
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let r: ExperimentResult = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: p.clone(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        match &version {
            Some(v) if *v != r.schema_version => {
                return Err(Error::Schema(format!(
                    "mixed result schema versions: {v} and {} ({})",
                    r.schema_version,
                    p.display()
                )));
            }
            None => version = Some(r.schema_version.clone()),
            _ => {}
        }
        let key = r.config.name.clone();
        let order = (r.timestamp.clone(), p);
        if latest.get(&key).is_none_or(|(old, _)| order > *old) {
            latest.insert(key, (order, r));
        }
    }
    Ok(latest.into_values().map(|(_, r)| r).collect())
}

pub fn report_rows(results: &[ExperimentResult]) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = results
        .iter()
        .map(|r| ReportRow {
            dataset: r.dataset.name.clone(),
            method: r.method,
            name: r.config.name.clone(),
            seeds: r.aggregate.count,
            accuracy_mean: r.aggregate.accuracy.mean,
            accuracy_std: r.aggregate.accuracy.std,
            precision_macro: r.aggregate.precision_macro.mean,
            recall_macro: r.aggregate.recall_macro.mean,
            f1_macro: r.aggregate.f1_macro.mean,
            auc_overall: r.aggregate.auc_overall.mean,
            accuracy_delta_vs_label_propagation: None,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.dataset
            .cmp(&b.dataset)
            .then(a.method.name().cmp(b.method.name()))
            .then(a.name.cmp(&b.name))
    });
    let baselines: BTreeMap<String, f64> = rows
        .iter()
        .filter(|r| r.method == Method::LabelPropagation)
        .map(|r| (r.dataset.clone(), r.accuracy_mean))
        .collect();
    for r in &mut rows {
        if r.method != Method::LabelPropagation {
            r.accuracy_delta_vs_label_propagation =
                baselines.get(&r.dataset).map(|b| r.accuracy_mean - b);
        }
    }
    rows
}

/// Writes `report.csv` (one row per experiment) and `roc_<name>.csv` per experiment into `dir`.
pub fn make_report(dir: &Path) -> Result<PathBuf> {
    let results = collect_results(dir)?;
    let rows = report_rows(&results);
    let out = dir.join("report.csv");
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record([
        "dataset",
        "method",
        "name",
        "seeds",
        "accuracy_mean",
        "accuracy_std",
        "precision_macro",
        "recall_macro",
        "f1_macro",
        "auc_overall",
        "accuracy_delta_vs_label_propagation",
    ])?;
    for r in &rows {
        w.write_record([
            r.dataset.clone(),
            r.method.name().to_string(),
            r.name.clone(),
            r.seeds.to_string(),
            format!("{:.6}", r.accuracy_mean),
            format!("{:.6}", r.accuracy_std),
            format!("{:.6}", r.precision_macro),
            format!("{:.6}", r.recall_macro),
            format!("{:.6}", r.f1_macro),
            format!("{:.6}", r.auc_overall),
            r.accuracy_delta_vs_label_propagation
                .map(|d| format!("{d:+.6}"))
                .unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&out, e))?;
    for r in &results {
        write_roc_csv(&dir.join(format!("roc_{}.csv", r.config.name)), &r.runs)?;
    }
    Ok(out)
}

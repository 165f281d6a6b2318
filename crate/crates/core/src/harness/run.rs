use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::datasets::load_standardized;
use crate::benchmarking::{rb_experiment, RbResult};
use crate::error::{Error, Result};
use crate::metrics::ScoreNormalization;
use crate::qelp::{mean_std, run_pipeline, Method, PipelineConfig, PipelineResult};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(xs: &[f64]) -> Self {
        let (mean, std) = mean_std(xs);
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub count: usize,
    pub accuracy: MeanStd,
    pub precision_macro: MeanStd,
    pub recall_macro: MeanStd,
    pub f1_macro: MeanStd,
    pub auc_overall: MeanStd,
    /// `None` for a class whose AUC was undefined on some seed.
    pub auc_per_class: Vec<Option<MeanStd>>,
    pub ks_per_class: Vec<Option<MeanStd>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub final_entropy: MeanStd,
    pub graph_state_entropy: MeanStd,
    pub circuit_entropy: MeanStd,
    pub min_fidelity: f64,
    pub rb_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub rows: usize,
    pub features: usize,
    pub classes: Vec<String>,
    pub dropped_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: String,
    pub artifact_version: String,
    pub config: ExperimentConfig,
    pub dataset: DatasetInfo,
    pub method: Method,
    pub score_normalization: ScoreNormalization,
    pub all_converged: bool,
    pub aggregate: AggregateMetrics,
    pub diagnostics: Option<DiagnosticsSummary>,
    pub rb: Option<RbResult>,
    pub runs: Vec<PipelineResult>,
    pub timestamp: String,
    pub wall_clock_seconds: f64,
}

fn aggregate(runs: &[PipelineResult], k: usize) -> AggregateMetrics {
    let pick = |f: &dyn Fn(&PipelineResult) -> f64| -> MeanStd {
        MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>())
    };
    let per_class = |f: &dyn Fn(&PipelineResult, usize) -> Option<f64>| -> Vec<Option<MeanStd>> {
        (0..k)
            .map(|c| {
                let vals: Option<Vec<f64>> = runs.iter().map(|r| f(r, c)).collect();
                vals.map(|v| MeanStd::of(&v))
            })
            .collect()
    };
    AggregateMetrics {
        count: runs.len(),
        accuracy: pick(&|r| r.metrics.accuracy),
        precision_macro: pick(&|r| r.metrics.precision_macro),
        recall_macro: pick(&|r| r.metrics.recall_macro),
        f1_macro: pick(&|r| r.metrics.f1_macro),
        auc_overall: pick(&|r| r.metrics.auc_overall),
        auc_per_class: per_class(&|r, c| r.metrics.auc_per_class[c]),
        ks_per_class: per_class(&|r, c| r.metrics.ks_per_class[c]),
    }
}

fn summarize(runs: &[PipelineResult], rb_score: Option<f64>) -> Option<DiagnosticsSummary> {
    let diags: Vec<_> = runs.iter().filter_map(|r| r.diagnostics.as_ref()).collect();
    if diags.is_empty() {
        return None;
    }
    let of = |f: &dyn Fn(&crate::qelp::QuantumDiagnostics) -> f64| {
        MeanStd::of(&diags.iter().map(|d| f(d)).collect::<Vec<_>>())
    };
    Some(DiagnosticsSummary {
        final_entropy: of(&|d| d.final_entropy),
        graph_state_entropy: of(&|d| d.graph_state_entropy),
        circuit_entropy: of(&|d| d.circuit_entropy),
        min_fidelity: diags
            .iter()
            .flat_map(|d| d.per_iteration_fidelity.iter().copied())
            .fold(1.0, f64::min),
        rb_score,
    })
}

/// Runs the configured pipeline over every seed. Seeds execute in parallel; results keep seed order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let loaded = load_standardized(&config.dataset)?;
    let ds = &loaded.dataset;
    let rb = config.rb.as_ref().map(rb_experiment).transpose()?;
    let rb_score = rb.as_ref().map(RbResult::mean_survival);
    let mut runs: Vec<PipelineResult> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            run_pipeline(
                ds,
                &PipelineConfig {
                    seed,
                    ..config.pipeline.clone()
                },
            )
        })
        .collect::<Result<_>>()?;
    for r in &mut runs {
        if let Some(d) = r.diagnostics.as_mut() {
            d.rb_score = rb_score;
        }
    }
    let all_converged = runs.iter().all(|r| r.converged);
    Ok(ExperimentResult {
        schema_version: SCHEMA_VERSION.to_string(),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        dataset: DatasetInfo {
            name: ds.name.clone(),
            rows: ds.len(),
            features: ds.feature_count(),
            classes: ds.class_names.clone(),
            dropped_columns: loaded.dropped_columns.clone(),
        },
        method: config.pipeline.method,
        score_normalization: runs[0].metrics.normalization,
        all_converged,
        aggregate: aggregate(&runs, ds.class_count),
        diagnostics: summarize(&runs, rb_score),
        rb,
        runs,
        timestamp: chrono::Utc::now()
            .format("%Y-%m-%dT%H:%M:%S%.3fZ")
            .to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

/// `<root>/<name>/<UTC timestamp>[-n]/`, created fresh.
pub fn fresh_run_dir(root: &Path, name: &str) -> Result<PathBuf> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let base = root.join(name);
    let mut dir = base.join(&stamp);
    let mut n = 1;
    while dir.exists() {
        dir = base.join(format!("{stamp}-{n}"));
        n += 1;
    }
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Per-seed metric rows followed by `mean` and `std` rows.
pub fn write_metrics_csv(path: &Path, result: &ExperimentResult) -> Result<()> {
    let k = result.dataset.classes.len();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = [
        "seed",
        "accuracy",
        "precision_macro",
        "recall_macro",
        "f1_macro",
        "auc_overall",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..k).map(|c| format!("auc_class_{c}")));
    header.extend((0..k).map(|c| format!("ks_class_{c}")));
    w.write_record(&header)?;
    for r in &result.runs {
        let m = &r.metrics;
        let mut row = vec![
            r.seed.to_string(),
            format!("{:.6}", m.accuracy),
            format!("{:.6}", m.precision_macro),
            format!("{:.6}", m.recall_macro),
            format!("{:.6}", m.f1_macro),
            format!("{:.6}", m.auc_overall),
        ];
        row.extend(m.auc_per_class.iter().map(|v| fmt_opt(*v)));
        row.extend(m.ks_per_class.iter().map(|v| fmt_opt(*v)));
        w.write_record(&row)?;
    }
    let a = &result.aggregate;
    for (label, get) in [
        ("mean", (|m: &MeanStd| m.mean) as fn(&MeanStd) -> f64),
        ("std", |m: &MeanStd| m.std),
    ] {
        let mut row = vec![label.to_string()];
        for s in [
            &a.accuracy,
            &a.precision_macro,
            &a.recall_macro,
            &a.f1_macro,
            &a.auc_overall,
        ] {
            row.push(format!("{:.6}", get(s)));
        }
        row.extend(a.auc_per_class.iter().map(|v| fmt_opt(v.as_ref().map(get))));
        row.extend(a.ks_per_class.iter().map(|v| fmt_opt(v.as_ref().map(get))));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// `seed,class,fpr,tpr` for every run and class.
pub fn write_roc_csv(path: &Path, runs: &[PipelineResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["seed", "class", "fpr", "tpr"])?;
    for r in runs {
        for (c, curve) in r.metrics.roc_curves.iter().enumerate() {
            for (fpr, tpr) in curve {
                w.write_record([
                    r.seed.to_string(),
                    c.to_string(),
                    fpr.to_string(),
                    tpr.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes `result.json`, `metrics.csv` and `roc.csv` into a fresh run folder and returns it.
pub fn persist(result: &ExperimentResult) -> Result<PathBuf> {
    let dir = fresh_run_dir(&result.config.output_dir, &result.config.name)?;
    write_json(&dir.join("result.json"), result)?;
    write_metrics_csv(&dir.join("metrics.csv"), result)?;
    write_roc_csv(&dir.join("roc.csv"), &result.runs)?;
    Ok(dir)
}

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::rb::{rb_experiment, RbConfig};
use crate::error::{Error, Result};
use crate::graph::Dataset;
use crate::qelp::{ipqssl_pipeline, PipelineConfig};
use crate::qsim::{build_pqc, half_cut_entropy, run_circuit};

/// Noise level used for the sweep's RB score unless overridden.
pub const DEFAULT_SWEEP_NOISE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    Layers,
    Qubits,
}

impl Knob {
    pub fn name(self) -> &'static str {
        match self {
            Knob::Layers => "layers",
            Knob::Qubits => "qubits",
        }
    }
}

impl FromStr for Knob {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layers" => Ok(Knob::Layers),
            "qubits" => Ok(Knob::Qubits),
            other => Err(Error::invalid(format!(
                "unknown knob `{other}` (layers|qubits)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub knob: Knob,
    pub value: usize,
    /// Mean half-cut entropy (bits) of the random layered circuit over the seeds.
    pub entanglement: f64,
    /// Mean unlabeled accuracy of the IPQSSL pipeline over the seeds.
    pub accuracy: f64,
    /// Mean RB survival probability over the length grid.
    pub rb_score: f64,
    pub per_seed_accuracy: Vec<f64>,
    pub per_seed_entanglement: Vec<f64>,
}

/// One row per knob value, in input order.
pub fn sweep(
    dataset: &Dataset,
    config: &PipelineConfig,
    knob: Knob,
    values: &[usize],
    seeds: &[u64],
    rb: &RbConfig,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    if seeds.is_empty() {
        return Err(Error::invalid("sweep needs at least one seed"));
    }
    let rb_score = rb_experiment(&RbConfig {
        seed: seeds[0],
        ..rb.clone()
    })?
    .mean_survival();
    values
        .iter()
        .map(|&value| {
            let mut cfg = config.clone();
            match knob {
                Knob::Layers => cfg.layer_count = value,
                Knob::Qubits => cfg.qubit_count = value,
            }
            let mut per_seed_accuracy = Vec::with_capacity(seeds.len());
            let mut per_seed_entanglement = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                cfg.seed = seed;
                per_seed_accuracy.push(ipqssl_pipeline(dataset, &cfg)?.metrics.accuracy);
                let circuit = build_pqc(cfg.qubit_count, cfg.layer_count, seed)?;
                per_seed_entanglement.push(half_cut_entropy(&run_circuit(&circuit, None)?));
            }
            let n = seeds.len() as f64;
            Ok(SweepRow {
                knob,
                value,
                entanglement: per_seed_entanglement.iter().sum::<f64>() / n,
                accuracy: per_seed_accuracy.iter().sum::<f64>() / n,
                rb_score,
                per_seed_accuracy,
                per_seed_entanglement,
            })
        })
        .collect()
}

/// CSV with header `knob,value,entanglement,accuracy,rb_score`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["knob", "value", "entanglement", "accuracy", "rb_score"])?;
    for r in rows {
        w.write_record([
            r.knob.name().to_string(),
            r.value.to_string(),
            format!("{:.6}", r.entanglement),
            format!("{:.6}", r.accuracy),
            format!("{:.6}", r.rb_score),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
    Ok(())
}

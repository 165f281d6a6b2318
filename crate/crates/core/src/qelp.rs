//! Quantum-enhanced label propagation.
//!
//! The classical iterate is authoritative. Alongside it runs an observational side channel: each
//! iterate `U⁽ᵐ⁾` is flattened row-major, truncated or zero-padded to `2^q` entries, amplitude
//! encoded, and evolved by the orthogonal QR factor of the graph's leading `m×m` weight block
//! (`m = min(n, 2^q)`, embedded as `Q ⊕ I`). Entropy and successive-state fidelity are recorded.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, mask_labels, Dataset, KernelScale, SimilarityGraph};
use crate::metrics::{metrics_report, MetricsReport};
use crate::propagation::{
    assign_labels, ipl_iterate, label_propagation_baseline, label_spreading_baseline,
    laplacian_learning, one_hot_labels, IplOutcome, LabelMatrix, PropagationParams,
};
use crate::qsim::{
    amplitude_encode, apply_embedded_unitary, build_pqc, half_cut_entropy, qr_embed, run_circuit,
    state_fidelity, StateVector, MAX_QUBITS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ipqssl,
    Ilqssl,
    LabelPropagation,
    LabelSpreading,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ipqssl => "ipqssl",
            Method::Ilqssl => "ilqssl",
            Method::LabelPropagation => "label_propagation",
            Method::LabelSpreading => "label_spreading",
        }
    }
}

/// Quantum register settings for the side channel and the diagnostic circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumConfig {
    pub qubit_count: usize,
    pub layer_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumDiagnostics {
    /// Half-cut entropy (bits) of each evolved iterate state.
    pub per_iteration_entropy: Vec<f64>,
    /// Fidelity between consecutive evolved iterate states.
    pub per_iteration_fidelity: Vec<f64>,
    pub final_entropy: f64,
    /// Half-cut entropy of the amplitude-encoded leading column of the embedded graph matrix.
    pub graph_state_entropy: f64,
    /// Half-cut entropy after the layered circuit acts on the final evolved state.
    pub circuit_entropy: f64,
    pub qubit_count: usize,
    pub layer_count: usize,
    /// Mean RB survival, when benchmarking was requested.
    pub rb_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub method: Method,
    pub propagation: PropagationParams,
    pub k_neighbors: usize,
    pub kernel: KernelScale,
    pub qubit_count: usize,
    pub layer_count: usize,
    pub label_rate: f64,
    pub seed: u64,
    /// Clamping factor of the label-spreading baseline.
    pub spreading_clamp: f64,
    pub baseline_tol: f64,
    pub baseline_max_iter: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            method: Method::Ipqssl,
            propagation: PropagationParams::default(),
            k_neighbors: 10,
            kernel: KernelScale::SelfTuning,
            qubit_count: 8,
            layer_count: 10,
            label_rate: 0.3,
            seed: 7,
            spreading_clamp: 0.99,
            baseline_tol: 1e-6,
            baseline_max_iter: 10_000,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.label_rate > 0.0 && self.label_rate <= 1.0) {
            return Err(Error::Config(format!(
                "label_rate must lie in (0, 1], got {}",
                self.label_rate
            )));
        }
        if self.qubit_count == 0 || self.qubit_count > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit_count must lie in 1..={MAX_QUBITS}, got {}",
                self.qubit_count
            )));
        }
        if self.layer_count == 0 {
            return Err(Error::Config("layer_count must be at least 1".into()));
        }
        if self.k_neighbors == 0 {
            return Err(Error::Config("k_neighbors must be at least 1".into()));
        }
        self.propagation.validate()
    }

    pub fn quantum(&self) -> QuantumConfig {
        QuantumConfig {
            qubit_count: self.qubit_count,
            layer_count: self.layer_count,
            seed: self.seed,
        }
    }
}

/// Leading `2^q` entries of `u` flattened row-major, zero padded.
fn flatten_window(u: &DMatrix<f64>, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    'rows: for i in 0..u.nrows() {
        for c in 0..u.ncols() {
            if out.len() == dim {
                break 'rows;
            }
            out.push(u[(i, c)]);
        }
    }
    out.resize(dim, 0.0);
    out
}

fn leading_block(m: &DMatrix<f64>, size: usize) -> DMatrix<f64> {
    m.view((0, 0), (size, size)).clone_owned()
}

/// Records entropy and fidelity for a stream of label matrices.
struct SideChannel {
    dim: usize,
    unitary: DMatrix<f64>,
    previous: Option<StateVector>,
    entropy: Vec<f64>,
    fidelity: Vec<f64>,
}

impl SideChannel {
    fn new(operator: &DMatrix<f64>, qubits: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        let m = operator.nrows().min(dim);
        let unitary = qr_embed(&leading_block(operator, m))?.q;
        Ok(SideChannel {
            dim,
            unitary,
            previous: None,
            entropy: Vec::new(),
            fidelity: Vec::new(),
        })
    }

    fn encode(&self, u: &DMatrix<f64>) -> Result<StateVector> {
        let state = amplitude_encode(&flatten_window(u, self.dim))?;
        apply_embedded_unitary(&state, &self.unitary)
    }

    fn observe(&mut self, u: &DMatrix<f64>, fallback: Option<&DMatrix<f64>>) -> Result<()> {
        let state = match self.encode(u) {
            Err(Error::ZeroVector) => match fallback.map(|y| self.encode(y)) {
                Some(Ok(s)) => s,
                Some(Err(Error::ZeroVector)) | None => {
                    log::debug!("iterate vanishes on the encoded window; skipping");
                    return Ok(());
                }
                Some(Err(e)) => return Err(e),
            },
            other => other?,
        };
        self.entropy.push(half_cut_entropy(&state));
        if let Some(prev) = &self.previous {
            self.fidelity.push(state_fidelity(prev, &state)?);
        }
        self.previous = Some(state);
        Ok(())
    }

    fn finish(self, graph_column: &[f64], quantum: &QuantumConfig) -> Result<QuantumDiagnostics> {
        let graph_state = amplitude_encode(&{
            let mut v = graph_column.to_vec();
            v.resize(self.dim, 0.0);
            v.truncate(self.dim);
            v
        });
        let graph_state_entropy = match graph_state {
            Ok(s) => half_cut_entropy(&s),
            Err(Error::ZeroVector) => 0.0,
            Err(e) => return Err(e),
        };
        let circuit = build_pqc(quantum.qubit_count, quantum.layer_count, quantum.seed)?;
        let circuit_entropy = half_cut_entropy(&run_circuit(&circuit, self.previous.as_ref())?);
        Ok(QuantumDiagnostics {
            final_entropy: self.entropy.last().copied().unwrap_or(0.0),
            per_iteration_entropy: self.entropy,
            per_iteration_fidelity: self.fidelity,
            graph_state_entropy,
            circuit_entropy,
            qubit_count: quantum.qubit_count,
            layer_count: quantum.layer_count,
            rb_score: None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct QelpOutcome {
    pub ipl: IplOutcome,
    pub diagnostics: QuantumDiagnostics,
}

/// Improved Poisson learning with the quantum side channel attached.
pub fn qelp_run(
    graph: &SimilarityGraph,
    dataset: &Dataset,
    params: &PropagationParams,
    quantum: &QuantumConfig,
) -> Result<QelpOutcome> {
    if quantum.qubit_count == 0 || quantum.qubit_count > MAX_QUBITS {
        return Err(Error::invalid(format!(
            "qubit count {} outside 1..={MAX_QUBITS}",
            quantum.qubit_count
        )));
    }
    let mut channel = SideChannel::new(graph.weights(), quantum.qubit_count)?;
    let y = one_hot_labels(dataset);
    let mut failure = None;
    let ipl = ipl_iterate(graph, dataset, params, |m, u| {
        if failure.is_some() {
            return;
        }
        let fallback = (m == 0).then_some(&y);
        if let Err(e) = channel.observe(u, fallback) {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let column: Vec<f64> = graph.weights().column(0).iter().copied().collect();
    let diagnostics = channel.finish(&column, quantum)?;
    Ok(QelpOutcome { ipl, diagnostics })
}

/// Diagnostics for a single converged solution evolved by the embedded `operator`.
pub fn single_shot_diagnostics(
    u: &DMatrix<f64>,
    operator: &DMatrix<f64>,
    dataset: &Dataset,
    quantum: &QuantumConfig,
) -> Result<QuantumDiagnostics> {
    let mut channel = SideChannel::new(operator, quantum.qubit_count)?;
    channel.observe(u, Some(&one_hot_labels(dataset)))?;
    let column: Vec<f64> = operator.column(0).iter().copied().collect();
    channel.finish(&column, quantum)
}

/// Result of one pipeline run on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub method: Method,
    pub seed: u64,
    /// Predicted class for every node.
    pub predictions: Vec<usize>,
    /// Nodes the metrics are computed on (the unlabeled ones).
    pub evaluated: Vec<usize>,
    pub metrics: MetricsReport,
    pub diagnostics: Option<QuantumDiagnostics>,
    pub iterations: usize,
    pub converged: bool,
    pub spectral_radius: Option<f64>,
}

struct Prepared {
    masked: Dataset,
    graph: SimilarityGraph,
    evaluated: Vec<usize>,
}

fn prepare(dataset: &Dataset, config: &PipelineConfig) -> Result<Prepared> {
    config.validate()?;
    let masked = mask_labels(dataset, config.label_rate, config.seed)?;
    let evaluated = masked.unlabeled_indices();
    if evaluated.is_empty() {
        return Err(Error::NothingToEvaluate);
    }
    let graph = build_knn_graph(&masked, config.k_neighbors, config.kernel)?;
    Ok(Prepared {
        masked,
        graph,
        evaluated,
    })
}

fn finish(
    prep: &Prepared,
    config: &PipelineConfig,
    labels: &LabelMatrix,
    diagnostics: Option<QuantumDiagnostics>,
    iterations: usize,
    converged: bool,
    spectral_radius: Option<f64>,
) -> Result<PipelineResult> {
    let predictions = assign_labels(labels);
    let truth: Vec<usize> = prep
        .evaluated
        .iter()
        .map(|&i| prep.masked.labels[i])
        .collect();
    let predicted: Vec<usize> = prep.evaluated.iter().map(|&i| predictions[i]).collect();
    let scores = labels.as_matrix().select_rows(prep.evaluated.iter());
    let metrics = metrics_report(&truth, &predicted, &scores)?;
    Ok(PipelineResult {
        method: config.method,
        seed: config.seed,
        predictions,
        evaluated: prep.evaluated.clone(),
        metrics,
        diagnostics,
        iterations,
        converged,
        spectral_radius,
    })
}

/// Mask, build the graph, run QELP, and score the unlabeled nodes.
pub fn ipqssl_pipeline(dataset: &Dataset, config: &PipelineConfig) -> Result<PipelineResult> {
    let prep = prepare(dataset, config)?;
    let out = qelp_run(
        &prep.graph,
        &prep.masked,
        &config.propagation,
        &config.quantum(),
    )?;
    finish(
        &prep,
        config,
        &out.ipl.labels,
        Some(out.diagnostics),
        out.ipl.iterations,
        out.ipl.converged,
        Some(out.ipl.spectral_radius),
    )
}

/// Laplacian propagation with the Laplacian's QR factor as the embedded operator.
pub fn ilqssl_pipeline(dataset: &Dataset, config: &PipelineConfig) -> Result<PipelineResult> {
    let prep = prepare(dataset, config)?;
    let u = laplacian_learning(&prep.graph, &prep.masked)?;
    let diag = single_shot_diagnostics(
        u.as_matrix(),
        &prep.graph.laplacian(),
        &prep.masked,
        &config.quantum(),
    )?;
    finish(&prep, config, &u, Some(diag), 1, true, None)
}

pub fn baseline_pipeline(dataset: &Dataset, config: &PipelineConfig) -> Result<PipelineResult> {
    let prep = prepare(dataset, config)?;
    let out = match config.method {
        Method::LabelPropagation => label_propagation_baseline(
            &prep.graph,
            &prep.masked,
            config.baseline_tol,
            config.baseline_max_iter,
        )?,
        Method::LabelSpreading => label_spreading_baseline(
            &prep.graph,
            &prep.masked,
            config.spreading_clamp,
            config.baseline_tol,
            config.baseline_max_iter,
        )?,
        other => {
            return Err(Error::invalid(format!(
                "{} is not a baseline",
                other.name()
            )));
        }
    };
    finish(
        &prep,
        config,
        &out.labels,
        None,
        out.iterations,
        out.converged,
        None,
    )
}

/// Dispatches on `config.method`.
pub fn run_pipeline(dataset: &Dataset, config: &PipelineConfig) -> Result<PipelineResult> {
    match config.method {
        Method::Ipqssl => ipqssl_pipeline(dataset, config),
        Method::Ilqssl => ilqssl_pipeline(dataset, config),
        Method::LabelPropagation | Method::LabelSpreading => baseline_pipeline(dataset, config),
    }
}

/// Candidate values per tuned hyperparameter. Empty lists fall back to the base config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchGrid {
    pub k_neighbors: Vec<usize>,
    pub layer_count: Vec<usize>,
    pub qubit_count: Vec<usize>,
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub alpha3: Vec<f64>,
}

impl SearchGrid {
    pub fn cells(&self, base: &PipelineConfig) -> Vec<PipelineConfig> {
        fn or<T: Copy>(v: &[T], d: T) -> Vec<T> {
            if v.is_empty() {
                vec![d]
            } else {
                v.to_vec()
            }
        }
        let p = base.propagation;
        let mut out = Vec::new();
        for &k in &or(&self.k_neighbors, base.k_neighbors) {
            for &l in &or(&self.layer_count, base.layer_count) {
                for &q in &or(&self.qubit_count, base.qubit_count) {
                    for &a1 in &or(&self.alpha1, p.alpha1) {
                        for &a2 in &or(&self.alpha2, p.alpha2) {
                            for &a3 in &or(&self.alpha3, p.alpha3) {
                                let mut c = base.clone();
                                c.k_neighbors = k;
                                c.layer_count = l;
                                c.qubit_count = q;
                                c.propagation.alpha1 = a1;
                                c.propagation.alpha2 = a2;
                                c.propagation.alpha3 = a3;
                                out.push(c);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub k_neighbors: usize,
    pub layer_count: usize,
    pub qubit_count: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// `None` when any seed failed; such cells sort last.
    pub mean_accuracy: Option<f64>,
    pub std_accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: PipelineConfig,
    pub leaderboard: Vec<LeaderboardRow>,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn leaderboard_order(a: &LeaderboardRow, b: &LeaderboardRow) -> Ordering {
    let acc = match (a.mean_accuracy, b.mean_accuracy) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    };
    acc.then(a.qubit_count.cmp(&b.qubit_count))
        .then(a.layer_count.cmp(&b.layer_count))
        .then(a.k_neighbors.cmp(&b.k_neighbors))
        .then(a.alpha1.total_cmp(&b.alpha1))
        .then(a.alpha2.total_cmp(&b.alpha2))
        .then(a.alpha3.total_cmp(&b.alpha3))
}

/// Exhaustive grid search scored by mean unlabeled accuracy over `seeds`.
///
/// Ties go to fewer qubits, then fewer layers, then smaller k.
pub fn hyperparameter_search(
    dataset: &Dataset,
    base: &PipelineConfig,
    grid: &SearchGrid,
    seeds: &[u64],
) -> Result<SearchOutcome> {
    if seeds.is_empty() {
        return Err(Error::invalid(
            "hyperparameter search needs at least one seed",
        ));
    }
    let cells = grid.cells(base);
    let mut rows: Vec<(LeaderboardRow, PipelineConfig)> = cells
        .into_par_iter()
        .map(|cell| {
            let mut accs = Vec::with_capacity(seeds.len());
            let mut error = None;
            for &seed in seeds {
                let cfg = PipelineConfig {
                    seed,
                    ..cell.clone()
                };
                match run_pipeline(dataset, &cfg) {
                    Ok(r) => accs.push(r.metrics.accuracy),
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
            let (mean, std) = if error.is_none() {
                let (m, s) = mean_std(&accs);
                (Some(m), Some(s))
            } else {
                (None, None)
            };
            let row = LeaderboardRow {
                rank: 0,
                k_neighbors: cell.k_neighbors,
                layer_count: cell.layer_count,
                qubit_count: cell.qubit_count,
                alpha1: cell.propagation.alpha1,
                alpha2: cell.propagation.alpha2,
                alpha3: cell.propagation.alpha3,
                mean_accuracy: mean,
                std_accuracy: std,
                error,
            };
            (row, cell)
        })
        .collect();
    rows.sort_by(|a, b| leaderboard_order(&a.0, &b.0));
    rows.dedup_by(|a, b| leaderboard_order(&a.0, &b.0) == Ordering::Equal && a.1 == b.1);
    let best = rows[0].1.clone();
    let leaderboard = rows
        .into_iter()
        .enumerate()
        .map(|(i, (mut r, _))| {
            r.rank = i + 1;
            r
        })
        .collect();
    Ok(SearchOutcome { best, leaderboard })
}

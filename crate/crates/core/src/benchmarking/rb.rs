use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clifford::{clifford_group_1q, CliffordGroup};
use crate::error::{Error, Result};

pub const DEFAULT_LENGTHS: [usize; 7] = [1, 5, 10, 25, 50, 100, 200];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbConfig {
    /// 1 or 2.
    pub qubits: usize,
    pub lengths: Vec<usize>,
    pub repetitions: usize,
    pub shots: usize,
    /// Probability of a random Pauli error after each gate (per qubit).
    pub noise_p: f64,
    pub seed: u64,
}

impl Default for RbConfig {
    fn default() -> Self {
        RbConfig {
            qubits: 1,
            lengths: DEFAULT_LENGTHS.to_vec(),
            repetitions: 100,
            shots: 500,
            noise_p: 0.02,
            seed: 0,
        }
    }
}

impl RbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.qubits) {
            return Err(Error::invalid(
                "randomized benchmarking supports 1 or 2 qubits",
            ));
        }
        if self.lengths.is_empty() || self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "RB lengths must be nonempty and strictly increasing",
            ));
        }
        if self.lengths.len() < 3 {
            return Err(Error::invalid(
                "RB decay fit needs at least 3 distinct lengths",
            ));
        }
        if !(0.0..1.0).contains(&self.noise_p) {
            return Err(Error::invalid(format!(
                "noise_p must lie in [0, 1), got {}",
                self.noise_p
            )));
        }
        if self.repetitions == 0 || self.shots == 0 {
            return Err(Error::invalid("repetitions and shots must be positive"));
        }
        Ok(())
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.qubits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbResult {
    pub qubits: usize,
    pub lengths: Vec<usize>,
    pub survival: Vec<f64>,
    pub fit_a: f64,
    pub fit_p: f64,
    pub fit_b: f64,
    pub fidelity: f64,
    pub error_per_clifford: f64,
    /// Set when the decay fit is unreliable (survival never decreases, or the solver stalled).
    pub fit_flagged: bool,
    pub shots: usize,
    pub repetitions: usize,
    pub noise_p: f64,
    pub seed: u64,
}

impl RbResult {
    /// Mean survival over the length grid.
    pub fn mean_survival(&self) -> f64 {
        self.survival.iter().sum::<f64>() / self.survival.len() as f64
    }
}

/// `F = ((d - 1)p + 1) / d`.
pub fn average_fidelity(p: f64, hilbert_dim: usize) -> f64 {
    let d = hilbert_dim as f64;
    ((d - 1.0) * p + 1.0) / d
}

/// `r = (1 - p) / 2` (single qubit).
pub fn error_per_clifford(p: f64) -> f64 {
    (1.0 - p) / 2.0
}

fn pauli(which: usize) -> [[Complex64; 2]; 2] {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match which {
        0 => [[o, one], [one, o]],
        1 => [[o, -i], [i, o]],
        _ => [[one, o], [o, -one]],
    }
}

/// Dense operator on a 1- or 2-qubit register (qubit 0 = most significant bit).
type Op = DMatrix<Complex64>;

fn embed_single(gate: &[[Complex64; 2]; 2], qubit: usize, qubits: usize) -> Op {
    let g = Op::from_fn(2, 2, |i, j| gate[i][j]);
    if qubits == 1 {
        return g;
    }
    let id = Op::identity(2, 2);
    if qubit == 0 {
        g.kronecker(&id)
    } else {
        id.kronecker(&g)
    }
}

fn cnot01() -> Op {
    let mut m = Op::zeros(4, 4);
    let one = Complex64::new(1.0, 0.0);
    m[(0, 0)] = one;
    m[(1, 1)] = one;
    m[(2, 3)] = one;
    m[(3, 2)] = one;
    m
}

fn apply(op: &Op, state: &mut [Complex64], scratch: &mut [Complex64]) {
    let d = state.len();
    for i in 0..d {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..d {
            acc += op[(i, j)] * state[j];
        }
        scratch[i] = acc;
    }
    state.copy_from_slice(scratch);
}

/// Random gate sequence of length `m` followed by its exact inverse.
fn sample_sequence(
    group: &CliffordGroup,
    qubits: usize,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Op> {
    let mut seq = Vec::with_capacity(m + 1);
    if qubits == 1 {
        let mut net = group.identity_index();
        for _ in 0..m {
            let c = rng.gen_range(0..group.len());
            net = group.multiply(c, net);
            seq.push(embed_single(group.element(c), 0, 1));
        }
        seq.push(embed_single(group.element(group.inverse(net)), 0, 1));
    } else {
        // Each step: a random Clifford on each qubit, then CNOT with probability 1/2.
        let mut net = Op::identity(4, 4);
        for _ in 0..m {
            let a = rng.gen_range(0..group.len());
            let b = rng.gen_range(0..group.len());
            let mut g = embed_single(group.element(a), 0, 2) * embed_single(group.element(b), 1, 2);
            if rng.gen_bool(0.5) {
                g = cnot01() * g;
            }
            net = &g * net;
            seq.push(g);
        }
        seq.push(net.adjoint());
    }
    seq
}

/// Fraction of `shots` noisy runs of `seq` on |0…0⟩ that measure |0…0⟩.
fn run_shots(seq: &[Op], qubits: usize, noise_p: f64, shots: usize, rng: &mut ChaCha8Rng) -> f64 {
    let d = 1usize << qubits;
    let paulis: Vec<Vec<Op>> = (0..qubits)
        .map(|q| (0..3).map(|w| embed_single(&pauli(w), q, qubits)).collect())
        .collect();
    let mut state = vec![Complex64::new(0.0, 0.0); d];
    let mut scratch = state.clone();
    let mut survived = 0usize;
    for _ in 0..shots {
        state.fill(Complex64::new(0.0, 0.0));
        state[0] = Complex64::new(1.0, 0.0);
        for g in seq {
            apply(g, &mut state, &mut scratch);
            if noise_p > 0.0 {
                for pq in &paulis {
                    if rng.gen::<f64>() < noise_p {
                        apply(&pq[rng.gen_range(0..3)], &mut state, &mut scratch);
                    }
                }
            }
        }
        let leave: f64 = state[1..].iter().map(|a| a.norm_sqr()).sum();
        if rng.gen::<f64>() >= leave {
            survived += 1;
        }
    }
    survived as f64 / shots as f64
}

/// Standard randomized benchmarking with stochastic Pauli noise.
///
/// Every (length, repetition) pair owns a generator keyed by the seed and its indices, so results do
/// not depend on thread scheduling.
pub fn rb_experiment(config: &RbConfig) -> Result<RbResult> {
    config.validate()?;
    let group = clifford_group_1q();
    let jobs: Vec<(usize, usize)> = (0..config.lengths.len())
        .flat_map(|li| (0..config.repetitions).map(move |r| (li, r)))
        .collect();
    let per_job: Vec<f64> = jobs
        .par_iter()
        .map(|&(li, rep)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(((li as u64) << 32) | rep as u64);
            let seq = sample_sequence(&group, config.qubits, config.lengths[li], &mut rng);
            run_shots(&seq, config.qubits, config.noise_p, config.shots, &mut rng)
        })
        .collect();
    let survival: Vec<f64> = per_job
        .chunks(config.repetitions)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let fit = fit_decay(&config.lengths, &survival, config.hilbert_dim())?;
    let fidelity = average_fidelity(fit.p, config.hilbert_dim());
    if fit.flagged {
        log::warn!("RB decay fit flagged as unreliable (p = {})", fit.p);
    }
    Ok(RbResult {
        qubits: config.qubits,
        lengths: config.lengths.clone(),
        survival,
        fit_a: fit.a,
        fit_p: fit.p,
        fit_b: fit.b,
        fidelity,
        error_per_clifford: 1.0 - fidelity,
        fit_flagged: fit.flagged,
        shots: config.shots,
        repetitions: config.repetitions,
        noise_p: config.noise_p,
        seed: config.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub converged: bool,
    pub flagged: bool,
}

const P_MIN: f64 = 1e-12;

fn model_cost(lengths: &[f64], survival: &[f64], t: &Vector3<f64>) -> f64 {
    lengths
        .iter()
        .zip(survival)
        .map(|(&m, &s)| {
            let r = t[0] * t[1].powf(m) + t[2] - s;
            r * r
        })
        .sum()
}

/// Least-squares fit of `A·p^m + B` by damped Gauss–Newton from a log-linear start.
pub fn fit_decay(lengths: &[usize], survival: &[f64], hilbert_dim: usize) -> Result<DecayFit> {
    if lengths.len() != survival.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} survival values", lengths.len()),
            found: format!("{}", survival.len()),
        });
    }
    let mut distinct = lengths.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid(
            "decay fit needs at least 3 distinct lengths",
        ));
    }
    if survival.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("survival values must be finite"));
    }
    let ms: Vec<f64> = lengths.iter().map(|&m| m as f64).collect();
    let first = ms
        .iter()
        .zip(survival)
        .min_by(|a, b| a.0.total_cmp(b.0))
        .map(|(_, &s)| s)
        .unwrap();
    let min_s = survival.iter().copied().fold(f64::INFINITY, f64::min);
    let b0 = min_s.min(1.0 / hilbert_dim as f64);
    let a0 = first - b0;

    let pts: Vec<(f64, f64)> = ms
        .iter()
        .zip(survival)
        .filter(|(_, &s)| s - b0 > 1e-12)
        .map(|(&m, &s)| (m, (s - b0).ln()))
        .collect();
    let p0 = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            (sxy / sxx).exp().clamp(P_MIN, 1.0)
        } else {
            1.0
        }
    } else {
        1.0
    };

    let mut t = Vector3::new(a0, p0, b0);
    let mut cost = model_cost(&ms, survival, &t);
    let mut lambda = 1e-3;
    let mut converged = cost < 1e-30;
    let mut iter = 0;
    while !converged && iter < 500 {
        iter += 1;
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&m, &s) in ms.iter().zip(survival) {
            let pm = t[1].powf(m);
            let dp = if m == 0.0 {
                0.0
            } else {
                t[0] * m * t[1].powf(m - 1.0)
            };
            let j = Vector3::new(pm, dp, 1.0);
            let r = t[0] * pm + t[2] - s;
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            for d in 0..3 {
                damped[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let mut cand = t + step;
            cand[1] = cand[1].clamp(P_MIN, 1.0);
            let cand_cost = model_cost(&ms, survival, &cand);
            if cand_cost <= cost {
                let change = (cand - t).norm() / t.norm().max(1e-12);
                t = cand;
                cost = cand_cost;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if change < 1e-9 || cost < 1e-30 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No descent direction left: already at a (possibly boundary) minimum.
            converged = true;
        }
    }
    let never_decreases = survival_by_length(&ms, survival)
        .windows(2)
        .all(|w| w[1] >= w[0]);
    let increases = survival_by_length(&ms, survival)
        .windows(2)
        .any(|w| w[1] > w[0]);
    Ok(DecayFit {
        a: t[0],
        p: t[1],
        b: t[2],
        converged,
        flagged: (never_decreases && increases) || !converged,
    })
}

fn survival_by_length(ms: &[f64], survival: &[f64]) -> Vec<f64> {
    let mut pairs: Vec<(f64, f64)> = ms.iter().copied().zip(survival.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().map(|p| p.1).collect()
}

#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use qgssl::graph::{Dataset, SimilarityGraph};
use qgssl::propagation::PropagationParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Connected random weighted graph: a random spanning path plus extra edges with probability `density`.
pub fn random_graph(n: usize, density: f64, rng: &mut ChaCha8Rng) -> SimilarityGraph {
    let mut w = DMatrix::zeros(n, n);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for p in order.windows(2) {
        let v = rng.gen_range(0.1..1.0);
        w[(p[0], p[1])] = v;
        w[(p[1], p[0])] = v;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if w[(i, j)] == 0.0 && rng.gen_bool(density) {
                let v = rng.gen_range(0.1..1.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    SimilarityGraph::from_weights(w).unwrap()
}

/// Random labels over `k` classes with every class labeled at least once.
pub fn random_labeled(n: usize, k: usize, rate: f64, rng: &mut ChaCha8Rng) -> Dataset {
    assert!(n >= k);
    let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(rate)).collect();
    for c in 0..k {
        labels[c] = c;
        mask[c] = true;
    }
    Dataset::new("random", DMatrix::zeros(n, 1), labels, k)
        .unwrap()
        .with_mask(mask)
        .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense P = D⁻¹W built from scratch.
pub fn dense_transition(w: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = w.clone();
    for i in 0..w.nrows() {
        let d: f64 = w.row(i).sum();
        for j in 0..w.ncols() {
            p[(i, j)] = w[(i, j)] / d;
        }
    }
    p
}

pub fn stationary(w: &DMatrix<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    (0..w.nrows()).map(|i| w.row(i).sum() / total).collect()
}

/// Largest eigenvalue modulus of a general real matrix.
pub fn dense_spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Two interleaving half circles with small jitter, labels 0 (upper) and 1 (lower).
pub fn two_moons(n_per: usize, noise: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let n = 2 * n_per;
    let mut x = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n_per {
        let t = std::f64::consts::PI * i as f64 / (n_per - 1) as f64;
        x[(i, 0)] = t.cos() + r.gen_range(-noise..noise);
        x[(i, 1)] = t.sin() + r.gen_range(-noise..noise);
        labels.push(0);
    }
    for i in 0..n_per {
        let t = std::f64::consts::PI * i as f64 / (n_per - 1) as f64;
        x[(n_per + i, 0)] = 1.0 - t.cos() + r.gen_range(-noise..noise);
        x[(n_per + i, 1)] = 0.5 - t.sin() + r.gen_range(-noise..noise);
        labels.push(1);
    }
    Dataset::new("moons", x, labels, 2).unwrap()
}

/// `((1 - a2) I - P + a1 Q, a3 D⁻¹Bᵀ)` built densely.
pub fn dense_system(
    g: &SimilarityGraph,
    ds: &Dataset,
    p: &PropagationParams,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = ds.len();
    let k = ds.class_count;
    let w = g.weights();
    let pm = dense_transition(w);
    let pi = stationary(w);
    let q = DMatrix::from_fn(n, n, |_, j| pi[j]);
    let a = DMatrix::<f64>::identity(n, n) * (1.0 - p.alpha2) - pm + q * p.alpha1;
    let labeled: Vec<usize> = (0..n).filter(|&i| ds.labeled_mask[i]).collect();
    let mut counts = vec![0.0; k];
    for &i in &labeled {
        counts[ds.labels[i]] += 1.0;
    }
    let mut rhs = DMatrix::zeros(n, k);
    for &i in &labeled {
        let deg: f64 = w.row(i).sum();
        for c in 0..k {
            let hit = if ds.labels[i] == c { 1.0 } else { 0.0 };
            rhs[(i, c)] = p.alpha3 * (hit - counts[c] / labeled.len() as f64) / deg;
        }
    }
    (a, rhs)
}

pub fn dense_fixed_point(g: &SimilarityGraph, ds: &Dataset, p: &PropagationParams) -> DMatrix<f64> {
    let (a, rhs) = dense_system(g, ds, p);
    a.lu().solve(&rhs).unwrap()
}

pub fn iteration_radius_dense(g: &SimilarityGraph, p: &PropagationParams) -> f64 {
    let n = g.len();
    let pi = stationary(g.weights());
    let q = DMatrix::from_fn(n, n, |_, j| pi[j]);
    let m =
        dense_transition(g.weights()) - q * p.alpha1 + DMatrix::<f64>::identity(n, n) * p.alpha2;
    dense_spectral_radius(&m)
}

/// Every positive/negative pair, ties worth one half.
pub fn pairwise_auc(scores: &[f64], pos: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &pi) in pos.iter().enumerate() {
        if !pi {
            continue;
        }
        for (j, &pj) in pos.iter().enumerate() {
            if pj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// max over every observed threshold of |TPR - FPR|, predicting positive when score >= t.
/// The gap is compared as an exact rational before the single final division.
pub fn threshold_ks(scores: &[f64], pos: &[bool]) -> f64 {
    let np = pos.iter().filter(|&&p| p).count() as i64;
    let nn = pos.len() as i64 - np;
    let mut best = 0i64;
    for &t in scores {
        let tp = scores
            .iter()
            .zip(pos)
            .filter(|(&s, &p)| p && s >= t)
            .count() as i64;
        let fp = scores
            .iter()
            .zip(pos)
            .filter(|(&s, &p)| !p && s >= t)
            .count() as i64;
        best = best.max((tp * nn - fp * np).abs());
    }
    best as f64 / (np as f64 * nn as f64)
}

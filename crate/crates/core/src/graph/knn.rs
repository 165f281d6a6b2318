use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Dataset, SimilarityGraph};
use crate::error::{Error, Result};

/// Kernel width policy for the Gaussian edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "sigma")]
pub enum KernelScale {
    /// σ_i is the distance from node i to its ⌈k/2⌉-th nearest neighbor.
    #[default]
    SelfTuning,
    /// One global σ for every node.
    Fixed(f64),
}

pub fn pairwise_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for c in 0..x.ncols() {
                let t = x[(i, c)] - x[(j, c)];
                s += t * t;
            }
            let v = s.sqrt();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Symmetric k-nearest-neighbor graph with weights `exp(-‖x_i - x_j‖² / (σ_i σ_j))`.
///
/// Each node links to its `k_neighbors` closest points (distance ties go to the lower index);
/// the directed graph is symmetrized with an elementwise max.
pub fn build_knn_graph(
    dataset: &Dataset,
    k_neighbors: usize,
    scaling: KernelScale,
) -> Result<SimilarityGraph> {
    let n = dataset.len();
    if k_neighbors == 0 || k_neighbors >= n {
        return Err(Error::invalid(format!(
            "k_neighbors must satisfy 1 <= k < n (k = {k_neighbors}, n = {n})"
        )));
    }
    let dist = pairwise_distances(&dataset.features);
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
            others.truncate(k_neighbors);
            others
        })
        .collect();

    let sigma: Vec<f64> = match scaling {
        KernelScale::Fixed(s) => {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!(
                    "kernel width must be positive, got {s}"
                )));
            }
            vec![s; n]
        }
        KernelScale::SelfTuning => {
            let rank = k_neighbors.div_ceil(2) - 1;
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let mut s = dist[(i, neighbors[i][rank])];
                if s == 0.0 {
                    // Duplicate points: fall back to the nearest strictly positive distance.
                    s = neighbors[i]
                        .iter()
                        .map(|&j| dist[(i, j)])
                        .find(|&v| v > 0.0)
                        .or_else(|| {
                            (0..n)
                                .filter(|&j| j != i && dist[(i, j)] > 0.0)
                                .map(|j| dist[(i, j)])
                                .min_by(f64::total_cmp)
                        })
                        .ok_or_else(|| Error::invalid("all points coincide"))?;
                }
                out.push(s);
            }
            out
        }
    };

    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for &j in &neighbors[i] {
            let v = (-dist[(i, j)].powi(2) / (sigma[i] * sigma[j])).exp();
            if v > w[(i, j)] {
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    SimilarityGraph::from_weights(w)
}

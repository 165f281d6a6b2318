//! Datasets and the similarity graph they induce.
//!
//! A [`SimilarityGraph`] owns the weight matrix `W` and everything derived from it:
//! degrees `d_i`, the row-stochastic transition matrix `P = D⁻¹W`, the stationary
//! distribution `π_i = d_i / Σd`, the rank-one matrix `Q = 1πᵀ` and the Laplacian `L = D - W`.

mod dataset;
mod knn;
mod sparse;
mod spectral;

pub use dataset::{
    load_dataset, mask_labels, standardize_features, Dataset, DatasetSchema, Standardized,
};
pub use knn::{build_knn_graph, pairwise_distances, KernelScale};
pub use sparse::CsrMatrix;
pub use spectral::{
    iteration_spectral_radius, spectral_radius, LinearOperator, SpectralEstimate,
    SymmetrizedIteration,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SimilarityGraph {
    weights: DMatrix<f64>,
    weight_csr: CsrMatrix,
    transition: CsrMatrix,
    degrees: DVector<f64>,
    stationary: DVector<f64>,
}

impl SimilarityGraph {
    /// Validates `W` (symmetric, nonnegative, zero diagonal, no isolated nodes) and derives the rest.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        if !weights.is_square() || weights.nrows() == 0 {
            return Err(Error::invalid("weight matrix must be square and nonempty"));
        }
        let n = weights.nrows();
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(format!(
                        "weight ({i},{j}) = {w} is not a nonnegative number"
                    )));
                }
                if w != weights[(j, i)] {
                    return Err(Error::invalid(format!(
                        "weight matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let degrees = DVector::from_fn(n, |i, _| weights.row(i).sum());
        if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::IsolatedNode(i));
        }
        let total = degrees.sum();
        let stationary = degrees.map(|d| d / total);
        let weight_csr = CsrMatrix::from_dense(&weights);
        let mut p = weights.clone();
        for i in 0..n {
            let d = degrees[i];
            p.row_mut(i).iter_mut().for_each(|v| *v /= d);
        }
        let transition = CsrMatrix::from_dense(&p);
        Ok(SimilarityGraph {
            weights,
            weight_csr,
            transition,
            degrees,
            stationary,
        })
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight_csr(&self) -> &CsrMatrix {
        &self.weight_csr
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    pub fn total_degree(&self) -> f64 {
        self.degrees.sum()
    }

    /// π with π_i = d_i / d.
    pub fn stationary(&self) -> &DVector<f64> {
        &self.stationary
    }

    /// Sparse `P = D⁻¹W`.
    pub fn transition(&self) -> &CsrMatrix {
        &self.transition
    }

    pub fn transition_dense(&self) -> DMatrix<f64> {
        self.transition.to_dense()
    }

    /// The rank-one matrix whose every row is π.
    pub fn rank_one_q(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |_, j| self.stationary[j])
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.degrees) - &self.weights
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for (v, _) in self.weight_csr.row(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        members.push(v);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

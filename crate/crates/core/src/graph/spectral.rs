use nalgebra::{DMatrix, DVector};

use super::SimilarityGraph;

/// A square real operator that can be applied to vectors, with its transpose.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        assert!(self.is_square(), "operator must be square");
        self.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }

    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        self.tr_mul(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest singular value of `op` by power iteration on `opᵀ op`.
///
/// This bounds the spectral radius from above and equals it for symmetric operators.
/// A non-converged run still reports the best estimate seen.
pub fn spectral_radius<O: LinearOperator + ?Sized>(
    op: &O,
    tol: f64,
    max_iter: usize,
) -> SpectralEstimate {
    let n = op.dim();
    if n == 0 {
        return SpectralEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    // Deterministic start with no special alignment to graph structure.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 97) as f64 / 97.0);
    v /= v.norm();
    let mut estimate = 0.0;
    for it in 1..=max_iter {
        let w = op.apply_transpose(&op.apply(&v));
        let lambda = v.dot(&w).max(0.0);
        let norm = w.norm();
        let next = lambda.sqrt();
        if norm == 0.0 {
            return SpectralEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        v = w / norm;
        let delta = (next - estimate).abs();
        estimate = next;
        if it > 1 && delta <= tol * estimate.max(f64::MIN_POSITIVE) {
            return SpectralEstimate {
                value: estimate,
                iterations: it,
                converged: true,
            };
        }
    }
    SpectralEstimate {
        value: estimate,
        iterations: max_iter,
        converged: false,
    }
}

/// `P - α₁Q + α₂I` conjugated by `D^{1/2}`: `S - α₁vvᵀ + α₂I` with `S = D^{-1/2} W D^{-1/2}`
/// and `v_i = sqrt(d_i / d)`. The similarity makes the operator symmetric, so its largest
/// singular value is exactly the spectral radius of the propagation map.
pub struct SymmetrizedIteration<'a> {
    graph: &'a SimilarityGraph,
    sqrt_pi: DVector<f64>,
    inv_sqrt_deg: DVector<f64>,
    alpha1: f64,
    alpha2: f64,
}

impl<'a> SymmetrizedIteration<'a> {
    pub fn new(graph: &'a SimilarityGraph, alpha1: f64, alpha2: f64) -> Self {
        SymmetrizedIteration {
            graph,
            sqrt_pi: graph.stationary().map(f64::sqrt),
            inv_sqrt_deg: graph.degrees().map(|d| 1.0 / d.sqrt()),
            alpha1,
            alpha2,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            m.set_column(j, &self.apply(&e));
        }
        m
    }
}

impl LinearOperator for SymmetrizedIteration<'_> {
    fn dim(&self) -> usize {
        self.graph.len()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let scaled = x.component_mul(&self.inv_sqrt_deg);
        let mut y = self
            .graph
            .weight_csr()
            .mul_vector(&scaled)
            .component_mul(&self.inv_sqrt_deg);
        let proj = self.sqrt_pi.dot(x);
        y.axpy(-self.alpha1 * proj, &self.sqrt_pi, 1.0);
        y.axpy(self.alpha2, x, 1.0);
        y
    }

    fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        self.apply(x)
    }
}

/// Spectral radius of the improved-Poisson iteration map `P - α₁Q + α₂I`.
pub fn iteration_spectral_radius(
    graph: &SimilarityGraph,
    alpha1: f64,
    alpha2: f64,
) -> SpectralEstimate {
    let op = SymmetrizedIteration::new(graph, alpha1, alpha2);
    spectral_radius(&op, 1e-12, 20_000)
}

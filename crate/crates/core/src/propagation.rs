//! Classical label propagation on a [`SimilarityGraph`].
//!
//! The main solver is improved Poisson learning, the fixed-point iteration
//!
//! ```text
//! U ← (P - α₁Q + α₂I) U + α₃ D⁻¹Bᵀ,    U⁽⁰⁾ = D⁻¹Y
//! ```
//!
//! stopped once successive iterates differ by less than ε in Frobenius norm.
//! Laplacian (harmonic) learning, plain Poisson diffusion and the usual
//! propagation/spreading baselines live alongside it for comparison.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{iteration_spectral_radius, Dataset, SimilarityGraph};

/// Divergence pre-check margin on the spectral radius of the iteration map.
pub const DIVERGENCE_MARGIN: f64 = 1e-9;

/// n×k matrix of per-node class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix(DMatrix<f64>);

impl LabelMatrix {
    pub fn new(scores: DMatrix<f64>) -> Result<Self> {
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("label matrix has non-finite entries"));
        }
        Ok(LabelMatrix(scores))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// Frobenius tolerance on successive iterates.
    pub epsilon: f64,
    /// Zero means "return the initial matrix".
    pub max_iter: usize,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            alpha1: 1.0,
            alpha2: -0.2,
            alpha3: 1.0,
            epsilon: 1e-6,
            max_iter: 2000,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

/// Mean-centered point sources: `B[j,i] = 1{y_i = j} - b_j` on labeled nodes, where `b` is the
/// labeled class distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceMatrix {
    /// k×n.
    pub sources: DMatrix<f64>,
    pub prior: DVector<f64>,
}

pub fn build_source_matrix(dataset: &Dataset) -> Result<SourceMatrix> {
    let k = dataset.class_count;
    let n = dataset.len();
    let labeled = dataset.labeled_indices();
    let mut counts = vec![0usize; k];
    for &i in &labeled {
        counts[dataset.labels[i]] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingClassLabels(c));
    }
    let total = labeled.len() as f64;
    let prior = DVector::from_fn(k, |j, _| counts[j] as f64 / total);
    let mut sources = DMatrix::zeros(k, n);
    for &i in &labeled {
        for j in 0..k {
            let hit = if dataset.labels[i] == j { 1.0 } else { 0.0 };
            sources[(j, i)] = hit - prior[j];
        }
    }
    Ok(SourceMatrix { sources, prior })
}

/// Y: one-hot rows for labeled nodes, zero rows otherwise.
pub fn one_hot_labels(dataset: &Dataset) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(dataset.len(), dataset.class_count);
    for i in dataset.labeled_indices() {
        y[(i, dataset.labels[i])] = 1.0;
    }
    y
}

fn check_shapes(graph: &SimilarityGraph, dataset: &Dataset) -> Result<()> {
    if graph.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("graph on {} nodes", dataset.len()),
            found: format!("{} nodes", graph.len()),
        });
    }
    Ok(())
}

fn scale_rows_by_inverse_degree(graph: &SimilarityGraph, m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        let d = graph.degrees()[i];
        m.row_mut(i).iter_mut().for_each(|v| *v /= d);
    }
}

#[derive(Debug, Clone)]
pub struct IplOutcome {
    pub labels: LabelMatrix,
    pub iterations: usize,
    /// ‖U⁽ᵐ⁾ - U⁽ᵐ⁻¹⁾‖_F after every update.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub spectral_radius: f64,
}

/// Improved Poisson learning. See the module docs for the update.
pub fn improved_poisson_learning(
    graph: &SimilarityGraph,
    dataset: &Dataset,
    params: &PropagationParams,
) -> Result<IplOutcome> {
    ipl_iterate(graph, dataset, params, |_, _| {})
}

/// One update of the iteration map; shared by every caller so results agree bit for bit.
pub(crate) struct IplStep<'a> {
    graph: &'a SimilarityGraph,
    params: PropagationParams,
    forcing: DMatrix<f64>,
}

impl<'a> IplStep<'a> {
    pub(crate) fn new(
        graph: &'a SimilarityGraph,
        dataset: &Dataset,
        params: &PropagationParams,
    ) -> Result<Self> {
        let b = build_source_matrix(dataset)?;
        let mut forcing = b.sources.transpose();
        scale_rows_by_inverse_degree(graph, &mut forcing);
        forcing *= params.alpha3;
        Ok(IplStep {
            graph,
            params: *params,
            forcing,
        })
    }

    pub(crate) fn apply(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let mut next = self.graph.transition().mul_dense(u);
        let pi = self.graph.stationary();
        for c in 0..u.ncols() {
            let mean = pi.dot(&u.column(c));
            let shift = self.params.alpha1 * mean;
            let mut col = next.column_mut(c);
            for i in 0..u.nrows() {
                col[i] += self.params.alpha2 * u[(i, c)] - shift + self.forcing[(i, c)];
            }
        }
        next
    }
}

pub(crate) fn ipl_initial(graph: &SimilarityGraph, dataset: &Dataset) -> DMatrix<f64> {
    let mut u = one_hot_labels(dataset);
    scale_rows_by_inverse_degree(graph, &mut u);
    u
}

/// Runs the improved Poisson iteration, handing every iterate `U⁽ᵐ⁾` (including `U⁽⁰⁾` and the
/// final one) to `observe` before moving on.
pub(crate) fn ipl_iterate<F>(
    graph: &SimilarityGraph,
    dataset: &Dataset,
    params: &PropagationParams,
    mut observe: F,
) -> Result<IplOutcome>
where
    F: FnMut(usize, &DMatrix<f64>),
{
    check_shapes(graph, dataset)?;
    params.validate()?;
    if dataset.labeled_indices().is_empty() {
        return Err(Error::invalid("no labeled nodes"));
    }
    let rho = iteration_spectral_radius(graph, params.alpha1, params.alpha2).value;
    if rho >= 1.0 + DIVERGENCE_MARGIN {
        return Err(Error::Divergence {
            spectral_radius: rho,
            alpha1: params.alpha1,
            alpha2: params.alpha2,
            alpha3: params.alpha3,
        });
    }
    let step = IplStep::new(graph, dataset, params)?;
    let mut u = ipl_initial(graph, dataset);
    let mut residuals = Vec::new();
    let mut converged = false;
    observe(0, &u);
    for m in 1..=params.max_iter {
        let next = step.apply(&u);
        let r = (&next - &u).norm();
        if !r.is_finite() {
            return Err(Error::NonFiniteResidual {
                iteration: m,
                spectral_radius: rho,
            });
        }
        residuals.push(r);
        u = next;
        observe(m, &u);
        if r < params.epsilon {
            converged = true;
            break;
        }
    }
    if !converged && params.max_iter > 0 {
        log::warn!(
            "improved Poisson learning stopped after {} iterations (residual {:e})",
            params.max_iter,
            residuals.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(IplOutcome {
        iterations: residuals.len(),
        labels: LabelMatrix::new(u)?,
        residuals,
        converged: converged || params.max_iter == 0,
        spectral_radius: rho,
    })
}

/// Plain Poisson diffusion `U ← PU + D⁻¹Bᵀ` from `U = 0` for a fixed number of steps.
pub fn poisson_learning(
    graph: &SimilarityGraph,
    dataset: &Dataset,
    iterations: usize,
) -> Result<LabelMatrix> {
    check_shapes(graph, dataset)?;
    if iterations == 0 {
        return Err(Error::invalid(
            "poisson learning needs at least one iteration",
        ));
    }
    let b = build_source_matrix(dataset)?;
    let mut forcing = b.sources.transpose();
    scale_rows_by_inverse_degree(graph, &mut forcing);
    let mut u = DMatrix::zeros(dataset.len(), dataset.class_count);
    for _ in 0..iterations {
        u = graph.transition().mul_dense(&u) + &forcing;
    }
    LabelMatrix::new(u)
}

/// Harmonic extension: labeled rows are one-hot, unlabeled rows solve `L_uu F_u = W_ul Y_l`.
///
/// Solved per class with Jacobi-preconditioned conjugate gradients.
pub fn laplacian_learning(graph: &SimilarityGraph, dataset: &Dataset) -> Result<LabelMatrix> {
    check_shapes(graph, dataset)?;
    let y = one_hot_labels(dataset);
    let unlabeled = dataset.unlabeled_indices();
    if unlabeled.is_empty() {
        return LabelMatrix::new(y);
    }
    for comp in graph.components() {
        if comp.iter().all(|&i| !dataset.labeled_mask[i]) {
            return Err(Error::DisconnectedComponent { nodes: comp });
        }
    }
    let n = dataset.len();
    let mut local = vec![usize::MAX; n];
    for (a, &i) in unlabeled.iter().enumerate() {
        local[i] = a;
    }
    let w = graph.weight_csr();
    let diag = DVector::from_iterator(
        unlabeled.len(),
        unlabeled.iter().map(|&i| graph.degrees()[i]),
    );
    // L_uu x = D_u x - W_uu x
    let apply = |x: &DVector<f64>| -> DVector<f64> {
        DVector::from_fn(unlabeled.len(), |a, _| {
            let i = unlabeled[a];
            let mut acc = diag[a] * x[a];
            for (j, v) in w.row(i) {
                if local[j] != usize::MAX {
                    acc -= v * x[local[j]];
                }
            }
            acc
        })
    };
    let mut out = y.clone();
    for c in 0..dataset.class_count {
        let rhs = DVector::from_fn(unlabeled.len(), |a, _| {
            w.row(unlabeled[a])
                .filter(|&(j, _)| dataset.labeled_mask[j])
                .map(|(j, v)| v * y[(j, c)])
                .sum()
        });
        let x = conjugate_gradient(&apply, &rhs, &diag, 1e-12, 10 * unlabeled.len() + 100);
        for (a, &i) in unlabeled.iter().enumerate() {
            out[(i, c)] = x[a];
        }
    }
    LabelMatrix::new(out)
}

fn conjugate_gradient<A>(
    apply: &A,
    rhs: &DVector<f64>,
    diag: &DVector<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> DVector<f64>
where
    A: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut x = DVector::zeros(rhs.len());
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return x;
    }
    let mut r = rhs.clone();
    let mut z = r.component_div(diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        let ap = apply(&p);
        let step = rz / p.dot(&ap);
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        if r.norm() <= rel_tol * rhs_norm {
            break;
        }
        z = r.component_div(diag);
        let rz_next = r.dot(&z);
        p = &z + p * (rz_next / rz);
        rz = rz_next;
    }
    x
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub labels: LabelMatrix,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `U ← PU` and re-clamps labeled rows to one-hot until the update is below `tol`.
pub fn label_propagation_baseline(
    graph: &SimilarityGraph,
    dataset: &Dataset,
    tol: f64,
    max_iter: usize,
) -> Result<BaselineOutcome> {
    check_shapes(graph, dataset)?;
    let y = one_hot_labels(dataset);
    let labeled = dataset.labeled_indices();
    let mut u = y.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut next = graph.transition().mul_dense(&u);
        for &i in &labeled {
            next.set_row(i, &y.row(i));
        }
        let r = (&next - &u).norm();
        u = next;
        iterations += 1;
        if r < tol {
            converged = true;
            break;
        }
    }
    Ok(BaselineOutcome {
        labels: LabelMatrix::new(u)?,
        iterations,
        converged,
    })
}

/// Iterates `U ← clamp·S·U + (1 - clamp)·Y` with `S = D^{-1/2} W D^{-1/2}`.
pub fn label_spreading_baseline(
    graph: &SimilarityGraph,
    dataset: &Dataset,
    clamp: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BaselineOutcome> {
    check_shapes(graph, dataset)?;
    if !(clamp > 0.0 && clamp < 1.0) {
        return Err(Error::invalid(format!(
            "clamp must lie in (0, 1), got {clamp}"
        )));
    }
    let y = one_hot_labels(dataset);
    let inv_sqrt = graph.degrees().map(|d| 1.0 / d.sqrt());
    let w = graph.weight_csr();
    let mut u = y.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut scaled = u.clone();
        for i in 0..scaled.nrows() {
            scaled.row_mut(i).iter_mut().for_each(|v| *v *= inv_sqrt[i]);
        }
        let mut next = w.mul_dense(&scaled);
        for i in 0..next.nrows() {
            for c in 0..next.ncols() {
                next[(i, c)] = clamp * inv_sqrt[i] * next[(i, c)] + (1.0 - clamp) * y[(i, c)];
            }
        }
        let r = (&next - &u).norm();
        u = next;
        iterations += 1;
        if r < tol {
            converged = true;
            break;
        }
    }
    Ok(BaselineOutcome {
        labels: LabelMatrix::new(u)?,
        iterations,
        converged,
    })
}

/// Row-wise argmax, ties to the lowest class index.
pub fn assign_labels(u: &LabelMatrix) -> Vec<usize> {
    let m = u.as_matrix();
    (0..m.nrows())
        .map(|i| {
            let mut best = 0;
            for c in 1..m.ncols() {
                if m[(i, c)] > m[(i, best)] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

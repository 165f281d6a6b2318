use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::state::{amplitude_encode, StateVector};
use crate::error::{Error, Result};

/// Orthogonal/upper-triangular factor pair with `R_ii >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QrEmbedding {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Count of diagonal entries of R above `m·ε·max|R_ii|`.
    pub effective_rank: usize,
}

/// Householder QR of a square matrix, normalized so the diagonal of R is nonnegative.
///
/// Rank-deficient input is fine: a zero column below the diagonal simply gets no reflector.
pub fn qr_embed(a: &DMatrix<f64>) -> Result<QrEmbedding> {
    let m = a.nrows();
    if m == 0 || !a.is_square() {
        return Err(Error::invalid(format!(
            "qr_embed needs a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("qr_embed input has non-finite entries"));
    }
    let mut r = a.clone();
    let mut reflectors: Vec<(usize, DVector<f64>)> = Vec::with_capacity(m);
    for k in 0..m.saturating_sub(1) {
        let x = r.view((k, k), (m - k, 1)).column(0).clone_owned();
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.norm();
        if vnorm == 0.0 {
            continue;
        }
        v /= vnorm;
        // R[k.., k..] -= 2 v (vᵀ R[k.., k..])
        for j in k..m {
            let mut dot = 0.0;
            for i in 0..(m - k) {
                dot += v[i] * r[(k + i, j)];
            }
            let s = 2.0 * dot;
            for i in 0..(m - k) {
                r[(k + i, j)] -= s * v[i];
            }
        }
        for i in (k + 1)..m {
            r[(i, k)] = 0.0;
        }
        reflectors.push((k, v));
    }
    // Q = H_0 H_1 … H_{m-2}, accumulated right to left onto I.
    let mut q = DMatrix::identity(m, m);
    for (k, v) in reflectors.iter().rev() {
        let k = *k;
        for j in 0..m {
            let mut dot = 0.0;
            for i in 0..(m - k) {
                dot += v[i] * q[(k + i, j)];
            }
            let s = 2.0 * dot;
            for i in 0..(m - k) {
                q[(k + i, j)] -= s * v[i];
            }
        }
    }
    for i in 0..m {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    let max_diag = (0..m).map(|i| r[(i, i)]).fold(0.0, f64::max);
    let tol = m as f64 * f64::EPSILON * max_diag;
    let effective_rank = (0..m).filter(|&i| r[(i, i)] > tol).count();
    Ok(QrEmbedding {
        q,
        r,
        effective_rank,
    })
}

pub fn orthogonality_error(q: &DMatrix<f64>) -> f64 {
    (q.transpose() * q - DMatrix::identity(q.ncols(), q.ncols())).norm()
}

/// `Q|0⟩`: the first column of an orthogonal matrix as a (padded) state.
pub fn prepare_node_state(q: &DMatrix<f64>) -> Result<StateVector> {
    let err = orthogonality_error(q);
    if !q.is_square() || err > 1e-8 {
        return Err(Error::NotOrthogonal(err));
    }
    amplitude_encode(q.column(0).as_slice())
}

/// Applies `Q ⊕ I` to the state: `Q` acts on the leading `m` amplitudes, the tail is untouched.
pub fn apply_embedded_unitary(state: &StateVector, q: &DMatrix<f64>) -> Result<StateVector> {
    let m = q.nrows();
    if !q.is_square() {
        return Err(Error::invalid("embedded operator must be square"));
    }
    if m > state.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("operator dimension <= {}", state.dim()),
            found: format!("{m}"),
        });
    }
    let src = state.amplitudes();
    let mut out = state.clone();
    let dst = out.amplitudes_mut();
    for i in 0..m {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            acc += src[j] * q[(i, j)];
        }
        dst[i] = acc;
    }
    Ok(out)
}

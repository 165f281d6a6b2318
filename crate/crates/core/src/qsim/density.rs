use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::state::StateVector;
use crate::error::{Error, Result};

/// Reduced state of a subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub entries: DMatrix<Complex64>,
    /// Qubits of the parent register kept in this subsystem, ascending.
    pub qubits: Vec<usize>,
}

impl DensityMatrix {
    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).norm()
    }

    /// Real eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.entries.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .map(|l| l.clamp(0.0, 1.0))
            .filter(|&l| l > 0.0)
            .map(|l| -l * l.log2())
            .sum::<f64>()
            .max(0.0)
    }
}

fn normalize_subsystem(qubits: usize, keep: &[usize]) -> Result<Vec<usize>> {
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep.len() >= qubits {
        return Err(Error::invalid(format!(
            "subsystem must be a nonempty proper subset of {qubits} qubits"
        )));
    }
    if let Some(&q) = keep.iter().find(|&&q| q >= qubits) {
        return Err(Error::invalid(format!("qubit {q} out of range")));
    }
    Ok(keep)
}

/// Partial trace over every qubit not in `keep`.
pub fn reduced_density_matrix(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let q = state.qubit_count();
    let keep = normalize_subsystem(q, keep)?;
    let traced: Vec<usize> = (0..q).filter(|i| !keep.contains(i)).collect();
    let bit = |qubit: usize| 1usize << (q - 1 - qubit);
    let index_of = |a: usize, b: usize| -> usize {
        let mut idx = 0;
        for (pos, &qb) in keep.iter().enumerate() {
            if a >> (keep.len() - 1 - pos) & 1 == 1 {
                idx |= bit(qb);
            }
        }
        for (pos, &qb) in traced.iter().enumerate() {
            if b >> (traced.len() - 1 - pos) & 1 == 1 {
                idx |= bit(qb);
            }
        }
        idx
    };
    let da = 1usize << keep.len();
    let db = 1usize << traced.len();
    // ψ reshaped to da×db; ρ_A = M M†.
    let amps = state.amplitudes();
    let m = DMatrix::from_fn(da, db, |a, b| amps[index_of(a, b)]);
    let entries = &m * m.adjoint();
    Ok(DensityMatrix {
        entries,
        qubits: keep,
    })
}

/// Entanglement entropy (bits) between `subsystem` and the rest of the register.
pub fn entanglement_entropy(state: &StateVector, subsystem: &[usize]) -> Result<f64> {
    let q = state.qubit_count();
    let keep = normalize_subsystem(q, subsystem)?;
    // For a pure state both sides share a spectrum; diagonalize the smaller one.
    let side = if 2 * keep.len() <= q {
        keep
    } else {
        (0..q).filter(|i| !keep.contains(i)).collect()
    };
    Ok(reduced_density_matrix(state, &side)?.entropy())
}

/// Entropy across the cut between the first ⌊q/2⌋ qubits and the rest; zero for one qubit.
pub fn half_cut_entropy(state: &StateVector) -> f64 {
    let q = state.qubit_count();
    if q < 2 {
        return 0.0;
    }
    let left: Vec<usize> = (0..q / 2).collect();
    entanglement_entropy(state, &left).expect("half cut is a valid bipartition")
}

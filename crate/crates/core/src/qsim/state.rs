use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on simulated register size (2^14 = 16384 amplitudes).
pub const MAX_QUBITS: usize = 14;

pub type Gate2 = [[Complex64; 2]; 2];

/// Dense pure state. Qubit 0 is the most significant bit of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    qubits: usize,
}

impl StateVector {
    /// |0…0⟩ on `qubits` qubits.
    pub fn zero(qubits: usize) -> Result<Self> {
        check_qubits(qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { amplitudes, qubits })
    }

    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(qubits)?;
        if index >= s.amplitudes.len() {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps amplitudes that are already unit norm (within 1e-10).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let qubits = len.trailing_zeros() as usize;
        check_qubits(qubits)?;
        let s = StateVector { amplitudes, qubits };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "state not normalized (norm² = {norm})"
            )));
        }
        Ok(s)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch {
                expected: format!("{} qubits", self.qubits),
                found: format!("{} qubits", other.qubits),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn apply_single(&mut self, qubit: usize, gate: &Gate2) {
        assert!(qubit < self.qubits, "qubit {qubit} out of range");
        let stride = 1usize << (self.qubits - 1 - qubit);
        let n = self.amplitudes.len();
        let mut base = 0;
        while base < n {
            for i in base..base + stride {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i + stride];
                self.amplitudes[i] = gate[0][0] * a0 + gate[0][1] * a1;
                self.amplitudes[i + stride] = gate[1][0] * a0 + gate[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        assert!(control < self.qubits && target < self.qubits && control != target);
        let cmask = 1usize << (self.qubits - 1 - control);
        let tmask = 1usize << (self.qubits - 1 - target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }
}

fn check_qubits(qubits: usize) -> Result<()> {
    if qubits == 0 || qubits > MAX_QUBITS {
        return Err(Error::invalid(format!(
            "qubit count {qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Zero-pads `v` to the next power of two (at least 2) and normalizes it.
pub fn amplitude_encode(v: &[f64]) -> Result<StateVector> {
    let complex: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    amplitude_encode_complex(&complex)
}

pub fn amplitude_encode_complex(v: &[Complex64]) -> Result<StateVector> {
    if v.is_empty() {
        return Err(Error::invalid("cannot encode an empty vector"));
    }
    if v.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::invalid("cannot encode non-finite values"));
    }
    let dim = v.len().next_power_of_two().max(2);
    let qubits = dim.trailing_zeros() as usize;
    check_qubits(qubits)?;
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
    for (dst, src) in amplitudes.iter_mut().zip(v) {
        *dst = src / norm;
    }
    Ok(StateVector { amplitudes, qubits })
}

/// |⟨a|b⟩|².
pub fn state_fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

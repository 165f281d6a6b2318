use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::{Gate2, StateVector, MAX_QUBITS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entangler {
    /// CNOT(i → (i+1) mod q) for every qubit i, in order.
    CnotRing,
}

/// Layered circuit: per layer an Rz·Ry·Rz rotation on every qubit followed by the entangler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub qubit_count: usize,
    pub layer_count: usize,
    /// `thetas[layer][qubit] = [θ₁, θ₂, θ₃]`, applied as Rz(θ₁) then Ry(θ₂) then Rz(θ₃).
    pub thetas: Vec<Vec<[f64; 3]>>,
    pub entangler: Entangler,
    pub seed: u64,
}

impl CircuitSpec {
    pub fn angle_count(&self) -> usize {
        self.thetas.iter().map(|l| l.len() * 3).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.len() != self.layer_count
            || self.thetas.iter().any(|l| l.len() != self.qubit_count)
        {
            return Err(Error::invalid(
                "rotation angles do not match qubit/layer counts",
            ));
        }
        if self
            .thetas
            .iter()
            .flatten()
            .flatten()
            .any(|t| !t.is_finite())
        {
            return Err(Error::invalid("rotation angles must be finite"));
        }
        Ok(())
    }

    /// (control, target) pairs of one entangling block.
    pub fn entangling_pairs(&self) -> Vec<(usize, usize)> {
        let q = self.qubit_count;
        if q < 2 {
            return Vec::new();
        }
        match self.entangler {
            Entangler::CnotRing => (0..q).map(|i| (i, (i + 1) % q)).collect(),
        }
    }
}

/// Samples every rotation angle uniformly from `[0, 2π)`.
pub fn build_pqc(qubit_count: usize, layer_count: usize, seed: u64) -> Result<CircuitSpec> {
    if qubit_count == 0 || qubit_count > MAX_QUBITS {
        return Err(Error::invalid(format!(
            "qubit count {qubit_count} outside 1..={MAX_QUBITS}"
        )));
    }
    if layer_count == 0 {
        return Err(Error::invalid("layer count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thetas = (0..layer_count)
        .map(|_| {
            (0..qubit_count)
                .map(|_| {
                    [
                        rng.gen_range(0.0..TAU),
                        rng.gen_range(0.0..TAU),
                        rng.gen_range(0.0..TAU),
                    ]
                })
                .collect()
        })
        .collect();
    Ok(CircuitSpec {
        qubit_count,
        layer_count,
        thetas,
        entangler: Entangler::CnotRing,
        seed,
    })
}

pub fn rz(theta: f64) -> Gate2 {
    let zero = Complex64::new(0.0, 0.0);
    [
        [Complex64::from_polar(1.0, -theta / 2.0), zero],
        [zero, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

pub fn ry(theta: f64) -> Gate2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

/// `b · a` (apply `a` first).
pub fn compose(b: &Gate2, a: &Gate2) -> Gate2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = b[i][0] * a[0][j] + b[i][1] * a[1][j];
        }
    }
    out
}

/// Rz(θ₃)·Ry(θ₂)·Rz(θ₁).
pub fn rotation_block(theta: &[f64; 3]) -> Gate2 {
    compose(&rz(theta[2]), &compose(&ry(theta[1]), &rz(theta[0])))
}

/// Runs the circuit on `initial`, or on |0…0⟩ when none is given.
pub fn run_circuit(spec: &CircuitSpec, initial: Option<&StateVector>) -> Result<StateVector> {
    spec.validate()?;
    let mut state = match initial {
        Some(s) => {
            if s.qubit_count() != spec.qubit_count {
                return Err(Error::DimensionMismatch {
                    expected: format!("{} qubits", spec.qubit_count),
                    found: format!("{} qubits", s.qubit_count()),
                });
            }
            s.clone()
        }
        None => StateVector::zero(spec.qubit_count)?,
    };
    let pairs = spec.entangling_pairs();
    for layer in &spec.thetas {
        for (q, theta) in layer.iter().enumerate() {
            state.apply_single(q, &rotation_block(theta));
        }
        for &(c, t) in &pairs {
            state.apply_cnot(c, t);
        }
    }
    Ok(state)
}

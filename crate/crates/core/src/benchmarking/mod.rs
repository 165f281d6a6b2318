//! Randomized benchmarking and the layer/qubit sweeps.

mod clifford;
mod rb;
mod sweep;

pub use clifford::{clifford_group_1q, hadamard, identity_gate, phase_s, CliffordGroup};
pub use rb::{
    average_fidelity, error_per_clifford, fit_decay, rb_experiment, DecayFit, RbConfig, RbResult,
    DEFAULT_LENGTHS,
};
pub use sweep::{sweep, write_sweep_csv, Knob, SweepRow, DEFAULT_SWEEP_NOISE};

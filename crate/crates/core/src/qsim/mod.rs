//! Statevector simulation: encoding, parameterized circuits, QR embeddings and entanglement.

mod circuit;
mod density;
mod qr;
mod state;

pub use circuit::{
    build_pqc, compose, rotation_block, run_circuit, ry, rz, CircuitSpec, Entangler,
};
pub use density::{entanglement_entropy, half_cut_entropy, reduced_density_matrix, DensityMatrix};
pub use qr::{
    apply_embedded_unitary, orthogonality_error, prepare_node_state, qr_embed, QrEmbedding,
};
pub use state::{
    amplitude_encode, amplitude_encode_complex, state_fidelity, Gate2, StateVector, MAX_QUBITS,
};

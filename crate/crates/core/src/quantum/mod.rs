//! Quantum channels and their geometric complexity.
//!
//! The metric on channels only sees the reduced output `φ = Λ(I/d)`, so most
//! quantities here reduce to spectra of `φ` and to the affine-invariant
//! distance on positive-definite matrices.

pub mod bloch;
pub mod channel;
pub mod protocols;
pub mod solve;
pub mod spd;

pub use bloch::{bloch_path_length, radial_path, swap_complexity, BlochVector};
pub use channel::{
    choi_from_kraus, classical_embedding, classical_reduction, classical_reduction_in_basis, dilation_channel,
    quantum_error, reduced_output, swap_channel, ChoiMatrix, DensityOperator, KrausChannel, ProjectorQ,
};
pub use protocols::{
    dilation_eigen_floor, dilation_protocol_bound, lindblad_protocol_bound, DilationBound, LindbladGenerator,
};
pub use solve::{quantum_scale_solve, QuantumScaling};
pub use spd::{
    density_path_length, log_euclidean_seed_path, quantum_bracket, quantum_ell, quantum_ell_with_floor,
    quantum_entropy_bound, quantum_tradeoff, quantum_upper_estimate, spd_distance, von_neumann_entropy,
};

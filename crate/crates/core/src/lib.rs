//! Non-equilibrium steady states of Markovian open quantum systems found by
//! variationally optimizing a doubled-register quantum circuit.
//!
//! The density matrix `ρ` of an `N`-site system is embedded as a pure state on
//! `2N` qubits (`|i⟩⟨j| ↦ |i⟩_P ⊗ |j⟩_A`, physical register first). The
//! Liouvillian becomes an operator `L̂` on that register, and the steady state
//! is the minimizer of `⟨L̂†L̂⟩` over a circuit family whose reshaped output is
//! always Hermitian and positive semi-definite.
//!
//! Conventions used throughout:
//! - qubit 0 is the most significant bit of a computational-basis index;
//! - `σᶻ|0⟩ = +|0⟩`, `σ⁻ = (σˣ − iσʸ)/2` maps `|0⟩ → |1⟩`;
//! - rotations are `R_a(θ) = exp(−iσ_a θ/2)`.

pub mod ansatz;
pub mod cli;
pub mod config;
pub mod error;
pub mod lindblad;
pub mod measure;
pub mod mitigate;
pub mod optimize;
pub mod oracle;
pub mod pauli;
pub mod rng;
pub mod sim;

pub use error::{DvqeError, Result};
pub use num_complex::Complex64;

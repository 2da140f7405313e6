//! Shot-faithful classical simulation of randomized quantum algorithms for
//! linear algebra in the Pauli access model.
//!
//! A Hermitian matrix is given as a weighted sum of Pauli strings,
//! `A = Σ a_ℓ P_ℓ`.  Matrix functions of `A` (inverse, Gaussian ground-state
//! filter, Gibbs exponential, resolvents) are approximated by Fourier series
//! `s(A) = Σ α_k exp(i t_k A)`, each time evolution is rewritten exactly as a
//! weighted mixture of Pauli gates and single Pauli rotations, and overlaps or
//! observable expectations are estimated by Monte Carlo over simulated
//! Hadamard-test circuits on `log N + 1` qubits.
//!
//! Every estimator is checked against exact dense linear algebra
//! ([`oracle`]) at small qubit counts; nothing here is meant to scale past a
//! desk-sized experiment.

pub mod apps;
pub mod compiler;
pub mod error;
pub mod fourier;
pub mod oracle;
pub mod pauli;
pub mod sampler;
pub mod stabilizer;
pub mod statevector;

pub use error::{Error, Result};
pub use pauli::{Axis, PauliOperator, PauliString, Phase, PhasedPauli};
pub use statevector::{GateElement, GateString, Observable, StatePrep};

//! Quantum battery simulation toolkit.
//!
//! The crate charges an `N`-cell spin-chain battery, measures the energy
//! stored in an `M`-cell subsystem and estimates its ergotropy (the maximum
//! work extractable by unitaries) with a variational passive-state search.
//! Every variational number has an exact-diagonalization counterpart in
//! [`oracle`].
//!
//! Module map:
//!
//! - [`qsim`]: statevector and density-matrix simulator, noise, sampling.
//! - [`hamiltonian`]: Pauli-sum operators, Ising builders, dense eigensolves.
//! - [`oracle`]: exact work, ergotropy, passive decomposition, correlations.
//! - [`ansatz`]: hardware-efficient ansatz, RXX charging chain, Trotter steps.
//! - [`optim`]: BFGS, SPSA and gradient evaluation.
//! - [`pvqd`]: projected variational dynamics for the charging step.
//! - [`vqergo`]: mean energy, passive-energy optimization, record assembly.

pub mod ansatz;
pub mod error;
pub mod hamiltonian;
pub mod optim;
pub mod oracle;
pub mod pvqd;
pub mod qsim;
pub mod vqergo;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Gate-level simulator with pure-state and density-matrix backends.
//!
//! Conventions: qubit 0 is the least significant bit of a basis index, and
//! rotations are `exp(-iθ/2 P)`. Global phase is never tracked.

mod circuit;
mod density;
mod gate;
mod measure;
mod noise;
mod statevector;

pub use circuit::{run_circuit, Angle, Circuit, Op};
pub use density::{DensityMatrix, MAX_MIXED_QUBITS};
pub use gate::{Gate, GateKind};
pub use measure::{mitigate_readout, sample_counts, Counts};
pub use noise::NoiseModel;
pub use statevector::{Statevector, MAX_PURE_QUBITS};

pub(crate) use density::hermitian_part;
pub(crate) use statevector::check_permutation;

use num_complex::Complex64;

use crate::{Error, Result};

/// Either backend's state.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(Statevector),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn n_qubits(&self) -> usize {
        match self {
            QuantumState::Pure(sv) => sv.n_qubits(),
            QuantumState::Mixed(rho) => rho.n_qubits(),
        }
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        match self {
            QuantumState::Pure(sv) => sv.apply(gate),
            QuantumState::Mixed(rho) => rho.apply(gate),
        }
    }

    /// Computational-basis outcome probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure(sv) => sv.probabilities(),
            QuantumState::Mixed(rho) => rho.diagonal(),
        }
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        match self {
            QuantumState::Pure(sv) => DensityMatrix::from_statevector(sv),
            QuantumState::Mixed(rho) => Ok(rho.clone()),
        }
    }
}

impl From<Statevector> for QuantumState {
    fn from(sv: Statevector) -> Self {
        QuantumState::Pure(sv)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(rho: DensityMatrix) -> Self {
        QuantumState::Mixed(rho)
    }
}

/// Reduced state on `keep`; qubit `k` of the result is `keep[k]`.
pub fn partial_trace(state: &QuantumState, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.n_qubits();
    if keep.is_empty() {
        return Err(Error::EmptySubsystem);
    }
    let mut seen = vec![false; n];
    for &q in keep {
        if q >= n {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                n_qubits: n,
            });
        }
        if seen[q] {
            return Err(Error::InvalidArgument(format!("qubit {q} listed twice")));
        }
        seen[q] = true;
    }
    density::check_size(keep.len())?;
    let rest: Vec<usize> = (0..n).filter(|q| !seen[*q]).collect();
    let dim_k = 1usize << keep.len();
    let dim_e = 1usize << rest.len();
    let gather = |bits: &[usize], value: usize| {
        bits.iter()
            .enumerate()
            .fold(0usize, |acc, (b, &q)| acc | (((value >> b) & 1) << q))
    };
    let keep_offsets: Vec<usize> = (0..dim_k).map(|k| gather(keep, k)).collect();
    let env_offsets: Vec<usize> = (0..dim_e).map(|e| gather(&rest, e)).collect();

    let mut out = vec![Complex64::new(0.0, 0.0); dim_k * dim_k];
    match state {
        QuantumState::Pure(sv) => {
            let amps = sv.amplitudes();
            for &e in &env_offsets {
                let column: Vec<Complex64> = keep_offsets.iter().map(|&k| amps[k | e]).collect();
                for (r, a) in column.iter().enumerate() {
                    if a.norm_sqr() == 0.0 {
                        continue;
                    }
                    for (c, b) in column.iter().enumerate() {
                        out[r * dim_k + c] += a * b.conj();
                    }
                }
            }
        }
        QuantumState::Mixed(rho) => {
            for r in 0..dim_k {
                for c in 0..dim_k {
                    out[r * dim_k + c] = env_offsets
                        .iter()
                        .map(|&e| rho.get(keep_offsets[r] | e, keep_offsets[c] | e))
                        .sum();
                }
            }
        }
    }
    Ok(DensityMatrix::from_raw(keep.len(), out))
}

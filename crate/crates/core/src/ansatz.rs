//! Circuit constructors: the hardware-efficient ansatz, the RXX charging
//! chain and Trotter steps for nearest-neighbour spin chains.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{build_h1_tfim, Pauli, PauliSum};
use crate::qsim::{Circuit, Gate, GateKind};
use crate::{Error, Result};

/// Layered `RY·RZ·RY` rotations with nearest-neighbour CNOT ladders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    /// Number of entangling layers.
    pub depth: usize,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, depth: usize) -> Self {
        Self { n_qubits, depth }
    }

    /// Rotation layers that survive construction. A single qubit has no
    /// entanglers, so its layers merge into one general rotation.
    pub fn rotation_layers(&self) -> usize {
        if self.n_qubits == 1 {
            1
        } else {
            self.depth + 1
        }
    }

    pub fn n_params(&self) -> usize {
        3 * self.n_qubits * self.rotation_layers()
    }

    /// Near-identity start: independent draws from `[-0.01, 0.01]`.
    pub fn initial_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.n_params())
            .map(|_| rng.random_range(-0.01..=0.01))
            .collect()
    }
}

/// `depth` repetitions of (rotation layer, CNOT ladder `0→1, 1→2, …`) and a
/// trailing rotation layer. Slots run layer-major, qubit-minor, with the
/// `(RY, RZ, RY)` triple innermost.
pub fn hardware_efficient(spec: AnsatzSpec) -> Result<Circuit> {
    if spec.n_qubits == 0 {
        return Err(Error::InvalidArgument(
            "ansatz needs at least one qubit".into(),
        ));
    }
    let n = spec.n_qubits;
    let mut circuit = Circuit::new(n);
    let mut slot = 0;
    let mut rotation_layer = |circuit: &mut Circuit| -> Result<()> {
        for q in 0..n {
            for kind in [GateKind::Ry, GateKind::Rz, GateKind::Ry] {
                circuit.push_param(kind, &[q], slot)?;
                slot += 1;
            }
        }
        Ok(())
    };
    for _ in 1..spec.rotation_layers() {
        rotation_layer(&mut circuit)?;
        for q in 0..n - 1 {
            circuit.push(Gate::cnot(q, q + 1)?)?;
        }
    }
    rotation_layer(&mut circuit)?;
    Ok(circuit)
}

/// Exact propagator of the field-free coupling `−J Σ X_i X_{i+1}` for time
/// `t`: one layer of `RXX(−2Jt)` on neighbouring pairs.
pub fn rxx_chain(n: usize, j: f64, t: f64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "RXX chain needs at least two qubits, got {n}"
        )));
    }
    let theta = -2.0 * j * t;
    let mut circuit = Circuit::new(n);
    for q in 0..n - 1 {
        circuit.push(Gate::rxx(q, q + 1, theta)?)?;
    }
    Ok(circuit)
}

/// Product-formula order for [`trotter_circuit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrotterOrder {
    /// `e^{-iB dt} e^{-iA dt}`: single-qubit terms first, then couplings.
    First,
    /// `e^{-iA dt/2} e^{-iB dt} e^{-iA dt/2}`.
    #[default]
    Second,
}

/// One product-formula step of `exp(−i H dt)` for operators whose terms are
/// single-qubit Paulis or `X_a X_b` couplings.
pub fn trotter_circuit(op: &PauliSum, dt: f64, order: TrotterOrder) -> Result<Circuit> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let mut field = Vec::new();
    let mut coupling = Vec::new();
    for (c, s) in op.terms() {
        match s.support().as_slice() {
            [] => {} // identity: global phase
            &[(q, p)] => {
                let kind = match p {
                    Pauli::X => GateKind::Rx,
                    Pauli::Y => GateKind::Ry,
                    _ => GateKind::Rz,
                };
                field.push((kind, q, c));
            }
            &[(a, Pauli::X), (b, Pauli::X)] => coupling.push((a, b, c)),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "no native gate for exp(-i {s} t)"
                )))
            }
        }
    }
    field.sort_by_key(|&(_, q, _)| q);
    coupling.sort_by_key(|&(a, b, _)| (a, b));
    // exp(-i c dt P) = R_P(2 c dt)
    let field_layer = |circuit: &mut Circuit, scale: f64| -> Result<()> {
        for &(kind, q, c) in &field {
            circuit.push(Gate::new(kind, &[q], Some(2.0 * c * dt * scale))?)?;
        }
        Ok(())
    };
    let mut circuit = Circuit::new(op.n_qubits());
    match order {
        TrotterOrder::First => field_layer(&mut circuit, 1.0)?,
        TrotterOrder::Second => field_layer(&mut circuit, 0.5)?,
    }
    for &(a, b, c) in &coupling {
        circuit.push(Gate::rxx(a, b, 2.0 * c * dt)?)?;
    }
    if order == TrotterOrder::Second {
        field_layer(&mut circuit, 0.5)?;
    }
    Ok(circuit)
}

/// First-order Ising step: `RZ(−2h·dt)` on every qubit, then the
/// `RXX(−2J·dt)` ladder.
pub fn trotter_step(n: usize, h: f64, j: f64, dt: f64) -> Result<Circuit> {
    trotter_circuit(&build_h1_tfim(n, h, j)?, dt, TrotterOrder::First)
}

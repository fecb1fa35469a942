use serde::{Deserialize, Serialize};

use super::gate::{Gate, GateKind};
use super::noise::NoiseModel;
use super::statevector::Statevector;
use super::QuantumState;
use crate::{Error, Result};

/// Where a gate angle comes from when the circuit is bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    None,
    Fixed(f64),
    /// `scale · params[slot]`.
    Param {
        slot: usize,
        scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Op {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub angle: Angle,
}

impl Op {
    fn bind(&self, params: &[f64]) -> Result<Gate> {
        let angle = match self.angle {
            Angle::None => None,
            Angle::Fixed(a) => Some(a),
            Angle::Param { slot, scale } => Some(scale * params[slot]),
        };
        Gate::new(self.kind, &self.targets, angle)
    }
}

/// Ordered gate list with variational parameter slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    n_params: usize,
    ops: Vec<Op>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            n_params: 0,
            ops: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.ops.iter().filter(|op| op.kind == kind).count()
    }

    fn push_op(&mut self, kind: GateKind, targets: &[usize], angle: Angle) -> Result<()> {
        // validate shape with a throwaway angle
        let probe = match angle {
            Angle::None => None,
            Angle::Fixed(a) => Some(a),
            Angle::Param { .. } => Some(0.0),
        };
        Gate::new(kind, targets, probe)?.check_register(self.n_qubits)?;
        if let Angle::Param { slot, scale } = angle {
            if !scale.is_finite() {
                return Err(Error::NonFiniteAngle(scale));
            }
            self.n_params = self.n_params.max(slot + 1);
        }
        self.ops.push(Op {
            kind,
            targets: targets.to_vec(),
            angle,
        });
        Ok(())
    }

    /// Appends a fixed gate.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let angle = gate.angle().map_or(Angle::None, Angle::Fixed);
        self.push_op(gate.kind(), gate.targets(), angle)
    }

    /// Appends a rotation whose angle is `params[slot]`.
    pub fn push_param(&mut self, kind: GateKind, targets: &[usize], slot: usize) -> Result<()> {
        if !kind.is_rotation() {
            return Err(Error::InvalidArgument(format!(
                "{kind} cannot carry a parameter"
            )));
        }
        self.push_op(kind, targets, Angle::Param { slot, scale: 1.0 })
    }

    /// Binds the parameter vector, yielding concrete gates.
    pub fn bind(&self, params: &[f64]) -> Result<Vec<Gate>> {
        self.check_params(params)?;
        self.ops.iter().map(|op| op.bind(params)).collect()
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::ParameterCount {
                expected: self.n_params,
                got: params.len(),
            });
        }
        match params.iter().find(|p| !p.is_finite()) {
            Some(&p) => Err(Error::NonFiniteAngle(p)),
            None => Ok(()),
        }
    }

    /// Every slot must be referenced by at least one gate.
    pub fn validate_slots(&self) -> Result<()> {
        let mut used = vec![false; self.n_params];
        for op in &self.ops {
            if let Angle::Param { slot, .. } = op.angle {
                used[slot] = true;
            }
        }
        match used.iter().position(|u| !u) {
            Some(slot) => Err(Error::InvalidArgument(format!(
                "parameter slot {slot} is not referenced by any gate"
            ))),
            None => Ok(()),
        }
    }

    /// Gate positions bound to each slot, with their scale.
    pub fn slot_bindings(&self) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); self.n_params];
        for (pos, op) in self.ops.iter().enumerate() {
            if let Angle::Param { slot, scale } = op.angle {
                out[slot].push((pos, scale));
            }
        }
        out
    }

    /// Appends `other`, renumbering its parameter slots after this circuit's.
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        let offset = self.n_params;
        for op in &other.ops {
            let angle = match op.angle {
                Angle::Param { slot, scale } => Angle::Param {
                    slot: slot + offset,
                    scale,
                },
                a => a,
            };
            self.push_op(op.kind, &op.targets, angle)?;
        }
        self.n_params = offset + other.n_params;
        Ok(())
    }

    /// Moves the circuit onto a larger register, sending qubit `k` to
    /// `sites[k]`.
    pub fn remapped(&self, n_qubits: usize, sites: &[usize]) -> Result<Circuit> {
        if sites.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: sites.len(),
            });
        }
        let mut out = Circuit::new(n_qubits);
        for op in &self.ops {
            let targets: Vec<usize> = op.targets.iter().map(|&q| sites[q]).collect();
            out.push_op(op.kind, &targets, op.angle)?;
        }
        out.n_params = self.n_params;
        Ok(out)
    }

    /// `U(θ)†` with the same parameter slots: reversed order, negated scales.
    pub fn inverse(&self) -> Circuit {
        let ops = self
            .ops
            .iter()
            .rev()
            .map(|op| Op {
                kind: op.kind,
                targets: op.targets.clone(),
                angle: match op.angle {
                    Angle::None => Angle::None,
                    Angle::Fixed(a) => Angle::Fixed(-a),
                    Angle::Param { slot, scale } => Angle::Param {
                        slot,
                        scale: -scale,
                    },
                },
            })
            .collect();
        Circuit {
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            ops,
        }
    }

    /// Runs the circuit on a pure state in place.
    pub fn apply_to(&self, params: &[f64], state: &mut Statevector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: state.n_qubits(),
            });
        }
        for gate in self.bind(params)? {
            gate.apply_raw(state.amplitudes_mut());
        }
        Ok(())
    }

    /// `U(θ)|0…0⟩`.
    pub fn prepare(&self, params: &[f64]) -> Result<Statevector> {
        let mut sv = Statevector::zero(self.n_qubits)?;
        self.apply_to(params, &mut sv)?;
        Ok(sv)
    }
}

/// Applies the circuit to `initial`. With a noise model every gate is
/// followed by a depolarizing channel on its targets (`p1` or `p2`), which
/// requires the density-matrix backend.
pub fn run_circuit(
    circuit: &Circuit,
    params: &[f64],
    initial: QuantumState,
    noise: Option<&NoiseModel>,
) -> Result<QuantumState> {
    if initial.n_qubits() != circuit.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_qubits(),
            got: initial.n_qubits(),
        });
    }
    let gates = circuit.bind(params)?;
    match (initial, noise) {
        (QuantumState::Pure(_), Some(_)) => Err(Error::NoiseOnPureState),
        (QuantumState::Pure(mut sv), None) => {
            for g in &gates {
                g.apply_raw(sv.amplitudes_mut());
            }
            Ok(QuantumState::Pure(sv))
        }
        (QuantumState::Mixed(mut rho), noise) => {
            if let Some(nm) = noise {
                nm.validate()?;
            }
            for g in &gates {
                rho.apply(g)?;
                if let Some(nm) = noise {
                    nm.after_gate(&mut rho, g)?;
                }
            }
            Ok(QuantumState::Mixed(rho))
        }
    }
}

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Rxx,
    Cnot,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            GateKind::Rxx | GateKind::Cnot => 2,
        }
    }

    /// Rotations `exp(-iθ/2 P)` for a Pauli string `P`.
    pub fn is_rotation(self) -> bool {
        !matches!(self, GateKind::Cnot)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Rxx => "RXX",
            GateKind::Cnot => "CNOT",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A concrete gate with bound angle.
///
/// Rotations follow the half-angle convention `R_P(θ) = exp(-iθ/2 P)`. For
/// CNOT the first target is the control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    kind: GateKind,
    targets: [usize; 2],
    angle: f64,
}

impl Gate {
    pub fn new(kind: GateKind, targets: &[usize], angle: Option<f64>) -> Result<Self> {
        let arity = kind.arity();
        if targets.len() != arity || (arity == 2 && targets[0] == targets[1]) {
            return Err(Error::InvalidTargets {
                kind: kind.name(),
                expected: arity,
                targets: targets.to_vec(),
            });
        }
        let angle = match (kind.is_rotation(), angle) {
            (true, Some(a)) if a.is_finite() => a,
            (true, Some(a)) => return Err(Error::NonFiniteAngle(a)),
            (true, None) => {
                return Err(Error::InvalidArgument(format!(
                    "{kind} gate needs an angle"
                )))
            }
            (false, None) => 0.0,
            (false, Some(_)) => {
                return Err(Error::InvalidArgument(format!(
                    "{kind} gate takes no angle"
                )))
            }
        };
        let second = if arity == 2 { targets[1] } else { targets[0] };
        Ok(Self {
            kind,
            targets: [targets[0], second],
            angle,
        })
    }

    pub fn rx(q: usize, theta: f64) -> Result<Self> {
        Self::new(GateKind::Rx, &[q], Some(theta))
    }

    pub fn ry(q: usize, theta: f64) -> Result<Self> {
        Self::new(GateKind::Ry, &[q], Some(theta))
    }

    pub fn rz(q: usize, theta: f64) -> Result<Self> {
        Self::new(GateKind::Rz, &[q], Some(theta))
    }

    pub fn rxx(a: usize, b: usize, theta: f64) -> Result<Self> {
        Self::new(GateKind::Rxx, &[a, b], Some(theta))
    }

    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        Self::new(GateKind::Cnot, &[control, target], None)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets[..self.kind.arity()]
    }

    pub fn angle(&self) -> Option<f64> {
        self.kind.is_rotation().then_some(self.angle)
    }

    pub fn max_target(&self) -> usize {
        self.targets().iter().copied().max().unwrap_or(0)
    }

    pub fn check_register(&self, n_qubits: usize) -> Result<()> {
        match self.targets().iter().find(|&&q| q >= n_qubits) {
            Some(&qubit) => Err(Error::QubitOutOfRange { qubit, n_qubits }),
            None => Ok(()),
        }
    }

    /// `U†`: negated angle for rotations, CNOT is self-inverse.
    pub fn inverse(&self) -> Self {
        let mut g = self.clone();
        g.angle = -g.angle;
        g
    }

    /// Elementwise complex conjugate `U*`.
    pub fn conjugate(&self) -> Self {
        match self.kind {
            GateKind::Ry | GateKind::Cnot => self.clone(),
            _ => self.inverse(),
        }
    }

    pub(crate) fn shifted(&self, offset: usize) -> Self {
        let mut g = self.clone();
        g.targets[0] += offset;
        g.targets[1] += offset;
        g
    }

    /// Applies the gate in place to a raw amplitude vector. Targets are not
    /// range-checked here.
    pub(crate) fn apply_raw(&self, amps: &mut [Complex64]) {
        let (s, c) = (self.angle / 2.0).sin_cos();
        match self.kind {
            GateKind::Rx => {
                let m = [
                    [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                    [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
                ];
                apply_single(amps, self.targets[0], &m);
            }
            GateKind::Ry => {
                let m = [
                    [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
                ];
                apply_single(amps, self.targets[0], &m);
            }
            GateKind::Rz => apply_phase(amps, self.targets[0], Complex64::new(c, -s)),
            GateKind::Rxx => apply_rxx(amps, self.targets[0], self.targets[1], c, s),
            GateKind::Cnot => apply_cnot(amps, self.targets[0], self.targets[1]),
        }
    }

    /// Applies `(-i/2) P` where `P` is the generator of this rotation. Used by
    /// the adjoint gradient sweep.
    pub(crate) fn apply_generator(&self, amps: &mut [Complex64]) {
        let half = Complex64::new(0.0, -0.5);
        match self.kind {
            GateKind::Rx => {
                let m = [[ZERO, half], [half, ZERO]];
                apply_single(amps, self.targets[0], &m);
            }
            GateKind::Ry => {
                // Y = [[0, -i], [i, 0]]
                let m = [
                    [ZERO, Complex64::new(-0.5, 0.0)],
                    [Complex64::new(0.5, 0.0), ZERO],
                ];
                apply_single(amps, self.targets[0], &m);
            }
            GateKind::Rz => {
                let bit = 1usize << self.targets[0];
                for (i, a) in amps.iter_mut().enumerate() {
                    *a *= if i & bit == 0 { half } else { -half };
                }
            }
            GateKind::Rxx => {
                let mask = (1usize << self.targets[0]) | (1usize << self.targets[1]);
                for i in 0..amps.len() {
                    let j = i ^ mask;
                    if i < j {
                        let (ai, aj) = (amps[i], amps[j]);
                        amps[i] = half * aj;
                        amps[j] = half * ai;
                    }
                }
            }
            GateKind::Cnot => unreachable!("CNOT has no generator"),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GateKind::Cnot => write!(f, "CNOT({}, {})", self.targets[0], self.targets[1]),
            GateKind::Rxx => write!(
                f,
                "RXX({}, {}; {:.6})",
                self.targets[0], self.targets[1], self.angle
            ),
            k => write!(f, "{k}({}; {:.6})", self.targets[0], self.angle),
        }
    }
}

fn apply_single(amps: &mut [Complex64], q: usize, m: &[[Complex64; 2]; 2]) {
    let bit = 1usize << q;
    for block in (0..amps.len()).step_by(bit << 1) {
        for i in block..block + bit {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

/// diag(phase, conj(phase)) on qubit `q`.
fn apply_phase(amps: &mut [Complex64], q: usize, phase: Complex64) {
    let bit = 1usize << q;
    let conj = phase.conj();
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= if i & bit == 0 { phase } else { conj };
    }
}

fn apply_rxx(amps: &mut [Complex64], a: usize, b: usize, c: f64, s: f64) {
    let mask = (1usize << a) | (1usize << b);
    let ms = Complex64::new(0.0, -s);
    for i in 0..amps.len() {
        let j = i ^ mask;
        if i < j {
            let (ai, aj) = (amps[i], amps[j]);
            amps[i] = ai * c + ms * aj;
            amps[j] = aj * c + ms * ai;
        }
    }
}

fn apply_cnot(amps: &mut [Complex64], control: usize, target: usize) {
    let (cbit, tbit) = (1usize << control, 1usize << target);
    for i in 0..amps.len() {
        if i & cbit != 0 && i & tbit == 0 {
            amps.swap(i, i | tbit);
        }
    }
}

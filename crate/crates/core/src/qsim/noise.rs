use serde::{Deserialize, Serialize};

use super::density::DensityMatrix;
use super::gate::Gate;
use crate::{Error, Result};

/// Parametric device noise: depolarizing after every gate plus symmetric
/// per-qubit readout flips.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Depolarizing probability after single-qubit gates.
    pub p1: f64,
    /// Two-qubit depolarizing probability after two-qubit gates.
    pub p2: f64,
    /// P(read 1 | prepared 0).
    pub readout_01: f64,
    /// P(read 0 | prepared 1).
    pub readout_10: f64,
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, readout_01: f64, readout_10: f64) -> Result<Self> {
        let nm = Self {
            p1,
            p2,
            readout_01,
            readout_10,
        };
        nm.validate()?;
        Ok(nm)
    }

    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("readout_01", self.readout_01),
            ("readout_10", self.readout_10),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        Ok(())
    }

    pub fn has_readout_error(&self) -> bool {
        self.readout_01 > 0.0 || self.readout_10 > 0.0
    }

    pub(crate) fn after_gate(&self, rho: &mut DensityMatrix, gate: &Gate) -> Result<()> {
        let p = if gate.targets().len() == 1 {
            self.p1
        } else {
            self.p2
        };
        rho.depolarize(gate.targets(), p)
    }

    /// Column-stochastic confusion matrix `A[measured][prepared]` of one qubit.
    pub fn confusion(&self) -> [[f64; 2]; 2] {
        [
            [1.0 - self.readout_01, self.readout_10],
            [self.readout_01, 1.0 - self.readout_10],
        ]
    }

    /// Pushes a probability vector through the readout channel of every qubit.
    pub fn apply_readout(&self, probs: &mut [f64]) {
        if self.has_readout_error() {
            apply_per_qubit(probs, &self.confusion());
        }
    }
}

/// Applies the same 2×2 matrix to every qubit of a length-`2^n` vector.
pub(crate) fn apply_per_qubit(v: &mut [f64], m: &[[f64; 2]; 2]) {
    let mut bit = 1usize;
    while bit < v.len() {
        for block in (0..v.len()).step_by(bit << 1) {
            for i in block..block + bit {
                let (a0, a1) = (v[i], v[i | bit]);
                v[i] = m[0][0] * a0 + m[0][1] * a1;
                v[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        bit <<= 1;
    }
}

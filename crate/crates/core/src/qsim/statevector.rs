use nalgebra::DMatrix;
use num_complex::Complex64;

use super::gate::Gate;
use crate::{Error, Result};

/// Largest register the pure-state backend accepts.
pub const MAX_PURE_QUBITS: usize = 24;

const NORM_TOLERANCE: f64 = 1e-10;

/// Pure state on `n_qubits` qubits. Qubit 0 is the least significant bit of
/// the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes; fails unless the length is `2^n` and the norm is
    /// one within `1e-10`.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_len(amps.len())?;
        check_size(n_qubits)?;
        let sv = Self { n_qubits, amps };
        let norm = sv.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(sv)
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized(norm * norm));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(amps)
    }

    /// Builds a state without the normalization check. Used for raw
    /// intermediate vectors such as `H|ψ⟩`.
    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`; insensitive to global phase.
    pub fn fidelity(&self, other: &Statevector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.check_register(self.n_qubits)?;
        gate.apply_raw(&mut self.amps);
        Ok(())
    }

    /// Reorders qubits so that new qubit `k` is old qubit `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.n_qubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (old, a) in self.amps.iter().enumerate() {
            let new = order
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, &q)| acc | (((old >> q) & 1) << k));
            amps[new] = *a;
        }
        Ok(Self::from_raw(self.n_qubits, amps))
    }

    /// The amplitudes as a `2^m × 2^(n-m)` matrix whose row index is the
    /// low `m` qubits and whose column index is the remaining qubits.
    pub fn split_matrix(&self, m: usize) -> Result<DMatrix<Complex64>> {
        if m == 0 || m > self.n_qubits {
            return Err(Error::SubsystemOutOfRange {
                m,
                n: self.n_qubits,
            });
        }
        let rows = 1usize << m;
        let cols = 1usize << (self.n_qubits - m);
        // column-major storage: entry (r, c) sits at c*rows + r, which is
        // exactly the basis index with r in the low bits.
        Ok(DMatrix::from_column_slice(rows, cols, &self.amps))
    }
}

pub(crate) fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument(
            "register needs at least one qubit".into(),
        ));
    }
    if n_qubits > MAX_PURE_QUBITS {
        return Err(Error::SizeCap {
            n_qubits,
            limit: MAX_PURE_QUBITS,
        });
    }
    Ok(())
}

pub(crate) fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::DimensionMismatch {
            expected: len.next_power_of_two().max(2),
            got: len,
        });
    }
    Ok(len.trailing_zeros() as usize)
}

pub(crate) fn check_permutation(order: &[usize], n_qubits: usize) -> Result<()> {
    if order.len() != n_qubits {
        return Err(Error::DimensionMismatch {
            expected: n_qubits,
            got: order.len(),
        });
    }
    let mut seen = vec![false; n_qubits];
    for &q in order {
        if q >= n_qubits || seen[q] {
            return Err(Error::InvalidArgument(format!(
                "{order:?} is not a permutation of {n_qubits} qubits"
            )));
        }
        seen[q] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rxx_on_zero_state() {
        let theta = 0.8;
        let mut sv = Statevector::zero(2).unwrap();
        sv.apply(&Gate::rxx(0, 1, theta).unwrap()).unwrap();
        let a = sv.amplitudes();
        assert!((a[0] - c((theta / 2.0).cos(), 0.0)).norm() < 1e-14);
        assert!((a[3] - c(0.0, -(theta / 2.0).sin())).norm() < 1e-14);
        assert!(a[1].norm() < 1e-14 && a[2].norm() < 1e-14);
    }

    #[test]
    fn cnot_truth_table() {
        // |01⟩ with qubit 0 set is basis index 1; CNOT(0→1) gives |11⟩.
        let mut sv = Statevector::basis(2, 1).unwrap();
        sv.apply(&Gate::cnot(0, 1).unwrap()).unwrap();
        assert_eq!(sv.probabilities(), vec![0.0, 0.0, 0.0, 1.0]);
        let mut sv = Statevector::basis(2, 2).unwrap();
        sv.apply(&Gate::cnot(0, 1).unwrap()).unwrap();
        assert_eq!(sv.probabilities(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn ry_pi_flips() {
        let mut sv = Statevector::zero(1).unwrap();
        sv.apply(&Gate::ry(0, PI).unwrap()).unwrap();
        assert!((sv.probabilities()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn out_of_range_target_is_rejected() {
        let mut sv = Statevector::zero(2).unwrap();
        assert!(matches!(
            sv.apply(&Gate::rx(2, 0.1).unwrap()),
            Err(Error::QubitOutOfRange { qubit: 2, .. })
        ));
    }

    #[test]
    fn amplitude_validation() {
        assert!(Statevector::from_amplitudes(vec![c(1.0, 0.0); 3]).is_err());
        assert!(matches!(
            Statevector::from_amplitudes(vec![c(1.0, 0.0); 2]),
            Err(Error::NotNormalized(_))
        ));
        let s = 0.5f64.sqrt();
        assert!(Statevector::from_amplitudes(vec![c(s, 0.0), c(0.0, s)]).is_ok());
    }

    #[test]
    fn permutation_moves_bits() {
        // basis index 0b001 (qubit 0 set) -> with order [2,0,1], new qubit 1 is old qubit 0
        let sv = Statevector::basis(3, 0b001).unwrap();
        let p = sv.permuted(&[2, 0, 1]).unwrap();
        assert!((p.probabilities()[0b010] - 1.0).abs() < 1e-15);
        assert!(sv.permuted(&[0, 0, 1]).is_err());
    }
}

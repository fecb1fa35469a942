use nalgebra::DMatrix;
use num_complex::Complex64;

use super::gate::Gate;
use super::statevector::{qubits_for_len, Statevector};
use crate::{Error, Result};

/// Largest register the density-matrix backend accepts.
pub const MAX_MIXED_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Mixed state stored row-major as `dim × dim` entries.
///
/// Viewed as a vector of length `dim²`, the row index occupies the high `n`
/// bits and the column index the low `n` bits, so `U ρ U†` is `U` on qubit
/// `q + n` followed by `U*` on qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::from_statevector(&Statevector::zero(n_qubits)?)
    }

    pub fn from_statevector(sv: &Statevector) -> Result<Self> {
        check_size(sv.n_qubits())?;
        let amps = sv.amplitudes();
        let data = amps
            .iter()
            .flat_map(|r| amps.iter().map(move |c| r * c.conj()))
            .collect();
        Ok(Self {
            n_qubits: sv.n_qubits(),
            data,
        })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(Self { n_qubits, data })
    }

    /// Validates trace, Hermiticity and positivity (eigenvalues ≥ −1e-10).
    pub fn from_matrix(m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let n_qubits = qubits_for_len(m.nrows())?;
        check_size(n_qubits)?;
        let dim = m.nrows();
        let data = (0..dim)
            .flat_map(|r| (0..dim).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)])
            .collect();
        let rho = Self { n_qubits, data };
        let residue = rho.hermiticity_residue();
        if residue > 1e-10 {
            return Err(Error::NotHermitian(residue));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(tr));
        }
        if let Some(&low) = rho.eigenvalues().iter().find(|&&l| l < -1e-10) {
            return Err(Error::InvalidArgument(format!(
                "density matrix has negative eigenvalue {low:e}"
            )));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(n_qubits: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), 1 << (2 * n_qubits));
        Self { n_qubits, data }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i).re).sum()
    }

    /// max |ρ − ρ†| entry.
    pub fn hermiticity_residue(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        DMatrix::from_row_slice(dim, dim, &self.data)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_part(&self.to_matrix())
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.check_register(self.n_qubits)?;
        gate.shifted(self.n_qubits).apply_raw(&mut self.data);
        gate.conjugate().apply_raw(&mut self.data);
        Ok(())
    }

    /// Depolarizing channel on `qubits`:
    /// `ρ → (1−p) ρ + p · I/d ⊗ tr_qubits(ρ)` with `d = 2^|qubits|`.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability {
                name: "depolarizing p",
                value: p,
            });
        }
        if let Some(&qubit) = qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        if p == 0.0 || qubits.is_empty() {
            return Ok(());
        }
        let dim = self.dim();
        let mask = qubits.iter().fold(0usize, |m, &q| m | (1 << q));
        let sub_dim = 1usize << qubits.len();
        // enumerate assignments of the masked bits
        let patterns: Vec<usize> = (0..sub_dim)
            .map(|k| {
                qubits
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (b, &q)| acc | (((k >> b) & 1) << q))
            })
            .collect();
        let old = self.data.clone();
        let weight = p / sub_dim as f64;
        for r in 0..dim {
            for c in 0..dim {
                let mut v = old[r * dim + c] * (1.0 - p);
                if r & mask == c & mask {
                    let (rb, cb) = (r & !mask, c & !mask);
                    let traced: Complex64 = patterns
                        .iter()
                        .map(|&pt| old[(rb | pt) * dim + (cb | pt)])
                        .sum();
                    v += traced * weight;
                }
                self.data[r * dim + c] = v;
            }
        }
        Ok(())
    }
}

pub(crate) fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_MIXED_QUBITS {
        return Err(Error::SizeCap {
            n_qubits,
            limit: MAX_MIXED_QUBITS,
        });
    }
    Ok(())
}

/// `(A + A†)/2`.
pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

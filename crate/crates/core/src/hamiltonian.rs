//! Pauli-sum operators, transverse-field Ising builders and exact dynamics.
//!
//! Units have `ħ = 1`. Dense diagonalization is capped at
//! [`MAX_DENSE_QUBITS`].

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qsim::{hermitian_part, QuantumState, Statevector};
use crate::{Error, Result};

pub const MAX_DENSE_QUBITS: usize = 12;

const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis; `letters[q]` acts on qubit `q`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        Self {
            letters: vec![Pauli::I; n_qubits],
        }
    }

    pub fn from_letters(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    /// Places the given Paulis on the given qubits.
    pub fn from_sparse(n_qubits: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n_qubits);
        for &(q, p) in factors {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
            }
            s.letters[q] = p;
        }
        Ok(s)
    }

    /// Parses a label written with qubit 0 rightmost, e.g. `"ZI"` is `Z` on
    /// qubit 1.
    pub fn parse(label: &str) -> Result<Self> {
        let letters = label
            .chars()
            .rev()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidArgument(format!(
                    "bad Pauli letter {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { letters })
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    /// Non-identity factors as `(qubit, Pauli)`.
    pub fn support(&self) -> Vec<(usize, Pauli)> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(q, p)| (q, *p))
            .collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.letters
            .iter()
            .all(|p| matches!(p, Pauli::I | Pauli::Z))
    }

    /// Bit masks: `P|b⟩ = i^{#Y} (−1)^{popcount(b & z)} |b ⊕ x⟩`.
    fn masks(&self) -> (usize, usize, u32) {
        let mut x = 0usize;
        let mut z = 0usize;
        let mut ny = 0u32;
        for (q, p) in self.letters.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => x |= 1 << q,
                Pauli::Z => z |= 1 << q,
                Pauli::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.letters
            .iter()
            .rev()
            .try_for_each(|p| write!(f, "{}", p.symbol()))
    }
}

#[derive(Clone, Copy)]
struct CompiledTerm {
    coeff: f64,
    x: usize,
    z: usize,
    phase: Complex64,
}

impl CompiledTerm {
    #[inline]
    fn sign(&self, b: usize) -> f64 {
        if (b & self.z).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Hermitian operator `Σ c_k P_k` with real coefficients. Strings are kept
/// canonical: duplicates are merged on insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn add_term(&mut self, coeff: f64, string: PauliString) -> Result<()> {
        if string.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: string.n_qubits(),
            });
        }
        if !coeff.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite coefficient {coeff}"
            )));
        }
        *self.terms.entry(string).or_insert(0.0) += coeff;
        Ok(())
    }

    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (f64, PauliString)>,
    ) -> Result<Self> {
        let mut op = Self::zero(n_qubits);
        for (c, s) in terms {
            op.add_term(c, s)?;
        }
        Ok(op)
    }

    pub fn terms(&self) -> impl Iterator<Item = (f64, &PauliString)> {
        self.terms.iter().map(|(s, &c)| (c, s))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, string: &PauliString) -> f64 {
        self.terms.get(string).copied().unwrap_or(0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(PauliString::is_diagonal)
    }

    /// Moves the operator onto a larger register, qubit `k` going to
    /// `sites[k]`.
    pub fn embed(&self, n_qubits: usize, sites: &[usize]) -> Result<PauliSum> {
        if sites.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: sites.len(),
            });
        }
        let mut out = PauliSum::zero(n_qubits);
        for (c, s) in self.terms() {
            let factors: Vec<(usize, Pauli)> = s
                .support()
                .into_iter()
                .map(|(q, p)| (sites[q], p))
                .collect();
            out.add_term(c, PauliString::from_sparse(n_qubits, &factors)?)?;
        }
        Ok(out)
    }

    fn compiled(&self) -> Vec<CompiledTerm> {
        self.terms()
            .map(|(coeff, s)| {
                let (x, z, ny) = s.masks();
                CompiledTerm {
                    coeff,
                    x,
                    z,
                    phase: I_UNIT.powu(ny),
                }
            })
            .collect()
    }

    fn check_dim(&self, n_qubits: usize) -> Result<()> {
        if n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: n_qubits,
            });
        }
        Ok(())
    }

    /// `H|ψ⟩` as raw amplitudes.
    pub fn apply(&self, amps: &[Complex64]) -> Result<Vec<Complex64>> {
        if amps.len() != 1usize << self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n_qubits,
                got: amps.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for t in self.compiled() {
            for (b, a) in amps.iter().enumerate() {
                out[b ^ t.x] += t.phase * (t.coeff * t.sign(b)) * a;
            }
        }
        Ok(out)
    }

    /// Diagonal entries; only meaningful for diagonal operators.
    pub fn diagonal(&self) -> Vec<f64> {
        let dim = 1usize << self.n_qubits;
        let terms = self.compiled();
        (0..dim)
            .map(|b| {
                terms
                    .iter()
                    .filter(|t| t.x == 0)
                    .map(|t| t.coeff * t.sign(b) * t.phase.re)
                    .sum()
            })
            .collect()
    }

    /// Real expectation value; the imaginary residue is discarded.
    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        self.check_dim(state.n_qubits())?;
        let terms = self.compiled();
        let value: Complex64 = match state {
            QuantumState::Pure(sv) => {
                let amps = sv.amplitudes();
                terms
                    .iter()
                    .map(|t| {
                        amps.iter()
                            .enumerate()
                            .map(|(b, a)| amps[b ^ t.x].conj() * a * t.sign(b))
                            .sum::<Complex64>()
                            * t.phase
                            * t.coeff
                    })
                    .sum()
            }
            QuantumState::Mixed(rho) => terms
                .iter()
                .map(|t| {
                    // tr(Pρ) = Σ_b phase(b) ρ[b, b⊕x]
                    (0..rho.dim())
                        .map(|b| rho.get(b, b ^ t.x) * t.sign(b))
                        .sum::<Complex64>()
                        * t.phase
                        * t.coeff
                })
                .sum(),
        };
        Ok(value.re)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for t in self.compiled() {
            for b in 0..dim {
                m[(b ^ t.x, b)] += t.phase * (t.coeff * t.sign(b));
            }
        }
        Ok(m)
    }
}

fn check_dense(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::SizeCap {
            n_qubits,
            limit: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// Battery Hamiltonian `−h Σ_i Z_i`.
pub fn build_h0(n: usize, h: f64) -> Result<PauliSum> {
    if n == 0 {
        return Err(Error::InvalidArgument("H0 needs at least one site".into()));
    }
    let mut op = PauliSum::zero(n);
    for q in 0..n {
        op.add_term(-h, PauliString::from_sparse(n, &[(q, Pauli::Z)])?)?;
    }
    Ok(op)
}

/// Open-chain transverse-field Ising model
/// `−h Σ_i Z_i − J Σ_i X_i X_{i+1}`. With `h = 0` only the coupling
/// remains; zero-coefficient field terms are omitted.
pub fn build_h1_tfim(n: usize, h: f64, j: f64) -> Result<PauliSum> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Ising chain needs at least two sites, got {n}"
        )));
    }
    let mut op = PauliSum::zero(n);
    if h != 0.0 {
        for q in 0..n {
            op.add_term(-h, PauliString::from_sparse(n, &[(q, Pauli::Z)])?)?;
        }
    }
    if j != 0.0 {
        for q in 0..n - 1 {
            op.add_term(
                -j,
                PauliString::from_sparse(n, &[(q, Pauli::X), (q + 1, Pauli::X)])?,
            )?;
        }
    }
    Ok(op)
}

/// Ascending eigenvalues with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let d = DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)),
        );
        &self.eigenvectors * DMatrix::from_diagonal(&d) * self.eigenvectors.adjoint()
    }

    /// `Σ_j ⟨Φ_j|ψ⟩ e^{−iE_j t} |Φ_j⟩`.
    pub fn evolve(&self, initial: &Statevector, t: f64) -> Result<Statevector> {
        if initial.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: initial.dim(),
            });
        }
        let psi = DVector::from_column_slice(initial.amplitudes());
        let mut overlaps = self.eigenvectors.adjoint() * psi;
        for (c, &e) in overlaps.iter_mut().zip(&self.eigenvalues) {
            *c *= Complex64::from_polar(1.0, -e * t);
        }
        let out = &self.eigenvectors * overlaps;
        Ok(Statevector::from_raw(
            initial.n_qubits(),
            out.iter().copied().collect(),
        ))
    }
}

/// Full spectrum of a Hermitian operator. Diagonal operators skip the dense
/// eigensolver; their eigenvectors are basis vectors.
pub fn diagonalize(op: &PauliSum) -> Result<Spectrum> {
    check_dense(op.n_qubits())?;
    let dim = 1usize << op.n_qubits();
    if op.is_diagonal() {
        let diag = op.diagonal();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
        let mut vecs = DMatrix::zeros(dim, dim);
        for (col, &basis) in order.iter().enumerate() {
            vecs[(basis, col)] = Complex64::new(1.0, 0.0);
        }
        return Ok(Spectrum {
            eigenvalues: order.iter().map(|&b| diag[b]).collect(),
            eigenvectors: vecs,
        });
    }
    Ok(hermitian_eigen(&op.to_dense()?))
}

/// Ascending eigen-decomposition of a Hermitian matrix.
pub(crate) fn hermitian_eigen(m: &DMatrix<Complex64>) -> Spectrum {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// `exp(−iHt)|ψ⟩` through the spectral decomposition of `op`.
pub fn evolve_exact(initial: &Statevector, op: &PauliSum, t: f64) -> Result<Statevector> {
    if initial.n_qubits() != op.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: op.n_qubits(),
            got: initial.n_qubits(),
        });
    }
    diagonalize(op)?.evolve(initial, t)
}

/// `⟨ψ|H|ψ⟩` or `tr(Hρ)`.
pub fn expectation(op: &PauliSum, state: &QuantumState) -> Result<f64> {
    op.expectation(state)
}

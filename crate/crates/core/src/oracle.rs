//! Exact work, ergotropy and passive-state data from full statevectors.
//!
//! Subsystems are prefixes of the chain: `M` kept cells are qubits
//! `0..M`. Everything here is classical linear algebra, so it serves as the
//! reference for the variational estimates in [`crate::vqergo`].

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{hermitian_eigen, Pauli, PauliString, PauliSum, Spectrum};
use crate::qsim::{partial_trace, DensityMatrix, QuantumState, Statevector};
use crate::{Complex64, Error, Result};

const CLIP: f64 = 1e-10;

/// Reduced state of the first `m` qubits.
pub fn reduced_state(full: &Statevector, m: usize) -> Result<DensityMatrix> {
    check_m(m, full.n_qubits())?;
    let keep: Vec<usize> = (0..m).collect();
    partial_trace(&QuantumState::Pure(full.clone()), &keep)
}

fn check_m(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::SubsystemOutOfRange { m, n });
    }
    Ok(())
}

/// Spectral data entering the passive-state energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassiveDecomposition {
    /// Eigenvalues of ρ, descending.
    pub lambdas: Vec<f64>,
    /// Eigenvalues of the local Hamiltonian, ascending.
    pub epsilons: Vec<f64>,
    /// Occupation of the `i`-th Hamiltonian eigenvector: `Σ_j λ_j |⟨φ_j|ψ_i⟩|²`.
    pub p: Vec<f64>,
}

impl PassiveDecomposition {
    /// `tr(Hρ) = Σ p_i ε_i`.
    pub fn mean_energy(&self) -> f64 {
        dot(&self.p, &self.epsilons)
    }

    /// `Σ λ_i ε_i`, the energy of the passive state.
    pub fn passive_energy(&self) -> f64 {
        dot(&self.lambdas, &self.epsilons)
    }

    /// `Σ (p_i − λ_i) ε_i`.
    pub fn ergotropy(&self) -> f64 {
        self.p
            .iter()
            .zip(&self.lambdas)
            .zip(&self.epsilons)
            .map(|((p, l), e)| (p - l) * e)
            .sum()
    }

    /// Sums `p` and `λ` over blocks of degenerate `ε`, which makes them
    /// independent of the eigenbasis chosen inside each block.
    pub fn block_sums(&self, tol: f64) -> Vec<(f64, f64, f64)> {
        let mut out: Vec<(f64, f64, f64)> = Vec::new();
        for ((&e, &p), &l) in self.epsilons.iter().zip(&self.p).zip(&self.lambdas) {
            match out.last_mut() {
                Some(last) if (e - last.0).abs() <= tol => {
                    last.1 += p;
                    last.2 += l;
                }
                _ => out.push((e, p, l)),
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn clip(mut values: Vec<f64>) -> Vec<f64> {
    for v in &mut values {
        if (-CLIP..0.0).contains(v) {
            *v = 0.0;
        }
    }
    values
}

fn descending(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Diagonalizes ρ and the local Hamiltonian and projects one onto the other.
pub fn passive_decomposition(rho: &DensityMatrix, h0m: &PauliSum) -> Result<PassiveDecomposition> {
    if rho.n_qubits() != h0m.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: h0m.n_qubits(),
            got: rho.n_qubits(),
        });
    }
    let residue = rho.hermiticity_residue();
    if residue > 1e-8 {
        return Err(Error::NotHermitian(residue));
    }
    let rho_eig = hermitian_eigen(&rho.to_matrix());
    let h_eig = crate::hamiltonian::diagonalize(h0m)?;
    let overlaps = h_eig.eigenvectors().adjoint() * rho_eig.eigenvectors();
    let lambdas_raw = clip(rho_eig.eigenvalues().to_vec());
    let p = (0..h_eig.dim())
        .map(|i| {
            (0..rho_eig.dim())
                .map(|j| lambdas_raw[j] * overlaps[(i, j)].norm_sqr())
                .sum()
        })
        .collect();
    Ok(PassiveDecomposition {
        lambdas: descending(lambdas_raw),
        epsilons: h_eig.eigenvalues().to_vec(),
        p: clip(p),
    })
}

/// `Σ_i λ_i |ψ_i⟩⟨ψ_i|`: the minimum-energy state unitarily reachable from ρ.
pub fn passive_state(rho: &DensityMatrix, h0m: &PauliSum) -> Result<DensityMatrix> {
    let dec = passive_decomposition(rho, h0m)?;
    let h_eig = crate::hamiltonian::diagonalize(h0m)?;
    let dim = h_eig.dim();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (i, &l) in dec.lambdas.iter().enumerate() {
        let v = h_eig.eigenvectors().column(i);
        m += v * v.adjoint() * Complex64::new(l, 0.0);
    }
    DensityMatrix::from_matrix(&m)
}

/// Eigenvalues of the reduced state on the first `m` qubits, descending,
/// padded with zeros to `2^m`. Computed from the smaller Gram matrix of the
/// Schmidt split, which avoids building ρ when `m` is large.
pub fn schmidt_spectrum(full: &Statevector, m: usize) -> Result<Vec<f64>> {
    check_m(m, full.n_qubits())?;
    let a = full.split_matrix(m)?;
    let gram = if a.nrows() <= a.ncols() {
        &a * a.adjoint()
    } else {
        a.adjoint() * &a
    };
    let mut lambdas = clip(hermitian_eigen(&gram).eigenvalues().to_vec());
    lambdas.resize(1 << m, 0.0);
    Ok(descending(lambdas))
}

/// How an [`ErgotropyRecord`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    StatevectorVq,
    ShotsVq,
    NoisyVq,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::StatevectorVq => "statevector-vq",
            Method::ShotsVq => "shots-vq",
            Method::NoisyVq => "noisy-vq",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Method::Exact,
            Method::StatevectorVq,
            Method::ShotsVq,
            Method::NoisyVq,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgotropyRecord {
    pub t: f64,
    pub m: usize,
    pub work: f64,
    pub ergotropy: f64,
    /// `ergotropy / work`; `None` when no work was stored.
    pub efficiency: Option<f64>,
    pub method: Method,
    pub depth: Option<usize>,
    pub seed: Option<u64>,
    /// `tr(H0^M ρ^M)`.
    pub e_mean: f64,
    /// Passive energy, exact or variational.
    pub e_pass: f64,
}

/// `ℰ/W`, undefined when `W ≤ 1e-12`.
pub fn efficiency(ergotropy: f64, work: f64) -> Option<f64> {
    (work > 1e-12).then(|| ergotropy / work)
}

/// Exact record for the first `m` qubits of `full` at charging time `t`.
///
/// `h0m` is the local Hamiltonian on `m` qubits; the reference energy of the
/// work is its value on `|0…0⟩`.
pub fn ergotropy_exact(
    t: f64,
    full: &Statevector,
    m: usize,
    h0m: &PauliSum,
) -> Result<ErgotropyRecord> {
    let dec = exact_decomposition(full, m, h0m)?;
    let e_mean = dec.mean_energy();
    let e_pass = dec.passive_energy();
    let work = e_mean - zero_state_energy(h0m)?;
    let ergotropy = e_mean - e_pass;
    Ok(ErgotropyRecord {
        t,
        m,
        work,
        ergotropy,
        efficiency: efficiency(ergotropy, work),
        method: Method::Exact,
        depth: None,
        seed: None,
        e_mean,
        e_pass,
    })
}

/// Passive decomposition of the reduced state on the first `m` qubits.
/// Diagonal Hamiltonians use the Schmidt spectrum and the marginal
/// distribution; anything else goes through the dense route.
pub fn exact_decomposition(
    full: &Statevector,
    m: usize,
    h0m: &PauliSum,
) -> Result<PassiveDecomposition> {
    check_m(m, full.n_qubits())?;
    if h0m.n_qubits() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: h0m.n_qubits(),
        });
    }
    if !h0m.is_diagonal() {
        return passive_decomposition(&reduced_state(full, m)?, h0m);
    }
    let diag = h0m.diagonal();
    let mask = (1usize << m) - 1;
    let mut marginal = vec![0.0; 1 << m];
    for (b, a) in full.amplitudes().iter().enumerate() {
        marginal[b & mask] += a.norm_sqr();
    }
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    Ok(PassiveDecomposition {
        lambdas: schmidt_spectrum(full, m)?,
        epsilons: order.iter().map(|&i| diag[i]).collect(),
        p: order.iter().map(|&i| marginal[i]).collect(),
    })
}

/// `⟨0…0|H|0…0⟩`.
pub fn zero_state_energy(op: &PauliSum) -> Result<f64> {
    op.expectation(&QuantumState::Pure(Statevector::zero(op.n_qubits())?))
}

/// Measurement axis of a two-point correlator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Z => Pauli::Z,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "X",
            Axis::Z => "Z",
        }
    }
}

/// `|⟨σ_i σ_{i+ℓ}⟩ − ⟨σ_i⟩⟨σ_{i+ℓ}⟩|²` on one axis.
pub fn correlation(full: &Statevector, i: usize, ell: isize, axis: Axis) -> Result<f64> {
    let n = full.n_qubits();
    let j = i as isize + ell;
    if i >= n || j < 0 || j as usize >= n {
        return Err(Error::InvalidArgument(format!(
            "sites ({i}, {j}) out of range for {n} qubits"
        )));
    }
    let j = j as usize;
    let state = QuantumState::Pure(full.clone());
    let p = axis.pauli();
    let single = |q: usize| -> Result<f64> {
        PauliSum::from_terms(n, [(1.0, PauliString::from_sparse(n, &[(q, p)])?)])?
            .expectation(&state)
    };
    let pair = if i == j {
        1.0
    } else {
        PauliSum::from_terms(n, [(1.0, PauliString::from_sparse(n, &[(i, p), (j, p)])?)])?
            .expectation(&state)?
    };
    let connected = pair - single(i)? * single(j)?;
    Ok(connected * connected)
}

/// Closed-form single-cell ergotropy of the field-free RXX charging:
/// zero while `tan²(Jt) ≤ 1`, else `2h(sin²(Jt) − cos²(Jt))`.
pub fn analytic_m1_ergotropy(t: f64, h: f64, j: f64) -> f64 {
    let (s, c) = (j * t).sin_cos();
    let (s2, c2) = (s * s, c * c);
    if s2 <= c2 {
        0.0
    } else {
        2.0 * h * (s2 - c2)
    }
}

/// Quench dynamics of a fixed Hamiltonian from `|0…0⟩`, diagonalized once.
#[derive(Debug, Clone)]
pub struct ExactDynamics {
    n_qubits: usize,
    spectrum: Spectrum,
}

impl ExactDynamics {
    pub fn new(h1: &PauliSum) -> Result<Self> {
        Ok(Self {
            n_qubits: h1.n_qubits(),
            spectrum: crate::hamiltonian::diagonalize(h1)?,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// `exp(−iH t)|0…0⟩`.
    pub fn state_at(&self, t: f64) -> Result<Statevector> {
        self.spectrum.evolve(&Statevector::zero(self.n_qubits)?, t)
    }
}

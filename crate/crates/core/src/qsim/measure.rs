use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::gate::Gate;
use super::noise::{apply_per_qubit, NoiseModel};
use super::QuantumState;
use crate::{Error, Result};

/// Measurement outcomes keyed by basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    n_qubits: usize,
    shots: u64,
    counts: BTreeMap<usize, u64>,
}

impl Counts {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn get(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    /// Looks up a bitstring written with qubit 0 rightmost.
    pub fn get_bitstring(&self, bits: &str) -> u64 {
        usize::from_str_radix(bits, 2).map_or(0, |i| self.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    /// `(bitstring, count)` pairs, qubit 0 rightmost.
    pub fn bitstrings(&self) -> BTreeMap<String, u64> {
        self.iter()
            .map(|(k, v)| (format!("{k:0width$b}", width = self.n_qubits), v))
            .collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let mut f = vec![0.0; 1 << self.n_qubits];
        for (k, v) in self.iter() {
            f[k] = v as f64 / self.shots as f64;
        }
        f
    }

    /// Counts of the qubits listed in `keep` (new qubit `k` is `keep[k]`).
    pub fn marginal(&self, keep: &[usize]) -> Counts {
        let mut counts = BTreeMap::new();
        for (k, v) in self.iter() {
            let idx = keep
                .iter()
                .enumerate()
                .fold(0usize, |acc, (b, &q)| acc | (((k >> q) & 1) << b));
            *counts.entry(idx).or_insert(0) += v;
        }
        Counts {
            n_qubits: keep.len(),
            shots: self.shots,
            counts,
        }
    }
}

/// Samples computational-basis outcomes.
///
/// Optional `basis_rotations` are applied to a copy of the state before
/// measuring; a noise model contributes its readout flips.
pub fn sample_counts<R: Rng + ?Sized>(
    state: &QuantumState,
    shots: u64,
    basis_rotations: Option<&[Gate]>,
    readout: Option<&NoiseModel>,
    rng: &mut R,
) -> Result<Counts> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let mut probs = match basis_rotations {
        Some(gates) if !gates.is_empty() => {
            let mut rotated = state.clone();
            for g in gates {
                rotated.apply(g)?;
            }
            rotated.probabilities()
        }
        _ => state.probabilities(),
    };
    if let Some(nm) = readout {
        nm.validate()?;
        nm.apply_readout(&mut probs);
    }
    Ok(Counts {
        n_qubits: state.n_qubits(),
        shots,
        counts: multinomial(&probs, shots, rng),
    })
}

/// Multinomial draw via sequential conditional binomials.
pub(crate) fn multinomial<R: Rng + ?Sized>(
    probs: &[f64],
    shots: u64,
    rng: &mut R,
) -> BTreeMap<usize, u64> {
    let mut out = BTreeMap::new();
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        if p == 0.0 {
            continue;
        }
        let drawn = if k == last || p >= mass {
            remaining
        } else {
            Binomial::new(remaining, (p / mass).clamp(0.0, 1.0))
                .map(|b| b.sample(rng))
                .unwrap_or(0)
        };
        if drawn > 0 {
            out.insert(k, drawn);
        }
        remaining -= drawn;
        mass -= p;
    }
    out
}

/// Readout mitigation by inverting the tensor product of per-qubit
/// confusion matrices. The result is a quasi-probability vector that sums
/// to one but may contain small negative entries.
pub fn mitigate_readout(counts: &Counts, noise: &NoiseModel) -> Result<Vec<f64>> {
    noise.validate()?;
    let mut freqs = counts.frequencies();
    if !noise.has_readout_error() {
        return Ok(freqs);
    }
    let a = noise.confusion();
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < 1e-12 {
        return Err(Error::SingularCalibration(0));
    }
    let inv = [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ];
    apply_per_qubit(&mut freqs, &inv);
    Ok(freqs)
}

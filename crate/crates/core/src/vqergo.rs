//! Variational ergotropy: mean energy of the charged subsystem, a
//! variational search for its passive energy, and record assembly.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{hardware_efficient, rxx_chain, AnsatzSpec};
use crate::hamiltonian::{build_h0, hermitian_eigen, PauliSum};
use crate::optim::{
    derive_seed, minimize_bfgs, minimize_spsa, parameter_shift_gradient, Differentiable,
    ExpectationObjective, Objective, OptimizationTrace, OptimizerConfig, OptimizerMethod,
};
use crate::oracle::{efficiency, zero_state_energy, ErgotropyRecord, Method};
use crate::pvqd::PvqdTrajectory;
use crate::qsim::{
    check_permutation, mitigate_readout, run_circuit, sample_counts, Circuit, DensityMatrix,
    NoiseModel, QuantumState, Statevector,
};
use crate::{Complex64, Error, Result};

/// Where expectation values come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Backend {
    /// Exact expectation values.
    Statevector,
    /// Computational-basis sampling of the ideal state.
    Shots { shots: u64 },
    /// Density-matrix simulation with gate and readout noise.
    Noisy {
        shots: u64,
        noise: NoiseModel,
        mitigate: bool,
    },
}

impl Backend {
    pub fn method(&self) -> Method {
        match self {
            Backend::Statevector => Method::StatevectorVq,
            Backend::Shots { .. } => Method::ShotsVq,
            Backend::Noisy { .. } => Method::NoisyVq,
        }
    }

    fn shots(&self) -> Option<u64> {
        match *self {
            Backend::Statevector => None,
            Backend::Shots { shots } | Backend::Noisy { shots, .. } => Some(shots),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Backend::Statevector => Ok(()),
            Backend::Shots { shots } => (*shots > 0).then_some(()).ok_or(Error::ZeroShots),
            Backend::Noisy { shots, noise, .. } => {
                noise.validate()?;
                (*shots > 0).then_some(()).ok_or(Error::ZeroShots)
            }
        }
    }
}

/// Charging protocol identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Transverse-field Ising quench integrated by p-VQD.
    TfimPvqd,
    /// Field-free XX coupling, realized exactly by one RXX layer.
    RxxExact,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Charge {
    Circuit { circuit: Circuit, params: Vec<f64> },
    State(Statevector),
}

/// The battery after charging for time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargedState {
    pub charge: Charge,
    pub t: f64,
    pub protocol: Option<Protocol>,
}

impl ChargedState {
    pub fn from_circuit(circuit: Circuit, params: Vec<f64>, t: f64) -> Result<Self> {
        circuit.check_params(&params)?;
        Ok(Self {
            charge: Charge::Circuit { circuit, params },
            t,
            protocol: None,
        })
    }

    pub fn from_state(state: Statevector, t: f64) -> Self {
        Self {
            charge: Charge::State(state),
            t,
            protocol: None,
        }
    }

    /// `RXX(−2Jt)` on every neighbouring pair.
    pub fn rxx(n: usize, j: f64, t: f64) -> Result<Self> {
        let mut s = Self::from_circuit(rxx_chain(n, j, t)?, Vec::new(), t)?;
        s.protocol = Some(Protocol::RxxExact);
        Ok(s)
    }

    /// Replays the stored p-VQD parameters for time `t`.
    pub fn from_trajectory(trajectory: &PvqdTrajectory, t: f64) -> Result<Self> {
        let params = trajectory.params_at(t)?.to_vec();
        let mut s = Self::from_circuit(trajectory.circuit()?, params, t)?;
        s.protocol = Some(Protocol::TfimPvqd);
        Ok(s)
    }

    /// Renumbers qubits so that old qubit `order[k]` becomes qubit `k`.
    /// Subsystems are always prefixes, so this selects which sites are kept.
    pub fn relabeled(&self, order: &[usize]) -> Result<Self> {
        let n = self.n_qubits();
        let charge = match &self.charge {
            Charge::State(sv) => Charge::State(sv.permuted(order)?),
            Charge::Circuit { circuit, params } => {
                check_permutation(order, n)?;
                let mut sites = vec![0; n];
                for (k, &q) in order.iter().enumerate() {
                    sites[q] = k;
                }
                Charge::Circuit {
                    circuit: circuit.remapped(n, &sites)?,
                    params: params.clone(),
                }
            }
        };
        Ok(Self {
            charge,
            t: self.t,
            protocol: self.protocol,
        })
    }

    pub fn n_qubits(&self) -> usize {
        match &self.charge {
            Charge::Circuit { circuit, .. } => circuit.n_qubits(),
            Charge::State(sv) => sv.n_qubits(),
        }
    }

    pub fn statevector(&self) -> Result<Statevector> {
        match &self.charge {
            Charge::Circuit { circuit, params } => circuit.prepare(params),
            Charge::State(sv) => Ok(sv.clone()),
        }
    }

    /// Density matrix after the charging circuit runs with gate noise.
    pub fn noisy_density(&self, noise: &NoiseModel) -> Result<DensityMatrix> {
        match &self.charge {
            Charge::Circuit { circuit, params } => {
                let rho = DensityMatrix::zero(circuit.n_qubits())?;
                match run_circuit(circuit, params, rho.into(), Some(noise))? {
                    QuantumState::Mixed(rho) => Ok(rho),
                    QuantumState::Pure(_) => unreachable!("mixed input stays mixed"),
                }
            }
            Charge::State(sv) => DensityMatrix::from_statevector(sv),
        }
    }
}

fn check_local(h0m: &PauliSum, m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::SubsystemOutOfRange { m, n });
    }
    if h0m.n_qubits() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: h0m.n_qubits(),
        });
    }
    Ok(())
}

/// Energy of the first `m` qubits estimated from computational-basis
/// samples. `h0m` must be diagonal.
fn sampled_energy(
    state: &QuantumState,
    diag: &[f64],
    m: usize,
    shots: u64,
    readout: Option<(&NoiseModel, bool)>,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let counts = sample_counts(state, shots, None, readout.map(|(nm, _)| nm), rng)?;
    let keep: Vec<usize> = (0..m).collect();
    let marginal = counts.marginal(&keep);
    let q = match readout {
        Some((nm, true)) => mitigate_readout(&marginal, nm)?,
        _ => marginal.frequencies(),
    };
    Ok(q.iter().zip(diag).map(|(p, e)| p * e).sum())
}

fn require_diagonal(h0m: &PauliSum) -> Result<Vec<f64>> {
    if !h0m.is_diagonal() {
        return Err(Error::InvalidArgument(
            "sampled energies need a diagonal local Hamiltonian".into(),
        ));
    }
    Ok(h0m.diagonal())
}

/// `⟨Ψ|H0^M ⊗ I|Ψ⟩` on the chosen backend.
pub fn mean_energy(
    state: &ChargedState,
    m: usize,
    h0m: &PauliSum,
    backend: &Backend,
    seed: u64,
) -> Result<f64> {
    let n = state.n_qubits();
    check_local(h0m, m, n)?;
    backend.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *backend {
        Backend::Statevector => {
            let sv = state.statevector()?;
            h0m.embed(n, &(0..m).collect::<Vec<_>>())?
                .expectation(&QuantumState::Pure(sv))
        }
        Backend::Shots { shots } => {
            let diag = require_diagonal(h0m)?;
            let sv = QuantumState::Pure(state.statevector()?);
            sampled_energy(&sv, &diag, m, shots, None, &mut rng)
        }
        Backend::Noisy {
            shots,
            noise,
            mitigate,
        } => {
            let diag = require_diagonal(h0m)?;
            let rho = QuantumState::Mixed(state.noisy_density(&noise)?);
            sampled_energy(&rho, &diag, m, shots, Some((&noise, mitigate)), &mut rng)
        }
    }
}

/// `W = ⟨H0^M⟩_t − ⟨H0^M⟩_0`, the reference taken on `|0…0⟩`.
pub fn work(
    state: &ChargedState,
    m: usize,
    h0m: &PauliSum,
    backend: &Backend,
    seed: u64,
) -> Result<f64> {
    Ok(mean_energy(state, m, h0m, backend, seed)? - zero_state_energy(h0m)?)
}

/// Replaces the last `n − m` qubits by a register of `min(m, n − m)` qubits
/// carrying the Schmidt vectors of the first `m`. Every observable and every
/// unitary on the first `m` qubits behaves exactly as on the original state.
pub fn compress_environment(state: &Statevector, m: usize) -> Result<Statevector> {
    let n = state.n_qubits();
    if m == 0 || m > n {
        return Err(Error::SubsystemOutOfRange { m, n });
    }
    if n - m <= m {
        return Ok(state.clone());
    }
    let a = state.split_matrix(m)?;
    let eig = hermitian_eigen(&(&a * a.adjoint()));
    let rows = 1usize << m;
    let mut amps = vec![Complex64::new(0.0, 0.0); rows * rows];
    for k in 0..rows {
        let s = eig.eigenvalues()[k].max(0.0).sqrt();
        for r in 0..rows {
            amps[k * rows + r] = eig.eigenvectors()[(r, k)] * s;
        }
    }
    Statevector::normalized(amps)
}

/// Outcome of the passive-energy search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassiveOptResult {
    pub params: Vec<f64>,
    pub e_pass: f64,
    pub e_mean: f64,
    pub ergotropy: f64,
    pub trace: OptimizationTrace,
    pub backend: Backend,
}

/// Cost of the passive search on a sampling backend.
struct SampledPassive<'a> {
    circuit: &'a Circuit,
    initial: QuantumState,
    diag: &'a [f64],
    m: usize,
    shots: u64,
    noise: Option<(NoiseModel, bool)>,
    rng: ChaCha8Rng,
}

impl Objective for SampledPassive<'_> {
    fn cost(&mut self, params: &[f64]) -> Result<f64> {
        let out = run_circuit(
            self.circuit,
            params,
            self.initial.clone(),
            self.noise.as_ref().map(|(nm, _)| nm),
        )?;
        let readout = self.noise.as_ref().map(|(nm, mit)| (nm, *mit));
        sampled_energy(&out, self.diag, self.m, self.shots, readout, &mut self.rng)
    }
}

impl Differentiable for SampledPassive<'_> {
    fn gradient(&mut self, params: &[f64]) -> Result<Vec<f64>> {
        let circuit = self.circuit;
        parameter_shift_gradient(circuit, self, params)
    }
}

fn run_optimizer<F: Differentiable>(
    f: &mut F,
    x0: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimizationTrace> {
    match config.method {
        OptimizerMethod::Bfgs => minimize_bfgs(f, x0, config),
        OptimizerMethod::Spsa => minimize_spsa(f, x0, config),
    }
}

/// Minimizes `⟨Ψ|(U(θ)† H0^M U(θ)) ⊗ I|Ψ⟩` with an ansatz on the first `m`
/// qubits. The ergotropy estimate is `E_mean − E_pass`, both measured on
/// `backend`; `optimizer.seed` fixes the initial parameters and every
/// sampling stream.
pub fn optimize_passive(
    state: &ChargedState,
    m: usize,
    h0m: &PauliSum,
    ansatz: AnsatzSpec,
    optimizer: &OptimizerConfig,
    backend: &Backend,
) -> Result<PassiveOptResult> {
    let n = state.n_qubits();
    check_local(h0m, m, n)?;
    if ansatz.n_qubits != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: ansatz.n_qubits,
        });
    }
    backend.validate()?;
    optimizer.validate()?;
    let seed = optimizer.seed;
    let local = hardware_efficient(ansatz)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let x0 = ansatz.initial_params(&mut init_rng);
    let e_mean = mean_energy(state, m, h0m, backend, derive_seed(seed, 2))?;
    let sites: Vec<usize> = (0..m).collect();

    let (trace, e_pass) = match *backend {
        Backend::Statevector => {
            let reg = compress_environment(&state.statevector()?, m)?;
            let nr = reg.n_qubits();
            let circuit = local.remapped(nr, &sites)?;
            let mut f = ExpectationObjective::new(circuit, reg, h0m.embed(nr, &sites)?)?
                .with_method(optimizer.gradient);
            let trace = run_optimizer(&mut f, &x0, optimizer)?;
            let e_pass = match optimizer.method {
                OptimizerMethod::Bfgs => trace.final_cost,
                OptimizerMethod::Spsa => f.cost(&trace.params)?,
            };
            (trace, e_pass)
        }
        Backend::Shots { .. } | Backend::Noisy { .. } => {
            let diag = require_diagonal(h0m)?;
            let shots = backend.shots().unwrap_or(1);
            let (initial, circuit, noise) = match *backend {
                Backend::Noisy {
                    noise, mitigate, ..
                } => (
                    QuantumState::Mixed(state.noisy_density(&noise)?),
                    local.remapped(n, &sites)?,
                    Some((noise, mitigate)),
                ),
                _ => {
                    let reg = compress_environment(&state.statevector()?, m)?;
                    let nr = reg.n_qubits();
                    (QuantumState::Pure(reg), local.remapped(nr, &sites)?, None)
                }
            };
            let mut f = SampledPassive {
                circuit: &circuit,
                initial,
                diag: &diag,
                m,
                shots,
                noise,
                rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 3)),
            };
            let trace = run_optimizer(&mut f, &x0, optimizer)?;
            // fresh, independent estimate at the final parameters
            f.rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 4));
            let e_pass = f.cost(&trace.params)?;
            (trace, e_pass)
        }
    };
    Ok(PassiveOptResult {
        params: trace.params.clone(),
        e_pass,
        e_mean,
        ergotropy: e_mean - e_pass,
        trace,
        backend: *backend,
    })
}

/// Source of charged states for [`vqergo_pipeline`].
#[derive(Debug, Clone, Copy)]
pub enum ChargingSource<'a> {
    RxxExact { j: f64 },
    TfimPvqd(&'a PvqdTrajectory),
}

impl ChargingSource<'_> {
    pub fn protocol(&self) -> Protocol {
        match self {
            ChargingSource::RxxExact { .. } => Protocol::RxxExact,
            ChargingSource::TfimPvqd(_) => Protocol::TfimPvqd,
        }
    }

    pub fn charge(&self, n: usize, t: f64) -> Result<ChargedState> {
        match *self {
            ChargingSource::RxxExact { j } => ChargedState::rxx(n, j, t),
            ChargingSource::TfimPvqd(traj) => {
                if traj.n_qubits != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: traj.n_qubits,
                    });
                }
                ChargedState::from_trajectory(traj, t)
            }
        }
    }
}

/// Settings shared by every cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n_qubits: usize,
    pub h: f64,
    pub depth: usize,
    pub optimizer: OptimizerConfig,
    pub backend: Backend,
    /// Site order for [`ChargedState::relabeled`]; `None` keeps the first
    /// `M` sites of the chain.
    #[serde(default)]
    pub sites: Option<Vec<usize>>,
}

/// One `(t, M, seed)` cell of a sweep.
pub fn vqergo_cell(
    source: ChargingSource<'_>,
    config: &PipelineConfig,
    t: f64,
    m: usize,
    seed: u64,
) -> Result<ErgotropyRecord> {
    let mut state = source.charge(config.n_qubits, t)?;
    if let Some(order) = &config.sites {
        state = state.relabeled(order)?;
    }
    let h0m = build_h0(m, config.h)?;
    let cell_seed = derive_seed(derive_seed(seed, m as u64), t.to_bits());
    let optimizer = config.optimizer.with_seed(cell_seed);
    let res = optimize_passive(
        &state,
        m,
        &h0m,
        AnsatzSpec::new(m, config.depth),
        &optimizer,
        &config.backend,
    )?;
    let work = res.e_mean - zero_state_energy(&h0m)?;
    Ok(ErgotropyRecord {
        t,
        m,
        work,
        ergotropy: res.ergotropy,
        efficiency: efficiency(res.ergotropy, work),
        method: config.backend.method(),
        depth: Some(config.depth),
        seed: Some(seed),
        e_mean: res.e_mean,
        e_pass: res.e_pass,
    })
}

/// Every `(t, M, seed)` cell in order. Time points must exist in the
/// trajectory when charging from p-VQD.
pub fn vqergo_pipeline(
    source: ChargingSource<'_>,
    config: &PipelineConfig,
    times: &[f64],
    m_values: &[usize],
    seeds: &[u64],
) -> Result<Vec<ErgotropyRecord>> {
    if let ChargingSource::TfimPvqd(traj) = source {
        for &t in times {
            traj.params_at(t)?;
        }
    }
    let mut out = Vec::with_capacity(times.len() * m_values.len() * seeds.len());
    for &t in times {
        for &m in m_values {
            for &seed in seeds {
                out.push(vqergo_cell(source, config, t, m, seed)?);
            }
        }
    }
    Ok(out)
}

/// Seed statistics of one `(t, M, depth, method)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub t: f64,
    pub m: usize,
    pub depth: Option<usize>,
    pub method: Method,
    pub count: usize,
    pub mean_work: f64,
    pub mean: f64,
    /// Sample standard deviation of the ergotropy; zero for one seed.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Groups records by `(t, M, depth, method)` and summarizes the ergotropy.
pub fn aggregate(records: &[ErgotropyRecord]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(u64, usize, Option<usize>, Method), Vec<&ErgotropyRecord>> =
        BTreeMap::new();
    for r in records {
        groups
            .entry((ordered_bits(r.t), r.m, r.depth, r.method))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|rows| {
            let n = rows.len() as f64;
            let mean = rows.iter().map(|r| r.ergotropy).sum::<f64>() / n;
            let var = if rows.len() > 1 {
                rows.iter()
                    .map(|r| (r.ergotropy - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0)
            } else {
                0.0
            };
            Aggregate {
                t: rows[0].t,
                m: rows[0].m,
                depth: rows[0].depth,
                method: rows[0].method,
                count: rows.len(),
                mean_work: rows.iter().map(|r| r.work).sum::<f64>() / n,
                mean,
                std: var.sqrt(),
                min: rows
                    .iter()
                    .map(|r| r.ergotropy)
                    .fold(f64::INFINITY, f64::min),
                max: rows
                    .iter()
                    .map(|r| r.ergotropy)
                    .fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Order-preserving key for finite floats.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

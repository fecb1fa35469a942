//! Projected variational quantum dynamics.
//!
//! Each step fits `U(w + dw)|0⟩` to one Trotter step applied to the
//! previous variational state by minimizing
//! `[1 − |⟨φ(t+δt)|ψ(w+dw)⟩|²] / δt²` over `dw`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{hardware_efficient, trotter_circuit, AnsatzSpec, TrotterOrder};
use crate::hamiltonian::PauliSum;
use crate::optim::{
    adjoint_overlap_gradient, derive_seed, minimize_bfgs, minimize_spsa, Differentiable, Objective,
    OptimizationTrace, OptimizerConfig, OptimizerMethod,
};
use crate::oracle::ExactDynamics;
use crate::qsim::{sample_counts, Circuit, QuantumState, Statevector, MAX_MIXED_QUBITS};
use crate::{Error, Result};

/// How the step fidelity is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FidelityMode {
    /// Squared overlap on the statevector.
    ExactOverlap,
    /// All-zeros frequency of the compute–uncompute circuit
    /// `U†(w+dw)·Trotter·U(w)`.
    SampledZeroProjector { shots: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvqdConfig {
    pub total_time: f64,
    pub n_steps: usize,
    pub ansatz: AnsatzSpec,
    pub optimizer: OptimizerConfig,
    pub fidelity_mode: FidelityMode,
    pub trotter_order: TrotterOrder,
}

impl PvqdConfig {
    pub fn new(total_time: f64, n_steps: usize, ansatz: AnsatzSpec) -> Self {
        Self {
            total_time,
            n_steps,
            ansatz,
            optimizer: OptimizerConfig::bfgs(200).with_tolerance(1e-8),
            fidelity_mode: FidelityMode::ExactOverlap,
            trotter_order: TrotterOrder::Second,
        }
    }

    /// `14` steps for two and four qubits, `7` otherwise.
    pub fn default_steps(n_qubits: usize) -> usize {
        if n_qubits <= 4 {
            14
        } else {
            7
        }
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.n_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || !(self.total_time > 0.0) || !self.total_time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "p-VQD needs n_steps ≥ 1 and a positive total time, got {} and {}",
                self.n_steps, self.total_time
            )));
        }
        if let FidelityMode::SampledZeroProjector { shots: 0 } = self.fidelity_mode {
            return Err(Error::ZeroShots);
        }
        self.optimizer.validate()
    }
}

/// One accepted time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvqdStep {
    pub t: f64,
    pub params: Vec<f64>,
    /// Achieved step cost `(1 − F)/δt²`; zero at `t = 0`.
    pub cost: f64,
    /// Achieved step infidelity `1 − F`.
    pub infidelity: f64,
    /// Fidelity with the exactly evolved state, when the register is small
    /// enough to diagonalize.
    pub oracle_fidelity: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvqdTrajectory {
    pub config: PvqdConfig,
    pub n_qubits: usize,
    pub seed: u64,
    pub steps: Vec<PvqdStep>,
}

impl PvqdTrajectory {
    pub fn circuit(&self) -> Result<Circuit> {
        hardware_efficient(self.config.ansatz)
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.t).collect()
    }

    /// Parameters stored for time `t` (matched to `1e-9`).
    pub fn params_at(&self, t: f64) -> Result<&[f64]> {
        self.steps
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9)
            .map(|s| s.params.as_slice())
            .ok_or(Error::MissingTrajectory(t))
    }

    pub fn state_at(&self, t: f64) -> Result<Statevector> {
        self.circuit()?.prepare(self.params_at(t)?)
    }

    pub fn final_oracle_fidelity(&self) -> Option<f64> {
        self.steps.last().and_then(|s| s.oracle_fidelity)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Cost of a single p-VQD step as a function of `dw`.
struct StepObjective<'a> {
    ansatz: &'a Circuit,
    w: &'a [f64],
    /// `Trotter · U(w)|0⟩`.
    target: Statevector,
    dt: f64,
    mode: FidelityMode,
    rng: ChaCha8Rng,
}

impl StepObjective<'_> {
    fn shifted(&self, dw: &[f64]) -> Vec<f64> {
        self.w.iter().zip(dw).map(|(a, b)| a + b).collect()
    }

    fn exact_fidelity(&self, dw: &[f64]) -> Result<f64> {
        self.ansatz
            .prepare(&self.shifted(dw))?
            .fidelity(&self.target)
    }
}

impl Objective for StepObjective<'_> {
    fn cost(&mut self, dw: &[f64]) -> Result<f64> {
        let fidelity = match self.mode {
            FidelityMode::ExactOverlap => self.exact_fidelity(dw)?,
            FidelityMode::SampledZeroProjector { shots } => {
                let mut state = self.target.clone();
                self.ansatz
                    .inverse()
                    .apply_to(&self.shifted(dw), &mut state)?;
                let counts =
                    sample_counts(&QuantumState::Pure(state), shots, None, None, &mut self.rng)?;
                counts.get(0) as f64 / shots as f64
            }
        };
        Ok((1.0 - fidelity) / (self.dt * self.dt))
    }
}

impl Differentiable for StepObjective<'_> {
    fn gradient(&mut self, dw: &[f64]) -> Result<Vec<f64>> {
        let zero = Statevector::zero(self.ansatz.n_qubits())?;
        let (_, g) = adjoint_overlap_gradient(self.ansatz, &self.shifted(dw), &zero, &self.target)?;
        let scale = -1.0 / (self.dt * self.dt);
        Ok(g.into_iter().map(|v| v * scale).collect())
    }
}

/// `[1 − |⟨φ|ψ(w+dw)⟩|²]/δt²` with `|φ⟩ = Trotter(δt)·U(w)|0⟩`.
#[allow(clippy::too_many_arguments)]
pub fn pvqd_cost<R: Rng + ?Sized>(
    ansatz: &Circuit,
    hamiltonian: &PauliSum,
    w: &[f64],
    dw: &[f64],
    dt: f64,
    order: TrotterOrder,
    mode: FidelityMode,
    rng: &mut R,
) -> Result<f64> {
    ansatz.check_params(w)?;
    ansatz.check_params(dw)?;
    let target = trotter_target(ansatz, hamiltonian, w, dt, order)?;
    let mut objective = StepObjective {
        ansatz,
        w,
        target,
        dt,
        mode,
        rng: ChaCha8Rng::seed_from_u64(rng.random()),
    };
    objective.cost(dw)
}

fn trotter_target(
    ansatz: &Circuit,
    hamiltonian: &PauliSum,
    w: &[f64],
    dt: f64,
    order: TrotterOrder,
) -> Result<Statevector> {
    if hamiltonian.n_qubits() != ansatz.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: ansatz.n_qubits(),
            got: hamiltonian.n_qubits(),
        });
    }
    let mut state = ansatz.prepare(w)?;
    trotter_circuit(hamiltonian, dt, order)?.apply_to(&[], &mut state)?;
    Ok(state)
}

/// Integrates `exp(−iHt)|0…0⟩` step by step. Parameters start at zero, so
/// the `t = 0` state is exactly `|0…0⟩`; the first update is seeded with a
/// small random `dw` drawn from `seed`, and every later step starts from the
/// previous accepted update.
pub fn run_pvqd(config: &PvqdConfig, hamiltonian: &PauliSum, seed: u64) -> Result<PvqdTrajectory> {
    config.validate()?;
    let n = hamiltonian.n_qubits();
    if config.ansatz.n_qubits != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: config.ansatz.n_qubits,
        });
    }
    let ansatz = hardware_efficient(config.ansatz)?;
    let dt = config.dt();
    let oracle = if n <= MAX_MIXED_QUBITS {
        Some(ExactDynamics::new(hamiltonian)?)
    } else {
        None
    };
    let oracle_fidelity = |t: f64, params: &[f64]| -> Result<Option<f64>> {
        match &oracle {
            Some(dynamics) => Ok(Some(
                ansatz.prepare(params)?.fidelity(&dynamics.state_at(t)?)?,
            )),
            None => Ok(None),
        }
    };

    let mut w = vec![0.0; ansatz.n_params()];
    let mut trajectory = PvqdTrajectory {
        config: *config,
        n_qubits: n,
        seed,
        steps: vec![PvqdStep {
            t: 0.0,
            oracle_fidelity: oracle_fidelity(0.0, &w)?,
            params: w.clone(),
            cost: 0.0,
            infidelity: 0.0,
            iterations: 0,
        }],
    };
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut dw = config.ansatz.initial_params(&mut init_rng);

    for step in 1..=config.n_steps {
        let t = step as f64 * dt;
        let target = match trotter_target(&ansatz, hamiltonian, &w, dt, config.trotter_order) {
            Ok(s) => s,
            Err(e) => return Err(abort(step, e, trajectory)),
        };
        let mut objective = StepObjective {
            ansatz: &ansatz,
            w: &w,
            target,
            dt,
            mode: config.fidelity_mode,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 2 * step as u64)),
        };
        let optimizer = config
            .optimizer
            .with_seed(derive_seed(seed, 2 * step as u64 + 1));
        let result: Result<OptimizationTrace> = match optimizer.method {
            OptimizerMethod::Bfgs => minimize_bfgs(&mut objective, &dw, &optimizer),
            OptimizerMethod::Spsa => minimize_spsa(&mut objective, &dw, &optimizer),
        };
        let trace = match result {
            Ok(trace) => trace,
            Err(e) => return Err(abort(step, e, trajectory)),
        };
        let infidelity = match objective.exact_fidelity(&trace.params) {
            Ok(f) => (1.0 - f).clamp(0.0, 1.0),
            Err(e) => return Err(abort(step, e, trajectory)),
        };
        dw = trace.params;
        for (wi, di) in w.iter_mut().zip(&dw) {
            *wi += di;
        }
        trajectory.steps.push(PvqdStep {
            t,
            params: w.clone(),
            cost: infidelity / (dt * dt),
            infidelity,
            oracle_fidelity: oracle_fidelity(t, &w)?,
            iterations: trace.iterations,
        });
    }
    Ok(trajectory)
}

fn abort(step: usize, e: Error, partial: PvqdTrajectory) -> Error {
    Error::PvqdAborted {
        step,
        reason: e.to_string(),
        partial: Box::new(partial),
    }
}

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use ergoforge::ansatz::{AnsatzSpec, TrotterOrder};
use ergoforge::optim::{derive_seed, OptimizerConfig, OptimizerMethod};
use ergoforge::pvqd::{FidelityMode, PvqdConfig};
use ergoforge::qsim::NoiseModel;
use ergoforge::vqergo::{Backend, Protocol};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

/// Largest register the exact commands accept.
pub const MAX_EXACT_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Statevector,
    Shots,
    Noisy,
}

/// Which sites form the `M`-cell subsystem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Subsystem {
    /// `"prefix"`: the first `M` sites of the chain.
    Named(String),
    /// Site priority list; the subsystem of size `M` is its first `M`
    /// entries.
    Sites(Vec<usize>),
}

impl Default for Subsystem {
    fn default() -> Self {
        Subsystem::Named("prefix".into())
    }
}

/// Flat experiment description. Every key is optional; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub n_qubits: usize,
    /// Defaults to `1..=n_qubits`.
    pub m_values: Option<Vec<usize>>,
    pub t_start: f64,
    /// Defaults to `1.4` for the Ising quench and `π/J` for the RXX protocol.
    pub t_stop: Option<f64>,
    pub t_points: usize,
    pub h: f64,
    pub j: f64,
    /// Passive-search ansatz depths.
    pub depths: Vec<usize>,
    pub optimizer: OptimizerMethod,
    /// Defaults to 1000 for BFGS and 250 for SPSA.
    pub max_iterations: Option<usize>,
    pub cost_tolerance: f64,
    pub backend: BackendKind,
    pub shots: u64,
    pub p1: f64,
    pub p2: f64,
    pub readout_01: f64,
    pub readout_10: f64,
    pub mitigate: bool,
    pub seeds: usize,
    pub seed: u64,
    pub subsystem: Subsystem,
    /// Emit exact rows next to variational ones.
    pub include_exact: bool,
    pub correlations: bool,
    /// Defaults to `n_qubits / 2`.
    pub correlation_site: Option<usize>,
    /// Defaults to one depth picked from the register size.
    pub pvqd_depths: Option<Vec<usize>>,
    /// Defaults to 14 steps up to four qubits and 7 beyond for `pvqd`, and to
    /// one step per grid interval when `vqergo` integrates its own charging.
    pub pvqd_steps: Option<usize>,
    pub pvqd_max_iterations: usize,
    pub pvqd_tolerance: f64,
    /// Sampled step fidelities; `None` uses exact overlaps.
    pub pvqd_shots: Option<u64>,
    pub trotter_order: TrotterOrder,
    /// Stored p-VQD trajectory for `vqergo`.
    pub trajectory: Option<PathBuf>,
    /// Output directory; the `--out` flag wins.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::TfimPvqd,
            n_qubits: 8,
            m_values: None,
            t_start: 0.0,
            t_stop: None,
            t_points: 29,
            h: 0.6,
            j: 2.0,
            depths: vec![1],
            optimizer: OptimizerMethod::Bfgs,
            max_iterations: None,
            cost_tolerance: 1e-10,
            backend: BackendKind::Statevector,
            shots: 2048,
            p1: 0.001,
            p2: 0.01,
            readout_01: 0.02,
            readout_10: 0.02,
            mitigate: true,
            seeds: 100,
            seed: 0,
            subsystem: Subsystem::default(),
            include_exact: true,
            correlations: false,
            correlation_site: None,
            pvqd_depths: None,
            pvqd_steps: None,
            pvqd_max_iterations: 200,
            pvqd_tolerance: 1e-8,
            pvqd_shots: None,
            trotter_order: TrotterOrder::Second,
            trajectory: None,
            out: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(invalid("n_qubits must be at least 1"));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(invalid(format!("h must be positive, got {}", self.h)));
        }
        if !self.j.is_finite() {
            return Err(invalid("j must be finite"));
        }
        if self.protocol == Protocol::RxxExact && self.t_stop.is_none() && self.j == 0.0 {
            return Err(invalid("the RXX grid needs j ≠ 0 or an explicit t_stop"));
        }
        if self.t_points == 0 {
            return Err(invalid("t_points must be at least 1"));
        }
        let grid = self.times();
        if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("t-grid must be finite and strictly increasing"));
        }
        let ms = self.m_list();
        if ms.is_empty() || ms.iter().any(|&m| m == 0 || m > self.n_qubits) {
            return Err(invalid(format!(
                "every M must lie in 1..={}, got {ms:?}",
                self.n_qubits
            )));
        }
        if self.depths.is_empty() {
            return Err(invalid("depths must not be empty"));
        }
        if self.pvqd_depths.as_ref().is_some_and(|d| d.is_empty()) {
            return Err(invalid("pvqd_depths must not be empty"));
        }
        if self.seeds == 0 {
            return Err(invalid("seeds must be at least 1"));
        }
        self.site_order()?;
        self.backend()?.validate()?;
        self.optimizer_config()?;
        Ok(())
    }

    pub fn t_stop(&self) -> f64 {
        self.t_stop.unwrap_or(match self.protocol {
            Protocol::TfimPvqd => 1.4,
            Protocol::RxxExact => PI / self.j.abs(),
        })
    }

    /// Evenly spaced grid `t_start + k·(t_stop − t_start)/(t_points − 1)`.
    pub fn times(&self) -> Vec<f64> {
        let (a, b) = (self.t_start, self.t_stop());
        if self.t_points == 1 {
            return vec![a];
        }
        let dt = (b - a) / (self.t_points - 1) as f64;
        (0..self.t_points).map(|k| a + k as f64 * dt).collect()
    }

    pub fn m_list(&self) -> Vec<usize> {
        self.m_values
            .clone()
            .unwrap_or_else(|| (1..=self.n_qubits).collect())
    }

    /// Seeds of the individual runs, derived from the master seed.
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64)
            .map(|k| derive_seed(self.seed, k))
            .collect()
    }

    /// Full qubit order placing the chosen sites first, or `None` for the
    /// prefix subsystem.
    pub fn site_order(&self) -> Result<Option<Vec<usize>>> {
        match &self.subsystem {
            Subsystem::Named(name) if name == "prefix" => Ok(None),
            Subsystem::Named(name) => Err(invalid(format!(
                "subsystem must be \"prefix\" or a site list, got {name:?}"
            ))),
            Subsystem::Sites(sites) => {
                let n = self.n_qubits;
                let mut seen = vec![false; n];
                for &s in sites {
                    if s >= n || seen[s] {
                        return Err(invalid(format!(
                            "subsystem sites {sites:?} must be distinct and below {n}"
                        )));
                    }
                    seen[s] = true;
                }
                let max_m = self.m_list().into_iter().max().unwrap_or(0);
                if sites.len() < max_m {
                    return Err(invalid(format!(
                        "subsystem lists {} sites but M reaches {max_m}",
                        sites.len()
                    )));
                }
                let mut order = sites.clone();
                order.extend((0..n).filter(|&q| !seen[q]));
                Ok(Some(order))
            }
        }
    }

    pub fn backend(&self) -> Result<Backend> {
        Ok(match self.backend {
            BackendKind::Statevector => Backend::Statevector,
            BackendKind::Shots => Backend::Shots { shots: self.shots },
            BackendKind::Noisy => Backend::Noisy {
                shots: self.shots,
                noise: NoiseModel::new(self.p1, self.p2, self.readout_01, self.readout_10)?,
                mitigate: self.mitigate,
            },
        })
    }

    pub fn optimizer_config(&self) -> Result<OptimizerConfig> {
        let shots = match self.backend {
            BackendKind::Statevector => None,
            _ => Some(self.shots),
        };
        let cfg = match self.optimizer {
            OptimizerMethod::Bfgs => OptimizerConfig::bfgs(self.max_iterations.unwrap_or(1000)),
            OptimizerMethod::Spsa => {
                OptimizerConfig::spsa(self.max_iterations.unwrap_or(250), shots, 0)
            }
        }
        .with_tolerance(self.cost_tolerance);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn pvqd_depth_list(&self) -> Vec<usize> {
        self.pvqd_depths.clone().unwrap_or_else(|| {
            vec![match self.n_qubits {
                0..=2 => 1,
                3..=4 => 2,
                _ => 5,
            }]
        })
    }

    pub fn pvqd_config(&self, depth: usize, n_steps: usize) -> Result<PvqdConfig> {
        let mut cfg = PvqdConfig::new(
            self.t_stop(),
            n_steps,
            AnsatzSpec::new(self.n_qubits, depth),
        );
        cfg.optimizer =
            OptimizerConfig::bfgs(self.pvqd_max_iterations).with_tolerance(self.pvqd_tolerance);
        cfg.trotter_order = self.trotter_order;
        if let Some(shots) = self.pvqd_shots {
            cfg.fidelity_mode = FidelityMode::SampledZeroProjector { shots };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form, output directory excluded, as 16
    /// hex digits.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

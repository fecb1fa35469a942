use std::collections::HashMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use ergoforge::hamiltonian::{build_h0, build_h1_tfim, PauliSum};
use ergoforge::oracle::{correlation, ergotropy_exact, Axis, ErgotropyRecord, ExactDynamics};
use ergoforge::pvqd::{run_pvqd as integrate, PvqdConfig, PvqdTrajectory};
use ergoforge::qsim::Statevector;
use ergoforge::vqergo::{
    aggregate, vqergo_cell, ChargedState, ChargingSource, PipelineConfig, Protocol,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, MAX_EXACT_QUBITS};
use crate::output::{
    aggregates_csv, format_float, opt_float, records_csv, CORRELATION_HEADER, INFIDELITY_HEADER,
};
use crate::{CliError, Result};

/// Named output documents, in the order they were produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, body)| body.as_str())
    }

    fn push(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body));
    }
}

/// Writes every document under `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, outputs: &Outputs) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    outputs
        .files
        .iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(io(&path))?;
            Ok(path)
        })
        .collect()
}

fn charging_hamiltonian(cfg: &ExperimentConfig) -> Result<PauliSum> {
    let h = match cfg.protocol {
        Protocol::TfimPvqd => cfg.h,
        Protocol::RxxExact => 0.0,
    };
    Ok(build_h1_tfim(cfg.n_qubits, h, cfg.j)?)
}

enum ExactSource {
    Tfim(ExactDynamics),
    Rxx,
}

impl ExactSource {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        if cfg.n_qubits > MAX_EXACT_QUBITS {
            return Err(CliError::TooLarge(cfg.n_qubits));
        }
        Ok(match cfg.protocol {
            Protocol::TfimPvqd => {
                ExactSource::Tfim(ExactDynamics::new(&charging_hamiltonian(cfg)?)?)
            }
            Protocol::RxxExact => ExactSource::Rxx,
        })
    }

    fn state(&self, cfg: &ExperimentConfig, t: f64) -> Result<Statevector> {
        Ok(match self {
            ExactSource::Tfim(dynamics) => dynamics.state_at(t)?,
            ExactSource::Rxx => ChargedState::rxx(cfg.n_qubits, cfg.j, t)?.statevector()?,
        })
    }
}

fn sort_records(records: &mut [ErgotropyRecord]) {
    records.sort_by(|a, b| {
        a.t.total_cmp(&b.t)
            .then(a.m.cmp(&b.m))
            .then(a.depth.cmp(&b.depth))
            .then(a.seed.cmp(&b.seed))
            .then(a.method.as_str().cmp(b.method.as_str()))
    });
}

fn exact_records(cfg: &ExperimentConfig) -> Result<Vec<ErgotropyRecord>> {
    let source = ExactSource::new(cfg)?;
    let order = cfg.site_order()?;
    let ms = cfg.m_list();
    let per_time: Vec<Vec<ErgotropyRecord>> = cfg
        .times()
        .par_iter()
        .map(|&t| {
            let mut full = source.state(cfg, t)?;
            if let Some(order) = &order {
                full = full.permuted(order)?;
            }
            ms.iter()
                .map(|&m| Ok(ergotropy_exact(t, &full, m, &build_h0(m, cfg.h)?)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<ErgotropyRecord> = per_time.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

fn correlations_csv(cfg: &ExperimentConfig, hash: &str) -> Result<String> {
    let n = cfg.n_qubits;
    let site = cfg.correlation_site.unwrap_or(n / 2);
    if site >= n {
        return Err(CliError::Config(format!(
            "correlation_site {site} out of range for {n} qubits"
        )));
    }
    let source = ExactSource::new(cfg)?;
    let offsets: Vec<isize> = (-(site as isize)..(n - site) as isize)
        .filter(|&l| l != 0)
        .collect();
    let rows: Vec<String> = cfg
        .times()
        .par_iter()
        .map(|&t| {
            let full = source.state(cfg, t)?;
            let mut rows = String::new();
            for axis in [Axis::X, Axis::Z] {
                for &ell in &offsets {
                    let value = correlation(&full, site, ell, axis)?;
                    writeln!(
                        rows,
                        "{site},{ell},{},{},{},{hash}",
                        axis.as_str(),
                        format_float(t),
                        format_float(value)
                    )
                    .expect("writing to a String");
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(format!("{CORRELATION_HEADER}\n{}", rows.concat()))
}

/// Exact work, ergotropy and efficiency over the grid, plus optional
/// two-point correlations.
pub fn run_exact(cfg: &ExperimentConfig) -> Result<Outputs> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut out = Outputs::default();
    out.push("records.csv", records_csv(&exact_records(cfg)?, &hash));
    if cfg.correlations {
        out.push("correlations.csv", correlations_csv(cfg, &hash)?);
    }
    Ok(out)
}

fn final_fidelity(traj: &PvqdTrajectory) -> f64 {
    traj.final_oracle_fidelity().unwrap_or_else(|| {
        traj.steps
            .iter()
            .map(|s| 1.0 - s.infidelity)
            .product::<f64>()
    })
}

/// p-VQD trajectories for every `(depth, seed)` with per-step infidelities.
/// `trajectory.json` holds the run with the highest final fidelity.
pub fn run_pvqd(cfg: &ExperimentConfig) -> Result<Outputs> {
    cfg.validate()?;
    let hash = cfg.hash();
    let hamiltonian = charging_hamiltonian(cfg)?;
    let steps = cfg
        .pvqd_steps
        .unwrap_or_else(|| PvqdConfig::default_steps(cfg.n_qubits));
    let seeds = cfg.seed_list();
    let jobs: Vec<(usize, usize)> = cfg
        .pvqd_depth_list()
        .into_iter()
        .flat_map(|d| (0..seeds.len()).map(move |k| (d, k)))
        .collect();
    let configs: Vec<PvqdConfig> = jobs
        .iter()
        .map(|&(d, _)| cfg.pvqd_config(d, steps))
        .collect::<Result<_>>()?;
    let results: Vec<ergoforge::Result<PvqdTrajectory>> = jobs
        .par_iter()
        .zip(&configs)
        .map(|(&(_, k), pc)| integrate(pc, &hamiltonian, seeds[k]))
        .collect();

    let mut out = Outputs::default();
    let mut finished = Vec::new();
    let mut failure = None;
    for (&(d, k), result) in jobs.iter().zip(results) {
        let name = format!("trajectory_d{d}_k{k}.json");
        match result {
            Ok(traj) => {
                out.push(name, traj.to_json()?);
                finished.push((d, traj));
            }
            Err(ergoforge::Error::PvqdAborted {
                step,
                reason,
                partial,
            }) => {
                out.push(name, partial.to_json()?);
                failure.get_or_insert(ergoforge::Error::PvqdAborted {
                    step,
                    reason,
                    partial,
                });
            }
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }

    let mut best_per_depth: HashMap<usize, (f64, u64)> = HashMap::new();
    for (d, traj) in &finished {
        let f = final_fidelity(traj);
        let entry = best_per_depth.entry(*d).or_insert((f, traj.seed));
        if f > entry.0 {
            *entry = (f, traj.seed);
        }
    }
    let mut csv = format!("{INFIDELITY_HEADER}\n");
    for (d, traj) in &finished {
        let best = best_per_depth[d].1 == traj.seed;
        for (step, s) in traj.steps.iter().enumerate() {
            writeln!(
                csv,
                "{d},{},{step},{},{},{},{},{},{hash}",
                traj.seed,
                format_float(s.t),
                format_float(s.cost),
                format_float(s.infidelity),
                opt_float(s.oracle_fidelity.map(|f| 1.0 - f)),
                u8::from(best),
            )
            .expect("writing to a String");
        }
    }
    out.push("infidelity.csv", csv);
    if let Some(best) = finished.iter().map(|(_, traj)| traj).reduce(|a, b| {
        if final_fidelity(b) > final_fidelity(a) {
            b
        } else {
            a
        }
    }) {
        out.push("trajectory.json", best.to_json()?);
    }
    match failure {
        None => Ok(out),
        Some(source) => Err(CliError::PvqdFailed {
            outputs: Box::new(out),
            source,
        }),
    }
}

fn load_trajectory(path: &Path) -> Result<PvqdTrajectory> {
    if !path.exists() {
        return Err(CliError::MissingTrajectory(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(PvqdTrajectory::from_json(&text)?)
}

/// Charging trajectory for the Ising protocol: the configured file, or a
/// fresh p-VQD run with one step per grid interval.
fn charging_trajectory(cfg: &ExperimentConfig) -> Result<(PvqdTrajectory, bool)> {
    if let Some(path) = &cfg.trajectory {
        let traj = load_trajectory(path)?;
        if traj.n_qubits != cfg.n_qubits {
            return Err(CliError::Config(format!(
                "trajectory has {} qubits, config has {}",
                traj.n_qubits, cfg.n_qubits
            )));
        }
        return Ok((traj, false));
    }
    let steps = cfg
        .pvqd_steps
        .unwrap_or(cfg.t_points.saturating_sub(1).max(1));
    let pc = cfg.pvqd_config(cfg.pvqd_depth_list()[0], steps)?;
    Ok((integrate(&pc, &charging_hamiltonian(cfg)?, cfg.seed)?, true))
}

/// Variational ergotropy for every `(t, M, depth, seed)` cell, with exact
/// reference rows and seed aggregates.
pub fn run_vqergo(cfg: &ExperimentConfig) -> Result<Outputs> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut out = Outputs::default();
    let trajectory = match cfg.protocol {
        Protocol::TfimPvqd => {
            let (traj, fresh) = charging_trajectory(cfg)?;
            if fresh {
                out.push("trajectory.json", traj.to_json()?);
            }
            Some(traj)
        }
        Protocol::RxxExact => {
            if cfg.trajectory.is_some() {
                return Err(CliError::Config(
                    "trajectory only applies to the tfim-pvqd protocol".into(),
                ));
            }
            None
        }
    };
    let source = match &trajectory {
        Some(traj) => ChargingSource::TfimPvqd(traj),
        None => ChargingSource::RxxExact { j: cfg.j },
    };
    let times = cfg.times();
    if let Some(traj) = &trajectory {
        for &t in &times {
            traj.params_at(t)?;
        }
    }

    let base = PipelineConfig {
        n_qubits: cfg.n_qubits,
        h: cfg.h,
        depth: 0,
        optimizer: cfg.optimizer_config()?,
        backend: cfg.backend()?,
        sites: cfg.site_order()?,
    };
    let seeds = cfg.seed_list();
    let mut cells = Vec::new();
    for &t in &times {
        for m in cfg.m_list() {
            for &depth in &cfg.depths {
                for &seed in &seeds {
                    cells.push((t, m, depth, seed));
                }
            }
        }
    }
    let mut records: Vec<ErgotropyRecord> = cells
        .par_iter()
        .map(|&(t, m, depth, seed)| {
            let pc = PipelineConfig {
                depth,
                ..base.clone()
            };
            Ok(vqergo_cell(source, &pc, t, m, seed)?)
        })
        .collect::<Result<_>>()?;

    let exact = if cfg.include_exact {
        exact_records(cfg)?
    } else {
        Vec::new()
    };
    let lookup: HashMap<(u64, usize), f64> = exact
        .iter()
        .map(|r| ((r.t.to_bits(), r.m), r.ergotropy))
        .collect();
    let aggregates: Vec<_> = aggregate(&records)
        .into_iter()
        .map(|a| {
            let e = lookup.get(&(a.t.to_bits(), a.m)).copied();
            (a, e)
        })
        .collect();
    records.extend(exact);
    sort_records(&mut records);
    out.push("records.csv", records_csv(&records, &hash));
    out.push("aggregates.csv", aggregates_csv(&aggregates, &hash));
    Ok(out)
}

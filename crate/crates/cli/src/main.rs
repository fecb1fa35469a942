use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ergoforge_cli::{
    report, run_exact, run_pvqd, run_vqergo, write_outputs, CliError, ExperimentConfig, Outputs,
    Result,
};

#[derive(Parser, Debug)]
#[command(
    name = "ergoforge",
    version,
    about = "Quantum battery ergotropy sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat JSON experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Number of seeds per cell.
    #[arg(long, global = true)]
    seeds: Option<usize>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact work, ergotropy and efficiency over the time grid.
    Exact,
    /// p-VQD trajectories and per-step infidelities.
    Pvqd,
    /// Variational ergotropy records with seed aggregates.
    Vqergo,
    /// Summary JSON of a records CSV.
    Report {
        /// Records CSV; defaults to `records.csv` in the output directory.
        input: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = cli.seeds {
        cfg.seeds = n;
    }
    if let Ok(raw) = std::env::var("ERGOFORGE_SEED") {
        cfg.seed = raw.trim().parse().map_err(|_| CliError::BadSeed(raw))?;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(dir: &Path, outputs: &Outputs) -> Result<()> {
    for path in write_outputs(dir, outputs)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let outputs = match cli.command {
        Command::Exact => pool.install(|| run_exact(&cfg)),
        Command::Pvqd => pool.install(|| run_pvqd(&cfg)),
        Command::Vqergo => pool.install(|| run_vqergo(&cfg)),
        Command::Report { input } => {
            let input = input.unwrap_or_else(|| dir.join("records.csv"));
            let text = std::fs::read_to_string(&input).map_err(|source| CliError::Io {
                path: input.clone(),
                source,
            })?;
            let summary = report(&text, &input.display().to_string())?;
            let mut out = Outputs::default();
            out.files.push((
                "summary.json".into(),
                serde_json::to_string_pretty(&summary)? + "\n",
            ));
            Ok(out)
        }
    };
    match outputs {
        Ok(outputs) => emit(&dir, &outputs),
        Err(CliError::PvqdFailed { outputs, source }) => {
            emit(&dir, &outputs)?;
            Err(CliError::PvqdFailed { outputs, source })
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

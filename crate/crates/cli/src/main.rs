//! `floweng`: runs the validation and design experiments from a TOML config.
//!
//! Exit codes: 0 success, 2 invalid config, 3 numerical failure, 1 I/O.

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Experiment, RunConfig, SCHEMA};
use run::RunError;

/// Replaces the directory that relative `output_dir` values resolve
/// against.
const OUTPUT_ROOT_VAR: &str = "FLOWENG_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "floweng", version, about = "Effective Hamiltonians for polychromatically driven systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Run this experiment instead of the one named in the config.
        #[arg(long)]
        experiment: Option<Experiment>,
    },
    /// Check a config file without running it.
    Validate {
        config: PathBuf,
        #[arg(long)]
        experiment: Option<Experiment>,
    },
    /// Print the annotated config schema with all defaults.
    Schema,
}

fn load(path: &Path, experiment: Option<Experiment>) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut config = RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(e) = experiment {
        config.experiment = e;
    }
    config.validate()?;
    Ok(config)
}

fn output_dir(config: &RunConfig) -> PathBuf {
    let dir = PathBuf::from(config.output_dir());
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir,
    }
}

fn execute(config: &RunConfig) -> ExitCode {
    let dir = output_dir(config);
    let start = Instant::now();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(config.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    let result = pool.install(|| run::run(config));
    let wall_time = start.elapsed().as_secs_f64();
    let artifacts = match result {
        Ok(a) => a,
        Err(RunError::Invalid(msg)) => {
            eprintln!("invalid configuration: {msg}");
            return ExitCode::from(2);
        }
        Err(RunError::Numerical { error, context }) => {
            eprintln!("numerical failure: {error}");
            eprintln!("{}", json!({ "experiment": config.experiment, "error": error.to_string(), "context": context }));
            return ExitCode::from(3);
        }
    };
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": config.experiment,
        "config": config,
        "seeds": artifacts.seeds,
        "wall_time_seconds": wall_time,
        "discarded_norms": artifacts.discarded_norms,
        "files": artifacts.files.iter().map(|(n, _)| *n).collect::<Vec<_>>(),
        "results": artifacts.summary,
    });
    let write = || -> std::io::Result<()> {
        for (name, contents) in &artifacts.files {
            output::write_file(&dir, name, contents)?;
        }
        output::write_file(&dir, "manifest.json", &format!("{}\n", serde_json::to_string_pretty(&manifest)?))
    };
    if let Err(e) = write() {
        eprintln!("error: writing {}: {e}", dir.display());
        return ExitCode::from(1);
    }
    println!("{}: wrote {} ({wall_time:.2} s)", config.experiment, dir.display());
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Schema => {
            print!("{SCHEMA}");
            ExitCode::SUCCESS
        }
        Command::Validate { config, experiment } => match load(&config, experiment) {
            Ok(c) => {
                println!("{}: ok ({})", config.display(), c.experiment);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("invalid configuration: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, experiment } => match load(&config, experiment) {
            Ok(c) => execute(&c),
            Err(e) => {
                eprintln!("invalid configuration: {e}");
                ExitCode::from(2)
            }
        },
    }
}

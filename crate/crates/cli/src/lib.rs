//! Command-line front end: loads an experiment config, runs one pipeline
//! and writes plot-ready CSV/JSON artifacts under `<out>/<name>/<command>/`.

pub mod commands;
pub mod config;
pub mod error;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "adsrc", version, about = "Advection-diffusion inverse source toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Base output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for independent sub-runs (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Print the resolved config with defaults and exit.
    #[arg(long)]
    pub describe: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the forward problem and store the trajectory.
    Forward(CommonArgs),
    /// Reconstruct the source from final-time data.
    Invert(CommonArgs),
    /// Check the transform bounds, elliptic identity and asymptotics.
    Verify(CommonArgs),
    /// Singular values of the source-to-data map.
    Spectrum(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Forward(_) => "forward",
            Command::Invert(_) => "invert",
            Command::Verify(_) => "verify",
            Command::Spectrum(_) => "spectrum",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Forward(a) | Command::Invert(a) | Command::Verify(a) | Command::Spectrum(a) => a,
        }
    }
}

/// Directory receiving the artifacts of `command` for `exp`.
pub fn artifact_dir(out: &Path, exp_name: &str, command: &str) -> PathBuf {
    out.join(exp_name).join(command)
}

fn execute(command: &Command, exp: &Experiment, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    let stale = dir.join("error.json");
    if stale.exists() {
        std::fs::remove_file(stale)?;
    }
    match command {
        Command::Forward(_) => commands::cmd_forward(exp, dir),
        Command::Invert(_) => commands::cmd_invert(exp, dir),
        Command::Verify(_) => commands::cmd_verify(exp, dir),
        Command::Spectrum(_) => commands::cmd_spectrum(exp, dir),
    }
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let args = cli.command.args();
    let name = cli.command.name();
    let fallback = args
        .config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into());
    let exp = match Experiment::load(&args.config) {
        Ok(exp) => exp,
        Err(e) => return fail(&artifact_dir(&args.out, &fallback, name), name, &e),
    };
    if args.describe {
        print!("{}", exp.describe());
        return error::EXIT_OK;
    }
    let dir = artifact_dir(&args.out, &exp.name, name);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            let err = CliError::Config {
                key: "--jobs".into(),
                message: e.to_string(),
            };
            return fail(&dir, name, &err);
        }
    };
    match pool.install(|| execute(&cli.command, &exp, &dir)) {
        Ok(()) => error::EXIT_OK,
        Err(e) => fail(&dir, name, &e),
    }
}

fn fail(dir: &Path, command: &str, err: &CliError) -> i32 {
    eprintln!("adsrc {command}: {err}");
    if let Err(io) = error::write_error(dir, command, err) {
        eprintln!("adsrc {command}: could not write error report: {io}");
    }
    err.exit_code()
}

//! Argument parsing and dispatch; `run` returns the process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, CommandError, LandscapeRequest};
use crate::config::{RawConfig, RunConfig};
use crate::format::num;

#[derive(Debug, Parser)]
#[command(name = "smoothopt", version, about = "Gaussian-smoothed surrogate optimization of discontinuous objectives")]
pub struct Cli {
    /// INI configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; run i uses seed + i.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Continue from the files in the output directory.
    #[arg(long, global = true)]
    pub resume: bool,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override one setting, `section.key=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Shortcut for `--set objective.kind=KIND`.
    #[arg(long, global = true)]
    pub objective: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the seeded optimizations.
    Optimize,
    /// One simulation at a design; prints the QoI.
    Simulate {
        /// Physical design vector, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        design: String,
    },
    /// Raw and smoothed objective on a grid.
    Landscape {
        /// One or two axis indices, comma separated.
        #[arg(long, default_value = "0")]
        axes: String,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Physical standard deviations; 0 repeats the raw value.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        sigmas: String,
        /// Fixed coordinates for the other axes.
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
    },
}

impl Cli {
    pub fn run_config(&self) -> Result<RunConfig, CommandError> {
        let cfg_err = |e: crate::config::ConfigError| CommandError::Config(e.to_string());
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path).map_err(cfg_err)?,
            None => RawConfig::default(),
        };
        if let Some(kind) = &self.objective {
            raw.set("objective", "kind", kind).map_err(cfg_err)?;
        }
        for o in &self.overrides {
            raw.apply_override(o).map_err(cfg_err)?;
        }
        if let Some(seed) = self.seed {
            raw.set("execution", "seed", &seed.to_string()).map_err(cfg_err)?;
        }
        if let Some(runs) = self.runs {
            raw.set("execution", "runs", &runs.to_string()).map_err(cfg_err)?;
        }
        if let Some(workers) = self.workers {
            raw.set("execution", "workers", &workers.to_string()).map_err(cfg_err)?;
        }
        if let Some(out) = &self.out {
            raw.set("execution", "out", &out.to_string_lossy()).map_err(cfg_err)?;
        }
        RunConfig::from_raw(&raw).map_err(cfg_err)
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CommandError> {
    let config = cli.run_config()?;
    let io = |e: std::io::Error| CommandError::Io(e.to_string());
    match &cli.command {
        Command::Optimize => {
            let summaries = commands::optimize(&config, cli.resume)?;
            for s in summaries {
                writeln!(stdout, "run {} seed {} final {} best_raw {}", s.run, s.seed, num(s.final_objective), num(s.best_raw_value))
                    .map_err(io)?;
            }
        }
        Command::Simulate { design } => {
            let x = commands::parse_vector(design)?;
            let w = commands::simulate(&config, &x)?;
            commands::print_value(stdout, w).map_err(io)?;
        }
        Command::Landscape { axes, grid, sigmas, at } => {
            let axes = crate::config::split_list(axes)
                .iter()
                .map(|a| a.parse::<usize>().map_err(|_| CommandError::Config(format!("bad axis {a:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let request = LandscapeRequest {
                axes,
                grid: *grid,
                sigmas: commands::parse_vector(sigmas)?,
                at: at.as_deref().map(commands::parse_vector).transpose()?,
            };
            let rows = commands::landscape(&config, &request)?;
            writeln!(stdout, "{} rows -> {}", rows.len(), config.execution.out.join(commands::LANDSCAPE_FILE).display()).map_err(io)?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

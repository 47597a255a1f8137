//! Command-line driver: configuration parsing, subcommand dispatch and
//! artifact output for the lattice Choquard solver.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use choquard_lattice::par;
use clap::{Parser, Subcommand};

use crate::config::{parse_config_with, Overrides};
use crate::error::{CliError, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "choquard", version, about = "Ground states of the lattice p-Laplacian Choquard equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Base seed of the random starts, overriding `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses the hardware count.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Quadrature points per axis for the kernel table.
    #[arg(long = "quad-points", global = true)]
    pub quad_points: Option<usize>,
    /// Box radius, overriding `radius`.
    #[arg(long, global = true)]
    pub radius: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multi-start ground-state search.
    Solve,
    /// Solve once per value of one configuration key.
    Sweep {
        /// Dotted key, e.g. `alpha` or `solver.n_starts`.
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Kernel table as CSV and JSON.
    Kernel,
    /// J(su) and phi(s) along the ray through a field.
    Fiber {
        /// Field CSV; defaults to the bump start.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Log-spaced samples of s.
        #[arg(long, default_value_t = 256)]
        points: usize,
        /// Smallest s; defaults to the sign-change bracket divided by 32.
        #[arg(long = "s-min")]
        s_min: Option<f64>,
        /// Largest s; defaults to the sign-change bracket times 32.
        #[arg(long = "s-max")]
        s_max: Option<f64>,
    },
    /// Full verification suite.
    Check,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        let mut o = Overrides::default();
        if let Some(s) = self.seed {
            o = o.set("seed", s as i64);
        }
        if let Some(r) = self.radius {
            o = o.set("radius", r as i64);
        }
        if let Some(m) = self.quad_points {
            o = o.set("quad_points", m as i64);
        }
        o
    }
}

/// Runs a parsed command line and returns the summary text.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config <file> is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let overrides = cli.overrides();
    par::with_threads(cli.threads, || {
        let out_for = |dir: &PathBuf| cli.out.clone().unwrap_or_else(|| dir.clone());
        if let Command::Sweep { key, values } = &cli.command {
            let base = parse_config_with(&text, &overrides)?;
            let (summary, failure) = run::sweep(&text, &overrides, key, values, &out_for(&base.output_dir))?;
            println!("{summary}");
            return match failure {
                Some(e) => Err(e),
                None => Ok(summary),
            };
        }
        let cfg = parse_config_with(&text, &overrides)?;
        let out = out_for(&cfg.output_dir);
        match &cli.command {
            Command::Solve => run::solve(&cfg, &out),
            Command::Kernel => run::kernel(&cfg, &out),
            Command::Fiber { field, points, s_min, s_max } => {
                let grid = run::FiberGrid { points: *points, s_min: *s_min, s_max: *s_max };
                run::fiber(&cfg, field.as_deref(), grid, &out)
            }
            Command::Check => {
                let (summary, ok) = run::check(&cfg, &out)?;
                if ok {
                    Ok(summary)
                } else {
                    println!("{summary}");
                    let total = summary.lines().count() - 1;
                    let failed = summary.lines().filter(|l| l.starts_with("[FAIL]")).count();
                    Err(CliError::ChecksFailed { failed, total })
                }
            }
            Command::Sweep { .. } => unreachable!(),
        }
    })?
}

/// Parses `args`, runs, prints, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            if !matches!(cli.command, Command::Sweep { .. }) {
                println!("{summary}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

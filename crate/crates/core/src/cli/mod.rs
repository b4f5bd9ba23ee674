//! Command-line front end: `oseledets run ...`.

pub mod cache;
pub mod config;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
pub use config::{Command, Epsilon, Overrides, RunConfig, SplitIndex};
pub use pipeline::{execute, run, write_bundle, ReportBundle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_HORIZON: i32 = 3;
pub const EXIT_UNREACHABLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "oseledets", version, about = "Lyapunov spectra, Oseledets splittings and their regularity")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run a pipeline and write reports plus manifest.json to the output directory.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in system name.
    #[arg(long)]
    pub system: Option<String>,
    /// Matrix of the `constant` system, rows separated by `;`.
    #[arg(long = "A", value_name = "MATRIX")]
    pub a: Option<String>,
    /// Extra system parameters as a JSON object.
    #[arg(long)]
    pub params: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// spectrum | splitting | verify | regularity | holder | dichotomy
    #[arg(long)]
    pub command: Option<String>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// A positive number or `auto`.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// A split index or `all`.
    #[arg(long = "split-index")]
    pub split_index: Option<String>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long = "output-dir")]
    pub output_dir: Option<PathBuf>,
    /// Reuse per-point results from the on-disk cache.
    #[arg(long, overrides_with = "no_cache")]
    pub cache: bool,
    #[arg(long = "no-cache")]
    pub no_cache: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Half-width of the dichotomy window.
    #[arg(long)]
    pub window: Option<usize>,
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            system: self.system.clone(),
            a: self.a.clone(),
            params: self.params.clone(),
            seed: self.seed,
            command: self.command.clone(),
            horizon: self.horizon,
            samples: self.samples,
            delta: self.delta,
            epsilon: self.epsilon.clone(),
            split_index: self.split_index.clone(),
            eps0: self.eps0,
            output_dir: self.output_dir.clone(),
            cache: if self.cache {
                Some(true)
            } else if self.no_cache {
                Some(false)
            } else {
                None
            },
            threads: self.threads,
            window: self.window,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::ClusterAmbiguity { .. } | Error::DimensionCollapse { .. } => EXIT_HORIZON,
        Error::Unreachable(_) => EXIT_UNREACHABLE,
        _ => EXIT_FAILURE,
    }
}

/// Runs the parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let Cmd::Run(args) = cli.cmd;
    let cfg = match config::load(args.config.as_deref(), &args.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match run(&cfg) {
        Ok(b) => {
            for f in &b.files {
                println!("{}", cfg.output_dir.join(&f.0).display());
            }
            println!("{}", cfg.output_dir.join(pipeline::MANIFEST).display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            if code == EXIT_HORIZON {
                eprintln!("hint: increase horizon");
            } else if code == EXIT_UNREACHABLE {
                eprintln!("hint: increase delta or epsilon");
            }
            code
        }
    }
}

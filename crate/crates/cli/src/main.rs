//! `vpflow`: run volume-preserving flows and the experiments around them.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical failure,
//! 4 unclassified set, 5 failed deformation samples.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "vpflow", version, about = "Volume-preserving minimizing movements on the flat torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key; repeatable, later wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> CliResult<Config> {
        Config::load(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow; writes snapshots, trace.csv and run.meta to output_dir.
    Run(ConfigArgs),
    /// Classify a PBM snapshot as discs, complement discs or lamellae.
    Classify {
        snapshot: PathBuf,
        /// Limit perimeter; defaults to the perimeter of the snapshot.
        #[arg(long)]
        p_inf: Option<f64>,
        /// Volume; defaults to the volume of the snapshot.
        #[arg(long)]
        m: Option<f64>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Sweep random deformations of a disc or lamella; writes alexandrov.csv.
    Alexandrov(ConfigArgs),
    /// One step from the dyadic-ball counterexample and from the clean lamella.
    Counterexample(ConfigArgs),
    /// Fit an exponential rate to one column of a trace CSV.
    Rate {
        trace: PathBuf,
        #[arg(long, default_value = "alpha")]
        column: String,
        /// Fraction of the series, counted from the end, used in the fit.
        #[arg(long, default_value_t = 0.5)]
        tail: f64,
    },
    /// Print every configuration key with its default.
    Defaults,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => c.load().and_then(|cfg| commands::run(&cfg)),
        Command::Classify { snapshot, p_inf, m, config } => {
            config.load().and_then(|cfg| commands::classify(&cfg, snapshot, *p_inf, *m))
        }
        Command::Alexandrov(c) => c.load().and_then(|cfg| commands::alexandrov(&cfg)),
        Command::Counterexample(c) => c.load().and_then(|cfg| commands::counterexample(&cfg)),
        Command::Rate { trace, column, tail } => commands::rate(trace, column, *tail),
        Command::Defaults => {
            print!("{}", config::defaults_file());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vpflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

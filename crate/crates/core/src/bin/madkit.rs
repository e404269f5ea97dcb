use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use madkit::harness::commands::{self, CommonArgs, CriticalAlphaArgs};

#[derive(Parser)]
#[command(name = "madkit", version, about = "Multipolar magnetic anomaly detection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl From<Common> for CommonArgs {
    fn from(c: Common) -> Self {
        CommonArgs { config: c.config, seed: c.seed, trials: c.trials, out: c.out }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sampled bases and exact polynomial coefficients.
    Basis {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4, 5])]
        orders: Vec<usize>,
    },
    /// Monte Carlo ROC experiment.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Energy statistics and decisions for observation files.
    Detect {
        #[command(flatten)]
        common: Common,
        #[arg(long = "observation", required = true)]
        observations: Vec<PathBuf>,
    },
    /// Analytic ROC curves.
    Roc {
        #[command(flatten)]
        common: Common,
    },
    /// Critical energy fraction against SNR.
    CriticalAlpha {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 1e-2)]
        pfa: f64,
        #[arg(long, default_value_t = -30.0, allow_hyphen_values = true)]
        snr_min: f64,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        snr_max: f64,
        #[arg(long, default_value_t = 0.5)]
        snr_step: f64,
    },
    /// Optimal order map for order-3 receivers.
    Zones {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-2)]
        pfa: f64,
        #[arg(long, default_value_t = -22.0, allow_hyphen_values = true)]
        snr: f64,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
    /// Receiver order selection by information criteria.
    Select {
        #[command(flatten)]
        common: Common,
        #[arg(long = "observation")]
        observations: Vec<PathBuf>,
        /// Noise variance for observation files.
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Basis { common, orders } => commands::basis(&common.into(), &orders),
        Command::Simulate { common } => commands::simulate(&common.into()),
        Command::Detect { common, observations } => commands::detect(&common.into(), &observations),
        Command::Roc { common } => commands::roc(&common.into()),
        Command::CriticalAlpha { common, order, pfa, snr_min, snr_max, snr_step } => {
            commands::critical_alpha_sweep(&common.into(), &CriticalAlphaArgs { order, pfa, snr_min, snr_max, snr_step })
        }
        Command::Zones { common, pfa, snr, resolution } => commands::zones(&common.into(), pfa, snr, resolution),
        Command::Select { common, observations, variance } => commands::select(&common.into(), &observations, variance),
    };
    match result {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("madkit: error: {e}");
            ExitCode::FAILURE
        }
    }
}

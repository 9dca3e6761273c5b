//! `calib`: audit, recalibrate, certify and stress-test probability forecasts.
//!
//! Exit codes: 0 on success, 2 for invalid input or arguments, 3 for
//! internal failures such as a non-converging fit.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "calib", version, about = "Cutoff calibration error toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Isotonic,
    Platt,
    ModifiedPlatt,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cutoff error (with concentration radius), binned ECE and Lipschitz wCE
    /// of a `forecast,outcome[,oracle_mean]` CSV.
    Audit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Require the `oracle_mean` column.
        #[arg(long)]
        oracle: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a recalibration map; with `--test`, audit held-out data before and
    /// after applying it.
    Calibrate {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        input: PathBuf,
        /// Acceptance level of modified Platt scaling; defaults to
        /// `(20 + sqrt(2 ln 20)) / sqrt(n)`.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Write the bare map JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split the data, fit on the first half and accept the model only if
    /// its held-out cutoff error clears `c` minus the concentration radius.
    Certify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        shuffle_seed: Option<u64>,
        /// Recalibrate the forecasts on the first half; omit to certify the
        /// raw forecasts.
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decision risk of acting on `forecast >= tau`, and its gaps to the best
    /// wrapper and the best monotone wrapper, on an oracle CSV.
    Decide {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tau: f64,
        /// Also report the sign-prediction risk around this outcome level.
        #[arg(long)]
        ystar: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Misspecified logistic-regression simulation, one CSV row per run.
    Simulate {
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 500)]
        n_train: usize,
        #[arg(long, default_value_t = 10_000)]
        n_eval: usize,
        #[arg(long, default_value_t = 0.35)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Four-atom distribution on which population Platt scaling stays
    /// miscalibrated, with its Lipschitz wCE certificate.
    CounterexamplePlatt {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Audit {
            input,
            delta,
            bins,
            oracle,
            format,
            out,
        } => commands::audit(&input, delta, bins, oracle, format, out.as_deref()),
        Command::Calibrate {
            method,
            input,
            epsilon,
            test,
            delta,
            bins,
            out,
        } => commands::calibrate(method, &input, epsilon, test.as_deref(), delta, bins, out.as_deref()),
        Command::Certify {
            input,
            c,
            delta,
            shuffle_seed,
            method,
            out,
        } => commands::certify(&input, c, delta, shuffle_seed, method, out.as_deref()),
        Command::Decide { input, tau, ystar, out } => commands::decide(&input, tau, ystar, out.as_deref()),
        Command::Simulate {
            runs,
            n_train,
            n_eval,
            tau,
            seed,
            out,
        } => commands::simulate(runs, n_train, n_eval, tau, seed, out.as_deref()),
        Command::CounterexamplePlatt { out } => commands::counterexample_platt(out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("calib: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use capcert_cli::{
    cmd_capacity, cmd_certify, cmd_scan, exit_code, ChannelSpecFile, CliError, CliResult, Options,
    ScanDirection,
};
use clap::{Args, Parser, Subcommand};

/// Capacity, capacity-achieving sets and quadratic-decay certificates for
/// discrete memoryless channels.
#[derive(Parser, Debug)]
#[command(name = "capcert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Target optimality gap of the capacity solver, in nats.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Inputs whose divergence is within this of capacity count as optimal.
    #[arg(long = "support-tol", global = true, default_value_t = capcert_core::DEFAULT_SUPPORT_TOL)]
    support_tol: f64,
    /// Sampled directions for the certificate and points for verification.
    #[arg(long, global = true, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Allowed excess of I(p) over the certified bound, in nats.
    #[arg(long, global = true, default_value_t = 1e-9)]
    slack: f64,
    /// Report information quantities in bits.
    #[arg(long, global = true)]
    bits: bool,
    #[arg(long = "max-iter", global = true, default_value_t = 1_000_000)]
    max_iter: usize,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capacity and capacity-achieving output distribution.
    Capacity { file: PathBuf },
    /// Certificate (alpha, mu) with sampled verification.
    Certify { file: PathBuf },
    /// CSV of I, the quadratic model and the remainder bound along one direction.
    Scan {
        file: PathBuf,
        /// Index of the sampled valid direction to follow.
        #[arg(
            long = "direction-index",
            default_value_t = 0,
            conflicts_with = "direction"
        )]
        direction_index: usize,
        /// Explicit comma-separated direction, followed from the set representative.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        direction: Option<Vec<f64>>,
        /// Explicit comma-separated step sizes.
        #[arg(long = "t", value_delimiter = ',', conflicts_with_all = ["t_max", "steps"])]
        t: Option<Vec<f64>>,
        /// Largest step of the uniform grid.
        #[arg(long = "t-max", default_value_t = 0.1)]
        t_max: f64,
        /// Number of grid intervals.
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("CAPCERT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| {
        CliError::Parse(format!(
            "CAPCERT_THREADS must be a positive integer, got {value:?}"
        ))
    })?;
    if threads == 0 {
        return Err(CliError::Parse("CAPCERT_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Parse(format!("cannot configure worker threads: {e}")))
}

fn emit(text: &str, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<i32> {
    configure_threads()?;
    let c = &cli.common;
    let opts = Options {
        tol: c.tol,
        support_tol: c.support_tol,
        samples: c.samples,
        seed: c.seed,
        slack: c.slack,
        bits: c.bits,
        max_iter: c.max_iter,
    };
    let output = c.output.as_deref();
    match &cli.command {
        Command::Capacity { file } => {
            let report = cmd_capacity(&ChannelSpecFile::load(file)?, &opts)?;
            emit(&report.to_json(), output)?;
            Ok(0)
        }
        Command::Certify { file } => {
            let report = cmd_certify(&ChannelSpecFile::load(file)?, &opts)?;
            emit(&report.to_json(), output)?;
            let status = report.status.unwrap_or("unknown");
            eprintln!("status: {status}");
            Ok(exit_code(&report))
        }
        Command::Scan {
            file,
            direction_index,
            direction,
            t,
            t_max,
            steps,
        } => {
            let spec = ChannelSpecFile::load(file)?;
            let dir = match direction {
                Some(v) => ScanDirection::Explicit(v.clone()),
                None => ScanDirection::Sampled(*direction_index),
            };
            let ts = match t {
                Some(list) => list.clone(),
                None => {
                    let n = (*steps).max(1);
                    (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
                }
            };
            let table = cmd_scan(&spec, &opts, &dir, &ts)?;
            emit(&table.to_csv(), output)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

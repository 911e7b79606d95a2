mod bench;
mod check;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

/// Henkin function synthesis for DQBF instances in DQDIMACS format.
#[derive(Parser)]
#[command(name = "hensynth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize Henkin functions for one instance.
    ///
    /// Exit codes: 10 synthesized, 20 false, 0 unknown, 1 usage or I/O error.
    Synthesize(SynthesizeArgs),
    /// Run every instance in a directory and write a CSV of results.
    Bench(BenchArgs),
    /// Check a henkin-fn certificate against an instance.
    ///
    /// Exit codes: 0 valid, 2 invalid, 1 usage or I/O error.
    Verify {
        instance: PathBuf,
        certificate: PathBuf,
    },
    /// Decide a small instance by exhaustive search over function tables.
    ///
    /// Exit codes: 10 true, 20 false, 1 instance too large or I/O error.
    Decide { instance: PathBuf },
}

#[derive(Args, Clone, Debug)]
pub struct EngineArgs {
    /// Random seed; 0 derives one from the clock.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of samples to draw [default: min(10000, 50·(|X|+|Y|))].
    #[arg(long)]
    samples: Option<usize>,
    /// Verify/repair rounds before giving up.
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    /// Keep a single learning phase (no resampling fallback).
    #[arg(long)]
    strict_paper: bool,
}

impl EngineArgs {
    pub fn effective_seed(&self) -> u64 {
        if self.seed != 0 {
            return self.seed;
        }
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(1);
        nanos.max(1)
    }

    pub fn config(&self, seed: u64, timeout: Option<f64>) -> hensynth::SynthesisConfig {
        hensynth::SynthesisConfig {
            seed,
            samples: self.samples,
            timeout: timeout.map(std::time::Duration::from_secs_f64),
            max_iterations: self.max_iterations,
            strict_paper: self.strict_paper,
            ..hensynth::SynthesisConfig::default()
        }
    }
}

#[derive(Args)]
pub struct SynthesizeArgs {
    input: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Write the certificate here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write the sample table as CSV.
    #[arg(long)]
    dump_samples: Option<PathBuf>,
    /// Write one decision-tree listing per existential into this directory.
    #[arg(long)]
    dump_trees: Option<PathBuf>,
    /// Write one line per repair probe.
    #[arg(long)]
    trace_repairs: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    dir: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Per-instance limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Parallel workers.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// CSV destination [default: stdout].
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write cactus-plot data (instances solved vs cumulative seconds).
    #[arg(long)]
    cactus: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synthesize(args) => run::synthesize(&args),
        Command::Bench(args) => bench::bench(&args),
        Command::Verify {
            instance,
            certificate,
        } => check::verify(&instance, &certificate),
        Command::Decide { instance } => check::decide(&instance),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

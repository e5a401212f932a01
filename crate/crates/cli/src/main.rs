//! `vitalcam` command-line driver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::UsageError;

#[derive(Parser, Debug)]
#[command(name = "vitalcam", version, about = "Webcam heart rate and respiration rate: synthesize, estimate, ground truth, evaluate")]
struct Cli {
    /// Pipeline config file (`key = value` lines). Without it, estimate and
    /// groundtruth read DATASET/pipeline.conf when present.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for synthetic data [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (output file for convert-cascade)
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for per-trial processing [default: available parallelism]
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset (frames, manifest, physio CSV, truth)
    Synth(commands::synth::SynthArgs),
    /// Estimate HR and RR for every trial of a dataset
    Estimate(commands::estimate::EstimateArgs),
    /// Extract HR and RR ground truth from the physio CSV
    Groundtruth(commands::groundtruth::GroundtruthArgs),
    /// Join estimates with ground truth and write the report
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Convert an OpenCV haarcascade XML file to the cascade JSON format
    ConvertCascade(commands::convert::ConvertArgs),
}

pub struct Globals {
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(UsageError("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let g = Globals {
        config: cli.config,
        seed: cli.seed.unwrap_or(0),
        out: cli.out,
    };
    match cli.command {
        Command::Synth(a) => commands::synth::run(&g, a),
        Command::Estimate(a) => commands::estimate::run(&g, a),
        Command::Groundtruth(a) => commands::groundtruth::run(&g, a),
        Command::Evaluate(a) => commands::evaluate::run(&g, a),
        Command::ConvertCascade(a) => commands::convert::run(&g, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}

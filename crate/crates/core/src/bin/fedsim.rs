use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedsim::data::{generate_synthetic, write_leaf_json, SyntheticParams};
use fedsim::experiment::{run_experiment, ExperimentConfig};
use fedsim::nn::gradcheck::standard_suite;

const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "fedsim", version, about = "Federated backdoor attack and defense simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Root seed (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a synthetic non-iid dataset as LEAF JSON.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        clients: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 12)]
        side: usize,
    },
    /// Compare analytic gradients with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> fedsim::Result<()> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
            let output = run_experiment(&cfg, &dir)?;
            if let Some(last) = output.reports.last() {
                println!(
                    "{} rounds: main_acc {:.4}, backdoor_acc {:.4}, backdoor_cummean {:.4}",
                    output.reports.len(),
                    last.main_accuracy,
                    last.backdoor_accuracy,
                    last.cumulative_mean_backdoor
                );
            }
            println!("wrote {}", output.dir.display());
        }
        Command::Synth {
            out,
            clients,
            samples,
            seed,
            classes,
            side,
        } => {
            let fed = generate_synthetic(
                seed,
                &SyntheticParams {
                    num_clients: clients,
                    samples_per_client: samples,
                    class_count: classes,
                    input_side: side,
                },
            )?;
            write_leaf_json(&fed, &out)?;
            println!(
                "wrote {} clients x {} samples (+{} holdout) to {}",
                clients,
                samples,
                fed.holdout_main.len(),
                out.display()
            );
        }
        Command::Gradcheck { seed } => {
            let mut worst: f64 = 0.0;
            for (name, report) in standard_suite(seed)? {
                println!(
                    "{name}: {} coordinates, max relative error {:.3e}",
                    report.coordinates, report.max_relative_error
                );
                worst = worst.max(report.max_relative_error);
            }
            println!("max relative error {worst:.3e}");
            if worst >= GRADCHECK_TOLERANCE {
                return Err(fedsim::FedError::Internal(format!(
                    "gradient check failed: {worst:.3e} >= {GRADCHECK_TOLERANCE:e}"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

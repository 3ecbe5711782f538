//! Runs any experiment config and writes metrics.csv, config.resolved and
//! curves.svg, like `fedsim run`.
//!
//! cargo run --release --example run_config -- configs/desk_norm_clip.toml [out_dir]

use std::path::PathBuf;

use fedsim::experiment::{run_experiment, ExperimentConfig};

fn main() -> fedsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/desk_baseline.toml"));
    let cfg = ExperimentConfig::load(&config)?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
    let output = run_experiment(&cfg, &out)?;
    let last = output.reports.last().unwrap();
    println!(
        "{}: main {:.3}, backdoor {:.3}, cumulative {:.3}; wrote {}",
        cfg.name,
        last.main_accuracy,
        last.backdoor_accuracy,
        last.cumulative_mean_backdoor,
        output.dir.display()
    );
    Ok(())
}

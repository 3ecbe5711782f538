//! Every-round unconstrained attack under no defense, a tight norm clip, a
//! loose clip, and the loose clip plus Gaussian noise.
//!
//! cargo run --release --example defenses

use fedsim::defense::DefenseConfig;
use fedsim::experiment::{Experiment, ExperimentConfig};

const CONFIG: &str = include_str!("../configs/desk_attack_every_round.toml");

fn main() -> fedsim::Result<()> {
    let defenses = [
        ("none", DefenseConfig::NoDefense),
        ("clip 0.6", DefenseConfig::NormClip { norm_bound: 0.6 }),
        ("clip 50", DefenseConfig::NormClip { norm_bound: 50.0 }),
        ("clip 50 + noise 0.25", DefenseConfig::ClipAndNoise { norm_bound: 50.0, sigma: 0.25 }),
    ];
    for (name, defense) in defenses {
        let mut cfg = ExperimentConfig::from_toml(CONFIG)?;
        cfg.defense = defense;
        let reports = Experiment::prepare(&cfg)?.run()?;
        let last = reports.last().unwrap();
        println!(
            "{name:<22} backdoor cumulative mean {:.3}  main {:.3}",
            last.cumulative_mean_backdoor, last.main_accuracy
        );
    }
    Ok(())
}

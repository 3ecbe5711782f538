//! Unconstrained and norm-bounded attacks against the same norm clip. The
//! bounded attacker crafts an update that passes the clip untouched.
//!
//! cargo run --release --example norm_bounded_attack

use fedsim::defense::DefenseConfig;
use fedsim::experiment::{AttackKind, Experiment, ExperimentConfig};

const CONFIG: &str = r#"
name = "norm_bounded"
rounds = 60
seed = 2

[dataset]
kind = "synthetic"
num_clients = 100
samples_per_client = 50
seed = 2

[federation]
clients_per_round = 10

[backdoor]
num_targets = 5

[schedule]
kind = "fixed_frequency"
period = 1
"#;

fn main() -> fedsim::Result<()> {
    let bound = 1.0;
    for kind in [AttackKind::Unconstrained, AttackKind::NormBounded] {
        let mut cfg = ExperimentConfig::from_toml(CONFIG)?;
        cfg.attack.kind = kind;
        cfg.attack.norm_bound = Some(bound);
        cfg.defense = DefenseConfig::NormClip { norm_bound: bound };
        let reports = Experiment::prepare(&cfg)?.run()?;
        let last = reports.last().unwrap();
        println!(
            "{kind:?}: attacker norm before clipping {:.2}, backdoor cumulative mean {:.3}, main {:.3}",
            last.attacker_norm.unwrap_or(0.0),
            last.cumulative_mean_backdoor,
            last.main_accuracy
        );
    }
    Ok(())
}

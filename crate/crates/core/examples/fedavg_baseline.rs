//! Plain federated averaging on the synthetic non-iid data, no adversary.
//!
//! cargo run --release --example fedavg_baseline

use fedsim::experiment::{Experiment, ExperimentConfig};

const CONFIG: &str = r#"
name = "fedavg_baseline"
rounds = 40
seed = 3

[dataset]
kind = "synthetic"
num_clients = 100
samples_per_client = 50
seed = 3

[federation]
clients_per_round = 10
"#;

fn main() -> fedsim::Result<()> {
    let exp = Experiment::prepare(&ExperimentConfig::from_toml(CONFIG)?)?;
    println!("{} clients, {} parameters", exp.data.total_clients(), exp.arch.param_count());
    exp.run_with(|r| {
        if r.round % 5 == 4 {
            println!(
                "round {:>3}: main {:.3}  benign update norm p50 {:.3} p90 {:.3}",
                r.round,
                r.main_accuracy,
                r.benign_norm_p50.unwrap_or(f64::NAN),
                r.benign_norm_p90.unwrap_or(f64::NAN)
            );
        }
    })?;
    Ok(())
}

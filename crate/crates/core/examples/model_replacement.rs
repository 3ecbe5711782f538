//! Model replacement in one round: a boosted update lands the global model
//! on the attacker's w* when the honest updates are negligible. Then the
//! same attack over 30 rounds of real training.
//!
//! cargo run --release --example model_replacement

use fedsim::adversary::compute_boost_factor;
use fedsim::defense::DefenseConfig;
use fedsim::experiment::{Experiment, ExperimentConfig};
use fedsim::federation::{aggregate, ClientUpdate, FedConfig, ServerState};
use fedsim::nn::{ModelArch, ParamVector, TrainHyper};

const CONFIG: &str = r#"
name = "model_replacement"
rounds = 30
seed = 2

[dataset]
kind = "synthetic"
num_clients = 100
samples_per_client = 50
seed = 2

[federation]
clients_per_round = 10

[backdoor]
num_targets = 10

[schedule]
kind = "fixed_frequency"
period = 1

[attack]
kind = "unconstrained"
epochs = 20
"#;

fn main() -> fedsim::Result<()> {
    let arch = ModelArch::mlp_small(12, 12, 10);
    let mut rng = fedsim::seed::rng_from(1);
    let w_t = arch.init_params(&mut rng);
    let w_star = arch.init_params(&mut rng);
    let sizes = [50usize; 10];
    let beta = compute_boost_factor(sizes.iter().sum(), 1.0, sizes[0]);
    let mut updates: Vec<ClientUpdate> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| ClientUpdate {
            client_id: format!("client_{i}"),
            delta: ParamVector::zeros(w_t.len()),
            num_samples: n,
            is_malicious: false,
        })
        .collect();
    updates[0].delta = w_star.sub(&w_t).scale(beta);
    updates[0].is_malicious = true;
    let fed = FedConfig {
        total_clients: 100,
        clients_per_round: 10,
        server_lr: 1.0,
        client_hyper: TrainHyper::default(),
    };
    let next = aggregate(&ServerState::new(w_t, arch)?, &updates, &fed, &DefenseConfig::NoDefense, &mut rng)?;
    println!("beta = {beta}, max |w_(t+1) - w*| = {:.2e}", next.params.max_abs_diff(&w_star));

    let exp = Experiment::prepare(&ExperimentConfig::from_toml(CONFIG)?)?;
    exp.run_with(|r| {
        println!(
            "round {:>2}: main {:.3}  backdoor {:.3}  cumulative {:.3}  attacker norm {:.2}",
            r.round,
            r.main_accuracy,
            r.backdoor_accuracy,
            r.cumulative_mean_backdoor,
            r.attacker_norm.unwrap_or(0.0)
        )
    })?;
    Ok(())
}

//! Trains MlpSmall on the pooled synthetic data, with no federation, to show
//! the task is learnable.
//!
//! cargo run --release --example train_centralized

use fedsim::data::{generate_synthetic, SyntheticParams};
use fedsim::experiment::evaluate_main;
use fedsim::nn::{sgd_train, ModelArch, TrainHyper};

fn main() -> fedsim::Result<()> {
    let params = SyntheticParams {
        num_clients: 100,
        samples_per_client: 50,
        class_count: 10,
        input_side: 12,
    };
    let fed = generate_synthetic(1, &params)?;
    let arch = ModelArch::mlp_small(12, 12, 10);
    let mut w = arch.init_params(&mut fedsim::seed::rng_from(0));
    let pooled = fed.pooled();
    println!("{} training examples, {} holdout", pooled.len(), fed.holdout_main.len());
    for epoch in 1..=5 {
        w = sgd_train(&w, &arch, &pooled, &TrainHyper::new(1, 20, 0.1), epoch)?;
        println!("epoch {epoch}: holdout accuracy {:.3}", evaluate_main(&w, &arch, &fed.holdout_main)?);
    }
    Ok(())
}

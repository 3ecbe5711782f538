//! Compares analytic gradients of both architectures with central finite
//! differences.
//!
//! cargo run --release --example gradient_check

use fedsim::nn::gradcheck::{check_gradient, standard_suite};
use fedsim::nn::{Example, ModelArch};
use rand::Rng;

fn main() -> fedsim::Result<()> {
    for (name, report) in standard_suite(0)? {
        println!(
            "{name:<20} {:>4} coordinates  max relative error {:.2e}",
            report.coordinates, report.max_relative_error
        );
    }

    // The full-width CNN on a small canvas, sampled sparsely.
    let arch = ModelArch::cnn_emnist(12, 12, 10);
    let mut rng = fedsim::seed::rng_from(7);
    let mut params = arch.init_params(&mut rng);
    for v in params.as_mut_slice() {
        *v += rng.random_range(-0.05..0.05);
    }
    let examples: Vec<Example> = (0..3)
        .map(|i| Example::new((0..144).map(|_| rng.random::<f64>()).collect(), i))
        .collect();
    let refs: Vec<&Example> = examples.iter().collect();
    let report = check_gradient(&params, &arch, &refs, 1e-5, 100, 1)?;
    println!(
        "{:<20} {:>4} coordinates  max relative error {:.2e}  ({} parameters)",
        "cnn_emnist 12x12",
        report.coordinates,
        report.max_relative_error,
        arch.param_count()
    );
    Ok(())
}

//! Central finite-difference gradient checking.

use rand::seq::index::sample;

use super::arch::ModelArch;
use super::batch::{Batch, Example};
use super::model::{loss, loss_and_grad};
use super::params::ParamVector;
use crate::error::Result;
use crate::seed::rng_from;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub coordinates: usize,
    pub max_relative_error: f64,
}

/// Relative error with a floor on the denominator so coordinates whose true
/// gradient is ~0 are compared absolutely.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Relative error above which a coordinate is re-probed with smaller steps.
const KINK_RETRY_THRESHOLD: f64 = 1e-6;

/// Compares the analytic gradient against `(L(w + h e_i) - L(w - h e_i)) / 2h`
/// on `samples` randomly chosen coordinates (all of them if `samples` is
/// larger than the parameter count). Coordinates that disagree are retried
/// at `h/10` and `h/100` and keep their best agreement.
pub fn check_gradient(
    params: &ParamVector,
    arch: &ModelArch,
    examples: &[&Example],
    step: f64,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let batch = Batch::new(examples);
    let (_, grad) = loss_and_grad(params, arch, batch)?;
    let n = params.len();
    let coords: Vec<usize> = if samples >= n {
        (0..n).collect()
    } else {
        sample(&mut rng_from(seed), n, samples).into_vec()
    };
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for &i in &coords {
        let mut best = f64::INFINITY;
        // A step straddling a ReLU or max-pool kink gives a meaningless
        // difference, while a wrong gradient stays wrong at every step size.
        for h in [step, step / 10.0, step / 100.0] {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = loss(&probe, arch, batch)?;
            probe[i] = orig - h;
            let down = loss(&probe, arch, batch)?;
            probe[i] = orig;
            best = best.min(relative_error(grad[i], (up - down) / (2.0 * h)));
            if best < KINK_RETRY_THRESHOLD {
                break;
            }
        }
        worst = worst.max(best);
    }
    Ok(GradCheckReport {
        coordinates: coords.len(),
        max_relative_error: worst,
    })
}

/// Finite-difference step used by [`standard_suite`].
pub const STANDARD_STEP: f64 = 1e-5;
/// Coordinates sampled per architecture by [`standard_suite`].
pub const STANDARD_SAMPLES: usize = 200;

/// Checks both architectures (an MLP and a 1-filter / 4-unit CNN) on a
/// random 5-example batch, at initial weights plus small uniform jitter.
/// Returns `(name, report)` pairs.
pub fn standard_suite(seed: u64) -> Result<Vec<(&'static str, GradCheckReport)>> {
    use rand::Rng;

    let archs = [
        ("mlp_small", ModelArch::mlp_small(6, 6, 10)),
        ("cnn_emnist_reduced", ModelArch::cnn_with_widths(8, 8, 10, 1, 1, 4)),
    ];
    archs
        .into_iter()
        .enumerate()
        .map(|(i, (name, arch))| {
            let mut rng = rng_from(seed.wrapping_add(i as u64));
            // Zero-initialised biases can leave a dead unit's pre-activation
            // exactly on the ReLU kink, so check at a jittered point instead.
            let mut params = arch.init_params(&mut rng);
            for v in params.as_mut_slice() {
                *v += rng.random_range(-0.05..0.05);
            }
            let examples: Vec<Example> = (0..5)
                .map(|_| {
                    let input = (0..arch.input_len()).map(|_| rng.random::<f64>()).collect();
                    Example::new(input, rng.random_range(0..arch.classes()))
                })
                .collect();
            let refs: Vec<&Example> = examples.iter().collect();
            let report = check_gradient(&params, &arch, &refs, STANDARD_STEP, STANDARD_SAMPLES, seed)?;
            Ok((name, report))
        })
        .collect()
}

//! Seeded non-iid image data for desk-scale runs.
//!
//! Each class has a smooth random prototype. Each client applies its own
//! style to the prototypes: an intensity bias, a one-pixel translation and
//! an additive smooth texture. Clients share the label semantics but differ
//! in input distribution, and a client's examples are recognisable as its
//! own (the way a writer's handwriting is).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ClientDataset, FederatedDataset};
use crate::error::{FedError, Result};
use crate::nn::Example;
use crate::seed::{derive, rng_from, SeedPart};

/// Number of clean holdout examples generated per class.
pub const HOLDOUT_PER_CLASS: usize = 20;
/// Standard deviation of per-pixel Gaussian noise.
pub const PIXEL_NOISE_SD: f64 = 0.1;
/// Client intensity bias is drawn from `[-MAX_BIAS, MAX_BIAS]`.
pub const MAX_BIAS: f64 = 0.2;
/// Peak magnitude of the per-client texture.
pub const TEXTURE_AMPLITUDE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub num_clients: usize,
    pub samples_per_client: usize,
    pub class_count: usize,
    pub input_side: usize,
}

#[derive(Debug, Clone)]
struct Style {
    bias: f64,
    dx: isize,
    dy: isize,
    /// Additive pattern, empty for the neutral style.
    texture: Vec<f64>,
}

impl Style {
    fn neutral() -> Style {
        Style {
            bias: 0.0,
            dx: 0,
            dy: 0,
            texture: Vec::new(),
        }
    }
}

fn blur(img: &[f64], side: usize) -> Vec<f64> {
    let mut out = vec![0.0; img.len()];
    for y in 0..side {
        for x in 0..side {
            let mut acc = 0.0;
            let mut n = 0.0;
            for yy in y.saturating_sub(1)..=(y + 1).min(side - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(side - 1) {
                    acc += img[yy * side + xx];
                    n += 1.0;
                }
            }
            out[y * side + x] = acc / n;
        }
    }
    out
}

fn prototype<R: Rng>(rng: &mut R, side: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..side * side).map(|_| rng.random()).collect();
    let smooth = blur(&blur(&raw, side), side);
    let lo = smooth.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = smooth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    smooth.iter().map(|v| (v - lo) / span).collect()
}

fn render<R: Rng>(rng: &mut R, proto: &[f64], side: usize, style: &Style, noise: &Normal<f64>) -> Vec<f64> {
    let mut img = vec![0.0; side * side];
    for y in 0..side as isize {
        for x in 0..side as isize {
            let (sy, sx) = (y - style.dy, x - style.dx);
            let base = if (0..side as isize).contains(&sy) && (0..side as isize).contains(&sx) {
                proto[sy as usize * side + sx as usize]
            } else {
                0.0
            };
            img[y as usize * side + x as usize] = base;
        }
    }
    for (i, v) in img.iter_mut().enumerate() {
        let texture = style.texture.get(i).copied().unwrap_or(0.0);
        *v = (*v + style.bias + texture + noise.sample(rng)).clamp(0.0, 1.0);
    }
    img
}

/// Generates `num_clients` clients of `samples_per_client` label-balanced
/// examples each, plus a style-free holdout of [`HOLDOUT_PER_CLASS`] examples
/// per class. Client ids are `client_0000`, `client_0001`, ...
pub fn generate_synthetic(seed: u64, params: &SyntheticParams) -> Result<FederatedDataset> {
    let SyntheticParams {
        num_clients,
        samples_per_client,
        class_count,
        input_side,
    } = *params;
    if num_clients == 0 || samples_per_client == 0 || input_side == 0 {
        return Err(FedError::Precondition(
            "synthetic counts and input side must be positive".into(),
        ));
    }
    if class_count < 2 {
        return Err(FedError::Precondition("class_count must be at least 2".into()));
    }
    let noise = Normal::new(0.0, PIXEL_NOISE_SD).expect("constant sd is valid");

    let mut proto_rng = rng_from(derive(seed, &[SeedPart::Tag("prototypes")]));
    let prototypes: Vec<Vec<f64>> = (0..class_count)
        .map(|_| prototype(&mut proto_rng, input_side))
        .collect();

    let clients = (0..num_clients)
        .map(|k| {
            let mut rng = rng_from(derive(seed, &[SeedPart::Tag("client"), SeedPart::Index(k as u64)]));
            let style = Style {
                bias: rng.random_range(-MAX_BIAS..=MAX_BIAS),
                dx: rng.random_range(-1i32..=1) as isize,
                dy: rng.random_range(-1i32..=1) as isize,
                texture: prototype(&mut rng, input_side)
                    .into_iter()
                    .map(|v| (2.0 * v - 1.0) * TEXTURE_AMPLITUDE)
                    .collect(),
            };
            let examples = (0..samples_per_client)
                .map(|i| {
                    let label = i % class_count;
                    Example::new(render(&mut rng, &prototypes[label], input_side, &style, &noise), label)
                })
                .collect();
            ClientDataset {
                client_id: format!("client_{k:04}"),
                examples,
            }
        })
        .collect();

    let mut hold_rng = rng_from(derive(seed, &[SeedPart::Tag("holdout")]));
    let neutral = Style::neutral();
    let holdout_main = (0..class_count * HOLDOUT_PER_CLASS)
        .map(|i| {
            let label = i % class_count;
            Example::new(
                render(&mut hold_rng, &prototypes[label], input_side, &neutral, &noise),
                label,
            )
        })
        .collect();

    Ok(FederatedDataset {
        clients,
        holdout_main,
        class_count,
        input_shape: (input_side, input_side),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticParams {
        SyntheticParams {
            num_clients: 30,
            samples_per_client: 50,
            class_count: 10,
            input_side: 8,
        }
    }

    #[test]
    fn counts_and_balance() {
        let fed = generate_synthetic(1, &small()).unwrap();
        assert_eq!(fed.clients.len(), 30);
        assert!(fed.clients.iter().all(|c| c.num_samples() == 50));
        assert_eq!(fed.holdout_main.len(), 200);
        for c in &fed.clients {
            for label in 0..10 {
                assert_eq!(c.examples.iter().filter(|e| e.label == label).count(), 5);
            }
        }
        fed.validate().unwrap();
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate_synthetic(4, &small()).unwrap(), generate_synthetic(4, &small()).unwrap());
        assert_ne!(generate_synthetic(4, &small()).unwrap(), generate_synthetic(5, &small()).unwrap());
    }

    #[test]
    fn rejects_bad_counts() {
        let mut p = small();
        p.class_count = 1;
        assert!(generate_synthetic(0, &p).is_err());
        let mut p = small();
        p.num_clients = 0;
        assert!(generate_synthetic(0, &p).is_err());
    }
}

//! Server-side mitigation: per-update norm clipping and Gaussian noise on
//! the averaged update.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};
use crate::nn::{l2_norm, ParamVector};

/// `sigma` is a per-coordinate standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefenseConfig {
    #[default]
    NoDefense,
    NormClip { norm_bound: f64 },
    ClipAndNoise { norm_bound: f64, sigma: f64 },
}

impl DefenseConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DefenseConfig::NoDefense => Ok(()),
            DefenseConfig::NormClip { norm_bound } => check_bound(norm_bound),
            DefenseConfig::ClipAndNoise { norm_bound, sigma } => {
                check_bound(norm_bound)?;
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(FedError::Config(format!("sigma must be >= 0, got {sigma}")));
                }
                Ok(())
            }
        }
    }

    pub fn norm_bound(&self) -> Option<f64> {
        match *self {
            DefenseConfig::NoDefense => None,
            DefenseConfig::NormClip { norm_bound } | DefenseConfig::ClipAndNoise { norm_bound, .. } => {
                Some(norm_bound)
            }
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            DefenseConfig::ClipAndNoise { sigma, .. } => sigma,
            _ => 0.0,
        }
    }

    /// Per-update transform, applied before weighting.
    pub fn transform_update(&self, delta: &ParamVector) -> ParamVector {
        match self.norm_bound() {
            Some(m) => clip_update(delta, m),
            None => delta.clone(),
        }
    }

    /// Transform of the weighted average.
    pub fn transform_aggregate<R: Rng + ?Sized>(&self, mean: ParamVector, rng: &mut R) -> ParamVector {
        match self.sigma() {
            s if s > 0.0 => add_gaussian_noise(&mean, s, rng),
            _ => mean,
        }
    }
}

fn check_bound(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(FedError::Config(format!("norm bound must be positive, got {m}")))
    }
}

/// `delta / max(1, ‖delta‖₂ / M)`.
///
/// Inputs with norm at most `M` come back bit-identical, and the output norm
/// never exceeds `M`, so clipping twice equals clipping once.
pub fn clip_update(delta: &ParamVector, m: f64) -> ParamVector {
    assert!(m > 0.0, "clip_update needs a positive bound");
    let norm = l2_norm(delta);
    if norm <= m {
        return delta.clone();
    }
    let factor = norm / m;
    let mut out = ParamVector::from_vec(delta.iter().map(|v| v / factor).collect());
    let mut backoff = f64::EPSILON;
    while l2_norm(&out) > m {
        out = out.scale(1.0 - backoff);
        backoff = (backoff * 2.0).min(0.5);
    }
    out
}

/// Adds i.i.d. `N(0, sigma²)` to every coordinate. `sigma == 0` is the
/// identity and draws nothing.
pub fn add_gaussian_noise<R: Rng + ?Sized>(delta: &ParamVector, sigma: f64, rng: &mut R) -> ParamVector {
    if sigma == 0.0 {
        return delta.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated as finite and non-negative");
    ParamVector::from_vec(delta.iter().map(|v| v + normal.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    fn with_norm(n: f64, dim: usize) -> ParamVector {
        ParamVector::from_vec(vec![n / (dim as f64).sqrt(); dim])
    }

    #[test]
    fn small_update_untouched() {
        let d = with_norm(2.0, 9);
        assert_eq!(clip_update(&d, 5.0), d);
    }

    #[test]
    fn boosted_update_scaled_down() {
        let d = with_norm(300.0, 16);
        let c = clip_update(&d, 10.0);
        assert!((l2_norm(&c) - 10.0).abs() < 1e-9);
        assert!(l2_norm(&c) <= 10.0);
        for (a, b) in c.iter().zip(d.iter()) {
            assert!((a - b / 30.0).abs() < 1e-12);
        }
        assert_eq!(clip_update(&c, 10.0), c);
    }

    #[test]
    fn zero_vector_stays_zero() {
        let z = ParamVector::zeros(5);
        assert_eq!(clip_update(&z, 0.1), z);
    }

    #[test]
    fn zero_sigma_is_identity() {
        let d = with_norm(3.0, 4);
        assert_eq!(add_gaussian_noise(&d, 0.0, &mut rng_from(0)), d);
    }

    #[test]
    fn noise_is_seeded() {
        let d = ParamVector::zeros(100);
        let a = add_gaussian_noise(&d, 0.025, &mut rng_from(3));
        let b = add_gaussian_noise(&d, 0.025, &mut rng_from(3));
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn config_validation() {
        assert!(DefenseConfig::NormClip { norm_bound: 0.0 }.validate().is_err());
        assert!(DefenseConfig::ClipAndNoise { norm_bound: 1.0, sigma: -1.0 }.validate().is_err());
        assert!(DefenseConfig::ClipAndNoise { norm_bound: 5.0, sigma: 0.025 }.validate().is_ok());
    }
}

//! Shot and thermal noise: `I* = Poisson(I0) + Normal(0, sigma^2)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ElectronImage, SensorConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Poisson shot noise plus Gaussian thermal noise.
    PoissonGaussian,
    /// Identity: electrons pass through untouched (simulator flag for exact
    /// additivity checks).
    Off,
}

/// Sample the noisy electron image. Every element becomes
/// `Poisson(i0) + Normal(0, sigma^2)`; deterministic given the generator.
pub fn apply_noise<R: Rng>(
    i0: &ElectronImage,
    cfg: &SensorConfig,
    mode: NoiseMode,
    rng: &mut R,
) -> Result<ElectronImage> {
    cfg.validate()?;
    if let Some(bad) = i0.data.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Validation(format!(
            "electron image must be non-negative and finite, found {bad}"
        )));
    }
    if mode == NoiseMode::Off {
        return Ok(i0.clone());
    }
    let sigma = cfg.thermal_sigma;
    let data = i0
        .data
        .iter()
        .map(|&lambda| {
            let shot = sample_poisson(lambda, rng);
            let thermal = if sigma > 0.0 {
                sigma * sample_standard_normal(rng)
            } else {
                0.0
            };
            shot + thermal
        })
        .collect();
    Ok(ElectronImage {
        height: i0.height,
        width: i0.width,
        data,
    })
}

/// Mean threshold above which the Gaussian approximation replaces exact
/// Poisson sampling; the moment error there is negligible and the exact
/// product method would need ~lambda uniforms per draw.
const POISSON_NORMAL_SWITCH: f64 = 30.0;

/// Poisson sample: Knuth's product method below the switch point, rounded
/// and zero-clamped `Normal(lambda, lambda)` above it.
pub fn sample_poisson<R: Rng>(lambda: f64, rng: &mut R) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda < POISSON_NORMAL_SWITCH {
        let limit = (-lambda).exp();
        let mut k = 0u64;
        let mut p = 1.0f64;
        loop {
            p *= rng.gen::<f64>();
            if p <= limit {
                return k as f64;
            }
            k += 1;
        }
    } else {
        let z = sample_standard_normal(rng);
        (lambda + lambda.sqrt() * z).round().max(0.0)
    }
}

/// Box-Muller standard normal; two uniforms per draw keeps the stream layout
/// trivially reproducible.
pub fn sample_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

//! Synthetic scene content: per-pixel reflectance spectra.
//!
//! Physical scenes are replaced by random smooth spectra (low-order cosine
//! basis with seeded coefficients) laid out as a background gradient plus
//! random rectangles, which gives the structure-aware loss real edges to
//! work with.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::GRID_BINS;

/// Scene content as reflectance in [0,1] per pixel and wavelength bin.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    height: usize,
    width: usize,
    seed: u64,
    /// H*W*GRID_BINS, bin-major per pixel.
    reflectance: Vec<f32>,
}

impl SceneSpec {
    pub fn new(height: usize, width: usize, seed: u64, reflectance: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Validation("scene dimensions must be positive".into()));
        }
        if reflectance.len() != height * width * GRID_BINS {
            return Err(Error::Validation(format!(
                "reflectance length {} does not match {height}x{width}x{GRID_BINS}",
                reflectance.len()
            )));
        }
        if reflectance.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Validation(
                "reflectance values must lie in [0,1]".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            seed,
            reflectance,
        })
    }

    /// Uniform reflectance everywhere.
    pub fn constant(height: usize, width: usize, level: f32) -> Result<Self> {
        Self::new(
            height,
            width,
            0,
            vec![level; height * width * GRID_BINS],
        )
    }

    /// Seeded random scene: smooth background gradient between two random
    /// spectra plus 4-8 random rectangles with their own spectra.
    pub fn random(height: usize, width: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bg_a = random_spectrum(&mut rng);
        let bg_b = random_spectrum(&mut rng);
        let horizontal = rng.gen::<bool>();

        let mut refl = vec![0.0f32; height * width * GRID_BINS];
        for y in 0..height {
            for x in 0..width {
                let t = if horizontal {
                    x as f32 / (width.max(2) - 1) as f32
                } else {
                    y as f32 / (height.max(2) - 1) as f32
                };
                let base = (y * width + x) * GRID_BINS;
                for k in 0..GRID_BINS {
                    refl[base + k] = bg_a[k] * (1.0 - t) + bg_b[k] * t;
                }
            }
        }

        let n_rects = rng.gen_range(5..=9);
        for _ in 0..n_rects {
            let spec = random_spectrum(&mut rng);
            let rh = rng.gen_range(height.div_ceil(8)..=height.div_ceil(2).max(1));
            let rw = rng.gen_range(width.div_ceil(8)..=width.div_ceil(2).max(1));
            let y0 = rng.gen_range(0..height.saturating_sub(rh).max(1));
            let x0 = rng.gen_range(0..width.saturating_sub(rw).max(1));
            for y in y0..(y0 + rh).min(height) {
                for x in x0..(x0 + rw).min(width) {
                    let base = (y * width + x) * GRID_BINS;
                    refl[base..base + GRID_BINS].copy_from_slice(&spec);
                }
            }
        }
        Self::new(height, width, seed, refl)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Reflectance spectrum of the pixel with flat index `px`.
    pub fn reflectance_at(&self, px: usize) -> &[f32] {
        &self.reflectance[px * GRID_BINS..(px + 1) * GRID_BINS]
    }
}

/// Smooth random spectrum: mean level plus four cosine harmonics, clamped to
/// [0.02, 0.98] so nothing is pure black or a perfect mirror.
fn random_spectrum<R: Rng>(rng: &mut R) -> [f32; GRID_BINS] {
    let mean = rng.gen_range(0.15..0.8);
    let mut coeffs = [0.0f32; 4];
    let mut phases = [0.0f32; 4];
    for j in 0..4 {
        coeffs[j] = rng.gen_range(-0.35..0.35) / (0.5 * j as f32 + 1.0);
        phases[j] = rng.gen_range(0.0..std::f32::consts::TAU);
    }
    let mut out = [0.0f32; GRID_BINS];
    for (k, o) in out.iter_mut().enumerate() {
        let u = k as f32 / (GRID_BINS - 1) as f32;
        let mut v = mean;
        for j in 0..4 {
            v += coeffs[j] * ((j as f32 + 1.0) * std::f32::consts::PI * u + phases[j]).cos();
        }
        *o = v.clamp(0.02, 0.98);
    }
    out
}

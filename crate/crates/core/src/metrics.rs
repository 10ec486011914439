//! Evaluation-only image quality metrics: PSNR, SSIM and colourfulness.
//!
//! These run on rasters in plain f64 and are deliberately independent of the
//! differentiable loss implementations; the two SSIM routes are cross-checked
//! against each other in tests. By default the CLI evaluates on 8-bit
//! quantized values for parity with common practice; the float domain is a
//! flag away.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ColorSpace, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricDomain {
    /// Round both images to 8-bit codes before scoring.
    Quantized8,
    /// Score raw float values.
    Float,
}

/// Per-image scores. `psnr_db` is `None` for identical images (infinite
/// PSNR); JSON renders that as `null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageScore {
    pub name: String,
    pub psnr_db: Option<f64>,
    pub ssim: f64,
    pub colourfulness: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricMeans {
    /// Mean over finite PSNR entries; `None` when every pair was identical.
    pub psnr_db: Option<f64>,
    pub ssim: f64,
    pub colourfulness: f64,
    pub infinite_psnr_images: usize,
}

/// Report consumed by the CLI eval command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub domain: MetricDomain,
    pub per_image: Vec<ImageScore>,
    pub mean: MetricMeans,
}

impl MetricReport {
    pub fn from_scores(domain: MetricDomain, per_image: Vec<ImageScore>) -> Self {
        let finite: Vec<f64> = per_image.iter().filter_map(|s| s.psnr_db).collect();
        let infinite = per_image.len() - finite.len();
        let psnr = if finite.is_empty() {
            None
        } else {
            Some(finite.iter().sum::<f64>() / finite.len() as f64)
        };
        let n = per_image.len().max(1) as f64;
        let ssim = per_image.iter().map(|s| s.ssim).sum::<f64>() / n;
        let colour = per_image.iter().map(|s| s.colourfulness).sum::<f64>() / n;
        Self {
            domain,
            per_image,
            mean: MetricMeans {
                psnr_db: psnr,
                ssim,
                colourfulness: colour,
                infinite_psnr_images: infinite,
            },
        }
    }
}

fn quantize8(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

fn prepared(r: &Raster, domain: MetricDomain) -> Vec<f64> {
    match domain {
        MetricDomain::Float => r.data().iter().map(|&v| v as f64).collect(),
        MetricDomain::Quantized8 => r.data().iter().map(|&v| quantize8(v as f64)).collect(),
    }
}

/// Peak signal-to-noise ratio in dB: `10 log10(peak^2 / MSE)`.
/// Identical images return `None` (the infinite-PSNR sentinel).
pub fn psnr(a: &Raster, b: &Raster, peak: f64, domain: MetricDomain) -> Result<Option<f64>> {
    if !a.same_shape(b) {
        return Err(Error::Validation("psnr: shape mismatch".into()));
    }
    let av = prepared(a, domain);
    let bv = prepared(b, domain);
    let mse = av
        .iter()
        .zip(&bv)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / av.len() as f64;
    if mse == 0.0 {
        return Ok(None);
    }
    Ok(Some(10.0 * (peak * peak / mse).log10()))
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Mean local SSIM over valid 11x11 Gaussian windows, averaged across
/// channels. Same definition as the differentiable loss; straight-line f64
/// implementation.
pub fn ssim_metric(a: &Raster, b: &Raster, domain: MetricDomain) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Validation("ssim: shape mismatch".into()));
    }
    let (h, w, c) = (a.height(), a.width(), a.channels());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Validation(format!(
            "ssim: image {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )));
    }
    let av = prepared(a, domain);
    let bv = prepared(b, domain);

    // window weights
    let r = (SSIM_WINDOW / 2) as isize;
    let mut kernel = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    let mut ksum = 0.0;
    for y in -r..=r {
        for x in -r..=r {
            let v = (-((y * y + x * x) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            kernel.push(v);
            ksum += v;
        }
    }
    for k in &mut kernel {
        *k /= ksum;
    }

    let (oh, ow) = (h - SSIM_WINDOW + 1, w - SSIM_WINDOW + 1);
    let mut total = 0.0;
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut mu_a = 0.0;
                let mut mu_b = 0.0;
                let mut aa = 0.0;
                let mut bb = 0.0;
                let mut ab = 0.0;
                let mut ki = 0;
                for ky in 0..SSIM_WINDOW {
                    for kx in 0..SSIM_WINDOW {
                        let i = ((oy + ky) * w + ox + kx) * c + ch;
                        let kv = kernel[ki];
                        ki += 1;
                        mu_a += kv * av[i];
                        mu_b += kv * bv[i];
                        aa += kv * av[i] * av[i];
                        bb += kv * bv[i] * bv[i];
                        ab += kv * av[i] * bv[i];
                    }
                }
                let var_a = aa - mu_a * mu_a;
                let var_b = bb - mu_b * mu_b;
                let cov = ab - mu_a * mu_b;
                let num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2);
                let den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2);
                total += num / den;
            }
        }
    }
    Ok(total / (oh * ow * c) as f64)
}

/// Hasler-Suesstrunk colourfulness on the opponent channels, computed on the
/// [0,255] scale: `sqrt(var_rg + var_yb) + 0.3 sqrt(mean_rg^2 + mean_yb^2)`.
pub fn colourfulness(rgb: &Raster, domain: MetricDomain) -> Result<f64> {
    if rgb.colorspace() != ColorSpace::Rgb {
        return Err(Error::Validation("colourfulness expects an RGB raster".into()));
    }
    let v = prepared(rgb, domain);
    let n = (rgb.height() * rgb.width()) as f64;
    let mut sum_rg = 0.0;
    let mut sum_yb = 0.0;
    let mut sum_rg2 = 0.0;
    let mut sum_yb2 = 0.0;
    for px in v.chunks_exact(3) {
        let (r, g, b) = (px[0] * 255.0, px[1] * 255.0, px[2] * 255.0);
        let rg = r - g;
        let yb = 0.5 * (r + g) - b;
        sum_rg += rg;
        sum_yb += yb;
        sum_rg2 += rg * rg;
        sum_yb2 += yb * yb;
    }
    let mean_rg = sum_rg / n;
    let mean_yb = sum_yb / n;
    let var_rg = (sum_rg2 / n - mean_rg * mean_rg).max(0.0);
    let var_yb = (sum_yb2 / n - mean_yb * mean_yb).max(0.0);
    Ok((var_rg + var_yb).sqrt() + 0.3 * (mean_rg * mean_rg + mean_yb * mean_yb).sqrt())
}

/// Score one prediction/reference pair.
pub fn score_pair(
    name: &str,
    pred: &Raster,
    reference: &Raster,
    domain: MetricDomain,
) -> Result<ImageScore> {
    Ok(ImageScore {
        name: name.to_string(),
        psnr_db: psnr(pred, reference, 1.0, domain)?,
        ssim: ssim_metric(pred, reference, domain)?,
        colourfulness: colourfulness(pred, domain)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rgb(h: usize, w: usize, data: Vec<f32>) -> Raster {
        Raster::new(h, w, 3, ColorSpace::Rgb, data).unwrap()
    }

    fn rand_rgb(seed: u64, h: usize, w: usize) -> Raster {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rgb(h, w, (0..h * w * 3).map(|_| rng.gen_range(0.0..1.0)).collect())
    }

    #[test]
    fn psnr_of_uniform_offset_is_exactly_20db() {
        let a = rgb(8, 8, vec![0.4; 192]);
        let b = rgb(8, 8, vec![0.5; 192]);
        let v = psnr(&a, &b, 1.0, MetricDomain::Float).unwrap().unwrap();
        assert!((v - 20.0).abs() < 1e-6, "psnr {v}");
    }

    #[test]
    fn psnr_identical_is_infinite_sentinel() {
        let a = rand_rgb(1, 8, 8);
        assert!(psnr(&a, &a, 1.0, MetricDomain::Float).unwrap().is_none());
    }

    #[test]
    fn psnr_matches_direct_formula_oracle() {
        let a = rand_rgb(2, 8, 8);
        let b = rand_rgb(3, 8, 8);
        let mse = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| ((x as f64) - (y as f64)).powi(2))
            .sum::<f64>()
            / 192.0;
        let oracle = 10.0 * (1.0 / mse).log10();
        let got = psnr(&a, &b, 1.0, MetricDomain::Float).unwrap().unwrap();
        assert!((got - oracle).abs() < 1e-9);
    }

    #[test]
    fn psnr_symmetric_and_monotone_in_noise() {
        let a = rand_rgb(4, 8, 8);
        let mut prev = f64::INFINITY;
        for amp in [0.01f32, 0.05, 0.1, 0.2] {
            let data: Vec<f32> = a
                .data()
                .iter()
                .enumerate()
                .map(|(i, &v)| (v + amp * if i % 2 == 0 { 1.0 } else { -1.0 }).clamp(0.0, 1.0))
                .collect();
            let b = rgb(8, 8, data);
            let p = psnr(&a, &b, 1.0, MetricDomain::Float).unwrap().unwrap();
            let q = psnr(&b, &a, 1.0, MetricDomain::Float).unwrap().unwrap();
            assert!((p - q).abs() < 1e-12);
            assert!(p < prev, "psnr must fall as noise grows");
            prev = p;
        }
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = rand_rgb(5, 16, 16);
        let v = ssim_metric(&a, &a, MetricDomain::Float).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn ssim_constant_closed_form() {
        let a = rgb(12, 12, vec![0.0; 432]);
        let b = rgb(12, 12, vec![1.0; 432]);
        let v = ssim_metric(&a, &b, MetricDomain::Float).unwrap();
        assert!((v - 9.999e-5).abs() < 1e-8, "{v}");
    }

    #[test]
    fn ssim_metric_agrees_with_differentiable_loss() {
        use crate::autodiff::{Shape, Tensor};
        for seed in 0..20u64 {
            let a = rand_rgb(100 + seed, 14, 14);
            let b = rand_rgb(200 + seed, 14, 14);
            let m = ssim_metric(&a, &b, MetricDomain::Float).unwrap();
            let ta = Tensor::<f64>::constant(
                Shape::new(1, 14, 14, 3),
                a.data().iter().map(|&v| v as f64).collect(),
            );
            let tb = Tensor::<f64>::constant(
                Shape::new(1, 14, 14, 3),
                b.data().iter().map(|&v| v as f64).collect(),
            );
            let l = crate::loss::ssim_loss(&ta, &tb).unwrap().item();
            assert!((m - l).abs() < 1e-6, "seed {seed}: {m} vs {l}");
        }
    }

    #[test]
    fn gray_images_have_zero_colour() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data: Vec<f32> = (0..64)
            .flat_map(|_| {
                let v: f32 = rng.gen_range(0.0..1.0);
                [v, v, v]
            })
            .collect();
        let g = rgb(8, 8, data);
        assert_eq!(colourfulness(&g, MetricDomain::Float).unwrap(), 0.0);
    }

    #[test]
    fn constant_red_matches_formula() {
        let r = rgb(8, 8, [1.0f32, 0.0, 0.0].repeat(64));
        let v = colourfulness(&r, MetricDomain::Float).unwrap();
        // 0.3 * sqrt(255^2 + 127.5^2)
        let expect = 0.3 * (255.0f64 * 255.0 + 127.5 * 127.5).sqrt();
        assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
        assert!((v - 85.5296).abs() < 0.01);
    }

    #[test]
    fn colourfulness_matches_brute_force_oracle() {
        let x = rand_rgb(7, 10, 10);
        let vals: Vec<f64> = x.data().iter().map(|&v| v as f64 * 255.0).collect();
        let n = 100.0;
        let rgs: Vec<f64> = vals.chunks_exact(3).map(|p| p[0] - p[1]).collect();
        let ybs: Vec<f64> = vals
            .chunks_exact(3)
            .map(|p| 0.5 * (p[0] + p[1]) - p[2])
            .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
        };
        let oracle = (var(&rgs) + var(&ybs)).sqrt()
            + 0.3 * (mean(&rgs).powi(2) + mean(&ybs).powi(2)).sqrt();
        let got = colourfulness(&x, MetricDomain::Float).unwrap();
        assert!((got - oracle).abs() < 1e-6);
    }

    #[test]
    fn colourfulness_invariant_to_pixel_permutation() {
        let x = rand_rgb(8, 6, 6);
        let mut pixels: Vec<[f32; 3]> = x.data().chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
        pixels.reverse();
        let y = rgb(6, 6, pixels.into_iter().flatten().collect());
        let a = colourfulness(&x, MetricDomain::Float).unwrap();
        let b = colourfulness(&y, MetricDomain::Float).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn report_means_are_arithmetic() {
        let scores = vec![
            ImageScore {
                name: "a".into(),
                psnr_db: Some(20.0),
                ssim: 0.6,
                colourfulness: 10.0,
            },
            ImageScore {
                name: "b".into(),
                psnr_db: Some(30.0),
                ssim: 1.0,
                colourfulness: 30.0,
            },
            ImageScore {
                name: "c".into(),
                psnr_db: None,
                ssim: 1.0,
                colourfulness: 20.0,
            },
        ];
        let rep = MetricReport::from_scores(MetricDomain::Float, scores);
        assert_eq!(rep.mean.psnr_db, Some(25.0));
        assert!((rep.mean.ssim - 0.8666666666666667).abs() < 1e-12);
        assert_eq!(rep.mean.colourfulness, 20.0);
        assert_eq!(rep.mean.infinite_psnr_images, 1);
    }

    #[test]
    fn non_rgb_rejected_for_colourfulness() {
        let g = Raster::new(4, 4, 1, ColorSpace::Gray, vec![0.5; 16]).unwrap();
        assert!(colourfulness(&g, MetricDomain::Float).is_err());
    }
}

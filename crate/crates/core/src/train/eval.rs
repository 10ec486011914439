//! Trained-pipeline evaluation on a dataset split.

use std::path::Path;

use serde::Serialize;

use crate::dataset::{load_sample, Manifest};
use crate::error::Result;
use crate::image::{rgb_to_hsv, rgb_to_yuv, Raster};
use crate::metrics::{psnr, ssim_metric, MetricDomain};
use crate::nets::{raster_to_tensor, tensor_to_raster, PipeColorSpace, Pipeline};
use crate::sensor::Phase;

/// Luminance channel of an RGB raster under the pipeline's working colour
/// space: Y for YUV, V for HSV.
pub fn luminance_of(rgb: &Raster, cs: PipeColorSpace) -> Result<Raster> {
    match cs {
        PipeColorSpace::Hsv => rgb_to_hsv(rgb)?.channel(2),
        _ => rgb_to_yuv(rgb)?.channel(0),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleEval {
    pub scene_id: u64,
    pub phase: String,
    /// Final output vs reference.
    pub final_psnr: Option<f64>,
    pub final_ssim: f64,
    /// NIR estimate vs ground truth, against the mixed-as-NIR baseline.
    pub nir_psnr: Option<f64>,
    pub nir_baseline_psnr: Option<f64>,
    /// Night only: restored luminance vs long-exposure reference, against
    /// the unrestored estimated-VIS luminance.
    pub restored_y_psnr: Option<f64>,
    pub unrestored_y_psnr: Option<f64>,
    /// Chroma MAE of the final output vs the chroma of the raw VIS estimate,
    /// both against the reference chroma.
    pub chroma_mae: Option<f64>,
    pub chroma_baseline_mae: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitEvaluation {
    pub samples: Vec<SampleEval>,
    pub mean_final_psnr: Option<f64>,
    pub mean_final_ssim: f64,
    pub mean_nir_gain_db: Option<f64>,
    pub mean_night_restoration_gain_db: Option<f64>,
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let finite: Vec<f64> = values.flatten().collect();
    if finite.is_empty() {
        None
    } else {
        Some(finite.iter().sum::<f64>() / finite.len() as f64)
    }
}

fn chroma_mae(pred: &Raster, reference: &Raster) -> Result<f64> {
    let pu = rgb_to_yuv(pred)?;
    let ru = rgb_to_yuv(reference)?;
    let mut acc = 0.0;
    let mut n = 0usize;
    for (p, r) in pu.data().chunks_exact(3).zip(ru.data().chunks_exact(3)) {
        acc += (p[1] as f64 - r[1] as f64).abs() + (p[2] as f64 - r[2] as f64).abs();
        n += 2;
    }
    Ok(acc / n as f64)
}

/// Run the pipeline over the listed scenes (both phases) and score it.
pub fn evaluate_pipeline(
    root: &Path,
    manifest: &Manifest,
    pipeline: &Pipeline<f32>,
    ids: &[u64],
    domain: MetricDomain,
) -> Result<SplitEvaluation> {
    let mut samples = Vec::new();
    for &id in ids {
        for phase in [Phase::Day, Phase::Night] {
            let s = load_sample(root, manifest, id, phase)?;
            let mixed = raster_to_tensor::<f32>(&s.mixed);
            let out = pipeline.forward(&mixed)?;
            let final_rgb = tensor_to_raster(&out.final_rgb, crate::image::ColorSpace::Rgb)?;
            let reference = s.reference_rgb();

            let final_psnr = psnr(&final_rgb, reference, 1.0, domain)?;
            let final_ssim = ssim_metric(&final_rgb, reference, domain)?;

            let (nir_psnr, nir_baseline_psnr) = match &out.nir_est {
                Some(nir_est) => {
                    let est = tensor_to_raster(nir_est, crate::image::ColorSpace::Rgb)?;
                    (
                        psnr(&est, &s.nir, 1.0, domain)?,
                        psnr(&s.mixed, &s.nir, 1.0, domain)?,
                    )
                }
                None => (None, None),
            };

            let (restored_y, unrestored_y) = if phase == Phase::Night {
                match (&out.y_restored, &out.vis_est) {
                    (Some(yr), Some(ve)) => {
                        let cs = pipeline.config.color_space;
                        let y_ref = luminance_of(reference, cs)?;
                        let y_restored =
                            tensor_to_raster(yr, crate::image::ColorSpace::Gray)?;
                        let vis_est = tensor_to_raster(ve, crate::image::ColorSpace::Rgb)?;
                        let y_unrestored = luminance_of(&vis_est, cs)?;
                        (
                            psnr(&y_restored, &y_ref, 1.0, domain)?,
                            psnr(&y_unrestored, &y_ref, 1.0, domain)?,
                        )
                    }
                    _ => (None, None),
                }
            } else {
                (None, None)
            };

            let (cm, cbm) = if phase == Phase::Night {
                match &out.vis_est {
                    Some(ve) => {
                        let vis_est = tensor_to_raster(ve, crate::image::ColorSpace::Rgb)?;
                        (
                            Some(chroma_mae(&final_rgb, reference)?),
                            Some(chroma_mae(&vis_est, reference)?),
                        )
                    }
                    None => (Some(chroma_mae(&final_rgb, reference)?), None),
                }
            } else {
                (None, None)
            };

            samples.push(SampleEval {
                scene_id: id,
                phase: phase.as_str().to_string(),
                final_psnr,
                final_ssim,
                nir_psnr,
                nir_baseline_psnr,
                restored_y_psnr: restored_y,
                unrestored_y_psnr: unrestored_y,
                chroma_mae: cm,
                chroma_baseline_mae: cbm,
            });
        }
    }

    let mean_final_psnr = mean_opt(samples.iter().map(|s| s.final_psnr));
    let mean_final_ssim =
        samples.iter().map(|s| s.final_ssim).sum::<f64>() / samples.len().max(1) as f64;
    let nir_gain = mean_opt(samples.iter().map(|s| {
        match (s.nir_psnr, s.nir_baseline_psnr) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        }
    }));
    let night_gain = mean_opt(samples.iter().map(|s| {
        match (s.restored_y_psnr, s.unrestored_y_psnr) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        }
    }));

    Ok(SplitEvaluation {
        samples,
        mean_final_psnr,
        mean_final_ssim,
        mean_nir_gain_db: nir_gain,
        mean_night_restoration_gain_db: night_gain,
    })
}

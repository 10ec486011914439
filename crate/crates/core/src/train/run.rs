//! The optimization loop: batches, augmentation, Adam, plateau scheduling,
//! checkpointing and the loss curve.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamParams, AdamState};
use super::augment::augment;
use super::eval::luminance_of;
use super::schedule::PlateauSchedule;
use super::TrainConfig;
use crate::autodiff::{backward, mul_scalar, Scalar, Tensor};
use crate::dataset::{derive_seed, load_sample, Manifest, TrainSample};
use crate::error::{Error, Result};
use crate::loss::{
    restoration_loss, separation_loss, total_loss, LossToggles, LossWeights, PerceptualExtractor,
};
use crate::nets::{raster_to_tensor, save_checkpoint, PipeColorSpace, Pipeline};
use crate::sensor::Phase;

#[derive(Debug, Clone)]
pub struct EpochLoss {
    pub epoch: usize,
    pub total: f64,
    pub separation: f64,
    pub restoration: f64,
    pub lr: f64,
}

#[derive(Debug)]
pub struct TrainArtifacts {
    pub loss_curve: Vec<EpochLoss>,
    pub checkpoint_prefix: PathBuf,
    pub curve_path: PathBuf,
}

/// Per-sample losses. Returns the scalar graph root plus the separation and
/// restoration components as plain numbers for reporting.
pub fn sample_losses<S: Scalar>(
    pipeline: &Pipeline<S>,
    extractor: &PerceptualExtractor<S>,
    sample: &TrainSample,
    weights: &LossWeights,
    toggles: &LossToggles,
) -> Result<(Tensor<S>, f64, f64)> {
    let mixed = raster_to_tensor::<S>(&sample.mixed);
    let out = pipeline.forward(&mixed)?;

    let sep = if let (Some(nir_est), Some(vis_est)) = (&out.nir_est, &out.vis_est) {
        let nir_gt = raster_to_tensor::<S>(&sample.nir);
        let vis_gt = raster_to_tensor::<S>(&sample.vis);
        separation_loss(nir_est, vis_est, &nir_gt, &vis_gt, &mixed, weights, toggles)?
    } else {
        Tensor::scalar(S::zero())
    };

    let reference = sample.reference_rgb();
    let rgb_gt = raster_to_tensor::<S>(reference);
    let y_gt = match pipeline.config.color_space {
        PipeColorSpace::Rgb => None,
        cs if out.y_restored.is_some() => {
            Some(raster_to_tensor::<S>(&luminance_of(reference, cs)?))
        }
        _ => None,
    };
    let nir_guide = out.nir_est.clone().unwrap_or_else(|| mixed.clone());
    let res = restoration_loss(
        &out.final_rgb,
        out.y_restored.as_ref(),
        &rgb_gt,
        y_gt.as_ref(),
        &nir_guide,
        extractor,
        weights,
        toggles,
    )?;

    let sep_v = sep.item().to_f64();
    let res_v = res.item().to_f64();
    Ok((total_loss(&sep, &res, weights), sep_v, res_v))
}

/// Gather all training samples (both phases) for the split.
pub fn load_training_set(root: &Path, manifest: &Manifest) -> Result<Vec<TrainSample>> {
    let mut samples = Vec::new();
    for &id in &manifest.split.train {
        samples.push(load_sample(root, manifest, id, Phase::Day)?);
        samples.push(load_sample(root, manifest, id, Phase::Night)?);
    }
    if samples.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    if !samples.iter().any(|s| s.phase == Phase::Day)
        || !samples.iter().any(|s| s.phase == Phase::Night)
    {
        return Err(Error::Data("training needs both day and night samples".into()));
    }
    Ok(samples)
}

/// Train the pipeline on the manifest's training split. Deterministic given
/// the config seed. Writes a checkpoint (updated every epoch, final state on
/// success), optimizer state and a CSV loss curve next to `out_prefix`.
pub fn train(
    root: &Path,
    manifest: &Manifest,
    pipeline: &Pipeline<f32>,
    weights: &LossWeights,
    toggles: &LossToggles,
    cfg: &TrainConfig,
    out_prefix: &Path,
) -> Result<TrainArtifacts> {
    weights.validate()?;
    let samples = load_training_set(root, manifest)?;
    let div = 1usize << pipeline.config.depth;
    if cfg.patch_size % div != 0 {
        return Err(Error::Config(format!(
            "patch size {} must divide by 2^{}",
            cfg.patch_size, pipeline.config.depth
        )));
    }

    let extractor = PerceptualExtractor::<f32>::new();
    let params = pipeline.params();
    let mut adam = AdamState::new(&params);
    let hp = AdamParams {
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        eps: cfg.eps,
    };
    let mut schedule = PlateauSchedule::new(
        cfg.lr,
        cfg.plateau_patience,
        cfg.lr_decay,
        cfg.improvement_threshold,
    );

    // last-good state for NaN aborts
    save_checkpoint(pipeline, out_prefix)?;

    let phase1_epochs = if cfg.two_phase && pipeline.separation.is_some() {
        cfg.epochs / 2
    } else {
        0
    };

    let mut curve: Vec<EpochLoss> = Vec::with_capacity(cfg.epochs);
    let mut lr = cfg.lr;
    for epoch in 0..cfg.epochs {
        let effective_weights = if epoch < phase1_epochs {
            LossWeights {
                beta: 0.0,
                ..weights.clone()
            }
        } else {
            weights.clone()
        };

        // seeded shuffle of sample indices
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x0e0c_0000 + epoch as u64));
        for i in (1..order.len()).rev() {
            let j = rand::Rng::gen_range(&mut rng, 0..=i);
            order.swap(i, j);
        }

        let mut epoch_total = 0.0;
        let mut epoch_sep = 0.0;
        let mut epoch_res = 0.0;
        let mut batches = 0usize;
        for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
            for (_, p) in &params {
                p.zero_grad();
            }
            let scale = 1.0 / batch.len() as f64;
            let mut batch_total = 0.0;
            let mut batch_sep = 0.0;
            let mut batch_res = 0.0;
            for (slot, &idx) in batch.iter().enumerate() {
                let draw_seed = derive_seed(cfg.seed, augment_stream(epoch, step, slot));
                let mut aug_rng = ChaCha8Rng::seed_from_u64(draw_seed);
                let sample = augment(&samples[idx], cfg.patch_size, &mut aug_rng)?;
                let (total, sep_v, res_v) =
                    sample_losses(pipeline, &extractor, &sample, &effective_weights, toggles)?;
                let scaled = mul_scalar(&total, scale);
                backward(&scaled)?;
                batch_total += total.item() as f64 * scale;
                batch_sep += sep_v * scale;
                batch_res += res_v * scale;
            }
            if !batch_total.is_finite() {
                return Err(Error::Numerical(format!(
                    "loss became non-finite in epoch {epoch}; last good checkpoint at {}",
                    out_prefix.display()
                )));
            }
            let grads: Vec<Vec<f32>> = params
                .iter()
                .map(|(_, p)| p.grad().unwrap_or_else(|| vec![0.0; p.shape().len()]))
                .collect();
            adam_step(&params, &grads, &mut adam, lr, &hp)?;
            epoch_total += batch_total;
            epoch_sep += batch_sep;
            epoch_res += batch_res;
            batches += 1;
        }
        let n = batches.max(1) as f64;
        let entry = EpochLoss {
            epoch,
            total: epoch_total / n,
            separation: epoch_sep / n,
            restoration: epoch_res / n,
            lr,
        };
        lr = schedule.observe(entry.total);
        curve.push(entry);

        save_checkpoint(pipeline, out_prefix)?;
        if cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 {
            let periodic = out_prefix.with_file_name(format!(
                "{}_e{:04}",
                out_prefix.file_name().unwrap_or_default().to_string_lossy(),
                epoch + 1
            ));
            save_checkpoint(pipeline, &periodic)?;
        }
    }

    adam.save(&out_prefix.with_extension("opt"))?;
    let curve_path = out_prefix.with_extension("csv");
    write_curve(&curve_path, &curve)?;
    Ok(TrainArtifacts {
        loss_curve: curve,
        checkpoint_prefix: out_prefix.to_path_buf(),
        curve_path,
    })
}

// one RNG stream per (epoch, step, slot) so augmentation draws do not
// depend on batch layout or thread timing
fn augment_stream(epoch: usize, step: usize, slot: usize) -> u64 {
    0xa000_0000_0000_0000 | ((epoch as u64) << 32) | ((step as u64) << 8) | slot as u64
}

fn write_curve(path: &Path, curve: &[EpochLoss]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "epoch,total,separation,restoration,lr")?;
    for e in curve {
        writeln!(
            f,
            "{},{:.9e},{:.9e},{:.9e},{:.9e}",
            e.epoch, e.total, e.separation, e.restoration, e.lr
        )?;
    }
    Ok(())
}

//! Training: Adam, plateau scheduling, aligned augmentation and the
//! deterministic optimization loop.

mod adam;
mod augment;
mod eval;
mod run;
mod schedule;

pub use adam::{adam_step, AdamParams, AdamState};
pub use augment::{augment, augment_with, AugmentDraw};
pub use eval::{evaluate_pipeline, luminance_of, SampleEval, SplitEvaluation};
pub use run::{load_training_set, sample_losses, train, EpochLoss, TrainArtifacts};
pub use schedule::PlateauSchedule;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimization hyperparameters. The Adam constants and the 50% plateau
/// decay are the published values; batch and patch sizes come in two
/// presets (see [`TrainConfig::desk`] and [`TrainConfig::paper`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub patch_size: usize,
    pub epochs: usize,
    pub plateau_patience: usize,
    pub lr_decay: f64,
    /// Relative improvement below which an epoch counts as a plateau.
    pub improvement_threshold: f64,
    pub seed: u64,
    /// Train the separation stage alone for the first half of the epochs.
    pub two_phase: bool,
    /// Emit an extra checkpoint every N epochs (0 disables).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk(0)
    }
}

impl TrainConfig {
    /// CPU-feasible configuration: 64-pixel patches, batches of 4.
    pub fn desk(seed: u64) -> Self {
        Self {
            lr: 0.0002,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 4,
            patch_size: 64,
            epochs: 40,
            plateau_patience: 10,
            lr_decay: 0.5,
            improvement_threshold: 1e-4,
            seed,
            two_phase: false,
            checkpoint_every: 0,
        }
    }

    /// Published-scale configuration: 256-pixel patches, batches of 10,
    /// 3000 epochs.
    pub fn paper(seed: u64) -> Self {
        Self {
            batch_size: 10,
            patch_size: 256,
            epochs: 3000,
            ..Self::desk(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.patch_size == 0 {
            return Err(Error::Config(
                "batch_size, epochs and patch_size must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("beta1/beta2 must lie in [0,1)".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_defaults_match_documented_values() {
        let c = TrainConfig::desk(1);
        assert_eq!(c.lr, 0.0002);
        assert_eq!(c.beta1, 0.9);
        assert_eq!(c.beta2, 0.999);
        assert_eq!(c.eps, 1e-8);
        assert_eq!(c.lr_decay, 0.5);
        assert_eq!(c.batch_size, 4);
        assert_eq!(c.patch_size, 64);
        assert_eq!(c.plateau_patience, 10);
    }

    #[test]
    fn paper_preset_scales_up() {
        let c = TrainConfig::paper(1);
        assert_eq!(c.batch_size, 10);
        assert_eq!(c.patch_size, 256);
        assert_eq!(c.epochs, 3000);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = TrainConfig::desk(0);
        c.lr = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::desk(0);
        c.batch_size = 0;
        assert!(c.validate().is_err());
    }
}

//! Perceptual surrogate: feature MAE under a fixed, seeded, untrained conv
//! stack. Random deep features are a serviceable similarity proxy at this
//! scale and remove the dependency on a pretrained classifier; the constant
//! seed makes the extractor part of the artifact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mae_loss;
use crate::autodiff::{add, conv2d, conv_weight, leaky_relu, mul_scalar, Scalar, Tensor};
use crate::error::{Error, Result};

/// Seed that defines the shipped extractor weights.
pub const PERCEPTUAL_SEED: u64 = 0x5eed_fea7;

const FEATURES: [usize; 3] = [8, 16, 32];
const LEAKY: f64 = 0.2;

/// Three stride-2 3x3 conv stages (8/16/32 features, leaky-ReLU). Weights
/// are constants: gradients flow through them to the images, never into
/// them.
pub struct PerceptualExtractor<S: Scalar> {
    stages: Vec<(Tensor<S>, Tensor<S>)>,
}

impl<S: Scalar> PerceptualExtractor<S> {
    pub fn new() -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(PERCEPTUAL_SEED);
        let mut stages = Vec::new();
        let mut cin = 3;
        for &cout in &FEATURES {
            let w: Tensor<S> = conv_weight(3, 3, cin, cout, &mut rng);
            // freeze: re-wrap as constants so the extractor is not trainable
            let w = Tensor::constant(w.shape(), w.to_vec());
            let b = Tensor::zeros(crate::autodiff::Shape::new(1, 1, 1, cout));
            stages.push((w, b));
            cin = cout;
        }
        Self { stages }
    }

    /// Per-stage feature maps of an RGB tensor in [0,1].
    pub fn features(&self, x: &Tensor<S>) -> Result<Vec<Tensor<S>>> {
        if x.shape().c != 3 {
            return Err(Error::Validation(format!(
                "perceptual extractor expects 3 channels, got {}",
                x.shape().c
            )));
        }
        let mut out = Vec::with_capacity(self.stages.len());
        let mut cur = x.clone();
        for (w, b) in &self.stages {
            cur = leaky_relu(&conv2d(&cur, w, b, 2), LEAKY);
            out.push(cur.clone());
        }
        Ok(out)
    }
}

impl<S: Scalar> Default for PerceptualExtractor<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// MAE between the feature maps of `a` and `b`, averaged over stages.
pub fn perceptual_loss<S: Scalar>(
    extractor: &PerceptualExtractor<S>,
    a: &Tensor<S>,
    b: &Tensor<S>,
) -> Result<Tensor<S>> {
    if a.shape() != b.shape() {
        return Err(Error::Validation(format!(
            "perceptual: shape mismatch {} vs {}",
            a.shape(),
            b.shape()
        )));
    }
    let fa = extractor.features(a)?;
    let fb = extractor.features(b)?;
    let mut acc: Option<Tensor<S>> = None;
    for (xa, xb) in fa.iter().zip(&fb) {
        let term = mae_loss(xa, xb);
        acc = Some(match acc {
            None => term,
            Some(prev) => add(&prev, &term),
        });
    }
    Ok(mul_scalar(&acc.expect("at least one stage"), 1.0 / fa.len() as f64))
}

//! Luminance restoration: a small residual network guided by the NIR
//! estimate. Takes the luminance of the estimated VIS image plus the
//! 3-channel NIR estimate, returns restored luminance in [0,1].

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::blocks::{Act, ConvBlock};
use crate::autodiff::{add, concat_channels, leaky_relu, Scalar, Tensor, DEFAULT_LEAKY_SLOPE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestoreSpec {
    /// Luminance channels (1) plus guide channels (3).
    pub in_channels: usize,
    pub features: usize,
    pub blocks: usize,
}

impl Default for RestoreSpec {
    fn default() -> Self {
        Self {
            in_channels: 4,
            features: 32,
            blocks: 4,
        }
    }
}

struct ResBlock<S: Scalar> {
    c1: ConvBlock<S>,
    c2: ConvBlock<S>,
}

impl<S: Scalar> ResBlock<S> {
    fn new<R: Rng>(features: usize, rng: &mut R) -> Self {
        Self {
            c1: ConvBlock::new(features, features, 1, false, true, Act::LeakyRelu, rng),
            c2: ConvBlock::new(features, features, 1, false, true, Act::None, rng),
        }
    }

    fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let f = self.c2.forward(&self.c1.forward(x)?)?;
        Ok(leaky_relu(&add(x, &f), DEFAULT_LEAKY_SLOPE))
    }
}

pub struct RestorationNet<S: Scalar> {
    pub spec: RestoreSpec,
    stem: ConvBlock<S>,
    blocks: Vec<ResBlock<S>>,
    /// Head sees the block features concatenated with the raw luminance
    /// input: the global input-to-output skip.
    head: ConvBlock<S>,
}

impl<S: Scalar> RestorationNet<S> {
    pub fn new<R: Rng>(spec: RestoreSpec, rng: &mut R) -> Self {
        let stem = ConvBlock::new(spec.in_channels, spec.features, 1, false, false, Act::LeakyRelu, rng);
        let blocks = (0..spec.blocks).map(|_| ResBlock::new(spec.features, rng)).collect();
        let head = ConvBlock::new(spec.features + 1, 1, 1, false, false, Act::Sigmoid, rng);
        Self {
            spec,
            stem,
            blocks,
            head,
        }
    }

    /// `y_vis` is single-channel luminance, `guide` the NIR estimate; both
    /// already scaled to the network input range.
    pub fn forward(&self, y_vis: &Tensor<S>, guide: &Tensor<S>) -> Result<Tensor<S>> {
        if y_vis.shape().c != 1 {
            return Err(Error::Validation(format!(
                "restoration expects single-channel luminance, got {} channels",
                y_vis.shape().c
            )));
        }
        let s = y_vis.shape();
        let g = guide.shape();
        if s.h != g.h || s.w != g.w || s.n != g.n {
            return Err(Error::Validation(format!(
                "restoration: luminance {s} and guide {g} differ spatially"
            )));
        }
        let mut cur = self.stem.forward(&concat_channels(y_vis, guide))?;
        for blk in &self.blocks {
            cur = blk.forward(&cur)?;
        }
        self.head.forward(&concat_channels(&cur, y_vis))
    }

    pub fn params_into(&self, prefix: &str, out: &mut Vec<(String, Tensor<S>)>) {
        self.stem.params_into(&format!("{prefix}.stem"), out);
        for (i, blk) in self.blocks.iter().enumerate() {
            blk.c1.params_into(&format!("{prefix}.block{i}.c1"), out);
            blk.c2.params_into(&format!("{prefix}.block{i}.c2"), out);
        }
        self.head.params_into(&format!("{prefix}.head"), out);
    }
}

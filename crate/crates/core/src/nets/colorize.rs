//! Chrominance prediction. Colour carries much lower spatial frequency than
//! intensity, so the default output is at half the input resolution: two
//! encoder stages, one decoder stage. The full-resolution variant (ablation
//! row "output size x2") adds the second decoder stage.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::blocks::{Act, ConvBlock};
use crate::autodiff::{concat_channels, Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorizeSpec {
    /// Concatenated VIS estimate and NIR estimate.
    pub in_channels: usize,
    /// Two chroma channels.
    pub out_channels: usize,
    pub base_features: usize,
    /// Output at input resolution instead of half.
    pub full_res: bool,
    pub final_act: Act,
}

impl Default for ColorizeSpec {
    fn default() -> Self {
        Self {
            in_channels: 6,
            out_channels: 2,
            base_features: 16,
            full_res: false,
            final_act: Act::HalfTanh,
        }
    }
}

pub struct ColorizationNet<S: Scalar> {
    pub spec: ColorizeSpec,
    stem: ConvBlock<S>,
    down1: ConvBlock<S>,
    down2: ConvBlock<S>,
    bottleneck: ConvBlock<S>,
    up1: (ConvBlock<S>, ConvBlock<S>),
    /// Present only in full-resolution mode.
    up2: Option<(ConvBlock<S>, ConvBlock<S>)>,
    head: ConvBlock<S>,
}

impl<S: Scalar> ColorizationNet<S> {
    pub fn new<R: Rng>(spec: ColorizeSpec, rng: &mut R) -> Self {
        let b = spec.base_features;
        let act = Act::LeakyRelu;
        let stem = ConvBlock::new(spec.in_channels, b, 1, false, false, act, rng);
        let down1 = ConvBlock::new(b, b * 2, 2, false, true, act, rng);
        let down2 = ConvBlock::new(b * 2, b * 4, 2, false, true, act, rng);
        let bottleneck = ConvBlock::new(b * 4, b * 4, 1, false, true, act, rng);
        let up1 = (
            ConvBlock::new(b * 4, b * 2, 1, true, true, act, rng),
            ConvBlock::new(b * 4, b * 2, 1, false, true, act, rng),
        );
        let up2 = spec.full_res.then(|| {
            (
                ConvBlock::new(b * 2, b, 1, true, true, act, rng),
                ConvBlock::new(b * 2, b, 1, false, true, act, rng),
            )
        });
        let head_in = if spec.full_res { b } else { b * 2 };
        let head = ConvBlock::new(head_in, spec.out_channels, 1, false, false, spec.final_act, rng);
        Self {
            spec,
            stem,
            down1,
            down2,
            bottleneck,
            up1,
            up2,
            head,
        }
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let s = x.shape();
        if s.h % 4 != 0 || s.w % 4 != 0 {
            return Err(Error::Validation(format!(
                "colorization input {}x{} must divide by 4",
                s.h, s.w
            )));
        }
        if s.c != self.spec.in_channels {
            return Err(Error::Validation(format!(
                "colorization input has {} channels, expects {}",
                s.c, self.spec.in_channels
            )));
        }
        let s0 = self.stem.forward(x)?;
        let s1 = self.down1.forward(&s0)?;
        let s2 = self.down2.forward(&s1)?;
        let mid = self.bottleneck.forward(&s2)?;
        let u1 = self.up1.0.forward(&mid)?;
        let mut cur = self.up1.1.forward(&concat_channels(&u1, &s1))?;
        if let Some((up, fuse)) = &self.up2 {
            let u2 = up.forward(&cur)?;
            cur = fuse.forward(&concat_channels(&u2, &s0))?;
        }
        self.head.forward(&cur)
    }

    pub fn params_into(&self, prefix: &str, out: &mut Vec<(String, Tensor<S>)>) {
        self.stem.params_into(&format!("{prefix}.stem"), out);
        self.down1.params_into(&format!("{prefix}.down1"), out);
        self.down2.params_into(&format!("{prefix}.down2"), out);
        self.bottleneck.params_into(&format!("{prefix}.bottleneck"), out);
        self.up1.0.params_into(&format!("{prefix}.up1.resize"), out);
        self.up1.1.params_into(&format!("{prefix}.up1.fuse"), out);
        if let Some((up, fuse)) = &self.up2 {
            up.params_into(&format!("{prefix}.up2.resize"), out);
            fuse.params_into(&format!("{prefix}.up2.fuse"), out);
        }
        self.head.params_into(&format!("{prefix}.head"), out);
    }
}

//! Encoder-decoder with concat skip connections.
//!
//! Stride-2 convolutions downsample, resize-convolutions upsample, feature
//! counts double per stage, skips concatenate along channels. Instance norm
//! everywhere except the stem and the head.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::blocks::{Act, ConvBlock};
use crate::autodiff::{concat_channels, Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UNetSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    /// Number of down/up stages; input dims must divide by 2^depth.
    pub depth: usize,
    /// Feature maps of the first layer; doubles per down stage.
    pub base_features: usize,
    pub hidden_act: Act,
    pub final_act: Act,
}

pub struct UNet<S: Scalar> {
    pub spec: UNetSpec,
    stem: ConvBlock<S>,
    downs: Vec<ConvBlock<S>>,
    bottleneck: ConvBlock<S>,
    ups: Vec<(ConvBlock<S>, ConvBlock<S>)>,
    head: ConvBlock<S>,
}

impl<S: Scalar> UNet<S> {
    pub fn new<R: Rng>(spec: UNetSpec, rng: &mut R) -> Self {
        let base = spec.base_features;
        let act = spec.hidden_act;
        let stem = ConvBlock::new(spec.in_channels, base, 1, false, false, act, rng);
        let mut downs = Vec::new();
        for d in 0..spec.depth {
            let cin = base << d;
            downs.push(ConvBlock::new(cin, cin * 2, 2, false, true, act, rng));
        }
        let top = base << spec.depth;
        let bottleneck = ConvBlock::new(top, top, 1, false, true, act, rng);
        let mut ups = Vec::new();
        for d in (0..spec.depth).rev() {
            let cout = base << d;
            let up = ConvBlock::new(cout * 2, cout, 1, true, true, act, rng);
            let fuse = ConvBlock::new(cout * 2, cout, 1, false, true, act, rng);
            ups.push((up, fuse));
        }
        let head = ConvBlock::new(base, spec.out_channels, 1, false, false, spec.final_act, rng);
        Self {
            spec,
            stem,
            downs,
            bottleneck,
            ups,
            head,
        }
    }

    pub fn check_input(&self, x: &Tensor<S>) -> Result<()> {
        let s = x.shape();
        let div = 1usize << self.spec.depth;
        if s.h % div != 0 || s.w % div != 0 {
            return Err(Error::Validation(format!(
                "input {}x{} not divisible by 2^{} = {div}",
                s.h, s.w, self.spec.depth
            )));
        }
        if s.c != self.spec.in_channels {
            return Err(Error::Validation(format!(
                "input has {} channels, net expects {}",
                s.c, self.spec.in_channels
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        self.check_input(x)?;
        let mut skips = Vec::with_capacity(self.spec.depth);
        let mut cur = self.stem.forward(x)?;
        for down in &self.downs {
            skips.push(cur.clone());
            cur = down.forward(&cur)?;
        }
        cur = self.bottleneck.forward(&cur)?;
        for (up, fuse) in &self.ups {
            cur = up.forward(&cur)?;
            let skip = skips.pop().expect("one skip per up stage");
            cur = fuse.forward(&concat_channels(&cur, &skip))?;
        }
        self.head.forward(&cur)
    }

    pub fn params_into(&self, prefix: &str, out: &mut Vec<(String, Tensor<S>)>) {
        self.stem.params_into(&format!("{prefix}.stem"), out);
        for (i, d) in self.downs.iter().enumerate() {
            d.params_into(&format!("{prefix}.down{i}"), out);
        }
        self.bottleneck.params_into(&format!("{prefix}.bottleneck"), out);
        for (i, (up, fuse)) in self.ups.iter().enumerate() {
            up.params_into(&format!("{prefix}.up{i}.resize"), out);
            fuse.params_into(&format!("{prefix}.up{i}.fuse"), out);
        }
        self.head.params_into(&format!("{prefix}.head"), out);
    }
}

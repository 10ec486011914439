//! Conv building blocks shared by the four sub-nets.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{
    conv2d, conv_weight, instance_norm, leaky_relu, mul_scalar, relu, resize_conv, sigmoid, tanh,
    zero_bias, Scalar, Shape, Tensor, DEFAULT_LEAKY_SLOPE, INSTANCE_NORM_EPS,
};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Act {
    LeakyRelu,
    Relu,
    Sigmoid,
    /// tanh scaled to [-0.5, 0.5]; chroma output activation.
    HalfTanh,
    None,
}

pub fn apply_act<S: Scalar>(act: Act, x: &Tensor<S>) -> Tensor<S> {
    match act {
        Act::LeakyRelu => leaky_relu(x, DEFAULT_LEAKY_SLOPE),
        Act::Relu => relu(x),
        Act::Sigmoid => sigmoid(x),
        Act::HalfTanh => mul_scalar(&tanh(x), 0.5),
        Act::None => x.clone(),
    }
}

/// 3x3 conv, optional instance norm, activation. `stride` 2 downsamples,
/// `upsample` prepends a nearest-neighbour 2x resize.
pub struct ConvBlock<S: Scalar> {
    pub w: Tensor<S>,
    pub b: Tensor<S>,
    pub norm: Option<(Tensor<S>, Tensor<S>)>,
    pub stride: usize,
    pub upsample: bool,
    pub act: Act,
}

impl<S: Scalar> ConvBlock<S> {
    pub fn new<R: Rng>(
        cin: usize,
        cout: usize,
        stride: usize,
        upsample: bool,
        norm: bool,
        act: Act,
        rng: &mut R,
    ) -> Self {
        let w = conv_weight(3, 3, cin, cout, rng);
        let b = zero_bias(cout);
        let norm = norm.then(|| {
            (
                Tensor::param(Shape::new(1, 1, 1, cout), vec![S::one(); cout]),
                Tensor::param(Shape::new(1, 1, 1, cout), vec![S::zero(); cout]),
            )
        });
        Self {
            w,
            b,
            norm,
            stride,
            upsample,
            act,
        }
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let mut y = if self.upsample {
            resize_conv(x, &self.w, &self.b)
        } else {
            conv2d(x, &self.w, &self.b, self.stride)
        };
        if let Some((scale, shift)) = &self.norm {
            y = instance_norm(&y, scale, shift, INSTANCE_NORM_EPS)?;
        }
        Ok(apply_act(self.act, &y))
    }

    pub fn params_into(&self, prefix: &str, out: &mut Vec<(String, Tensor<S>)>) {
        out.push((format!("{prefix}.w"), self.w.clone()));
        out.push((format!("{prefix}.b"), self.b.clone()));
        if let Some((scale, shift)) = &self.norm {
            out.push((format!("{prefix}.norm.scale"), scale.clone()));
            out.push((format!("{prefix}.norm.shift"), shift.clone()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conv_block_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::<f32>::constant(Shape::new(1, 8, 8, 3), vec![0.1; 192]);
        let down = ConvBlock::new(3, 8, 2, false, true, Act::LeakyRelu, &mut rng);
        let y = down.forward(&x).unwrap();
        assert_eq!(y.shape(), Shape::new(1, 4, 4, 8));
        let up = ConvBlock::new(8, 4, 1, true, true, Act::LeakyRelu, &mut rng);
        let z = up.forward(&y).unwrap();
        assert_eq!(z.shape(), Shape::new(1, 8, 8, 4));
    }

    #[test]
    fn param_names_are_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let blk = ConvBlock::<f32>::new(3, 4, 1, false, true, Act::None, &mut rng);
        let mut params = Vec::new();
        blk.params_into("stem", &mut params);
        let names: Vec<&str> = params.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["stem.w", "stem.b", "stem.norm.scale", "stem.norm.shift"]);
    }
}

//! Training losses: MAE, SSIM, structure-aware smoothness, a fixed random
//! perceptual surrogate, and their weighted compositions.

mod composite;
mod perceptual;
mod smooth;
mod ssim;

pub use composite::{restoration_loss, separation_loss, total_loss, LossToggles};
pub use perceptual::{perceptual_loss, PerceptualExtractor, PERCEPTUAL_SEED};
pub use smooth::smoothness_loss;
pub use ssim::{ssim_loss, SSIM_WINDOW};

use serde::{Deserialize, Serialize};

use crate::autodiff::{abs, mean, sub, Scalar, Tensor};

/// Loss coefficients. Defaults are the published training configuration:
/// alpha = beta = 1, the four lambda weights 100, gamma1 = 0.1, gamma2 = 5,
/// gamma3 = 1, gamma4 = 100 and the structure-awareness strength 10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub lambda_v: f64,
    pub lambda_n: f64,
    pub lambda_v2: f64,
    pub lambda_y: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    pub lambda_g: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            lambda_v: 100.0,
            lambda_n: 100.0,
            lambda_v2: 100.0,
            lambda_y: 100.0,
            gamma1: 0.1,
            gamma2: 5.0,
            gamma3: 1.0,
            gamma4: 100.0,
            lambda_g: 10.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [
            self.alpha, self.beta, self.lambda_v, self.lambda_n, self.lambda_v2, self.lambda_y,
            self.gamma1, self.gamma2, self.gamma3, self.gamma4, self.lambda_g,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(crate::Error::Config(
                "loss weights must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Mean absolute error over all elements.
pub fn mae_loss<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    mean(&abs(&sub(a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Shape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mae_of_identical_inputs_is_zero() {
        let x = Tensor::<f64>::constant(Shape::new(1, 2, 2, 1), vec![0.3; 4]);
        assert_eq!(mae_loss(&x, &x).item(), 0.0);
    }

    #[test]
    fn mae_zero_vs_one_is_one() {
        let a = Tensor::<f64>::constant(Shape::new(1, 2, 2, 3), vec![0.0; 12]);
        let b = Tensor::<f64>::constant(Shape::new(1, 2, 2, 3), vec![1.0; 12]);
        assert_eq!(mae_loss(&a, &b).item(), 1.0);
    }

    #[test]
    fn mae_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let av: Vec<f64> = (0..48).map(|_| rng.gen_range(0.0..1.0)).collect();
        let bv: Vec<f64> = (0..48).map(|_| rng.gen_range(0.0..1.0)).collect();
        let oracle = av.iter().zip(&bv).map(|(x, y)| (x - y).abs()).sum::<f64>() / 48.0;
        let a = Tensor::constant(Shape::new(1, 4, 4, 3), av);
        let b = Tensor::constant(Shape::new(1, 4, 4, 3), bv);
        assert!((mae_loss(&a, &b).item() - oracle).abs() < 1e-7);
    }

    #[test]
    fn default_weights_match_training_configuration() {
        let w = LossWeights::default();
        assert_eq!(w.alpha, 1.0);
        assert_eq!(w.beta, 1.0);
        assert_eq!(w.lambda_v, 100.0);
        assert_eq!(w.lambda_n, 100.0);
        assert_eq!(w.lambda_v2, 100.0);
        assert_eq!(w.lambda_y, 100.0);
        assert_eq!(w.gamma1, 0.1);
        assert_eq!(w.gamma2, 5.0);
        assert_eq!(w.gamma3, 1.0);
        assert_eq!(w.gamma4, 100.0);
        assert_eq!(w.lambda_g, 10.0);
    }

    #[test]
    fn negative_weights_rejected() {
        let w = LossWeights {
            gamma2: -1.0,
            ..LossWeights::default()
        };
        assert!(w.validate().is_err());
    }
}

//! Weighted loss compositions for the separation and restoration stages.

use super::{mae_loss, perceptual_loss, smoothness_loss, ssim_loss, LossWeights, PerceptualExtractor};
use crate::autodiff::{add, mean_channels, mul_scalar, neg, add_scalar, Scalar, Tensor};
use crate::error::Result;

/// Ablation switches for individual loss terms; all on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossToggles {
    pub use_ssim: bool,
    pub use_smooth: bool,
    pub use_perceptual: bool,
}

impl Default for LossToggles {
    fn default() -> Self {
        Self {
            use_ssim: true,
            use_smooth: true,
            use_perceptual: true,
        }
    }
}

fn scaled_add<S: Scalar>(acc: Option<Tensor<S>>, term: Tensor<S>, weight: f64) -> Option<Tensor<S>> {
    if weight == 0.0 {
        return acc;
    }
    let t = mul_scalar(&term, weight);
    Some(match acc {
        None => t,
        Some(prev) => add(&prev, &t),
    })
}

fn or_zero<S: Scalar>(acc: Option<Tensor<S>>) -> Tensor<S> {
    acc.unwrap_or_else(|| Tensor::scalar(S::zero()))
}

/// Separation stage loss:
/// `lambda_v (mae_v + 1 - ssim_v) + lambda_n (mae_n + 1 - ssim_n)
///  + gamma1 * smooth(nir_est | mixed)`.
pub fn separation_loss<S: Scalar>(
    nir_est: &Tensor<S>,
    vis_est: &Tensor<S>,
    nir_gt: &Tensor<S>,
    vis_gt: &Tensor<S>,
    mixed: &Tensor<S>,
    w: &LossWeights,
    toggles: &LossToggles,
) -> Result<Tensor<S>> {
    let mut acc = None;
    acc = scaled_add(acc, mae_loss(vis_est, vis_gt), w.lambda_v);
    acc = scaled_add(acc, mae_loss(nir_est, nir_gt), w.lambda_n);
    if toggles.use_ssim {
        acc = scaled_add(acc, one_minus(&ssim_loss(vis_est, vis_gt)?), w.lambda_v);
        acc = scaled_add(acc, one_minus(&ssim_loss(nir_est, nir_gt)?), w.lambda_n);
    }
    if toggles.use_smooth {
        acc = scaled_add(acc, smoothness_loss(nir_est, mixed, w.lambda_g)?, w.gamma1);
    }
    Ok(or_zero(acc))
}

/// Restoration stage loss on the final RGB output and the restored
/// luminance, both smoothness terms guided by the estimated NIR:
/// `lambda_v2 mae_v2 + lambda_y mae_y + lambda_v2 (1 - ssim_v2)
///  + gamma2 smooth(y | nir) + gamma3 smooth(rgb | nir) + gamma4 perceptual`.
#[allow(clippy::too_many_arguments)]
pub fn restoration_loss<S: Scalar>(
    final_rgb: &Tensor<S>,
    y_restored: Option<&Tensor<S>>,
    rgb_gt: &Tensor<S>,
    y_gt: Option<&Tensor<S>>,
    nir_est: &Tensor<S>,
    extractor: &PerceptualExtractor<S>,
    w: &LossWeights,
    toggles: &LossToggles,
) -> Result<Tensor<S>> {
    let mut acc = None;
    acc = scaled_add(acc, mae_loss(final_rgb, rgb_gt), w.lambda_v2);
    if let (Some(yr), Some(yg)) = (y_restored, y_gt) {
        acc = scaled_add(acc, mae_loss(yr, yg), w.lambda_y);
    }
    if toggles.use_ssim {
        acc = scaled_add(acc, one_minus(&ssim_loss(final_rgb, rgb_gt)?), w.lambda_v2);
    }
    if toggles.use_smooth {
        let guide = mean_channels(nir_est);
        if let Some(yr) = y_restored {
            acc = scaled_add(acc, smoothness_loss(yr, &guide, w.lambda_g)?, w.gamma2);
        }
        acc = scaled_add(acc, smoothness_loss(final_rgb, &guide, w.lambda_g)?, w.gamma3);
    }
    if toggles.use_perceptual {
        acc = scaled_add(acc, perceptual_loss(extractor, final_rgb, rgb_gt)?, w.gamma4);
    }
    Ok(or_zero(acc))
}

/// Total objective `alpha * separation + beta * restoration`.
pub fn total_loss<S: Scalar>(sep: &Tensor<S>, res: &Tensor<S>, w: &LossWeights) -> Tensor<S> {
    add(&mul_scalar(sep, w.alpha), &mul_scalar(res, w.beta))
}

fn one_minus<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    add_scalar(&neg(x), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{backward, Shape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_t(seed: u64, h: usize, w: usize, c: usize, param: bool) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..h * w * c).map(|_| rng.gen_range(0.0..1.0)).collect();
        let shape = Shape::new(1, h, w, c);
        if param {
            Tensor::param(shape, data)
        } else {
            Tensor::constant(shape, data)
        }
    }

    #[test]
    fn perfect_separation_leaves_only_smoothness() {
        let w = LossWeights::default();
        let tog = LossToggles::default();
        let nir = rand_t(1, 12, 12, 3, false);
        let vis = rand_t(2, 12, 12, 3, false);
        let mixed = rand_t(3, 12, 12, 3, false);
        let loss =
            separation_loss(&nir, &vis, &nir, &vis, &mixed, &w, &tog).unwrap().item();
        let expect = w.gamma1
            * smoothness_loss(&nir, &mixed, w.lambda_g).unwrap().item();
        assert!((loss - expect).abs() < 1e-9, "{loss} vs {expect}");
    }

    #[test]
    fn zeroing_lambda_v_removes_vis_gradient() {
        let w = LossWeights {
            lambda_v: 0.0,
            ..LossWeights::default()
        };
        let tog = LossToggles::default();
        let nir_est = rand_t(4, 12, 12, 3, true);
        let vis_est = rand_t(5, 12, 12, 3, true);
        let nir_gt = rand_t(6, 12, 12, 3, false);
        let vis_gt = rand_t(7, 12, 12, 3, false);
        let mixed = rand_t(8, 12, 12, 3, false);
        let loss =
            separation_loss(&nir_est, &vis_est, &nir_gt, &vis_gt, &mixed, &w, &tog).unwrap();
        backward(&loss).unwrap();
        assert!(vis_est.grad().is_none(), "vis branch must be disconnected");
        assert!(nir_est.grad().is_some());
    }

    #[test]
    fn separation_matches_hand_composed_sum() {
        let w = LossWeights::default();
        let tog = LossToggles::default();
        let nir_est = rand_t(10, 12, 12, 3, false);
        let vis_est = rand_t(11, 12, 12, 3, false);
        let nir_gt = rand_t(12, 12, 12, 3, false);
        let vis_gt = rand_t(13, 12, 12, 3, false);
        let mixed = rand_t(14, 12, 12, 3, false);
        let got = separation_loss(&nir_est, &vis_est, &nir_gt, &vis_gt, &mixed, &w, &tog)
            .unwrap()
            .item();
        let oracle = w.lambda_v
            * (super::super::mae_loss(&vis_est, &vis_gt).item() + 1.0
                - ssim_loss(&vis_est, &vis_gt).unwrap().item())
            + w.lambda_n
                * (super::super::mae_loss(&nir_est, &nir_gt).item() + 1.0
                    - ssim_loss(&nir_est, &nir_gt).unwrap().item())
            + w.gamma1 * smoothness_loss(&nir_est, &mixed, w.lambda_g).unwrap().item();
        assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn perfect_restoration_leaves_smoothness_residual() {
        let w = LossWeights::default();
        let tog = LossToggles::default();
        let ext = PerceptualExtractor::new();
        let rgb = rand_t(20, 12, 12, 3, false);
        let y = rand_t(21, 12, 12, 1, false);
        let nir = rand_t(22, 12, 12, 3, false);
        let loss = restoration_loss(&rgb, Some(&y), &rgb, Some(&y), &nir, &ext, &w, &tog)
            .unwrap()
            .item();
        let guide = mean_channels(&nir);
        let expect = w.gamma2 * smoothness_loss(&y, &guide, w.lambda_g).unwrap().item()
            + w.gamma3 * smoothness_loss(&rgb, &guide, w.lambda_g).unwrap().item();
        assert!((loss - expect).abs() < 1e-9, "{loss} vs {expect}");
    }

    #[test]
    fn restoration_matches_component_sum() {
        let w = LossWeights::default();
        let tog = LossToggles::default();
        let ext = PerceptualExtractor::new();
        let rgb = rand_t(30, 12, 12, 3, false);
        let y = rand_t(31, 12, 12, 1, false);
        let rgb_gt = rand_t(32, 12, 12, 3, false);
        let y_gt = rand_t(33, 12, 12, 1, false);
        let nir = rand_t(34, 12, 12, 3, false);
        let got = restoration_loss(
            &rgb, Some(&y), &rgb_gt, Some(&y_gt), &nir, &ext, &w, &tog,
        )
        .unwrap()
        .item();
        let guide = mean_channels(&nir);
        let oracle = w.lambda_v2 * super::super::mae_loss(&rgb, &rgb_gt).item()
            + w.lambda_y * super::super::mae_loss(&y, &y_gt).item()
            + w.lambda_v2 * (1.0 - ssim_loss(&rgb, &rgb_gt).unwrap().item())
            + w.gamma2 * smoothness_loss(&y, &guide, w.lambda_g).unwrap().item()
            + w.gamma3 * smoothness_loss(&rgb, &guide, w.lambda_g).unwrap().item()
            + w.gamma4 * perceptual_loss(&ext, &rgb, &rgb_gt).unwrap().item();
        assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn all_zero_weights_give_zero() {
        let w = LossWeights {
            alpha: 0.0,
            beta: 0.0,
            lambda_v: 0.0,
            lambda_n: 0.0,
            lambda_v2: 0.0,
            lambda_y: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            gamma3: 0.0,
            gamma4: 0.0,
            lambda_g: 10.0,
        };
        let tog = LossToggles::default();
        let ext = PerceptualExtractor::new();
        let rgb = rand_t(40, 12, 12, 3, false);
        let y = rand_t(41, 12, 12, 1, false);
        let nir = rand_t(42, 12, 12, 3, false);
        let r = restoration_loss(&rgb, Some(&y), &rgb, Some(&y), &nir, &ext, &w, &tog)
            .unwrap()
            .item();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn total_is_weighted_sum_and_linear() {
        let sep = Tensor::<f64>::scalar(3.0);
        let res = Tensor::<f64>::scalar(5.0);
        let w = LossWeights::default();
        assert_eq!(total_loss(&sep, &res, &w).item(), 8.0);
        let w0 = LossWeights {
            beta: 0.0,
            ..LossWeights::default()
        };
        assert_eq!(total_loss(&sep, &res, &w0).item(), 3.0);
        let w2 = LossWeights {
            alpha: 2.0,
            beta: 0.5,
            ..LossWeights::default()
        };
        assert_eq!(total_loss(&sep, &res, &w2).item(), 8.5);
    }

    #[test]
    fn separation_loss_passes_gradcheck() {
        let w = LossWeights::default();
        let tog = LossToggles::default();
        let nir_est = rand_t(50, 12, 12, 3, true);
        let vis_est = rand_t(51, 12, 12, 3, true);
        let nir_gt = rand_t(52, 12, 12, 3, false);
        let vis_gt = rand_t(53, 12, 12, 3, false);
        let mixed = rand_t(54, 12, 12, 3, false);
        let rep = crate::autodiff::central_diff_check(
            &[nir_est, vis_est],
            |io| {
                separation_loss(&io[0], &io[1], &nir_gt, &vis_gt, &mixed, &w, &tog).unwrap()
            },
            1e-5,
            1e-5,
        );
        assert!(rep.max_rel_err < 1e-4, "rel err {}", rep.max_rel_err);
    }
}

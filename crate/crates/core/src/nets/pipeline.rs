//! The RAW-to-VIS pipeline: separation, proportion, restoration and
//! colorization nets composed into one differentiable function, with
//! switches for every ablation row.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::blocks::Act;
use super::colorize::{ColorizeSpec, ColorizationNet};
use super::restore::{RestorationNet, RestoreSpec};
use super::unet::{UNet, UNetSpec};
use crate::autodiff::{
    add_scalar, channel_affine, clamp, concat_channels, hsv_to_rgb_t, mul, mul_scalar,
    nn_upsample2, rgb_to_hsv_t, slice_channels, sub, Scalar, Shape, Tensor,
};
use crate::error::{Error, Result};
use crate::image::{ColorSpace, Raster, RGB_FROM_YUV_F64, YUV_FROM_RGB_F64};

/// Colour space the restoration stage operates in. YUV is the design point;
/// HSV and RGB exist for the ablation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipeColorSpace {
    Yuv,
    Hsv,
    Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub use_separation: bool,
    pub use_restoration: bool,
    pub colorization_full_res: bool,
    pub color_space: PipeColorSpace,
    /// U-Net down/up stages.
    pub depth: usize,
    /// First-layer feature count; doubles per stage.
    pub base_features: usize,
    pub restore_features: usize,
    pub restore_blocks: usize,
    pub seed: u64,
}

impl PipelineConfig {
    /// CPU-sized configuration used by the test harness and the default CLI.
    pub fn desk(seed: u64) -> Self {
        Self {
            use_separation: true,
            use_restoration: true,
            colorization_full_res: false,
            color_space: PipeColorSpace::Yuv,
            depth: 3,
            base_features: 16,
            restore_features: 32,
            restore_blocks: 4,
            seed,
        }
    }

    /// Published-scale preset: first layer 64 features.
    pub fn paper(seed: u64) -> Self {
        Self {
            base_features: 64,
            ..Self::desk(seed)
        }
    }
}

/// Final image plus every intermediate the pipeline produces.
pub struct PipelineOutput<S: Scalar> {
    pub final_rgb: Tensor<S>,
    pub nir_est: Option<Tensor<S>>,
    pub proportion: Option<Tensor<S>>,
    pub vis_est: Option<Tensor<S>>,
    /// Restored luminance (Y in YUV mode, V in HSV mode).
    pub y_restored: Option<Tensor<S>>,
    /// Chroma prediction at its native (half or full) resolution.
    pub chroma: Option<Tensor<S>>,
}

pub struct Pipeline<S: Scalar> {
    pub config: PipelineConfig,
    pub separation: Option<UNet<S>>,
    pub proportion: Option<UNet<S>>,
    pub restoration: Option<RestorationNet<S>>,
    pub colorization: Option<ColorizationNet<S>>,
    /// Single U-Net used when separation/restoration stages are ablated away
    /// or when restoring directly in RGB.
    pub direct: Option<UNet<S>>,
}

impl<S: Scalar> Pipeline<S> {
    pub fn new(config: PipelineConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let unet = |inc: usize, outc: usize, hidden: Act, fin: Act, rng: &mut ChaCha8Rng| UNetSpec {
            in_channels: inc,
            out_channels: outc,
            depth: config.depth,
            base_features: config.base_features,
            hidden_act: hidden,
            final_act: fin,
        }
        .pipe(|s| UNet::new(s, rng));

        let mut separation = None;
        let mut proportion = None;
        let mut restoration = None;
        let mut colorization = None;
        let mut direct = None;

        if config.use_separation {
            separation = Some(unet(3, 3, Act::LeakyRelu, Act::Sigmoid, &mut rng));
            proportion = Some(unet(3, 3, Act::Relu, Act::Sigmoid, &mut rng));
        }
        match (config.use_restoration, config.color_space) {
            (false, _) => {
                if !config.use_separation {
                    // nothing left: one U-Net maps mixed directly to RGB
                    direct = Some(unet(3, 3, Act::LeakyRelu, Act::Sigmoid, &mut rng));
                }
            }
            (true, PipeColorSpace::Rgb) => {
                // restoration replaced by a U-Net working in RGB
                let inc = 6;
                direct = Some(unet(inc, 3, Act::LeakyRelu, Act::Sigmoid, &mut rng));
            }
            (true, cs) => {
                restoration = Some(RestorationNet::new(
                    RestoreSpec {
                        in_channels: 4,
                        features: config.restore_features,
                        blocks: config.restore_blocks,
                    },
                    &mut rng,
                ));
                let hsv = cs == PipeColorSpace::Hsv;
                colorization = Some(ColorizationNet::new(
                    ColorizeSpec {
                        in_channels: 6,
                        out_channels: 2,
                        base_features: config.base_features,
                        // HSV restores like the "output size x2" row
                        full_res: config.colorization_full_res || hsv,
                        final_act: if hsv { Act::Sigmoid } else { Act::HalfTanh },
                    },
                    &mut rng,
                ));
            }
        }
        Self {
            config,
            separation,
            proportion,
            restoration,
            colorization,
            direct,
        }
    }

    /// Run the pipeline on a mixed capture in [0,1].
    pub fn forward(&self, mixed: &Tensor<S>) -> Result<PipelineOutput<S>> {
        if mixed.shape().c != 3 {
            return Err(Error::Validation(format!(
                "pipeline expects a 3-channel mixed image, got {}",
                mixed.shape().c
            )));
        }
        let to_pm1 = |t: &Tensor<S>| add_scalar(&mul_scalar(t, 2.0), -1.0);

        // separation stage
        let (nir_est, p_est, vis_est) = if let (Some(sep), Some(prop)) =
            (&self.separation, &self.proportion)
        {
            let nir = sep.forward(&to_pm1(mixed))?;
            let p = prop.forward(mixed)?;
            let vis = estimate_vis(mixed, &nir, &p);
            (Some(nir), Some(p), Some(vis))
        } else {
            (None, None, None)
        };

        // restoration stage
        let vis_in = vis_est.clone().unwrap_or_else(|| mixed.clone());
        let nir_in = nir_est.clone().unwrap_or_else(|| mixed.clone());

        if !self.config.use_restoration {
            let final_rgb = match &self.direct {
                Some(net) => clamp(&net.forward(&to_pm1(mixed))?, 0.0, 1.0),
                None => vis_in.clone(),
            };
            return Ok(PipelineOutput {
                final_rgb,
                nir_est,
                proportion: p_est,
                vis_est,
                y_restored: None,
                chroma: None,
            });
        }

        match self.config.color_space {
            PipeColorSpace::Rgb => {
                let net = self.direct.as_ref().expect("rgb mode builds the direct net");
                let input = concat_channels(&vis_in, &nir_in);
                let final_rgb = clamp(&net.forward(&to_pm1(&input))?, 0.0, 1.0);
                Ok(PipelineOutput {
                    final_rgb,
                    nir_est,
                    proportion: p_est,
                    vis_est,
                    y_restored: None,
                    chroma: None,
                })
            }
            PipeColorSpace::Yuv => {
                let restoration = self.restoration.as_ref().expect("yuv mode builds restoration");
                let colorization = self.colorization.as_ref().expect("yuv mode builds colorization");
                let yuv = channel_affine(&vis_in, YUV_FROM_RGB_F64, [0.0; 3]);
                let y = slice_channels(&yuv, 0, 1);
                let y_restored = restoration.forward(&to_pm1(&y), &to_pm1(&nir_in))?;
                let chroma = colorization.forward(&to_pm1(&concat_channels(&vis_in, &nir_in)))?;
                let uv = if chroma.shape().h == y_restored.shape().h {
                    chroma.clone()
                } else {
                    nn_upsample2(&chroma)
                };
                let merged = concat_channels(&y_restored, &uv);
                let final_rgb = clamp(&channel_affine(&merged, RGB_FROM_YUV_F64, [0.0; 3]), 0.0, 1.0);
                Ok(PipelineOutput {
                    final_rgb,
                    nir_est,
                    proportion: p_est,
                    vis_est,
                    y_restored: Some(y_restored),
                    chroma: Some(chroma),
                })
            }
            PipeColorSpace::Hsv => {
                let restoration = self.restoration.as_ref().expect("hsv mode builds restoration");
                let colorization = self.colorization.as_ref().expect("hsv mode builds colorization");
                let hsv = rgb_to_hsv_t(&vis_in);
                let v = slice_channels(&hsv, 2, 3);
                let v_restored = restoration.forward(&to_pm1(&v), &to_pm1(&nir_in))?;
                let hs = colorization.forward(&to_pm1(&concat_channels(&vis_in, &nir_in)))?;
                let merged = concat_channels(&hs, &v_restored);
                let final_rgb = clamp(&hsv_to_rgb_t(&merged), 0.0, 1.0);
                Ok(PipelineOutput {
                    final_rgb,
                    nir_est,
                    proportion: p_est,
                    vis_est,
                    y_restored: Some(v_restored),
                    chroma: Some(hs),
                })
            }
        }
    }

    /// All trainable parameters in a stable order.
    pub fn params(&self) -> Vec<(String, Tensor<S>)> {
        let mut out = Vec::new();
        if let Some(n) = &self.separation {
            n.params_into("separation", &mut out);
        }
        if let Some(n) = &self.proportion {
            n.params_into("proportion", &mut out);
        }
        if let Some(n) = &self.restoration {
            n.params_into("restoration", &mut out);
        }
        if let Some(n) = &self.colorization {
            n.params_into("colorization", &mut out);
        }
        if let Some(n) = &self.direct {
            n.params_into("direct", &mut out);
        }
        out
    }
}

// tiny pipe helper so spec construction reads top-down
trait Pipe: Sized {
    fn pipe<T>(self, f: impl FnOnce(Self) -> T) -> T {
        f(self)
    }
}
impl<T> Pipe for T {}

/// Invert the mixed-image superposition with the deviation fraction:
/// `vis = clamp(mixed - (1 + p) . nir, 0, 1)`.
pub fn estimate_vis<S: Scalar>(mixed: &Tensor<S>, nir: &Tensor<S>, p: &Tensor<S>) -> Tensor<S> {
    clamp(&sub(mixed, &mul(&add_scalar(p, 1.0), nir)), 0.0, 1.0)
}

/// Raster -> batch-1 tensor.
pub fn raster_to_tensor<S: Scalar>(r: &Raster) -> Tensor<S> {
    let shape = Shape::new(1, r.height(), r.width(), r.channels());
    Tensor::constant(shape, r.data().iter().map(|&v| S::from_f32(v)).collect())
}

/// Batch-1 tensor -> raster, clamping stray numeric excursions to the
/// declared range.
pub fn tensor_to_raster<S: Scalar>(t: &Tensor<S>, colorspace: ColorSpace) -> Result<Raster> {
    let s = t.shape();
    if s.n != 1 {
        return Err(Error::Validation("tensor_to_raster expects batch 1".into()));
    }
    let data = t
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let v = v.to_f32();
            match colorspace {
                ColorSpace::Yuv if i % s.c > 0 => v.clamp(-0.5, 0.5),
                _ => v.clamp(0.0, 1.0),
            }
        })
        .collect();
    Raster::new(s.h, s.w, s.c, colorspace, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn mixed_tensor(seed: u64, h: usize, w: usize) -> Tensor<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::constant(
            Shape::new(1, h, w, 3),
            (0..h * w * 3).map(|_| rng.gen_range(0.0..1.0)).collect(),
        )
    }

    #[test]
    fn estimate_vis_inverts_superposition() {
        // p = 0, nir known: vis = mixed - nir
        let mixed = Tensor::<f64>::constant(Shape::new(1, 1, 2, 1), vec![0.9, 0.5]);
        let nir = Tensor::constant(Shape::new(1, 1, 2, 1), vec![0.2, 0.1]);
        let p = Tensor::constant(Shape::new(1, 1, 2, 1), vec![0.0, 0.0]);
        let v = estimate_vis(&mixed, &nir, &p);
        let vd = v.to_vec();
        assert!((vd[0] - 0.7).abs() < 1e-12);
        assert!((vd[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn estimate_vis_with_zero_nir_is_identity() {
        let mixed = mixed_tensor(1, 4, 4);
        let nir = Tensor::constant(Shape::new(1, 4, 4, 3), vec![0.0; 48]);
        let p = Tensor::constant(Shape::new(1, 4, 4, 3), vec![0.3; 48]);
        let v = estimate_vis(&mixed, &nir, &p);
        assert_eq!(v.to_vec(), mixed.to_vec());
    }

    #[test]
    fn full_pipeline_output_contract() {
        let cfg = PipelineConfig {
            depth: 2,
            base_features: 4,
            restore_features: 8,
            restore_blocks: 2,
            ..PipelineConfig::desk(7)
        };
        let pipe = Pipeline::<f32>::new(cfg);
        let mixed = mixed_tensor(2, 16, 16);
        let out = pipe.forward(&mixed).unwrap();
        assert_eq!(out.final_rgb.shape(), Shape::new(1, 16, 16, 3));
        assert!(out.final_rgb.to_vec().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(out.nir_est.as_ref().unwrap().shape(), Shape::new(1, 16, 16, 3));
        let p = out.proportion.unwrap();
        assert!(p.to_vec().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(out.vis_est.unwrap().shape(), Shape::new(1, 16, 16, 3));
        assert_eq!(out.y_restored.unwrap().shape(), Shape::new(1, 16, 16, 1));
        // half-resolution chroma
        assert_eq!(out.chroma.unwrap().shape(), Shape::new(1, 8, 8, 2));
    }

    #[test]
    fn forward_is_deterministic() {
        let cfg = PipelineConfig {
            depth: 2,
            base_features: 4,
            restore_features: 8,
            restore_blocks: 1,
            ..PipelineConfig::desk(3)
        };
        let pipe = Pipeline::<f32>::new(cfg);
        let mixed = mixed_tensor(4, 8, 8);
        let a = pipe.forward(&mixed).unwrap().final_rgb.to_vec();
        let b = pipe.forward(&mixed).unwrap().final_rgb.to_vec();
        assert_eq!(a, b);
    }

    #[test]
    fn indivisible_input_is_rejected() {
        let cfg = PipelineConfig {
            depth: 3,
            base_features: 4,
            restore_features: 8,
            restore_blocks: 1,
            ..PipelineConfig::desk(3)
        };
        let pipe = Pipeline::<f32>::new(cfg);
        let mixed = mixed_tensor(5, 12, 12); // 12 not divisible by 8
        assert!(pipe.forward(&mixed).is_err());
    }

    #[test]
    fn ablated_variants_produce_rgb() {
        let base = PipelineConfig {
            depth: 2,
            base_features: 4,
            restore_features: 8,
            restore_blocks: 1,
            ..PipelineConfig::desk(11)
        };
        let variants = [
            PipelineConfig {
                use_separation: false,
                use_restoration: false,
                ..base.clone()
            },
            PipelineConfig {
                use_restoration: false,
                ..base.clone()
            },
            PipelineConfig {
                use_separation: false,
                ..base.clone()
            },
            PipelineConfig {
                colorization_full_res: true,
                ..base.clone()
            },
            PipelineConfig {
                color_space: PipeColorSpace::Hsv,
                ..base.clone()
            },
            PipelineConfig {
                color_space: PipeColorSpace::Rgb,
                ..base.clone()
            },
        ];
        let mixed = mixed_tensor(6, 16, 16);
        for (i, cfg) in variants.into_iter().enumerate() {
            let pipe = Pipeline::<f32>::new(cfg);
            let out = pipe.forward(&mixed).unwrap();
            assert_eq!(out.final_rgb.shape(), Shape::new(1, 16, 16, 3), "variant {i}");
            assert!(
                out.final_rgb.to_vec().iter().all(|&v| (0.0..=1.0).contains(&v)),
                "variant {i} out of range"
            );
        }
    }

    #[test]
    fn raster_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f32> = (0..4 * 4 * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let r = Raster::new(4, 4, 3, ColorSpace::Rgb, data).unwrap();
        let t: Tensor<f32> = raster_to_tensor(&r);
        let back = tensor_to_raster(&t, ColorSpace::Rgb).unwrap();
        assert_eq!(back.data(), r.data());
    }
}

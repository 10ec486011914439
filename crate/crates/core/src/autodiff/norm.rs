//! Instance normalization.

use super::{make_op, Scalar, Tensor};
use crate::error::{Error, Result};

pub const INSTANCE_NORM_EPS: f64 = 1e-5;

/// Normalise each (sample, channel) plane to zero mean / unit variance over
/// its H*W positions, then apply the learnable per-channel affine:
/// `y = (x - mean) / sqrt(var + eps) * scale + shift`.
///
/// `scale` and `shift` have shape (1,1,1,C). Spatial extent must exceed one
/// pixel, otherwise the variance is undefined.
pub fn instance_norm<S: Scalar>(
    x: &Tensor<S>,
    scale: &Tensor<S>,
    shift: &Tensor<S>,
    eps: f64,
) -> Result<Tensor<S>> {
    let s = x.shape();
    if s.h * s.w <= 1 {
        return Err(Error::Validation(format!(
            "instance_norm needs more than one spatial position, got {}x{}",
            s.h, s.w
        )));
    }
    assert_eq!(scale.shape().len(), s.c, "instance_norm scale length");
    assert_eq!(shift.shape().len(), s.c, "instance_norm shift length");
    let m = s.h * s.w;
    let inv_m = S::from_f64(1.0 / m as f64);
    let epsv = S::from_f64(eps);

    // per (n, c) statistics
    let mut means = vec![S::zero(); s.n * s.c];
    let mut inv_std = vec![S::zero(); s.n * s.c];
    let mut data = vec![S::zero(); s.len()];
    {
        let xd = x.data();
        let sc = scale.data();
        let sh = shift.data();
        for n in 0..s.n {
            for c in 0..s.c {
                let mut mean = S::zero();
                for p in 0..m {
                    mean += xd[(n * m + p) * s.c + c];
                }
                mean = mean * inv_m;
                let mut var = S::zero();
                for p in 0..m {
                    let d = xd[(n * m + p) * s.c + c] - mean;
                    var += d * d;
                }
                var = var * inv_m;
                let is = S::one() / (var + epsv).sqrt();
                means[n * s.c + c] = mean;
                inv_std[n * s.c + c] = is;
                for p in 0..m {
                    let i = (n * m + p) * s.c + c;
                    data[i] = (xd[i] - mean) * is * sc[c] + sh[c];
                }
            }
        }
    }

    Ok(make_op(
        s,
        data,
        vec![x.clone(), scale.clone(), shift.clone()],
        Box::new(move |g, _, parents| {
            let (x, scale, shift) = (&parents[0], &parents[1], &parents[2]);
            let xd = x.data();
            let sc = scale.data();
            if shift.requires_grad() {
                shift.accumulate_grad(|acc| {
                    for n in 0..s.n {
                        for c in 0..s.c {
                            let mut t = S::zero();
                            for p in 0..m {
                                t += g[(n * m + p) * s.c + c];
                            }
                            acc[c] += t;
                        }
                    }
                });
            }
            if scale.requires_grad() {
                scale.accumulate_grad(|acc| {
                    for n in 0..s.n {
                        for c in 0..s.c {
                            let (mean, is) = (means[n * s.c + c], inv_std[n * s.c + c]);
                            let mut t = S::zero();
                            for p in 0..m {
                                let i = (n * m + p) * s.c + c;
                                t += g[i] * (xd[i] - mean) * is;
                            }
                            acc[c] += t;
                        }
                    }
                });
            }
            if x.requires_grad() {
                x.accumulate_grad(|acc| {
                    for n in 0..s.n {
                        for c in 0..s.c {
                            let (mean, is) = (means[n * s.c + c], inv_std[n * s.c + c]);
                            // dL/dxhat summary statistics
                            let mut sum_g = S::zero();
                            let mut sum_gx = S::zero();
                            for p in 0..m {
                                let i = (n * m + p) * s.c + c;
                                let xhat = (xd[i] - mean) * is;
                                let gh = g[i] * sc[c];
                                sum_g += gh;
                                sum_gx += gh * xhat;
                            }
                            let mean_g = sum_g * inv_m;
                            let mean_gx = sum_gx * inv_m;
                            for p in 0..m {
                                let i = (n * m + p) * s.c + c;
                                let xhat = (xd[i] - mean) * is;
                                let gh = g[i] * sc[c];
                                acc[i] += (gh - mean_g - xhat * mean_gx) * is;
                            }
                        }
                    }
                });
            }
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Shape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_channel_maps_to_shift() {
        let x = Tensor::<f64>::constant(Shape::new(1, 2, 2, 1), vec![3.5; 4]);
        let scale = Tensor::constant(Shape::new(1, 1, 1, 1), vec![1.0]);
        let shift = Tensor::constant(Shape::new(1, 1, 1, 1), vec![0.0]);
        let y = instance_norm(&x, &scale, &shift, INSTANCE_NORM_EPS).unwrap();
        assert!(y.to_vec().iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn output_statistics_match_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Tensor::<f64>::constant(
            Shape::new(2, 8, 8, 3),
            (0..2 * 64 * 3).map(|_| rng.gen_range(-2.0..5.0)).collect(),
        );
        let scale = Tensor::constant(Shape::new(1, 1, 1, 3), vec![1.5, 0.5, 2.0]);
        let shift = Tensor::constant(Shape::new(1, 1, 1, 3), vec![0.3, -0.2, 0.0]);
        let y = instance_norm(&x, &scale, &shift, INSTANCE_NORM_EPS).unwrap();
        let yd = y.to_vec();
        for n in 0..2 {
            for c in 0..3 {
                let vals: Vec<f64> = (0..64).map(|p| yd[(n * 64 + p) * 3 + c]).collect();
                let mean = vals.iter().sum::<f64>() / 64.0;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 64.0;
                let want_shift = [0.3, -0.2, 0.0][c];
                let want_scale = [1.5, 0.5, 2.0][c];
                assert!((mean - want_shift).abs() < 1e-4);
                assert!((var.sqrt() - want_scale).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn single_pixel_rejected() {
        let x = Tensor::<f64>::constant(Shape::new(1, 1, 1, 1), vec![1.0]);
        let one = Tensor::constant(Shape::new(1, 1, 1, 1), vec![1.0]);
        let zero = Tensor::constant(Shape::new(1, 1, 1, 1), vec![0.0]);
        assert!(instance_norm(&x, &one, &zero, INSTANCE_NORM_EPS).is_err());
    }
}

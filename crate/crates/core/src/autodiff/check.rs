//! Central-difference gradient verification.
//!
//! This is the independent oracle for every differentiable op: the same
//! graph is rebuilt with each input element perturbed by +/- eps and the
//! analytic gradient from [`backward`] is compared against the secant.

use super::{backward, Tensor};

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_input: usize,
    pub worst_element: usize,
    pub checked: usize,
}

/// Compare analytic gradients of `f` against central differences for every
/// element of every input tensor that requires gradients.
///
/// The relative error uses an absolute floor so near-zero derivative pairs
/// do not explode the ratio:
/// `err = |a - n| / max(max(|a|, |n|), floor)`.
pub fn central_diff_check<F>(inputs: &[Tensor<f64>], f: F, eps: f64, floor: f64) -> GradCheckReport
where
    F: Fn(&[Tensor<f64>]) -> Tensor<f64>,
{
    // analytic pass
    for t in inputs {
        t.zero_grad();
    }
    let loss = f(inputs);
    assert!(
        loss.shape().is_scalar(),
        "gradient check needs a scalar loss"
    );
    backward(&loss).expect("backward failed during gradient check");

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_input: 0,
        worst_element: 0,
        checked: 0,
    };

    for (ti, t) in inputs.iter().enumerate() {
        if !t.requires_grad() {
            continue;
        }
        let analytic = t.grad().unwrap_or_else(|| vec![0.0; t.shape().len()]);
        let base = t.to_vec();
        for i in 0..base.len() {
            let mut plus = base.clone();
            plus[i] += eps;
            t.set_data(&plus);
            let lp = f(inputs).item();

            let mut minus = base.clone();
            minus[i] -= eps;
            t.set_data(&minus);
            let lm = f(inputs).item();

            t.set_data(&base);
            let numeric = (lp - lm) / (2.0 * eps);
            let denom = analytic[i].abs().max(numeric.abs()).max(floor);
            let err = (analytic[i] - numeric).abs() / denom;
            report.checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_input = ti;
                report.worst_element = i;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::*;

    fn rand_param(shape: Shape, seed: u64, lo: f64, hi: f64) -> Tensor<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Tensor::param(shape, (0..shape.len()).map(|_| rng.gen_range(lo..hi)).collect())
    }

    #[test]
    fn elementwise_ops_pass_gradcheck() {
        let x = rand_param(Shape::new(1, 4, 4, 2), 1, -0.9, 0.9);
        let y = rand_param(Shape::new(1, 4, 4, 2), 2, 0.2, 1.5);
        let r = central_diff_check(
            &[x, y],
            |io| {
                let a = &io[0];
                let b = &io[1];
                let t1 = mul(a, b);
                let t2 = div(a, b);
                let t3 = exp(&mul_scalar(a, 0.3));
                let t4 = sigmoid(b);
                let t5 = tanh(a);
                let s = add(&add(&t1, &t2), &add(&t3, &add(&t4, &t5)));
                mean(&s)
            },
            1e-5,
            1e-6,
        );
        assert!(r.max_rel_err < 1e-6, "rel err {}", r.max_rel_err);
    }

    #[test]
    fn activations_pass_gradcheck() {
        // offsets keep elements away from the relu/leaky kinks
        let x = rand_param(Shape::new(1, 3, 3, 2), 3, 0.05, 1.0);
        let y = rand_param(Shape::new(1, 3, 3, 2), 4, -1.0, -0.05);
        let r = central_diff_check(
            &[x, y],
            |io| {
                let pos = relu(&io[0]);
                let negd = leaky_relu(&io[1], DEFAULT_LEAKY_SLOPE);
                mean(&add(&pos, &negd))
            },
            1e-6,
            1e-6,
        );
        assert!(r.max_rel_err < 1e-4, "rel err {}", r.max_rel_err);
    }

    #[test]
    fn conv2d_passes_gradcheck_both_strides() {
        for stride in [1usize, 2] {
            let x = rand_param(Shape::new(1, 6, 6, 2), 10 + stride as u64, -1.0, 1.0);
            let w = rand_param(Shape::new(3, 3, 2, 3), 20 + stride as u64, -0.5, 0.5);
            let b = rand_param(Shape::new(1, 1, 1, 3), 30 + stride as u64, -0.2, 0.2);
            let r = central_diff_check(
                &[x, w, b],
                |io| mean(&conv2d(&io[0], &io[1], &io[2], stride)),
                1e-5,
                1e-6,
            );
            assert!(r.max_rel_err < 1e-6, "stride {stride}: rel err {}", r.max_rel_err);
        }
    }

    #[test]
    fn resize_conv_passes_gradcheck() {
        let x = rand_param(Shape::new(1, 3, 3, 2), 40, -1.0, 1.0);
        let w = rand_param(Shape::new(3, 3, 2, 2), 41, -0.5, 0.5);
        let b = rand_param(Shape::new(1, 1, 1, 2), 42, -0.2, 0.2);
        let r = central_diff_check(
            &[x, w, b],
            |io| mean(&resize_conv(&io[0], &io[1], &io[2])),
            1e-5,
            1e-6,
        );
        assert!(r.max_rel_err < 1e-4, "rel err {}", r.max_rel_err);
    }

    #[test]
    fn instance_norm_passes_gradcheck() {
        let x = rand_param(Shape::new(2, 4, 4, 3), 50, -1.0, 1.0);
        let sc = rand_param(Shape::new(1, 1, 1, 3), 51, 0.5, 1.5);
        let sh = rand_param(Shape::new(1, 1, 1, 3), 52, -0.3, 0.3);
        let r = central_diff_check(
            &[x, sc, sh],
            |io| {
                let y = instance_norm(&io[0], &io[1], &io[2], INSTANCE_NORM_EPS).unwrap();
                // weight spatially so per-plane gradients are non-uniform
                let ramp = Tensor::constant(
                    io[0].shape(),
                    (0..io[0].shape().len()).map(|i| (i % 7) as f64 * 0.1).collect(),
                );
                mean(&mul(&y, &ramp))
            },
            1e-5,
            1e-6,
        );
        assert!(r.max_rel_err < 1e-4, "rel err {}", r.max_rel_err);
    }

    #[test]
    fn concat_and_window_pass_gradcheck() {
        let a = rand_param(Shape::new(1, 5, 5, 1), 60, 0.0, 1.0);
        let b = rand_param(Shape::new(1, 5, 5, 2), 61, 0.0, 1.0);
        let kernel: Vec<f64> = (0..9).map(|i| (i + 1) as f64 / 45.0).collect();
        let r = central_diff_check(
            &[a, b],
            |io| {
                let c = concat_channels(&io[0], &io[1]);
                mean(&window_filter(&c, &kernel, 3))
            },
            1e-5,
            1e-6,
        );
        assert!(r.max_rel_err < 1e-6, "rel err {}", r.max_rel_err);
    }

    #[test]
    fn hsv_round_trip_passes_gradcheck() {
        // stay inside one hexcone sector and away from ties
        let x = Tensor::param(
            Shape::new(1, 1, 2, 3),
            vec![0.8, 0.4, 0.2, 0.3, 0.6, 0.9],
        );
        let r = central_diff_check(
            &[x],
            |io| {
                let hsv = rgb_to_hsv_t(&io[0]);
                let back = hsv_to_rgb_t(&hsv);
                let ramp = Tensor::constant(
                    Shape::new(1, 1, 2, 3),
                    vec![0.9, 0.5, 0.3, 0.2, 0.8, 0.4],
                );
                mean(&mul(&back, &ramp))
            },
            1e-6,
            1e-6,
        );
        assert!(r.max_rel_err < 1e-4, "rel err {}", r.max_rel_err);
    }

    #[test]
    fn channel_affine_passes_gradcheck() {
        let x = rand_param(Shape::new(1, 2, 2, 3), 70, 0.0, 1.0);
        let m = crate::image::YUV_FROM_RGB_F64;
        let r = central_diff_check(
            &[x],
            |io| mean(&abs(&channel_affine(&io[0], m, [0.0; 3]))),
            1e-6,
            1e-6,
        );
        assert!(r.max_rel_err < 1e-4, "rel err {}", r.max_rel_err);
    }
}

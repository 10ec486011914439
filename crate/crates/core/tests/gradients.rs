//! Finite-difference verification of whole networks in f64: every parameter
//! of a U-Net (and of the restoration/colorization nets) must match central
//! differences through a full forward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use visnir::autodiff::{backward, mean, mul, Shape, Tensor};
use visnir::nets::{Act, ColorizationNet, ColorizeSpec, RestorationNet, RestoreSpec, UNet, UNetSpec};

fn rand_input(shape: Shape, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::constant(
        shape,
        (0..shape.len()).map(|_| rng.gen_range(-0.9..0.9)).collect(),
    )
}

/// Weighted mean keeps per-element gradients distinct so symmetric errors
/// cannot cancel.
fn weighted_loss(y: &Tensor<f64>, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ramp = Tensor::constant(
        y.shape(),
        (0..y.shape().len()).map(|_| rng.gen_range(0.1..1.0)).collect(),
    );
    mean(&mul(y, &ramp))
}

/// Central differences over every parameter of `params`, comparing against
/// the analytic gradients of `forward`.
fn check_net<F>(params: &[(String, Tensor<f64>)], forward: F, eps: f64, tol: f64)
where
    F: Fn() -> Tensor<f64>,
{
    for (_, p) in params {
        p.zero_grad();
    }
    let loss = forward();
    backward(&loss).unwrap();
    let mut checked = 0usize;
    let mut max_err: f64 = 0.0;
    let mut worst = String::new();
    for (name, p) in params {
        let analytic = p.grad().unwrap_or_else(|| vec![0.0; p.shape().len()]);
        let base = p.to_vec();
        // subsample large tensors: every parameter tensor is touched, a
        // deterministic stride covers all positions classes
        let stride = (base.len() / 24).max(1);
        for i in (0..base.len()).step_by(stride) {
            let mut plus = base.clone();
            plus[i] += eps;
            p.set_data(&plus);
            let lp = forward().item();
            let mut minus = base.clone();
            minus[i] -= eps;
            p.set_data(&minus);
            let lm = forward().item();
            p.set_data(&base);
            let numeric = (lp - lm) / (2.0 * eps);
            let denom = analytic[i].abs().max(numeric.abs()).max(1e-6);
            let err = (analytic[i] - numeric).abs() / denom;
            checked += 1;
            if err > max_err {
                max_err = err;
                worst = format!("{name}[{i}]");
            }
        }
    }
    assert!(
        max_err < tol,
        "max rel err {max_err} at {worst} over {checked} checks"
    );
}

#[test]
fn full_unet_parameters_match_central_differences() {
    let spec = UNetSpec {
        in_channels: 3,
        out_channels: 3,
        depth: 2,
        base_features: 4,
        hidden_act: Act::LeakyRelu,
        final_act: Act::Sigmoid,
    };
    let net = UNet::<f64>::new(spec, &mut ChaCha8Rng::seed_from_u64(100));
    let x = rand_input(Shape::new(1, 16, 16, 3), 101);
    let mut params = Vec::new();
    net.params_into("unet", &mut params);
    check_net(&params, || weighted_loss(&net.forward(&x).unwrap(), 102), 1e-5, 1e-4);
}

#[test]
fn restoration_net_parameters_match_central_differences() {
    let net = RestorationNet::<f64>::new(
        RestoreSpec {
            in_channels: 4,
            features: 8,
            blocks: 2,
        },
        &mut ChaCha8Rng::seed_from_u64(200),
    );
    let y = rand_input(Shape::new(1, 12, 12, 1), 201);
    let g = rand_input(Shape::new(1, 12, 12, 3), 202);
    let mut params = Vec::new();
    net.params_into("restore", &mut params);
    check_net(
        &params,
        || weighted_loss(&net.forward(&y, &g).unwrap(), 203),
        1e-5,
        1e-4,
    );
}

#[test]
fn colorization_net_parameters_match_central_differences() {
    let net = ColorizationNet::<f64>::new(
        ColorizeSpec {
            in_channels: 6,
            out_channels: 2,
            base_features: 4,
            full_res: false,
            final_act: Act::HalfTanh,
        },
        &mut ChaCha8Rng::seed_from_u64(300),
    );
    let x = rand_input(Shape::new(1, 16, 16, 6), 301);
    let mut params = Vec::new();
    net.params_into("colorize", &mut params);
    check_net(&params, || weighted_loss(&net.forward(&x).unwrap(), 302), 1e-5, 1e-4);
}

#[test]
fn gradients_flow_only_into_reachable_parameters() {
    // the colorization net is not touched by a separation-only loss
    let sep = UNet::<f64>::new(
        UNetSpec {
            in_channels: 3,
            out_channels: 3,
            depth: 2,
            base_features: 4,
            hidden_act: Act::LeakyRelu,
            final_act: Act::Sigmoid,
        },
        &mut ChaCha8Rng::seed_from_u64(400),
    );
    let other = UNet::<f64>::new(
        UNetSpec {
            in_channels: 3,
            out_channels: 3,
            depth: 2,
            base_features: 4,
            hidden_act: Act::Relu,
            final_act: Act::Sigmoid,
        },
        &mut ChaCha8Rng::seed_from_u64(401),
    );
    let x = rand_input(Shape::new(1, 8, 8, 3), 402);
    let loss = mean(&sep.forward(&x).unwrap());
    backward(&loss).unwrap();
    let mut sep_params = Vec::new();
    sep.params_into("sep", &mut sep_params);
    assert!(sep_params.iter().any(|(_, p)| p.grad().is_some()));
    let mut other_params = Vec::new();
    other.params_into("other", &mut other_params);
    assert!(other_params.iter().all(|(_, p)| p.grad().is_none()));
}

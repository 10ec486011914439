//! Structure-aware smoothness: `|grad I_n| . exp(-lambda_g |grad I_m|)`.
//!
//! Penalises gradients in the target except where the guide image has edges
//! of its own. Forward differences with replicated boundary; horizontal and
//! vertical terms are averaged over all pixels and channels.

use crate::autodiff::{
    abs, add, broadcast_channels, dx_forward, dy_forward, exp, mean, mul, mul_scalar, Scalar,
    Tensor,
};
use crate::error::{Error, Result};

/// `mean(|dx target| * exp(-lambda_g |dx guide|)) + mean(|dy ...|)`.
///
/// The guide must either match the target's channel count or be single
/// channel, in which case it is broadcast.
pub fn smoothness_loss<S: Scalar>(
    target: &Tensor<S>,
    guide: &Tensor<S>,
    lambda_g: f64,
) -> Result<Tensor<S>> {
    let ts = target.shape();
    let gs = guide.shape();
    if ts.n != gs.n || ts.h != gs.h || ts.w != gs.w {
        return Err(Error::Validation(format!(
            "smoothness: spatial shapes differ: {ts} vs {gs}"
        )));
    }
    let guide = if gs.c == ts.c {
        guide.clone()
    } else if gs.c == 1 {
        broadcast_channels(guide, ts.c)
    } else {
        return Err(Error::Validation(format!(
            "smoothness: guide has {} channels, target {}",
            gs.c, ts.c
        )));
    };

    let term = |dn: Tensor<S>, dm: Tensor<S>| {
        let damp = exp(&mul_scalar(&abs(&dm), -lambda_g));
        mean(&mul(&abs(&dn), &damp))
    };
    let h = term(dx_forward(target), dx_forward(&guide));
    let v = term(dy_forward(target), dy_forward(&guide));
    Ok(add(&h, &v))
}

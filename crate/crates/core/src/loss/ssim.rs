//! Differentiable SSIM (Wang et al. 2004) on unit-range images.

use crate::autodiff::{
    add, add_scalar, div, mean, mul, mul_scalar, sub, window_filter, Scalar, Tensor,
};
use crate::error::{Error, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Normalised 11x11 Gaussian window, sigma 1.5.
pub(crate) fn gaussian_window<S: Scalar>() -> Vec<S> {
    let r = (SSIM_WINDOW / 2) as isize;
    let mut k = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    let mut total = 0.0f64;
    for y in -r..=r {
        for x in -r..=r {
            let v = (-((y * y + x * x) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            k.push(v);
            total += v;
        }
    }
    k.into_iter().map(|v| S::from_f64(v / total)).collect()
}

/// Mean local SSIM between two same-shape tensors in [0,1] (dynamic range 1),
/// computed per channel over valid 11x11 Gaussian windows and averaged.
/// The result lives in (-1, 1] and is differentiable.
pub fn ssim_loss<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    if a.shape() != b.shape() {
        return Err(Error::Validation(format!(
            "ssim: shape mismatch {} vs {}",
            a.shape(),
            b.shape()
        )));
    }
    let s = a.shape();
    if s.h < SSIM_WINDOW || s.w < SSIM_WINDOW {
        return Err(Error::Validation(format!(
            "ssim: image {}x{} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window",
            s.h, s.w
        )));
    }
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let kernel = gaussian_window::<S>();
    let w = |t: &Tensor<S>| window_filter(t, &kernel, SSIM_WINDOW);

    let mu_a = w(a);
    let mu_b = w(b);
    let mu_aa = mul(&mu_a, &mu_a);
    let mu_bb = mul(&mu_b, &mu_b);
    let mu_ab = mul(&mu_a, &mu_b);
    let var_a = sub(&w(&mul(a, a)), &mu_aa);
    let var_b = sub(&w(&mul(b, b)), &mu_bb);
    let cov = sub(&w(&mul(a, b)), &mu_ab);

    let num = mul(
        &add_scalar(&mul_scalar(&mu_ab, 2.0), c1),
        &add_scalar(&mul_scalar(&cov, 2.0), c2),
    );
    let den = mul(
        &add_scalar(&add(&mu_aa, &mu_bb), c1),
        &add_scalar(&add(&var_a, &var_b), c2),
    );
    Ok(mean(&div(&num, &den)))
}

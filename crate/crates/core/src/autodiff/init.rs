//! Seeded parameter initialization.

use rand::Rng;

use super::{Scalar, Shape, Tensor};

/// He-uniform fan-in initialization: U(-limit, limit) with
/// `limit = sqrt(6 / fan_in)`.
pub fn he_uniform<S: Scalar, R: Rng>(shape: Shape, fan_in: usize, rng: &mut R) -> Vec<S> {
    let limit = (6.0 / fan_in.max(1) as f64).sqrt();
    (0..shape.len())
        .map(|_| S::from_f64(rng.gen_range(-limit..limit)))
        .collect()
}

/// Trainable conv weights (kh, kw, c_in, c_out) with He-uniform values.
pub fn conv_weight<S: Scalar, R: Rng>(
    kh: usize,
    kw: usize,
    cin: usize,
    cout: usize,
    rng: &mut R,
) -> Tensor<S> {
    let shape = Shape::new(kh, kw, cin, cout);
    let data = he_uniform(shape, kh * kw * cin, rng);
    Tensor::param(shape, data)
}

pub fn zero_bias<S: Scalar>(cout: usize) -> Tensor<S> {
    Tensor::param(Shape::new(1, 1, 1, cout), vec![S::zero(); cout])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn he_uniform_respects_limit_and_seed() {
        let shape = Shape::new(3, 3, 8, 16);
        let a: Vec<f32> = he_uniform(shape, 72, &mut ChaCha8Rng::seed_from_u64(1));
        let b: Vec<f32> = he_uniform(shape, 72, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        let limit = (6.0f32 / 72.0).sqrt();
        assert!(a.iter().all(|v| v.abs() < limit));
        // values actually spread out
        let spread = a.iter().cloned().fold(0.0f32, |m, v| m.max(v.abs()));
        assert!(spread > limit * 0.5);
    }
}

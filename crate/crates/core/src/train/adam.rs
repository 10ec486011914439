//! Bias-corrected Adam.

use std::path::Path;

use crate::autodiff::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment buffers, one pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<S: Scalar> {
    pub step: u64,
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &[(String, Tensor<S>)]) -> Self {
        Self {
            step: 0,
            m: params.iter().map(|(_, t)| vec![S::zero(); t.shape().len()]).collect(),
            v: params.iter().map(|(_, t)| vec![S::zero(); t.shape().len()]).collect(),
        }
    }

    /// Binary snapshot: step counter plus both moment buffers (stored at f64
    /// width so the round trip is lossless), so resumed training continues
    /// step-for-step.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&self.step.to_le_bytes());
        for buf in self.m.iter().chain(self.v.iter()) {
            for &x in buf {
                bytes.extend_from_slice(&x.to_f64().to_le_bytes());
            }
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path, params: &[(String, Tensor<S>)]) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Data(format!("missing optimizer state {}: {e}", path.display())))?;
        let mut state = Self::new(params);
        let total: usize = state.m.iter().map(Vec::len).sum::<usize>() * 2;
        if bytes.len() != 8 + total * 8 {
            return Err(Error::Data(format!(
                "optimizer state has {} bytes, expected {}",
                bytes.len(),
                8 + total * 8
            )));
        }
        state.step = u64::from_le_bytes(bytes[..8].try_into().unwrap());
        let mut off = 8;
        for buf in state.m.iter_mut().chain(state.v.iter_mut()) {
            for x in buf.iter_mut() {
                *x = S::from_f64(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
                off += 8;
            }
        }
        Ok(state)
    }
}

/// One Adam update over all parameters. `grads[i]` pairs with `params[i]`.
/// Non-finite gradients abort with a diagnostic naming the parameter.
pub fn adam_step<S: Scalar>(
    params: &[(String, Tensor<S>)],
    grads: &[Vec<S>],
    state: &mut AdamState<S>,
    lr: f64,
    hp: &AdamParams,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::Validation(format!(
            "adam: {} parameter tensors but {} gradients",
            params.len(),
            grads.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let b1 = S::from_f64(hp.beta1);
    let b2 = S::from_f64(hp.beta2);
    let eps = S::from_f64(hp.eps);
    let bias1 = S::from_f64(1.0 - hp.beta1.powi(t));
    let bias2 = S::from_f64(1.0 - hp.beta2.powi(t));
    let lr = S::from_f64(lr);

    for (i, (name, tensor)) in params.iter().enumerate() {
        let g = &grads[i];
        if g.len() != tensor.shape().len() {
            return Err(Error::Validation(format!(
                "adam: gradient length {} does not match {name}",
                g.len()
            )));
        }
        if let Some(bad) = g.iter().find(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient {bad} in {name} at step {}",
                state.step
            )));
        }
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        let mut data = tensor.to_vec();
        for j in 0..g.len() {
            m[j] = b1 * m[j] + (S::one() - b1) * g[j];
            v[j] = b2 * v[j] + (S::one() - b2) * g[j] * g[j];
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            data[j] = data[j] - lr * m_hat / (v_hat.sqrt() + eps);
        }
        tensor.set_data(&data);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{backward, mul, sub, sum, Shape};

    fn scalar_param(v: f64) -> Vec<(String, Tensor<f64>)> {
        vec![("x".to_string(), Tensor::param(Shape::scalar(), vec![v]))]
    }

    #[test]
    fn zero_gradient_changes_nothing() {
        let params = scalar_param(1.5);
        let mut state = AdamState::new(&params);
        adam_step(&params, &[vec![0.0]], &mut state, 0.01, &AdamParams::default()).unwrap();
        assert_eq!(params[0].1.item(), 1.5);
        assert_eq!(state.m[0][0], 0.0);
        assert_eq!(state.v[0][0], 0.0);
    }

    #[test]
    fn first_step_moves_by_lr_sign() {
        // bias-corrected m/sqrt(v) = sign(g) on the first step; epsilon is
        // negligible for |g| well above 1e-2
        for g in [3.7, -0.5, 150.0] {
            let params = scalar_param(0.0);
            let mut state = AdamState::new(&params);
            adam_step(&params, &[vec![g]], &mut state, 0.01, &AdamParams::default()).unwrap();
            let got = params[0].1.item();
            let expect = -0.01 * g.signum();
            assert!(
                ((got - expect) / expect).abs() < 1e-6,
                "g={g}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn converges_on_convex_quadratic() {
        // minimize (x - 3)^2 from x = -2; scalar reference: optimum 0
        let params = scalar_param(-2.0);
        let mut state = AdamState::new(&params);
        let hp = AdamParams::default();
        let mut last = f64::MAX;
        for _ in 0..200 {
            let x = &params[0].1;
            x.zero_grad();
            let target = Tensor::constant(Shape::scalar(), vec![3.0]);
            let d = sub(x, &target);
            let loss = sum(&mul(&d, &d));
            backward(&loss).unwrap();
            let g = x.grad().unwrap();
            adam_step(&params, &[g], &mut state, 0.1, &hp).unwrap();
            last = loss.item();
        }
        assert!(last < 1e-4, "final loss {last}");
    }

    #[test]
    fn non_finite_gradient_is_a_numerical_error() {
        let params = scalar_param(0.0);
        let mut state = AdamState::new(&params);
        let err = adam_step(&params, &[vec![f64::NAN]], &mut state, 0.01, &AdamParams::default());
        assert!(matches!(err, Err(Error::Numerical(_))));
    }

    #[test]
    fn state_round_trips_and_resumes_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("adam.opt");
        let hp = AdamParams::default();

        // run 5 steps, snapshot at step 3, resume, compare
        let run = |snapshot_at: Option<u64>| -> f64 {
            let params = scalar_param(-1.0);
            let mut state = AdamState::new(&params);
            for step in 0..5u64 {
                if Some(step) == snapshot_at {
                    state.save(&path).unwrap();
                    state = AdamState::load(&path, &params).unwrap();
                }
                let x = &params[0].1;
                x.zero_grad();
                let loss = sum(&mul(x, x));
                backward(&loss).unwrap();
                adam_step(&params, &[x.grad().unwrap()], &mut state, 0.05, &hp).unwrap();
            }
            params[0].1.item()
        };
        let unbroken = run(None);
        let resumed = run(Some(3));
        assert_eq!(unbroken, resumed);
    }
}

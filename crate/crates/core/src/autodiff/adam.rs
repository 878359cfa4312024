use serde::{Deserialize, Serialize};

use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

/// Moment estimates for a fixed list of parameter tensors.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[Tensor]) -> Self {
        let zeros = |p: &Tensor| Tensor::zeros(p.shape());
        AdamState {
            config,
            step: 0,
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, i: usize) -> &Tensor {
        &self.m[i]
    }

    /// One bias-corrected Adam update. Nothing is modified if any gradient
    /// is non-finite.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::invalid(format!(
                "adam: {} moment slots, {} params, {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != self.m[i].shape() || g.shape() != self.m[i].shape() {
                return Err(Error::Shape {
                    op: "adam_step",
                    shapes: vec![self.m[i].shape().to_vec(), p.shape().to_vec(), g.shape().to_vec()],
                });
            }
            if !g.all_finite() {
                return Err(Error::NonFinite {
                    context: format!("gradient of parameter {i}"),
                });
            }
        }

        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let it = p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()));
            for ((pi, gi), (mi, vi)) in it {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *pi -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut params = vec![Tensor::row(vec![1.0, -2.0])];
        let mut adam = AdamState::new(AdamConfig::default(), &params);
        adam.step(&mut params, &[Tensor::row(vec![0.0, 0.0])]).unwrap();
        assert_eq!(params[0].data(), &[1.0, -2.0]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let cfg = AdamConfig::with_lr(0.01);
        let mut params = vec![Tensor::row(vec![0.0, 0.0, 0.0])];
        let mut adam = AdamState::new(cfg, &params);
        adam.step(&mut params, &[Tensor::row(vec![3.0, -0.5, 1e-3])]).unwrap();
        for (p, s) in params[0].data().iter().zip([-1.0, 1.0, -1.0]) {
            assert!((p - s * 0.01).abs() < 1e-7, "{p}");
        }
    }

    #[test]
    fn constant_gradient_update_tends_to_lr() {
        // With a constant gradient both bias-corrected moments equal g and
        // g² exactly, so every step has magnitude lr·|g|/(|g|+eps).
        let cfg = AdamConfig::with_lr(1e-3);
        let mut params = vec![Tensor::scalar(0.0)];
        let mut adam = AdamState::new(cfg, &params);
        let g = [Tensor::scalar(0.7)];
        let mut last = 0.0;
        for _ in 0..200 {
            let before = params[0].data()[0];
            adam.step(&mut params, &g).unwrap();
            last = before - params[0].data()[0];
        }
        let expected = 1e-3 * 0.7 / (0.7 + 1e-8);
        assert!((last - expected).abs() < 1e-12, "{last} vs {expected}");
    }

    #[test]
    fn nan_gradient_aborts_without_update() {
        let mut params = vec![Tensor::scalar(1.0)];
        let mut adam = AdamState::new(AdamConfig::default(), &params);
        let err = adam.step(&mut params, &[Tensor::scalar(f64::NAN)]).unwrap_err();
        assert!(err.is_numerical());
        assert_eq!(params[0].data(), &[1.0]);
        assert_eq!(adam.step_count(), 0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut params = vec![Tensor::row(vec![1.0, 2.0])];
        let mut adam = AdamState::new(AdamConfig::default(), &params);
        assert!(adam.step(&mut params, &[Tensor::scalar(1.0)]).is_err());
    }
}

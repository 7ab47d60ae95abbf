use serde::{Deserialize, Serialize};

use super::{NnError, Parameter, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub base_lr: f64,
    /// Per-epoch learning-rate decay: `lr / (1 + decay_po * epoch)`.
    pub decay_po: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(base_lr: f64, decay_po: f64) -> Self {
        AdamConfig {
            base_lr,
            decay_po,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn effective_lr(&self, epoch: usize) -> f64 {
        self.base_lr / (1.0 + self.decay_po * epoch as f64)
    }
}

/// Adam with bias correction. Moments are allocated lazily on the first step
/// and matched to parameters by position.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step_count: 0,
        }
    }

    /// Applies one update. Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, mut params: Vec<&mut Parameter>, epoch: usize) -> Result<(), NnError> {
        if let Some(bad) = params.iter().find(|p| !p.grad.all_finite()) {
            return Err(NnError::NonFiniteGradient(bad.name.clone()));
        }
        if self.first_moment.is_empty() {
            self.first_moment = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
            self.second_moment = self.first_moment.clone();
        }
        if self.first_moment.len() != params.len() {
            return Err(NnError::Shape(format!(
                "optimizer tracks {} parameters, got {}",
                self.first_moment.len(),
                params.len()
            )));
        }
        self.step_count += 1;
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
            ..
        } = self.config;
        let lr = self.config.effective_lr(epoch);
        let t = self.step_count as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);
        for ((p, m), v) in params
            .iter_mut()
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            let grad = p.grad.data();
            let m = m.data_mut();
            let v = v.data_mut();
            for i in 0..grad.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            }
            let value = p.value.data_mut();
            for i in 0..value.len() {
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                value[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

use ndarray::Zip;

use super::mlp::{Dense, Gradients, Mlp};
use crate::error::{Error, Result};

/// Adam with bias correction. Moment buffers mirror the network's shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<Dense>,
    second: Vec<Dense>,
}

impl Adam {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        Self::with_params(net, learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_params(net: &Mlp, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let zeros = Gradients::zeros_like(net).layers;
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub(crate) fn moments(&self) -> (&[Dense], &[Dense]) {
        (&self.first, &self.second)
    }

    pub(crate) fn from_parts(
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        step: u64,
        first: Vec<Dense>,
        second: Vec<Dense>,
    ) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step,
            first,
            second,
        }
    }

    /// Applies one update. The network is left untouched if the gradient has
    /// the wrong shape or contains non-finite values.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        if !grads.matches(net) || self.first.len() != grads.layers.len() {
            return Err(Error::InvalidConfig(
                "gradient shape does not match network".into(),
            ));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let lr = self.learning_rate;
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: &f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for l in 0..grads.layers.len() {
            let layer = net.layer_mut(l);
            Zip::from(&mut layer.weights)
                .and(&mut self.first[l].weights)
                .and(&mut self.second[l].weights)
                .and(&grads.layers[l].weights)
                .for_each(update);
            Zip::from(&mut layer.bias)
                .and(&mut self.first[l].bias)
                .and(&mut self.second[l].bias)
                .and(&grads.layers[l].bias)
                .for_each(update);
        }
        Ok(())
    }
}

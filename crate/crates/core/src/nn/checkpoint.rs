//! JSON checkpoints: layer widths plus flat parameter arrays, optionally with
//! the optimizer moments. Every file starts with a `format`/`version` header.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::{flatten, unflatten_into, Gradients, Mlp};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSnapshot {
    pub layer_dims: Vec<usize>,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamSnapshot {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl From<&Mlp> for MlpSnapshot {
    fn from(net: &Mlp) -> Self {
        Self {
            layer_dims: net.dims().to_vec(),
            params: net.params_flat(),
        }
    }
}

impl MlpSnapshot {
    pub fn restore(&self) -> Result<Mlp> {
        let mut net = Mlp::zeros(&self.layer_dims)?;
        net.set_params_flat(&self.params)?;
        if !net.is_finite() {
            return Err(Error::NonFinite("checkpoint parameters"));
        }
        Ok(net)
    }
}

impl From<&Adam> for AdamSnapshot {
    fn from(opt: &Adam) -> Self {
        let (first, second) = opt.moments();
        Self {
            learning_rate: opt.learning_rate,
            beta1: opt.beta1,
            beta2: opt.beta2,
            epsilon: opt.epsilon,
            step: opt.step_count(),
            first_moment: flatten(first),
            second_moment: flatten(second),
        }
    }
}

impl AdamSnapshot {
    /// Rebuilds the optimizer for `net`, whose shapes the moments must match.
    pub fn restore(&self, net: &Mlp) -> Result<Adam> {
        let mut first = Gradients::zeros_like(net).layers;
        let mut second = first.clone();
        unflatten_into(&mut first, &self.first_moment)?;
        unflatten_into(&mut second, &self.second_moment)?;
        Ok(Adam::from_parts(
            self.learning_rate,
            self.beta1,
            self.beta2,
            self.epsilon,
            self.step,
            first,
            second,
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    body: T,
}

/// Writes `body` under a `format` tag.
pub fn save_json<T: Serialize>(path: &Path, format: &str, body: &T) -> Result<()> {
    let env = Envelope {
        format: format.to_string(),
        version: CHECKPOINT_VERSION,
        body,
    };
    let text = serde_json::to_string(&env)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    let env: Envelope<T> = serde_json::from_str(&text)?;
    if env.format != format {
        return Err(Error::Checkpoint(format!(
            "expected format {format:?}, found {:?}",
            env.format
        )));
    }
    if env.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {} (this build reads {CHECKPOINT_VERSION})",
            env.version
        )));
    }
    Ok(env.body)
}

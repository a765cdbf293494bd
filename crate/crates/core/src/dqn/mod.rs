//! Split orchestration: a deep Q-network choosing the configuration each stage.

mod agent;
mod epsilon;
mod replay;

use serde::{Deserialize, Serialize};

pub use agent::{q_loss, q_loss_and_gradient, DqnAgent};
pub use epsilon::EpsilonSchedule;
pub use replay::{ReplayBuffer, Transition};

use crate::env::NetworkState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub gamma: f64,
    /// Hard target-network copy every this many environment stages.
    pub sync_period: usize,
    pub epsilon_max: f64,
    pub epsilon_min: f64,
    /// Explicit per-episode decay; when absent it is derived so epsilon is
    /// within 1% of the floor after `epsilon_floor_fraction` of the episodes.
    pub epsilon_decay: Option<f64>,
    pub epsilon_floor_fraction: f64,
    /// Multiplier applied to rewards before they enter the replay buffer.
    pub reward_scale: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512, 512, 512],
            learning_rate: 3e-4,
            batch_size: 256,
            buffer_capacity: 1_000_000,
            gamma: 0.9,
            sync_period: 10,
            epsilon_max: 0.95,
            epsilon_min: 0.02,
            epsilon_decay: None,
            epsilon_floor_fraction: 0.6,
            reward_scale: 1.0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("dqn hidden layers must be non-empty and positive".into()));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size || self.sync_period == 0 {
            return Err(Error::InvalidConfig(
                "dqn needs batch > 0, capacity >= batch and sync period > 0".into(),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must be in (0, 1]: {}", self.gamma)));
        }
        if !(self.learning_rate > 0.0 && self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(Error::InvalidConfig("dqn learning rate and reward scale must be positive".into()));
        }
        self.schedule(1)?;
        Ok(())
    }

    pub fn schedule(&self, episodes: usize) -> Result<EpsilonSchedule> {
        match self.epsilon_decay {
            Some(d) => EpsilonSchedule::new(self.epsilon_max, self.epsilon_min, d),
            None => EpsilonSchedule::reaching_floor(
                self.epsilon_max,
                self.epsilon_min,
                episodes,
                self.epsilon_floor_fraction,
            ),
        }
    }
}

/// Maps a [`NetworkState`] onto roughly unit-scaled network inputs.
///
/// Demands are divided by the peak demand, allocations by node capacity, the
/// previous-stage variance enters as a standard deviation over the peak, and
/// the split index is divided by four.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateEncoder {
    pub demand_scale: f64,
    pub vdu_cap: f64,
    pub vcu_cap: f64,
}

impl StateEncoder {
    pub fn encode(&self, s: &NetworkState) -> Vec<f64> {
        vec![
            s.demand / self.demand_scale,
            s.prev_mean / self.demand_scale,
            s.prev_variance.max(0.0).sqrt() / self.demand_scale,
            s.prev_vdu / self.vdu_cap,
            s.prev_vcu / self.vcu_cap,
            s.prev_split.index() as f64 / 4.0,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Split;

    #[test]
    fn encoder_ranges() {
        let e = StateEncoder { demand_scale: 35.0, vdu_cap: 50.0, vcu_cap: 50.0 };
        let s = NetworkState {
            demand: 35.0,
            prev_mean: 17.5,
            prev_variance: 4.0,
            prev_vdu: 50.0,
            prev_vcu: 25.0,
            prev_split: Split::S3,
        };
        assert_eq!(e.encode(&s), vec![1.0, 0.5, 2.0 / 35.0, 1.0, 0.5, 0.75]);
    }

    #[test]
    fn default_config_is_valid() {
        DqnConfig::default().validate().unwrap();
        let bad = DqnConfig { gamma: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = DqnConfig { buffer_capacity: 10, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}

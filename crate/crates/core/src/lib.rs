//! Simulation and learning-based orchestration of a virtualized RAN base station.
//!
//! Each time stage the orchestrator decides whether to keep the deployed
//! functional split and compute allocation, or to redeploy one of the four
//! splits with freshly sized vDU/vCU allocations. The pieces:
//!
//! - [`nn`]: a small dense network with hand-written backprop and Adam.
//! - [`cost`]: overprovisioning, declined-demand, instantiation,
//!   reconfiguration and xHaul costs, and the stage reward.
//! - [`env`]: traffic traces, the utilization model, and the stage-level MDP.
//! - [`omega`]: the demand-to-allocation regressor trained with an
//!   asymmetric loss.
//! - [`dqn`]: the configuration-selection agent (Q-network, target network,
//!   replay buffer, epsilon schedule).
//! - [`baselines`]: the optimal static policy and the per-stage dynamic oracle.
//! - [`harness`]: configuration, training loop, evaluation, sweeps and
//!   metrics export.

pub mod baselines;
pub mod cost;
pub mod dqn;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod omega;
pub mod seed;
pub mod types;

pub use error::{Error, Result};
pub use types::{ConfigChoice, Deployment, Split};

//! The stage-level MDP: state construction, action execution, costs.

mod io;
mod traffic;
mod utilization;

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use io::{read_trace_csv, read_utilization_csv, write_trace_csv, write_utilization_csv};
pub use traffic::{generate_traffic, TrafficConfig, TrafficProfile, TrafficTrace};
pub use utilization::{
    BaseCurve, MeasuredCurves, SyntheticCurve, UtilizationConfig, UtilizationModel,
    UtilizationSample, DEFAULT_RHO_VCU, DEFAULT_RHO_VDU,
};

use crate::cost::{self, ConstraintViolations, CostBreakdown, CostCoefficients, StageOutcome};
use crate::error::{Error, Result};
use crate::types::{ConfigChoice, Deployment, Split};

/// Observation at the start of a stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    /// Mean demand of the stage about to run, Mbps.
    pub demand: f64,
    /// Mean of the previous stage's per-second demand (0 at the first stage).
    pub prev_mean: f64,
    /// Variance of the previous stage's per-second demand, Mbps^2.
    pub prev_variance: f64,
    pub prev_vdu: f64,
    pub prev_vcu: f64,
    pub prev_split: Split,
}

impl NetworkState {
    pub const DIM: usize = 6;

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.demand,
            self.prev_mean,
            self.prev_variance,
            self.prev_vdu,
            self.prev_vcu,
            self.prev_split.index() as f64,
        ]
    }

    pub fn deployment(&self) -> Deployment {
        Deployment {
            split: self.prev_split,
            vdu: self.prev_vdu,
            vcu: self.prev_vcu,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// State for stage `n` (1-based) given what is deployed when it starts.
pub fn build_state(trace: &TrafficTrace, n: usize, prev: Deployment) -> Result<NetworkState> {
    let demand = trace.stage_mean(n)?;
    let (prev_mean, prev_variance) = if n == 1 {
        (0.0, 0.0)
    } else {
        (trace.stage_mean(n - 1)?, trace.stage_variance(n - 1)?)
    };
    Ok(NetworkState {
        demand,
        prev_mean,
        prev_variance,
        prev_vdu: prev.vdu,
        prev_vcu: prev.vcu,
        prev_split: prev.split,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub choice: ConfigChoice,
    pub split: Split,
    pub vdu: f64,
    pub vcu: f64,
}

impl Action {
    pub fn keep(prev: Deployment) -> Self {
        Self {
            choice: ConfigChoice::Keep,
            split: prev.split,
            vdu: prev.vdu,
            vcu: prev.vcu,
        }
    }

    pub fn deploy(split: Split, vdu: f64, vcu: f64) -> Self {
        Self {
            choice: ConfigChoice::Deploy(split),
            split,
            vdu,
            vcu,
        }
    }

    pub fn validate(&self, prev: &Deployment) -> Result<()> {
        if !(self.vdu.is_finite() && self.vcu.is_finite() && self.vdu >= 0.0 && self.vcu >= 0.0) {
            return Err(Error::InvalidAction(format!(
                "allocations must be finite and >= 0: {self:?}"
            )));
        }
        match self.choice {
            ConfigChoice::Keep => {
                if self.split != prev.split || self.vdu != prev.vdu || self.vcu != prev.vcu {
                    return Err(Error::InvalidAction(format!(
                        "keep must preserve {prev:?}, got {self:?}"
                    )));
                }
            }
            ConfigChoice::Deploy(s) if s != self.split => {
                return Err(Error::InvalidAction(format!(
                    "configuration {} deploys {s}, action names {}",
                    self.choice.index(),
                    self.split
                )));
            }
            ConfigChoice::Deploy(_) => {}
        }
        Ok(())
    }

    pub fn deployment(&self) -> Deployment {
        Deployment {
            split: self.split,
            vdu: self.vdu,
            vcu: self.vcu,
        }
    }
}

/// Static parameters of an environment.
#[derive(Debug, Clone)]
pub struct EnvParams {
    pub coefficients: CostCoefficients,
    pub model: Arc<UtilizationModel>,
    /// xHaul link capacity, Mbps.
    pub xhaul_capacity: f64,
}

impl EnvParams {
    pub fn new(coefficients: CostCoefficients, model: UtilizationModel, xhaul_capacity: f64) -> Self {
        Self {
            coefficients,
            model: Arc::new(model),
            xhaul_capacity,
        }
    }

    /// Deployment in place before the first stage: full capacity on split S1.
    pub fn initial_deployment(&self) -> Deployment {
        Deployment {
            split: Split::S1,
            vdu: self.model.vdu_cap,
            vcu: self.model.vcu_cap,
        }
    }
}

impl Default for EnvParams {
    fn default() -> Self {
        Self::new(CostCoefficients::default(), UtilizationModel::default(), 3000.0)
    }
}

pub fn check_constraints(action: &Action, demand: f64, params: &EnvParams) -> ConstraintViolations {
    ConstraintViolations {
        vdu_capacity: action.vdu > params.model.vdu_cap,
        vcu_capacity: action.vcu > params.model.vcu_cap,
        xhaul_capacity: cost::xhaul_load(action.split, demand) > params.xhaul_capacity,
    }
}

/// Costs of executing `action` on top of `prev` when the stage's demand is
/// `demand` and the deployed split actually uses `used` = (vDU, vCU) RC.
pub fn evaluate_stage(
    params: &EnvParams,
    action: &Action,
    prev: &Deployment,
    demand: f64,
    used: (f64, f64),
) -> (StageOutcome, CostBreakdown) {
    let outcome = StageOutcome {
        choice: action.choice,
        split: action.split,
        vdu_alloc: action.vdu,
        vcu_alloc: action.vcu,
        vdu_used: used.0,
        vcu_used: used.1,
        prev_vdu_alloc: prev.vdu,
        prev_vcu_alloc: prev.vcu,
        xhaul_load: cost::xhaul_load(action.split, demand),
        violations: check_constraints(action, demand, params),
    };
    let breakdown = cost::total_cost_and_reward(&outcome, &params.coefficients);
    (outcome, breakdown)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub demand: f64,
    pub outcome: StageOutcome,
    pub cost: CostBreakdown,
    pub next_state: NetworkState,
    /// True after the last stage of the trace.
    pub done: bool,
}

/// One episode over a fixed trace.
#[derive(Debug, Clone)]
pub struct Environment {
    params: EnvParams,
    trace: TrafficTrace,
    /// Next stage to execute, 1-based.
    stage: usize,
    deployment: Deployment,
    state: NetworkState,
    noise: Option<ChaCha8Rng>,
}

impl Environment {
    /// Starts at stage 1 with full capacity deployed on split S1. Pass a noise
    /// RNG to perturb utilization; `None` gives the exact utilization.
    pub fn new(params: EnvParams, trace: TrafficTrace, noise: Option<ChaCha8Rng>) -> Result<Self> {
        let initial = params.initial_deployment();
        Self::with_deployment(params, trace, noise, initial)
    }

    pub fn with_deployment(
        params: EnvParams,
        trace: TrafficTrace,
        noise: Option<ChaCha8Rng>,
        initial: Deployment,
    ) -> Result<Self> {
        let state = build_state(&trace, 1, initial)?;
        Ok(Self {
            params,
            trace,
            stage: 1,
            deployment: initial,
            state,
            noise,
        })
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn trace(&self) -> &TrafficTrace {
        &self.trace
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn deployment(&self) -> Deployment {
        self.deployment
    }

    /// Next stage to execute (1-based); `stages() + 1` once done.
    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn stages(&self) -> usize {
        self.trace.stages()
    }

    pub fn is_done(&self) -> bool {
        self.stage > self.trace.stages()
    }

    pub fn step(&mut self, action: &Action) -> Result<Step> {
        if self.is_done() {
            return Err(Error::EpisodeExhausted(self.trace.stages()));
        }
        action.validate(&self.deployment)?;
        let n = self.stage;
        let demand = self.trace.stage_mean(n)?;
        let model = &self.params.model;
        let used = match self.noise.as_mut() {
            Some(rng) => model.observe(action.split, demand, rng),
            None => model.utilization(action.split, demand),
        };
        let (outcome, cost) = evaluate_stage(&self.params, action, &self.deployment, demand, used);

        self.deployment = action.deployment();
        self.stage += 1;
        let done = self.is_done();
        let next_state = if done {
            // No stage follows; summarize the one just completed.
            NetworkState {
                demand,
                prev_mean: demand,
                prev_variance: self.trace.stage_variance(n)?,
                prev_vdu: self.deployment.vdu,
                prev_vcu: self.deployment.vcu,
                prev_split: self.deployment.split,
            }
        } else {
            build_state(&self.trace, self.stage, self.deployment)?
        };
        self.state = next_state;
        Ok(Step {
            demand,
            outcome,
            cost,
            next_state,
            done,
        })
    }
}

//! Oracle comparison policies solved by exhaustive grid search.
//!
//! The static policy fixes one split and allocation for the whole trace,
//! sized to cover its peak. The dynamic policy re-optimizes every stage and
//! pays for each change. Both see exact (noise-free) utilization.

use serde::{Deserialize, Serialize};

use crate::cost::CostBreakdown;
use crate::env::{evaluate_stage, Action, EnvParams, Environment, TrafficTrace};
use crate::error::{Error, Result};
use crate::types::{ConfigChoice, Deployment, Split};

/// Candidate allocations `0, step, 2*step, ..., cap` (cap always included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationGrid {
    pub step: f64,
}

impl Default for DiscretizationGrid {
    fn default() -> Self {
        Self { step: 0.5 }
    }
}

impl DiscretizationGrid {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig(format!("grid step must be positive: {step}")));
        }
        Ok(Self { step })
    }

    pub fn points(&self, cap: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let v = k as f64 * self.step;
            if v >= cap - 1e-9 * cap.abs().max(1.0) {
                break;
            }
            out.push(v);
            k += 1;
        }
        out.push(cap.max(0.0));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselinePolicy {
    Stao,
    Dyno,
}

impl std::str::FromStr for BaselinePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stao" => Ok(Self::Stao),
            "dyno" => Ok(Self::Dyno),
            other => Err(Error::InvalidConfig(format!("unknown baseline policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaoSolution {
    pub deployment: Deployment,
    /// Episode cost: overprovisioning and xHaul only.
    pub cost: CostBreakdown,
}

fn stage_demands(trace: &TrafficTrace) -> Vec<f64> {
    trace.stage_means()
}

/// Episode cost of holding `deployment` for the whole trace, or `None` if it
/// declines demand or violates a constraint at any stage.
fn static_cost(params: &EnvParams, demands: &[f64], deployment: Deployment) -> Option<CostBreakdown> {
    let action = Action::keep(deployment);
    let mut total = CostBreakdown::default();
    for &d in demands {
        let used = params.model.utilization(deployment.split, d);
        let (outcome, cost) = evaluate_stage(params, &action, &deployment, d, used);
        if cost.declined > 0.0 || outcome.violations.any() {
            return None;
        }
        total.accumulate(&cost);
    }
    Some(total)
}

/// Best static (split, vDU, vCU) on the grid for the whole trace. Ties keep
/// the first candidate in split, vDU, vCU ascending order.
pub fn solve_stao(params: &EnvParams, trace: &TrafficTrace, grid: &DiscretizationGrid) -> Result<StaoSolution> {
    let demands = stage_demands(trace);
    let xs = grid.points(params.model.vdu_cap);
    let xhs = grid.points(params.model.vcu_cap);
    let mut best: Option<StaoSolution> = None;
    for split in Split::ALL {
        let (peak_vdu, peak_vcu) = demands.iter().fold((0.0f64, 0.0f64), |(a, b), &d| {
            let (u, uh) = params.model.utilization(split, d);
            (a.max(u), b.max(uh))
        });
        for &x in xs.iter().filter(|&&x| x >= peak_vdu) {
            for &xh in xhs.iter().filter(|&&xh| xh >= peak_vcu) {
                let deployment = Deployment { split, vdu: x, vcu: xh };
                if let Some(cost) = static_cost(params, &demands, deployment) {
                    if best.is_none_or(|b| cost.total < b.cost.total) {
                        best = Some(StaoSolution { deployment, cost });
                    }
                }
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no static grid allocation covers the peak".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynoStage {
    pub action: Action,
    pub cost: CostBreakdown,
}

/// Cheapest always-reconfigure action for one stage given the previous
/// deployment. Ties keep the first candidate in split, vDU, vCU order.
pub fn solve_dyno_stage(
    params: &EnvParams,
    demand: f64,
    prev: &Deployment,
    grid: &DiscretizationGrid,
) -> DynoStage {
    let xs = grid.points(params.model.vdu_cap);
    let xhs = grid.points(params.model.vcu_cap);
    let mut best: Option<DynoStage> = None;
    for split in Split::ALL {
        let used = params.model.utilization(split, demand);
        for &x in &xs {
            for &xh in &xhs {
                let action = Action::deploy(split, x, xh);
                let (_, cost) = evaluate_stage(params, &action, prev, demand, used);
                if best.is_none_or(|b| cost.total < b.cost.total) {
                    best = Some(DynoStage { action, cost });
                }
            }
        }
    }
    best.expect("grid is never empty")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEpisode {
    pub policy: BaselinePolicy,
    pub actions: Vec<Action>,
    pub stages: Vec<CostBreakdown>,
    pub total: CostBreakdown,
    /// Stages with a configuration change requested.
    pub reconfigurations: usize,
}

/// Replays `trace` through a noise-free environment under `policy`.
///
/// The static policy starts with its solution already deployed and keeps it;
/// the dynamic policy starts from the default initial deployment.
pub fn run_baseline_episode(
    policy: BaselinePolicy,
    params: &EnvParams,
    trace: &TrafficTrace,
    grid: &DiscretizationGrid,
) -> Result<BaselineEpisode> {
    let mut env = match policy {
        BaselinePolicy::Stao => {
            let sol = solve_stao(params, trace, grid)?;
            Environment::with_deployment(params.clone(), trace.clone(), None, sol.deployment)?
        }
        BaselinePolicy::Dyno => Environment::new(params.clone(), trace.clone(), None)?,
    };
    let mut actions = Vec::with_capacity(trace.stages());
    let mut stages = Vec::with_capacity(trace.stages());
    let mut total = CostBreakdown::default();
    while !env.is_done() {
        let action = match policy {
            BaselinePolicy::Stao => Action::keep(env.deployment()),
            BaselinePolicy::Dyno => {
                let demand = env.state().demand;
                solve_dyno_stage(params, demand, &env.deployment(), grid).action
            }
        };
        let step = env.step(&action)?;
        total.accumulate(&step.cost);
        stages.push(step.cost);
        actions.push(action);
    }
    let reconfigurations = actions.iter().filter(|a| a.choice != ConfigChoice::Keep).count();
    Ok(BaselineEpisode { policy, actions, stages, total, reconfigurations })
}

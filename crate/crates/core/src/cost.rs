//! Management cost of one time stage and the matching reward.
//!
//! All coefficients are linear: `f(z) = kappa * z`. Resource quantities are in
//! reference cores (RC), xHaul loads in Mbps, costs in an abstract currency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ConfigChoice, Split};

/// Constant xHaul load of the fully centralized split, in Mbps.
pub const S4_XHAUL_MBPS: f64 = 2500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostCoefficients {
    /// Per RC of overprovisioned compute.
    pub overprovisioning: f64,
    /// Flat penalty per stage with declined demand or a violated constraint.
    pub declined: f64,
    /// Per RC of newly instantiated compute.
    pub instantiation: f64,
    /// Per RC moved by a reconfiguration.
    pub reconfiguration: f64,
    /// Per Mbps of reserved xHaul bandwidth.
    pub xhaul: f64,
}

impl Default for CostCoefficients {
    fn default() -> Self {
        Self {
            overprovisioning: 1.0,
            declined: 2.0,
            instantiation: 0.5,
            reconfiguration: 0.5,
            xhaul: 0.0005,
        }
    }
}

impl CostCoefficients {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.overprovisioning,
            self.declined,
            self.instantiation,
            self.reconfiguration,
            self.xhaul,
        ];
        if all.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "cost coefficients must be finite and non-negative: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            overprovisioning: self.overprovisioning * factor,
            declined: self.declined * factor,
            instantiation: self.instantiation * factor,
            reconfiguration: self.reconfiguration * factor,
            xhaul: self.xhaul * factor,
        }
    }
}

/// Which constraints a stage violates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintViolations {
    pub vdu_capacity: bool,
    pub vcu_capacity: bool,
    pub xhaul_capacity: bool,
}

impl ConstraintViolations {
    pub fn any(&self) -> bool {
        self.vdu_capacity || self.vcu_capacity || self.xhaul_capacity
    }
}

/// Everything the cost functions need to know about one executed stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub choice: ConfigChoice,
    pub split: Split,
    /// Allocated RC at vDU / vCU.
    pub vdu_alloc: f64,
    pub vcu_alloc: f64,
    /// Utilized RC at vDU / vCU.
    pub vdu_used: f64,
    pub vcu_used: f64,
    /// Allocations of the previous stage.
    pub prev_vdu_alloc: f64,
    pub prev_vcu_alloc: f64,
    /// xHaul load of the deployed split, Mbps.
    pub xhaul_load: f64,
    pub violations: ConstraintViolations,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub overprovisioning: f64,
    pub declined: f64,
    pub instantiation: f64,
    pub reconfiguration: f64,
    pub xhaul: f64,
    pub total: f64,
    pub reward: f64,
}

impl CostBreakdown {
    pub fn from_components(
        overprovisioning: f64,
        declined: f64,
        instantiation: f64,
        reconfiguration: f64,
        xhaul: f64,
    ) -> Self {
        let total = overprovisioning + declined + instantiation + reconfiguration + xhaul;
        Self {
            overprovisioning,
            declined,
            instantiation,
            reconfiguration,
            xhaul,
            total,
            reward: -total,
        }
    }

    /// Component-wise sum; the total is re-derived from the summed components.
    pub fn accumulate(&mut self, other: &CostBreakdown) {
        *self = Self::from_components(
            self.overprovisioning + other.overprovisioning,
            self.declined + other.declined,
            self.instantiation + other.instantiation,
            self.reconfiguration + other.reconfiguration,
            self.xhaul + other.xhaul,
        );
    }
}

pub fn overprovisioning_cost(o: &StageOutcome, k: &CostCoefficients) -> f64 {
    let excess = (o.vdu_alloc - o.vdu_used).max(0.0) + (o.vcu_alloc - o.vcu_used).max(0.0);
    k.overprovisioning * excess
}

/// `kappa_d` once if either node is underprovisioned or any constraint fails.
pub fn declined_demand_cost(o: &StageOutcome, k: &CostCoefficients) -> f64 {
    let declined =
        o.vdu_alloc < o.vdu_used || o.vcu_alloc < o.vcu_used || o.violations.any();
    if declined {
        k.declined
    } else {
        0.0
    }
}

/// Instantiation charges only growth; reconfiguration charges every moved RC
/// and only when the stage reconfigured.
pub fn instantiation_reconfiguration_cost(o: &StageOutcome, k: &CostCoefficients) -> f64 {
    let (inst, reconf) = instantiation_and_reconfiguration(o, k);
    inst + reconf
}

fn instantiation_and_reconfiguration(o: &StageOutcome, k: &CostCoefficients) -> (f64, f64) {
    if !o.choice.is_reconfiguration() {
        return (0.0, 0.0);
    }
    let beta = (o.vdu_alloc - o.prev_vdu_alloc).abs();
    let beta_hat = (o.vcu_alloc - o.prev_vcu_alloc).abs();
    let mut grown = 0.0;
    if o.vdu_alloc > o.prev_vdu_alloc {
        grown += beta;
    }
    if o.vcu_alloc > o.prev_vcu_alloc {
        grown += beta_hat;
    }
    (k.instantiation * grown, k.reconfiguration * (beta + beta_hat))
}

/// xHaul load in Mbps carried for `split` at demand `demand` Mbps.
pub fn xhaul_load(split: Split, demand: f64) -> f64 {
    match split {
        Split::S1 | Split::S2 => demand,
        Split::S3 => 1.02 * demand + 1.5,
        Split::S4 => S4_XHAUL_MBPS,
    }
}

/// Index-based variant of [`xhaul_load`] for callers holding a raw split number.
pub fn xhaul_load_by_index(split: usize, demand: f64) -> Result<f64> {
    Ok(xhaul_load(Split::from_index(split)?, demand))
}

pub fn xhaul_cost(split: Split, demand: f64, k: &CostCoefficients) -> f64 {
    k.xhaul * xhaul_load(split, demand)
}

pub fn total_cost_and_reward(o: &StageOutcome, k: &CostCoefficients) -> CostBreakdown {
    let (inst, reconf) = instantiation_and_reconfiguration(o, k);
    CostBreakdown::from_components(
        overprovisioning_cost(o, k),
        declined_demand_cost(o, k),
        inst,
        reconf,
        k.xhaul * o.xhaul_load,
    )
}

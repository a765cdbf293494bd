//! Per-second demand traces built from a Poisson arrival process.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the per-stage mean demand (Mbps) over an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrafficProfile {
    Constant {
        rate: f64,
    },
    /// Raised-cosine swing between `trough` and `peak` with the given period
    /// in stages. With `random_phase` each episode starts at a random point of
    /// the cycle.
    Diurnal {
        trough: f64,
        peak: f64,
        period_stages: f64,
        random_phase: bool,
    },
    /// Explicit per-stage rates, repeated cyclically when the episode is longer.
    Explicit {
        rates: Vec<f64>,
    },
}

impl Default for TrafficProfile {
    fn default() -> Self {
        TrafficProfile::Diurnal {
            trough: 5.0,
            peak: 35.0,
            period_stages: 60.0,
            random_phase: true,
        }
    }
}

impl TrafficProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        match self {
            TrafficProfile::Constant { rate } if !(rate.is_finite() && *rate >= 0.0) => {
                bad(format!("rate must be finite and >= 0, got {rate}"))
            }
            TrafficProfile::Diurnal {
                trough,
                peak,
                period_stages,
                ..
            } => {
                if !(trough.is_finite() && peak.is_finite() && *trough >= 0.0 && peak >= trough) {
                    return bad(format!("need 0 <= trough <= peak, got {trough}..{peak}"));
                }
                if !(period_stages.is_finite() && *period_stages > 0.0) {
                    return bad(format!("period must be positive, got {period_stages}"));
                }
                Ok(())
            }
            TrafficProfile::Explicit { rates } => {
                if rates.is_empty() {
                    return bad("explicit profile has no rates".into());
                }
                if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                    return bad("explicit rates must be finite and >= 0".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Highest stage rate the profile can produce.
    pub fn peak(&self) -> f64 {
        match self {
            TrafficProfile::Constant { rate } => *rate,
            TrafficProfile::Diurnal { peak, .. } => *peak,
            TrafficProfile::Explicit { rates } => rates.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn stage_rates<R: Rng + ?Sized>(&self, stages: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match self {
            TrafficProfile::Constant { rate } => vec![*rate; stages],
            TrafficProfile::Diurnal {
                trough,
                peak,
                period_stages,
                random_phase,
            } => {
                let phase = if *random_phase { rng.random::<f64>() } else { 0.0 };
                (0..stages)
                    .map(|n| {
                        let x = std::f64::consts::TAU * (n as f64 / period_stages + phase);
                        trough + (peak - trough) * 0.5 * (1.0 - x.cos())
                    })
                    .collect()
            }
            TrafficProfile::Explicit { rates } => {
                (0..stages).map(|n| rates[n % rates.len()]).collect()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub profile: TrafficProfile,
    /// Stages per episode (N).
    pub stages: usize,
    /// Seconds per stage (T).
    pub seconds_per_stage: usize,
    /// Demand carried by one Poisson arrival, Mbps.
    pub mbps_per_arrival: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            profile: TrafficProfile::default(),
            stages: 120,
            seconds_per_stage: 60,
            mbps_per_arrival: 0.1,
        }
    }
}

/// Per-second demand, `stages * seconds_per_stage` entries, stage-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficTrace {
    seconds_per_stage: usize,
    demands: Vec<f64>,
}

impl TrafficTrace {
    pub fn new(seconds_per_stage: usize, demands: Vec<f64>) -> Result<Self> {
        if seconds_per_stage == 0 || demands.is_empty() || !demands.len().is_multiple_of(seconds_per_stage) {
            return Err(Error::InvalidProfile(format!(
                "trace of {} seconds does not split into stages of {seconds_per_stage}",
                demands.len()
            )));
        }
        if demands.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidProfile("demands must be finite and >= 0".into()));
        }
        Ok(Self {
            seconds_per_stage,
            demands,
        })
    }

    /// Per-second demand equal to the stage rate, no sampling noise.
    pub fn from_stage_rates(rates: &[f64], seconds_per_stage: usize) -> Result<Self> {
        let demands = rates
            .iter()
            .flat_map(|&r| std::iter::repeat_n(r, seconds_per_stage))
            .collect();
        Self::new(seconds_per_stage, demands)
    }

    pub fn stages(&self) -> usize {
        self.demands.len() / self.seconds_per_stage
    }

    pub fn seconds_per_stage(&self) -> usize {
        self.seconds_per_stage
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    /// Seconds of stage `n` (1-based).
    pub fn stage(&self, n: usize) -> Result<&[f64]> {
        if n == 0 || n > self.stages() {
            return Err(Error::StageOutOfRange {
                stage: n,
                stages: self.stages(),
            });
        }
        let t = self.seconds_per_stage;
        Ok(&self.demands[(n - 1) * t..n * t])
    }

    pub fn stage_mean(&self, n: usize) -> Result<f64> {
        let s = self.stage(n)?;
        Ok(s.iter().sum::<f64>() / s.len() as f64)
    }

    /// Population variance of stage `n`'s per-second demand.
    pub fn stage_variance(&self, n: usize) -> Result<f64> {
        let s = self.stage(n)?;
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        Ok(s.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / s.len() as f64)
    }

    pub fn stage_means(&self) -> Vec<f64> {
        (1..=self.stages())
            .map(|n| self.stage_mean(n).expect("in range"))
            .collect()
    }
}

/// Draws per-second demand as `Poisson(rate / unit) * unit` around each
/// stage's profile rate.
pub fn generate_traffic<R: Rng + ?Sized>(cfg: &TrafficConfig, rng: &mut R) -> Result<TrafficTrace> {
    if cfg.stages == 0 || cfg.seconds_per_stage == 0 {
        return Err(Error::InvalidProfile("stages and seconds per stage must be positive".into()));
    }
    if !(cfg.mbps_per_arrival.is_finite() && cfg.mbps_per_arrival > 0.0) {
        return Err(Error::InvalidProfile(format!(
            "mbps_per_arrival must be positive, got {}",
            cfg.mbps_per_arrival
        )));
    }
    let rates = cfg.profile.stage_rates(cfg.stages, rng)?;
    let unit = cfg.mbps_per_arrival;
    let mut demands = Vec::with_capacity(cfg.stages * cfg.seconds_per_stage);
    for rate in rates {
        let mean_arrivals = rate / unit;
        if mean_arrivals <= 0.0 {
            demands.extend(std::iter::repeat_n(0.0, cfg.seconds_per_stage));
            continue;
        }
        let poisson = Poisson::new(mean_arrivals)
            .map_err(|e| Error::InvalidProfile(format!("poisson({mean_arrivals}): {e}")))?;
        for _ in 0..cfg.seconds_per_stage {
            let arrivals: f64 = poisson.sample(rng);
            demands.push(arrivals * unit);
        }
    }
    TrafficTrace::new(cfg.seconds_per_stage, demands)
}

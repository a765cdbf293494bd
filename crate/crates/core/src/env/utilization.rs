//! Ground-truth compute utilization at vDU and vCU as a function of split
//! and demand.
//!
//! A single base curve `g(demand)` gives the total compute of a fully
//! distributed deployment; split `i` places `rho_vdu[i] * g` at the vDU and
//! `rho_vcu[i] * g` at the vCU. Measured samples can replace the curve.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Split;

pub const DEFAULT_RHO_VDU: [f64; 4] = [1.0, 0.8, 0.65, 0.0];
pub const DEFAULT_RHO_VCU: [f64; 4] = [0.0, 0.1, 0.175, 0.5];

/// `g(d) = max(0, idle + slope * d + ripple * sin(2 pi d / ripple_period))`.
///
/// With the defaults the ripple outweighs the trend on parts of each period,
/// so `g` has several local maxima on 0..35 Mbps and peaks at about 23.5 RC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticCurve {
    pub idle: f64,
    pub slope: f64,
    pub ripple: f64,
    pub ripple_period: f64,
}

impl Default for SyntheticCurve {
    fn default() -> Self {
        Self {
            idle: 5.0,
            slope: 0.5,
            ripple: 2.5,
            ripple_period: 14.0,
        }
    }
}

impl SyntheticCurve {
    pub fn eval(&self, demand: f64) -> f64 {
        let wave = (std::f64::consts::TAU * demand / self.ripple_period).sin();
        (self.idle + self.slope * demand + self.ripple * wave).max(0.0)
    }
}

/// One row of the utilization-sample CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilizationSample {
    pub split: usize,
    pub demand_mbps: f64,
    pub vdu_rc: f64,
    pub vcu_rc: f64,
}

/// Piecewise-linear tables per split, sorted by demand, clamped at the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredCurves {
    tables: [Vec<(f64, f64, f64)>; 4],
}

impl MeasuredCurves {
    pub fn from_samples(samples: &[UtilizationSample]) -> Result<Self> {
        let mut tables: [Vec<(f64, f64, f64)>; 4] = Default::default();
        for s in samples {
            let split = Split::from_index(s.split)?;
            let vals = [s.demand_mbps, s.vdu_rc, s.vcu_rc];
            if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidConfig(format!("bad utilization sample {s:?}")));
            }
            tables[split.slot()].push((s.demand_mbps, s.vdu_rc, s.vcu_rc));
        }
        for (slot, t) in tables.iter_mut().enumerate() {
            if t.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "no utilization samples for split S{}",
                    slot + 1
                )));
            }
            t.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        Ok(Self { tables })
    }

    pub fn eval(&self, split: Split, demand: f64) -> (f64, f64) {
        let t = &self.tables[split.slot()];
        let first = t[0];
        let last = t[t.len() - 1];
        if demand <= first.0 {
            return (first.1, first.2);
        }
        if demand >= last.0 {
            return (last.1, last.2);
        }
        let hi = t.partition_point(|p| p.0 <= demand);
        let (a, b) = (t[hi - 1], t[hi]);
        let w = if b.0 > a.0 { (demand - a.0) / (b.0 - a.0) } else { 0.0 };
        (a.1 + w * (b.1 - a.1), a.2 + w * (b.2 - a.2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaseCurve {
    Synthetic(SyntheticCurve),
    Measured(MeasuredCurves),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilizationConfig {
    pub curve: SyntheticCurve,
    pub rho_vdu: [f64; 4],
    pub rho_vcu: [f64; 4],
    /// vDU / vCU capacity, RC.
    pub vdu_cap: f64,
    pub vcu_cap: f64,
    /// Relative amplitude of uniform measurement noise (0.02 = +-2%).
    pub noise: f64,
    /// Optional CSV of measured samples replacing the synthetic curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_csv: Option<String>,
}

impl Default for UtilizationConfig {
    fn default() -> Self {
        Self {
            curve: SyntheticCurve::default(),
            rho_vdu: DEFAULT_RHO_VDU,
            rho_vcu: DEFAULT_RHO_VCU,
            vdu_cap: 50.0,
            vcu_cap: 50.0,
            noise: 0.02,
            samples_csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationModel {
    pub curve: BaseCurve,
    pub rho_vdu: [f64; 4],
    pub rho_vcu: [f64; 4],
    pub vdu_cap: f64,
    pub vcu_cap: f64,
    pub noise: f64,
}

impl Default for UtilizationModel {
    fn default() -> Self {
        Self::synthetic(&UtilizationConfig::default()).expect("defaults are valid")
    }
}

impl UtilizationModel {
    /// Builds the model from config, loading measured samples if configured.
    pub fn from_config(cfg: &UtilizationConfig) -> Result<Self> {
        let mut model = Self::synthetic(cfg)?;
        if let Some(path) = &cfg.samples_csv {
            let samples = super::io::read_utilization_csv(std::path::Path::new(path))?;
            model.curve = BaseCurve::Measured(MeasuredCurves::from_samples(&samples)?);
        }
        Ok(model)
    }

    fn synthetic(cfg: &UtilizationConfig) -> Result<Self> {
        for i in 0..4 {
            let (d, c) = (cfg.rho_vdu[i], cfg.rho_vcu[i]);
            if !(d >= 0.0 && c >= 0.0 && d + c <= 1.0 + 1e-12 && d + c > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "split S{}: need rho_vdu, rho_vcu >= 0 with 0 < sum <= 1, got {d} + {c}",
                    i + 1
                )));
            }
        }
        if !(cfg.vdu_cap > 0.0 && cfg.vcu_cap > 0.0) {
            return Err(Error::InvalidConfig("capacities must be positive".into()));
        }
        if !(0.0..1.0).contains(&cfg.noise) {
            return Err(Error::InvalidConfig(format!("noise must be in [0, 1), got {}", cfg.noise)));
        }
        Ok(Self {
            curve: BaseCurve::Synthetic(cfg.curve),
            rho_vdu: cfg.rho_vdu,
            rho_vcu: cfg.rho_vcu,
            vdu_cap: cfg.vdu_cap,
            vcu_cap: cfg.vcu_cap,
            noise: cfg.noise,
        })
    }

    pub fn rho(&self, split: Split) -> (f64, f64) {
        (self.rho_vdu[split.slot()], self.rho_vcu[split.slot()])
    }

    /// Noise-free `(vdu, vcu)` utilization in RC, clamped to capacity.
    pub fn utilization(&self, split: Split, demand: f64) -> (f64, f64) {
        let (y, y_hat) = match &self.curve {
            BaseCurve::Synthetic(c) => {
                let g = c.eval(demand);
                let (d, v) = self.rho(split);
                (d * g, v * g)
            }
            BaseCurve::Measured(m) => m.eval(split, demand),
        };
        (y.clamp(0.0, self.vdu_cap), y_hat.clamp(0.0, self.vcu_cap))
    }

    /// Utilization with uniform relative noise of amplitude `self.noise`.
    pub fn observe<R: Rng + ?Sized>(&self, split: Split, demand: f64, rng: &mut R) -> (f64, f64) {
        let (y, y_hat) = self.utilization(split, demand);
        if self.noise == 0.0 {
            return (y, y_hat);
        }
        let a = self.noise;
        let y = y * (1.0 + rng.random_range(-a..=a));
        let y_hat = y_hat * (1.0 + rng.random_range(-a..=a));
        (y.clamp(0.0, self.vdu_cap), y_hat.clamp(0.0, self.vcu_cap))
    }

    /// The split-independent base compute implied by an observation, recovered
    /// by dividing out the split's placement factors.
    pub fn base_from_observation(&self, split: Split, vdu: f64, vcu: f64) -> f64 {
        let (d, c) = self.rho(split);
        (vdu + vcu) / (d + c)
    }

    pub fn without_noise(&self) -> Self {
        Self {
            noise: 0.0,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sweep() -> impl Iterator<Item = f64> {
        (0..=3500).map(|k| k as f64 * 0.01)
    }

    #[test]
    fn centralized_split_leaves_vdu_idle() {
        let m = UtilizationModel::default();
        for d in sweep().step_by(50) {
            assert_eq!(m.utilization(Split::S4, d).0, 0.0);
            assert_eq!(m.utilization(Split::S1, d).1, 0.0);
        }
    }

    #[test]
    fn default_curve_is_non_monotonic_with_two_maxima() {
        let c = SyntheticCurve::default();
        let g: Vec<f64> = sweep().map(|d| c.eval(d)).collect();
        let local_max = g.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count();
        assert!(local_max >= 2, "{local_max}");
        assert!(g.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn envelope_below_reported_peaks() {
        let m = UtilizationModel::default();
        let s1 = sweep().map(|d| m.utilization(Split::S1, d).0).fold(0.0, f64::max);
        let s4 = sweep().map(|d| m.utilization(Split::S4, d).1).fold(0.0, f64::max);
        assert!(s1 <= 25.0, "{s1}");
        assert!(s4 <= 13.0, "{s4}");
    }

    #[test]
    fn noise_is_bounded() {
        let m = UtilizationModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in sweep().step_by(100) {
            let (y, _) = m.utilization(Split::S2, d);
            let (yn, _) = m.observe(Split::S2, d, &mut rng);
            assert!((yn - y).abs() <= 0.02 * y + 1e-12);
        }
        let quiet = m.without_noise();
        assert_eq!(quiet.observe(Split::S3, 12.0, &mut rng), quiet.utilization(Split::S3, 12.0));
    }

    #[test]
    fn base_recovered_from_any_split() {
        let m = UtilizationModel::default();
        let BaseCurve::Synthetic(c) = m.curve else { unreachable!() };
        for s in Split::ALL {
            let (y, yh) = m.utilization(s, 17.0);
            assert!((m.base_from_observation(s, y, yh) - c.eval(17.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_sum_above_one_rejected() {
        let cfg = UtilizationConfig {
            rho_vcu: [0.0, 0.3, 0.175, 0.5],
            ..Default::default()
        };
        assert!(UtilizationModel::from_config(&cfg).is_err());
    }

    #[test]
    fn measured_curves_interpolate() {
        let mut samples = Vec::new();
        for split in 1..=4 {
            samples.push(UtilizationSample { split, demand_mbps: 0.0, vdu_rc: 2.0, vcu_rc: 1.0 });
            samples.push(UtilizationSample { split, demand_mbps: 10.0, vdu_rc: 12.0, vcu_rc: 3.0 });
        }
        let m = MeasuredCurves::from_samples(&samples).unwrap();
        assert_eq!(m.eval(Split::S2, 5.0), (7.0, 2.0));
        assert_eq!(m.eval(Split::S2, 20.0), (12.0, 3.0));
        assert!(MeasuredCurves::from_samples(&samples[..4]).is_err());
    }
}

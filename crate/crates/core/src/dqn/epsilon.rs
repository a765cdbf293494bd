use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponentially decaying exploration rate, indexed by 1-based episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub max: f64,
    pub min: f64,
    /// Per-episode exponential decay rate.
    pub decay: f64,
}

impl EpsilonSchedule {
    pub fn new(max: f64, min: f64, decay: f64) -> Result<Self> {
        let s = Self { max, min, decay };
        s.validate()?;
        Ok(s)
    }

    /// Decay chosen so that epsilon is within 1% of `min` after `fraction`
    /// of `episodes`.
    pub fn reaching_floor(max: f64, min: f64, episodes: usize, fraction: f64) -> Result<Self> {
        if episodes == 0 || !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "epsilon horizon needs episodes > 0 and fraction in (0, 1]".into(),
            ));
        }
        let span = fraction * episodes as f64;
        let decay = if max > min && min > 0.0 {
            ((max - min) / (0.01 * min)).ln().max(0.0) / span
        } else if max > min {
            // Floor of zero: decay to 1% of the starting gap instead.
            100f64.ln() / span
        } else {
            0.0
        };
        Self::new(max, min, decay)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.min && self.min <= self.max && self.max <= 1.0) || !(self.decay >= 0.0) {
            return Err(Error::InvalidConfig(format!("bad epsilon schedule: {self:?}")));
        }
        Ok(())
    }

    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let k = episode.saturating_sub(1) as f64;
        let eps = self.min + (self.max - self.min) * (-self.decay * k).exp();
        eps.clamp(self.min, self.max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints() {
        let s = EpsilonSchedule::reaching_floor(0.95, 0.02, 500, 0.6).unwrap();
        assert_eq!(s.epsilon_at(1), 0.95);
        assert!((s.epsilon_at(1_000_000) - 0.02).abs() < 1e-12);
        let at = s.epsilon_at(301);
        assert!(at <= 0.02 * 1.01 + 1e-12 && at > 0.02, "{at}");
        assert!(s.epsilon_at(250) > 0.0202);
    }

    #[test]
    fn rejects_inverted_bounds() {
        assert!(EpsilonSchedule::new(0.1, 0.5, 0.1).is_err());
        assert!(EpsilonSchedule::new(1.5, 0.5, 0.1).is_err());
        assert!(EpsilonSchedule::new(0.9, 0.1, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn non_increasing(max in 0.0f64..=1.0, frac in 0.0f64..=1.0, decay in 0.0f64..1.0, e in 1usize..5000) {
            let s = EpsilonSchedule::new(max, max * frac, decay).unwrap();
            prop_assert!(s.epsilon_at(e + 1) <= s.epsilon_at(e));
            prop_assert!(s.epsilon_at(e) >= s.min && s.epsilon_at(e) <= s.max);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampler settings and prior hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RjmcmcConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burnin: usize,
    /// Minimum segment length in observations.
    pub t_min: usize,
    /// Largest admissible number of segments.
    pub max_segments: usize,
    /// Cosine basis functions per segment, intercept excluded.
    pub n_basis: usize,
    /// Weight of the uniform relocation proposal against the ±1 walk.
    pub mix_pi: f64,
    /// Relocation attempts per sweep.
    pub relocations: usize,
    /// Extra relocation attempts after an accepted birth or death during burn-in.
    pub burnin_settle: usize,
    pub seed: u64,
    /// Shape and scale of the inverse-gamma prior on `τ²`.
    pub prior_tau: (f64, f64),
    /// Prior variance of the log-spectrum intercept.
    pub sigma0_sq: f64,
}

impl Default for RjmcmcConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burnin: 5_000,
            t_min: 40,
            max_segments: 10,
            n_basis: 10,
            mix_pi: 0.8,
            relocations: 1,
            burnin_settle: 100,
            seed: 0,
            prior_tau: (1.0, 1.0),
            sigma0_sq: 100.0,
        }
    }
}

impl RjmcmcConfig {
    /// Checks the settings against a series of length `len`.
    pub fn validate(&self, len: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.burnin >= self.iterations {
            return bad(format!(
                "burn-in {} must be below the iteration count {}",
                self.burnin, self.iterations
            ));
        }
        if self.t_min < 2 * self.n_basis || self.t_min < 4 {
            return bad(format!(
                "t_min {} must be at least 4 and at least twice the basis size {}",
                self.t_min, self.n_basis
            ));
        }
        if self.max_segments == 0 {
            return bad("max_segments must be positive".into());
        }
        if self.max_segments * self.t_min > len {
            return bad(format!(
                "{} segments of at least {} points do not fit a series of length {len}",
                self.max_segments, self.t_min
            ));
        }
        if len < 2 * self.t_min {
            return bad(format!("series length {len} is below 2·t_min = {}", 2 * self.t_min));
        }
        if self.relocations == 0 {
            return bad("at least one relocation per sweep is required".into());
        }
        if !(0.0..=1.0).contains(&self.mix_pi) {
            return bad(format!("mix_pi {} must lie in [0, 1]", self.mix_pi));
        }
        let (a, b) = self.prior_tau;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return bad(format!("inverse-gamma prior ({a}, {b}) must have positive parameters"));
        }
        if !(self.sigma0_sq > 0.0 && self.sigma0_sq.is_finite()) {
            return bad(format!("sigma0_sq {} must be positive", self.sigma0_sq));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid_for_long_series() {
        RjmcmcConfig::default().validate(1000).unwrap();
    }

    #[test]
    fn violations_rejected() {
        let base = RjmcmcConfig::default();
        assert!(RjmcmcConfig { burnin: 10_000, ..base.clone() }.validate(1000).is_err());
        assert!(RjmcmcConfig { t_min: 15, ..base.clone() }.validate(1000).is_err());
        assert!(base.validate(399).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Euler steps, i.e. model evaluations per guidance branch.
    pub steps: usize,
    pub guidance: f64,
    /// Steps `1..=cutoff_step`, counted from pure noise, receive injection.
    pub cutoff_step: usize,
    pub noise_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            steps: 28,
            guidance: 7.5,
            cutoff_step: 12,
            noise_seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("sampler.steps must be at least 1".into()));
        }
        if self.cutoff_step > self.steps {
            return Err(Error::InvalidConfig(format!(
                "sampler.cutoff {} exceeds sampler.steps {}",
                self.cutoff_step, self.steps
            )));
        }
        if !(self.guidance >= 0.0 && self.guidance.is_finite()) {
            return Err(Error::InvalidConfig(format!("guidance {} must be finite and >= 0", self.guidance)));
        }
        Ok(())
    }

    /// `steps + 1` uniformly spaced flow times from 1 down to 0. Step `i`
    /// (1-based) evaluates the model at `schedule[i - 1]` and moves to
    /// `schedule[i]`.
    pub fn schedule(&self) -> Vec<f64> {
        let n = self.steps as f64;
        (0..=self.steps).map(|i| 1.0 - i as f64 / n).collect()
    }

    /// Flow time evaluated at 1-based `step`.
    pub fn t_at(&self, step: usize) -> f64 {
        1.0 - (step - 1) as f64 / self.steps as f64
    }
}

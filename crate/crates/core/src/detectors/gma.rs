//! Geometric moving average chart, Roberts (1959), "Control chart tests
//! based on geometric moving averages".
//!
//! The statistic is an exponentially weighted mean started at zero. Drift is
//! flagged when its absolute value leaves the band `±threshold`.

use serde::{Deserialize, Serialize};

use super::{positive, Status, StepOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmaParams {
    /// Weight given to each new observation.
    pub smoothing: f64,
    pub threshold: f64,
    pub min_instances: u64,
}

impl Default for GmaParams {
    fn default() -> Self {
        Self { smoothing: 0.01, threshold: 0.35, min_instances: 30 }
    }
}

impl GmaParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(("smoothing", "must lie in (0, 1]"));
        }
        positive(self.threshold, "threshold")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gma {
    params: GmaParams,
    n: u64,
    level: f64,
}

impl Gma {
    pub fn new(params: GmaParams) -> Self {
        Self { params, n: 0, level: 0.0 }
    }

    pub fn min_samples(&self) -> u64 {
        self.params.min_instances.max(1)
    }

    pub fn update(&mut self, x: f64) -> StepOutcome {
        self.n += 1;
        let a = self.params.smoothing;
        self.level = (1.0 - a) * self.level + a * x;
        let statistic = libm::fabs(self.level);
        if self.n >= self.min_samples() && statistic > self.params.threshold {
            StepOutcome { status: Status::Drift, statistic }
        } else {
            StepOutcome::stable(statistic)
        }
    }
}

//! Tabular CUSUM after Page (1954), "Continuous inspection schemes".
//!
//! Two one-sided sums track upward and downward departures from zero beyond
//! an allowance `ν`; drift is signalled when either exceeds `h`.

use serde::{Deserialize, Serialize};

use super::{positive, Status, StepOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CusumParams {
    /// Decision threshold `h`.
    pub threshold: f64,
    /// Allowance `ν` subtracted from every increment.
    pub allowance: f64,
    /// Track downward shifts as well as upward ones.
    pub two_sided: bool,
    pub min_instances: u64,
}

impl Default for CusumParams {
    fn default() -> Self {
        Self { threshold: 10.0, allowance: 0.5, two_sided: true, min_instances: 30 }
    }
}

impl CusumParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        positive(self.threshold, "threshold")?;
        if !(self.allowance >= 0.0 && self.allowance.is_finite()) {
            return Err(("allowance", "must be non-negative and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cusum {
    params: CusumParams,
    n: u64,
    upper: f64,
    lower: f64,
}

impl Cusum {
    pub fn new(params: CusumParams) -> Self {
        Self { params, n: 0, upper: 0.0, lower: 0.0 }
    }

    pub fn min_samples(&self) -> u64 {
        self.params.min_instances.max(1)
    }

    pub fn update(&mut self, x: f64) -> StepOutcome {
        self.n += 1;
        let nu = self.params.allowance;
        self.upper = (self.upper + x - nu).max(0.0);
        if self.params.two_sided {
            self.lower = (self.lower - x - nu).max(0.0);
        }
        let statistic = self.upper.max(self.lower);
        if self.n >= self.min_samples() && statistic > self.params.threshold {
            StepOutcome { status: Status::Drift, statistic }
        } else {
            StepOutcome::stable(statistic)
        }
    }
}

//! Page-Hinkley test with a fading factor, as used for concept drift by
//! Gama, Sebastião and Rodrigues (2013), "On evaluating stream learning
//! algorithms".

use serde::{Deserialize, Serialize};

use super::{positive, Status, StepOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PageHinkleyParams {
    /// Magnitude of change tolerated, `δ`.
    pub delta: f64,
    /// Detection threshold, `λ`.
    pub lambda: f64,
    /// Fading factor applied to the cumulative sum.
    pub alpha: f64,
    pub two_sided: bool,
    pub min_instances: u64,
}

impl Default for PageHinkleyParams {
    fn default() -> Self {
        Self { delta: 0.25, lambda: 20.0, alpha: 0.9999, two_sided: true, min_instances: 30 }
    }
}

impl PageHinkleyParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        positive(self.lambda, "lambda")?;
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(("delta", "must be non-negative and finite"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(("alpha", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageHinkley {
    params: PageHinkleyParams,
    n: u64,
    mean: f64,
    sum_up: f64,
    min_up: f64,
    sum_down: f64,
    max_down: f64,
}

impl PageHinkley {
    pub fn new(params: PageHinkleyParams) -> Self {
        Self { params, n: 0, mean: 0.0, sum_up: 0.0, min_up: 0.0, sum_down: 0.0, max_down: 0.0 }
    }

    pub fn min_samples(&self) -> u64 {
        self.params.min_instances.max(1)
    }

    pub fn update(&mut self, x: f64) -> StepOutcome {
        let p = &self.params;
        self.n += 1;
        self.mean += (x - self.mean) / self.n as f64;
        self.sum_up = p.alpha * self.sum_up + (x - self.mean - p.delta);
        self.min_up = self.min_up.min(self.sum_up);
        let mut statistic = self.sum_up - self.min_up;
        if p.two_sided {
            self.sum_down = p.alpha * self.sum_down + (x - self.mean + p.delta);
            self.max_down = self.max_down.max(self.sum_down);
            statistic = statistic.max(self.max_down - self.sum_down);
        }
        if self.n >= self.min_samples() && statistic > p.lambda {
            StepOutcome { status: Status::Drift, statistic }
        } else {
            StepOutcome::stable(statistic)
        }
    }
}

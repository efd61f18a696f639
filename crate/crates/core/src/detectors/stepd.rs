//! STEPD, Nishida and Yamauchi (2007), "Detecting concept drift using
//! statistical testing".
//!
//! The last `window_size` observations form the recent window and everything
//! older since the last reset forms the reference. A two-proportion test with
//! continuity correction compares their means.

use alloc::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{at_least, probability, Status, StepOutcome};
use crate::stats::normal_cdf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepdParams {
    pub window_size: usize,
    pub alpha_drift: f64,
    pub alpha_warning: f64,
}

impl Default for StepdParams {
    fn default() -> Self {
        Self { window_size: 30, alpha_drift: 0.003, alpha_warning: 0.05 }
    }
}

impl StepdParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        at_least(self.window_size, 2, "window_size")?;
        probability(self.alpha_drift, "alpha_drift")?;
        probability(self.alpha_warning, "alpha_warning")?;
        if self.alpha_warning < self.alpha_drift {
            return Err(("alpha_warning", "must not be smaller than alpha_drift"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stepd {
    params: StepdParams,
    recent: VecDeque<f64>,
    recent_sum: f64,
    older_sum: f64,
    older_n: f64,
}

impl Stepd {
    pub fn new(params: StepdParams) -> Self {
        Self { recent: VecDeque::with_capacity(params.window_size + 1), params, recent_sum: 0.0, older_sum: 0.0, older_n: 0.0 }
    }

    pub fn min_samples(&self) -> u64 {
        2 * self.params.window_size as u64
    }

    pub fn update(&mut self, x: f64) -> StepOutcome {
        let w = self.params.window_size;
        self.recent.push_back(x);
        self.recent_sum += x;
        if self.recent.len() > w {
            let old = self.recent.pop_front().expect("window is non-empty");
            self.recent_sum -= old;
            self.older_sum += old;
            self.older_n += 1.0;
        }
        if self.older_n < w as f64 {
            return StepOutcome::stable(0.0);
        }
        let nr = w as f64;
        let no = self.older_n;
        let pooled = (self.older_sum + self.recent_sum) / (no + nr);
        let spread = pooled * (1.0 - pooled) * (1.0 / no + 1.0 / nr);
        if spread <= 0.0 {
            return StepOutcome::stable(0.0);
        }
        let diff = libm::fabs(self.older_sum / no - self.recent_sum / nr) - 0.5 * (1.0 / no + 1.0 / nr);
        let z = diff / libm::sqrt(spread);
        if z <= 0.0 {
            return StepOutcome::stable(z);
        }
        let p_value = 2.0 * (1.0 - normal_cdf(z));
        let status = if p_value < self.params.alpha_drift {
            Status::Drift
        } else if p_value < self.params.alpha_warning {
            Status::Warning
        } else {
            Status::Stable
        };
        StepOutcome { status, statistic: z }
    }
}

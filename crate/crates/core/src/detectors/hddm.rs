//! Hoeffding-bound drift detectors of Frías-Blanco et al. (2015), "Online
//! and non-parametric drift detection methods based on Hoeffding's bounds".
//!
//! [`HddmA`] compares the running mean against the mean at the most
//! favourable earlier cut point using the bound for averages. [`HddmW`] does
//! the same with exponentially weighted means and McDiarmid's bound. Both
//! expect observations in `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::{ln, probability, Status, StepOutcome};

fn validate_confidences(drift: f64, warning: f64) -> Result<(), (&'static str, &'static str)> {
    probability(drift, "drift_confidence")?;
    probability(warning, "warning_confidence")?;
    if warning < drift {
        return Err(("warning_confidence", "must not be smaller than drift_confidence"));
    }
    Ok(())
}

fn combine(drift: bool, warning: bool) -> Status {
    if drift {
        Status::Drift
    } else if warning {
        Status::Warning
    } else {
        Status::Stable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HddmAParams {
    pub drift_confidence: f64,
    pub warning_confidence: f64,
    pub two_sided: bool,
    pub min_instances: u64,
}

impl Default for HddmAParams {
    fn default() -> Self {
        Self { drift_confidence: 0.001, warning_confidence: 0.005, two_sided: true, min_instances: 30 }
    }
}

impl HddmAParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        validate_confidences(self.drift_confidence, self.warning_confidence)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HddmA {
    params: HddmAParams,
    n: f64,
    c: f64,
    n_min: f64,
    c_min: f64,
    n_max: f64,
    c_max: f64,
}

impl HddmA {
    pub fn new(params: HddmAParams) -> Self {
        Self { params, n: 0.0, c: 0.0, n_min: 0.0, c_min: 0.0, n_max: 0.0, c_max: 0.0 }
    }

    pub fn min_samples(&self) -> u64 {
        self.params.min_instances.max(2)
    }

    /// Hoeffding bound for a difference between the prefix mean at the cut and the full mean.
    fn gap_bound(&self, n_cut: f64, confidence: f64) -> f64 {
        let m = (self.n - n_cut) / n_cut / self.n;
        libm::sqrt(m / 2.0 * ln(2.0 / confidence))
    }

    pub fn update(&mut self, x: f64) -> StepOutcome {
        self.n += 1.0;
        self.c += x;
        if self.n_min == 0.0 {
            self.n_min = self.n;
            self.c_min = self.c;
        }
        if self.n_max == 0.0 {
            self.n_max = self.n;
            self.c_max = self.c;
        }
        let k = ln(1.0 / self.params.drift_confidence);
        let mean = self.c / self.n;
        let here = libm::sqrt(k / (2.0 * self.n));
        if self.c_min / self.n_min + libm::sqrt(k / (2.0 * self.n_min)) >= mean + here {
            self.n_min = self.n;
            self.c_min = self.c;
        }
        if self.c_max / self.n_max - libm::sqrt(k / (2.0 * self.n_max)) <= mean - here {
            self.n_max = self.n;
            self.c_max = self.c;
        }

        let rise = mean - self.c_min / self.n_min;
        let fall = self.c_max / self.n_max - mean;
        let statistic = if self.params.two_sided { rise.max(fall) } else { rise };
        if (self.n as u64) < self.min_samples() {
            return StepOutcome::stable(statistic);
        }
        let test = |gap: f64, n_cut: f64, conf: f64| n_cut < self.n && gap >= self.gap_bound(n_cut, conf);
        let (d, w) = (self.params.drift_confidence, self.params.warning_confidence);
        let mut drift = test(rise, self.n_min, d);
        let mut warning = test(rise, self.n_min, w);
        if self.params.two_sided {
            drift |= test(fall, self.n_max, d);
            warning |= test(fall, self.n_max, w);
        }
        StepOutcome { status: combine(drift, warning), statistic }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HddmWParams {
    /// EWMA weight of the newest observation.
    pub lambda: f64,
    pub drift_confidence: f64,
    pub warning_confidence: f64,
    pub two_sided: bool,
    pub min_instances: u64,
}

impl Default for HddmWParams {
    fn default() -> Self {
        Self { lambda: 0.05, drift_confidence: 0.001, warning_confidence: 0.005, two_sided: true, min_instances: 30 }
    }
}

impl HddmWParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        probability(self.lambda, "lambda")?;
        validate_confidences(self.drift_confidence, self.warning_confidence)
    }
}

/// An EWMA estimate with the sum of squared weights that bounds its spread.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Ewma {
    estimate: Option<f64>,
    weight_sq: f64,
}

impl Ewma {
    fn push(&mut self, x: f64, lambda: f64) {
        match self.estimate {
            None => {
                self.estimate = Some(x);
                self.weight_sq = 1.0;
            }
            Some(e) => {
                self.estimate = Some(lambda * x + (1.0 - lambda) * e);
                self.weight_sq = lambda * lambda + (1.0 - lambda) * (1.0 - lambda) * self.weight_sq;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CutMonitor {
    cut_point: f64,
    before: Ewma,
    after: Ewma,
}

impl CutMonitor {
    fn new(initial_cut: f64) -> Self {
        Self { cut_point: initial_cut, before: Ewma::default(), after: Ewma::default() }
    }

    /// Gap `after - before` when monitoring increases, `before - after` otherwise.
    fn gap(&self, increase: bool) -> Option<(f64, f64)> {
        let (b, a) = (self.before.estimate?, self.after.estimate?);
        let gap = if increase { a - b } else { b - a };
        Some((gap, self.before.weight_sq + self.after.weight_sq))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HddmW {
    params: HddmWParams,
    n: u64,
    total: Ewma,
    incr: CutMonitor,
    decr: CutMonitor,
}

impl HddmW {
    pub fn new(params: HddmWParams) -> Self {
        Self { params, n: 0, total: Ewma::default(), incr: CutMonitor::new(f64::INFINITY), decr: CutMonitor::new(f64::NEG_INFINITY) }
    }

    pub fn min_samples(&self) -> u64 {
        self.params.min_instances.max(2)
    }

    pub fn update(&mut self, x: f64) -> StepOutcome {
        let lambda = self.params.lambda;
        self.n += 1;
        self.total.push(x, lambda);
        let estimate = self.total.estimate.expect("total has at least one sample");
        let bound = libm::sqrt(self.total.weight_sq * ln(1.0 / self.params.drift_confidence) / 2.0);

        if estimate + bound < self.incr.cut_point {
            self.incr = CutMonitor { cut_point: estimate + bound, before: self.total, after: Ewma::default() };
        } else {
            self.incr.after.push(x, lambda);
        }
        if self.params.two_sided {
            if estimate - bound > self.decr.cut_point {
                self.decr = CutMonitor { cut_point: estimate - bound, before: self.total, after: Ewma::default() };
            } else {
                self.decr.after.push(x, lambda);
            }
        }

        let mut statistic = 0.0f64;
        let mut drift = false;
        let mut warning = false;
        let mut check = |monitor: &CutMonitor, increase: bool| {
            if let Some((gap, weight)) = monitor.gap(increase) {
                statistic = statistic.max(gap);
                let exceeds = |conf: f64| gap > libm::sqrt(weight * ln(1.0 / conf) / 2.0);
                drift |= exceeds(self.params.drift_confidence);
                warning |= exceeds(self.params.warning_confidence);
            }
        };
        check(&self.incr, true);
        if self.params.two_sided {
            check(&self.decr, false);
        }
        if self.n < self.min_samples() {
            return StepOutcome::stable(statistic);
        }
        StepOutcome { status: combine(drift, warning), statistic }
    }
}

//! Streaming change detectors over a residual stream.
//!
//! Every detector sits behind the same stepwise contract: [`Detector::step`]
//! consumes one finite value and reports `stable`, `warning` or `drift`. On
//! drift the detector resets itself to a freshly constructed state, input
//! transform included, so the next sample starts a new reference period.
//!
//! Inputs first pass through the configured [`InputTransform`]. The
//! `standardized` transform z-scores each value against the running mean and
//! sd of the values seen since the last reset, after a short warm-up during
//! which nothing is tested. Detectors whose bounds assume observations in
//! `[0, 1]` (HDDM_A, HDDM_W, STEPD, SeqDrift1, SeqDrift2) additionally map the
//! transformed value through the standard normal CDF.

mod adwin;
mod cusum;
mod gma;
mod hddm;
mod page_hinkley;
mod seed;
mod seqdrift;
mod stepd;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::ensemble::ResidualSeries;
use crate::stats::{normal_cdf, RunningMoments};
use crate::time::Timestamp;

pub use adwin::{Adwin, AdwinParams};
pub use cusum::{Cusum, CusumParams};
pub use gma::{Gma, GmaParams};
pub use hddm::{HddmA, HddmAParams, HddmW, HddmWParams};
pub use page_hinkley::{PageHinkley, PageHinkleyParams};
pub use seed::{Seed, SeedParams};
pub use seqdrift::{SeqDrift1, SeqDrift1Params, SeqDrift2, SeqDrift2Params};
pub use stepd::{Stepd, StepdParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectorError {
    #[error("{kind}: invalid parameter `{parameter}`: {reason}")]
    Config { kind: DetectorKind, parameter: &'static str, reason: String },
    #[error("non-finite input value {0}")]
    NonFinite(f64),
    #[error("residual series has no non-missing values")]
    EmptyInput,
    #[error("unknown detector kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "ADWIN")]
    Adwin,
    #[serde(rename = "CUSUM")]
    Cusum,
    #[serde(rename = "GMA")]
    Gma,
    #[serde(rename = "HDDM_A")]
    HddmA,
    #[serde(rename = "HDDM_W")]
    HddmW,
    #[serde(rename = "PH")]
    PageHinkley,
    #[serde(rename = "SEED")]
    Seed,
    #[serde(rename = "SeqDrift1")]
    SeqDrift1,
    #[serde(rename = "SeqDrift2")]
    SeqDrift2,
    #[serde(rename = "STEPD")]
    Stepd,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 10] = [
        DetectorKind::Adwin,
        DetectorKind::Cusum,
        DetectorKind::Gma,
        DetectorKind::HddmA,
        DetectorKind::HddmW,
        DetectorKind::PageHinkley,
        DetectorKind::Seed,
        DetectorKind::SeqDrift1,
        DetectorKind::SeqDrift2,
        DetectorKind::Stepd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Adwin => "ADWIN",
            DetectorKind::Cusum => "CUSUM",
            DetectorKind::Gma => "GMA",
            DetectorKind::HddmA => "HDDM_A",
            DetectorKind::HddmW => "HDDM_W",
            DetectorKind::PageHinkley => "PH",
            DetectorKind::Seed => "SEED",
            DetectorKind::SeqDrift1 => "SeqDrift1",
            DetectorKind::SeqDrift2 => "SeqDrift2",
            DetectorKind::Stepd => "STEPD",
        }
    }

    pub fn from_name(s: &str) -> Result<Self, DetectorError> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| DetectorError::UnknownKind(s.into()))
    }

    /// Whether the detector expects observations in `[0, 1]`.
    pub fn bounded_input(self) -> bool {
        matches!(
            self,
            DetectorKind::HddmA | DetectorKind::HddmW | DetectorKind::Stepd | DetectorKind::SeqDrift1 | DetectorKind::SeqDrift2
        )
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InputTransform {
    Raw,
    Abs,
    #[default]
    Standardized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Stable,
    Warning,
    Drift,
}

/// Kind-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum DetectorParams {
    #[serde(rename = "ADWIN")]
    Adwin(AdwinParams),
    #[serde(rename = "CUSUM")]
    Cusum(CusumParams),
    #[serde(rename = "GMA")]
    Gma(GmaParams),
    #[serde(rename = "HDDM_A")]
    HddmA(HddmAParams),
    #[serde(rename = "HDDM_W")]
    HddmW(HddmWParams),
    #[serde(rename = "PH")]
    PageHinkley(PageHinkleyParams),
    #[serde(rename = "SEED")]
    Seed(SeedParams),
    #[serde(rename = "SeqDrift1")]
    SeqDrift1(SeqDrift1Params),
    #[serde(rename = "SeqDrift2")]
    SeqDrift2(SeqDrift2Params),
    #[serde(rename = "STEPD")]
    Stepd(StepdParams),
}

impl DetectorParams {
    pub fn default_for(kind: DetectorKind) -> Self {
        match kind {
            DetectorKind::Adwin => DetectorParams::Adwin(AdwinParams::default()),
            DetectorKind::Cusum => DetectorParams::Cusum(CusumParams::default()),
            DetectorKind::Gma => DetectorParams::Gma(GmaParams::default()),
            DetectorKind::HddmA => DetectorParams::HddmA(HddmAParams::default()),
            DetectorKind::HddmW => DetectorParams::HddmW(HddmWParams::default()),
            DetectorKind::PageHinkley => DetectorParams::PageHinkley(PageHinkleyParams::default()),
            DetectorKind::Seed => DetectorParams::Seed(SeedParams::default()),
            DetectorKind::SeqDrift1 => DetectorParams::SeqDrift1(SeqDrift1Params::default()),
            DetectorKind::SeqDrift2 => DetectorParams::SeqDrift2(SeqDrift2Params::default()),
            DetectorKind::Stepd => DetectorParams::Stepd(StepdParams::default()),
        }
    }

    pub fn kind(&self) -> DetectorKind {
        match self {
            DetectorParams::Adwin(_) => DetectorKind::Adwin,
            DetectorParams::Cusum(_) => DetectorKind::Cusum,
            DetectorParams::Gma(_) => DetectorKind::Gma,
            DetectorParams::HddmA(_) => DetectorKind::HddmA,
            DetectorParams::HddmW(_) => DetectorKind::HddmW,
            DetectorParams::PageHinkley(_) => DetectorKind::PageHinkley,
            DetectorParams::Seed(_) => DetectorKind::Seed,
            DetectorParams::SeqDrift1(_) => DetectorKind::SeqDrift1,
            DetectorParams::SeqDrift2(_) => DetectorKind::SeqDrift2,
            DetectorParams::Stepd(_) => DetectorKind::Stepd,
        }
    }

    fn validate(&self) -> Result<(), DetectorError> {
        let kind = self.kind();
        let check = |r: Result<(), (&'static str, &'static str)>| {
            r.map_err(|(parameter, reason)| DetectorError::Config { kind, parameter, reason: reason.into() })
        };
        match self {
            DetectorParams::Adwin(p) => check(p.validate()),
            DetectorParams::Cusum(p) => check(p.validate()),
            DetectorParams::Gma(p) => check(p.validate()),
            DetectorParams::HddmA(p) => check(p.validate()),
            DetectorParams::HddmW(p) => check(p.validate()),
            DetectorParams::PageHinkley(p) => check(p.validate()),
            DetectorParams::Seed(p) => check(p.validate()),
            DetectorParams::SeqDrift1(p) => check(p.validate()),
            DetectorParams::SeqDrift2(p) => check(p.validate()),
            DetectorParams::Stepd(p) => check(p.validate()),
        }
    }
}

/// Default standardisation warm-up, in samples.
pub const DEFAULT_WARMUP: usize = 30;

fn default_warmup() -> usize {
    DEFAULT_WARMUP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    #[serde(flatten)]
    pub params: DetectorParams,
    #[serde(default)]
    pub transform: InputTransform,
    /// Samples used to seed the running mean and sd before standardised
    /// values are produced. Ignored by the other transforms.
    #[serde(default = "default_warmup")]
    pub standardize_warmup: usize,
}

impl DetectorConfig {
    pub fn default_for(kind: DetectorKind) -> Self {
        Self { params: DetectorParams::default_for(kind), transform: InputTransform::Standardized, standardize_warmup: DEFAULT_WARMUP }
    }

    pub fn kind(&self) -> DetectorKind {
        self.params.kind()
    }

    pub fn with_transform(mut self, transform: InputTransform) -> Self {
        self.transform = transform;
        self
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        self.params.validate()?;
        if self.transform == InputTransform::Standardized && self.standardize_warmup < 2 {
            return Err(DetectorError::Config {
                kind: self.kind(),
                parameter: "standardize_warmup",
                reason: "must be at least 2".into(),
            });
        }
        Ok(())
    }

    /// Samples a detector must consume after a reset before it can signal drift.
    pub fn min_samples(&self) -> u64 {
        let warmup = match self.transform {
            InputTransform::Standardized => self.standardize_warmup as u64,
            _ => 0,
        };
        warmup + Engine::new(&self.params).min_samples()
    }
}

/// The transform applied before the detector proper.
#[derive(Debug, Clone, PartialEq)]
struct TransformState {
    transform: InputTransform,
    warmup: usize,
    moments: RunningMoments,
}

impl TransformState {
    fn new(transform: InputTransform, warmup: usize) -> Self {
        Self { transform, warmup, moments: RunningMoments::new() }
    }

    fn apply(&mut self, x: f64) -> Option<f64> {
        match self.transform {
            InputTransform::Raw => Some(x),
            InputTransform::Abs => Some(libm::fabs(x)),
            InputTransform::Standardized => {
                let seen = self.moments.count() as usize;
                let z = if seen < self.warmup {
                    None
                } else {
                    let sd = libm::sqrt(self.moments.sample_variance());
                    Some(if sd > 0.0 { (x - self.moments.mean()) / sd } else { 0.0 })
                };
                self.moments.push(x);
                z
            }
        }
    }
}

/// Per-step result of an engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub status: Status,
    /// The monitored statistic after this step.
    pub statistic: f64,
}

impl StepOutcome {
    pub(crate) fn stable(statistic: f64) -> Self {
        Self { status: Status::Stable, statistic }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
enum Engine {
    Adwin(Adwin),
    Cusum(Cusum),
    Gma(Gma),
    HddmA(HddmA),
    HddmW(HddmW),
    PageHinkley(PageHinkley),
    Seed(Seed),
    SeqDrift1(SeqDrift1),
    SeqDrift2(SeqDrift2),
    Stepd(Stepd),
}

impl Engine {
    fn new(params: &DetectorParams) -> Self {
        match params {
            DetectorParams::Adwin(p) => Engine::Adwin(Adwin::new(p.clone())),
            DetectorParams::Cusum(p) => Engine::Cusum(Cusum::new(p.clone())),
            DetectorParams::Gma(p) => Engine::Gma(Gma::new(p.clone())),
            DetectorParams::HddmA(p) => Engine::HddmA(HddmA::new(p.clone())),
            DetectorParams::HddmW(p) => Engine::HddmW(HddmW::new(p.clone())),
            DetectorParams::PageHinkley(p) => Engine::PageHinkley(PageHinkley::new(p.clone())),
            DetectorParams::Seed(p) => Engine::Seed(Seed::new(p.clone())),
            DetectorParams::SeqDrift1(p) => Engine::SeqDrift1(SeqDrift1::new(p.clone())),
            DetectorParams::SeqDrift2(p) => Engine::SeqDrift2(SeqDrift2::new(p.clone())),
            DetectorParams::Stepd(p) => Engine::Stepd(Stepd::new(p.clone())),
        }
    }

    fn update(&mut self, v: f64) -> StepOutcome {
        match self {
            Engine::Adwin(d) => d.update(v),
            Engine::Cusum(d) => d.update(v),
            Engine::Gma(d) => d.update(v),
            Engine::HddmA(d) => d.update(v),
            Engine::HddmW(d) => d.update(v),
            Engine::PageHinkley(d) => d.update(v),
            Engine::Seed(d) => d.update(v),
            Engine::SeqDrift1(d) => d.update(v),
            Engine::SeqDrift2(d) => d.update(v),
            Engine::Stepd(d) => d.update(v),
        }
    }

    fn min_samples(&self) -> u64 {
        match self {
            Engine::Adwin(d) => d.min_samples(),
            Engine::Cusum(d) => d.min_samples(),
            Engine::Gma(d) => d.min_samples(),
            Engine::HddmA(d) => d.min_samples(),
            Engine::HddmW(d) => d.min_samples(),
            Engine::PageHinkley(d) => d.min_samples(),
            Engine::Seed(d) => d.min_samples(),
            Engine::SeqDrift1(d) => d.min_samples(),
            Engine::SeqDrift2(d) => d.min_samples(),
            Engine::Stepd(d) => d.min_samples(),
        }
    }
}

/// A configured detector and its running state.
#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    config: DetectorConfig,
    transform: TransformState,
    engine: Engine,
    samples_seen: u64,
    status: Status,
}

impl Detector {
    /// Validates `config` and builds a fresh detector.
    pub fn new(config: DetectorConfig) -> Result<Self, DetectorError> {
        config.validate()?;
        Ok(Self::fresh(config))
    }

    fn fresh(config: DetectorConfig) -> Self {
        Self {
            transform: TransformState::new(config.transform, config.standardize_warmup),
            engine: Engine::new(&config.params),
            config,
            samples_seen: 0,
            status: Status::Stable,
        }
    }

    pub fn kind(&self) -> DetectorKind {
        self.config.kind()
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Samples consumed since construction or the last reset.
    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn min_samples(&self) -> u64 {
        self.config.min_samples()
    }

    pub fn reset(&mut self) {
        *self = Self::fresh(self.config.clone());
    }

    pub fn step(&mut self, value: f64) -> Result<Status, DetectorError> {
        self.step_detailed(value).map(|o| o.status)
    }

    /// Like [`Detector::step`] but also returns the monitored statistic. On
    /// drift the statistic is the value that triggered, and the detector has
    /// already been reset.
    pub fn step_detailed(&mut self, value: f64) -> Result<StepOutcome, DetectorError> {
        if !value.is_finite() {
            return Err(DetectorError::NonFinite(value));
        }
        self.samples_seen += 1;
        let outcome = match self.transform.apply(value) {
            None => StepOutcome::stable(0.0),
            Some(v) => {
                let v = if self.kind().bounded_input() { normal_cdf(v) } else { v };
                self.engine.update(v)
            }
        };
        if outcome.status == Status::Drift {
            self.reset();
        } else {
            self.status = outcome.status;
        }
        Ok(outcome)
    }
}

/// `make_detector`.
pub fn make_detector(config: DetectorConfig) -> Result<Detector, DetectorError> {
    Detector::new(config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub detector: DetectorKind,
    pub timestamp: Timestamp,
    /// Index among the consumed (non-missing) values.
    pub sample_index: u64,
    pub statistic: f64,
}

/// Runs a detector over raw values with their timestamps.
pub fn run_on_values(
    config: &DetectorConfig,
    values: impl IntoIterator<Item = (Timestamp, f64)>,
) -> Result<Vec<DetectionEvent>, DetectorError> {
    let mut det = Detector::new(config.clone())?;
    let mut events = Vec::new();
    for (i, (t, v)) in values.into_iter().enumerate() {
        let o = det.step_detailed(v)?;
        if o.status == Status::Drift {
            events.push(DetectionEvent { detector: config.kind(), timestamp: t, sample_index: i as u64, statistic: o.statistic });
        }
    }
    Ok(events)
}

/// Folds the detector over the non-missing residuals in time order.
pub fn run_detector(config: &DetectorConfig, residuals: &ResidualSeries) -> Result<Vec<DetectionEvent>, DetectorError> {
    config.validate()?;
    if residuals.present().next().is_none() {
        return Err(DetectorError::EmptyInput);
    }
    run_on_values(config, residuals.present())
}

// Shared bound helpers.

/// `ln(x)` for positive `x`.
#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn positive(v: f64, name: &'static str) -> Result<(), (&'static str, &'static str)> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err((name, "must be positive and finite"))
    }
}

pub(crate) fn probability(v: f64, name: &'static str) -> Result<(), (&'static str, &'static str)> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err((name, "must lie in (0, 1)"))
    }
}

pub(crate) fn at_least(v: usize, min: usize, name: &'static str) -> Result<(), (&'static str, &'static str)> {
    if v >= min {
        Ok(())
    } else {
        Err((name, "is below its minimum"))
    }
}

/// Moments of a group of observations, mergeable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Moments {
    pub n: f64,
    pub sum: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
}

impl Moments {
    pub fn one(x: f64) -> Self {
        Self { n: 1.0, sum: x, m2: 0.0 }
    }

    pub fn mean(&self) -> f64 {
        if self.n > 0.0 {
            self.sum / self.n
        } else {
            0.0
        }
    }

    pub fn variance(&self) -> f64 {
        if self.n > 0.0 {
            self.m2 / self.n
        } else {
            0.0
        }
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0.0 {
            return *other;
        }
        if other.n == 0.0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = self.mean() - other.mean();
        Moments { n, sum: self.sum + other.sum, m2: self.m2 + other.m2 + self.n * other.n * d * d / n }
    }

    pub fn push(&mut self, x: f64) {
        *self = self.merge(&Moments::one(x));
    }
}

/// ADWIN-style cut threshold for two sub-windows of sizes `n0`, `n1` given
/// the pooled variance and `dd = ln(2 ln n / δ)`.
pub(crate) fn adwin_epsilon(inv_harmonic: f64, variance: f64, dd: f64) -> f64 {
    libm::sqrt(2.0 * inv_harmonic * variance * dd) + 2.0 / 3.0 * dd * inv_harmonic
}

/// Empirical Bernstein threshold on a difference of means with `m` the
/// harmonic-mean sample size `1 / (1/n₀ + 1/n₁)`.
pub(crate) fn bernstein_epsilon(m: f64, variance: f64, delta: f64) -> f64 {
    let k = ln(4.0 / delta);
    libm::sqrt(2.0 * variance * k / m) + 2.0 / 3.0 * k / m
}

#[cfg(test)]
mod tests;

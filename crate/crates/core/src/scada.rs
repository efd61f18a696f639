//! SCADA-style turbine records and a synthetic generator with drift injection.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::stats::normal_cdf;
use crate::time::{Timestamp, GRID_SECONDS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScadaError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("invalid drift injection: {0}")]
    Injection(String),
    #[error("injection [{start}, {end}] lies outside the generated span [{span_start}, {span_end}]")]
    OutOfRange { start: Timestamp, end: Timestamp, span_start: Timestamp, span_end: Timestamp },
    #[error("series has no records")]
    Empty,
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(Timestamp),
    #[error("timestamps not strictly increasing at {0}")]
    NotIncreasing(Timestamp),
    #[error("timestamp {0} is not an integer number of 10-minute steps from its predecessor")]
    OffGrid(Timestamp),
    #[error("record at {timestamp}: {reason}")]
    InvalidRecord { timestamp: Timestamp, reason: &'static str },
}

/// Record channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    AmbientTemp,
    WindSpeed,
    Turbulence,
    Power,
}

impl Channel {
    pub const PREDICTORS: [Channel; 3] = [Channel::AmbientTemp, Channel::WindSpeed, Channel::Turbulence];

    pub fn name(self) -> &'static str {
        match self {
            Channel::AmbientTemp => "ambient_temp",
            Channel::WindSpeed => "wind_speed",
            Channel::Turbulence => "turbulence",
            Channel::Power => "power",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Channel::AmbientTemp, Channel::WindSpeed, Channel::Turbulence, Channel::Power]
            .into_iter()
            .find(|c| c.name() == s)
    }
}

/// One 10-minute SCADA sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScadaRecord {
    pub timestamp: Timestamp,
    /// °C
    pub ambient_temp: f64,
    /// m/s
    pub wind_speed: f64,
    /// turbulence intensity in [0, 1]
    pub turbulence: f64,
    /// kW
    pub power: f64,
}

impl ScadaRecord {
    pub fn channel(&self, c: Channel) -> f64 {
        match c {
            Channel::AmbientTemp => self.ambient_temp,
            Channel::WindSpeed => self.wind_speed,
            Channel::Turbulence => self.turbulence,
            Channel::Power => self.power,
        }
    }

    fn channel_mut(&mut self, c: Channel) -> &mut f64 {
        match c {
            Channel::AmbientTemp => &mut self.ambient_temp,
            Channel::WindSpeed => &mut self.wind_speed,
            Channel::Turbulence => &mut self.turbulence,
            Channel::Power => &mut self.power,
        }
    }

    /// Checks the per-record invariants.
    pub fn validate(&self) -> Result<(), ScadaError> {
        let invalid = |reason| Err(ScadaError::InvalidRecord { timestamp: self.timestamp, reason });
        if !(self.ambient_temp.is_finite()
            && self.wind_speed.is_finite()
            && self.turbulence.is_finite()
            && self.power.is_finite())
        {
            return invalid("non-finite value");
        }
        if self.wind_speed < 0.0 {
            return invalid("negative wind speed");
        }
        if !(0.0..=1.0).contains(&self.turbulence) {
            return invalid("turbulence outside [0, 1]");
        }
        if self.power < 0.0 {
            return invalid("negative power");
        }
        Ok(())
    }
}

/// Time-ordered records of one turbine.
#[derive(Debug, Clone, PartialEq)]
pub struct TurbineSeries {
    turbine_id: String,
    records: Vec<ScadaRecord>,
}

impl TurbineSeries {
    /// Validates ordering, grid spacing and record invariants.
    pub fn new(turbine_id: impl Into<String>, records: Vec<ScadaRecord>) -> Result<Self, ScadaError> {
        if records.is_empty() {
            return Err(ScadaError::Empty);
        }
        for r in &records {
            r.validate()?;
        }
        for w in records.windows(2) {
            let dt = w[1].timestamp - w[0].timestamp;
            if dt == 0 {
                return Err(ScadaError::DuplicateTimestamp(w[1].timestamp));
            }
            if dt < 0 {
                return Err(ScadaError::NotIncreasing(w[1].timestamp));
            }
            if dt % GRID_SECONDS != 0 {
                return Err(ScadaError::OffGrid(w[1].timestamp));
            }
        }
        Ok(Self { turbine_id: turbine_id.into(), records })
    }

    pub fn turbine_id(&self) -> &str {
        &self.turbine_id
    }

    pub fn records(&self) -> &[ScadaRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_timestamp(&self) -> Timestamp {
        self.records[0].timestamp
    }

    pub fn last_timestamp(&self) -> Timestamp {
        self.records[self.records.len() - 1].timestamp
    }

    /// Rows of the selected channels.
    pub fn predictor_matrix(&self, channels: &[Channel]) -> Matrix {
        self.predictor_matrix_rows(channels, 0..self.records.len())
    }

    pub fn predictor_matrix_rows(&self, channels: &[Channel], rows: impl IntoIterator<Item = usize>) -> Matrix {
        let mut data = Vec::new();
        let mut n = 0;
        for i in rows {
            let r = &self.records[i];
            data.extend(channels.iter().map(|&c| r.channel(c)));
            n += 1;
        }
        Matrix::from_row_major(n, channels.len(), data)
    }

    pub fn power(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.power).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    Sudden,
    Gradual,
    Recurring,
    PowerLimitation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionTarget {
    /// Additive kW on the power channel.
    PowerOffset,
    /// Relative gain on the power channel: power · (1 + amplitude).
    PowerScale,
    /// Additive offset on a measured channel (sensor mis-calibration).
    SensorOffset(Channel),
}

/// A drift applied to a generated series over the closed interval `[start, end]`.
///
/// `power_limitation` clamps power at `amplitude` kW and ignores `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftInjection {
    pub kind: DriftKind,
    pub target: InjectionTarget,
    pub start: Timestamp,
    pub end: Timestamp,
    pub amplitude: f64,
    /// Square-wave period in seconds, recurring drifts only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<i64>,
}

impl DriftInjection {
    pub fn validate(&self) -> Result<(), ScadaError> {
        if self.start >= self.end {
            return Err(ScadaError::Injection(alloc::format!(
                "start {} must precede end {}",
                self.start, self.end
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(ScadaError::Injection("amplitude must be finite".into()));
        }
        match (self.kind, self.period) {
            (DriftKind::Recurring, Some(p)) if p > 0 => {}
            (DriftKind::Recurring, _) => {
                return Err(ScadaError::Injection("recurring drift requires period > 0".into()))
            }
            _ => {}
        }
        if self.kind == DriftKind::PowerLimitation && self.amplitude < 0.0 {
            return Err(ScadaError::Injection("power limitation must be non-negative".into()));
        }
        Ok(())
    }

    /// Drift amount at `t`, or `None` outside `[start, end]`.
    pub fn profile(&self, t: Timestamp) -> Option<f64> {
        if t < self.start || t > self.end {
            return None;
        }
        let v = match self.kind {
            DriftKind::Sudden | DriftKind::PowerLimitation => self.amplitude,
            DriftKind::Gradual => self.amplitude * (t - self.start) as f64 / (self.end - self.start) as f64,
            DriftKind::Recurring => {
                let period = self.period.unwrap_or(1).max(1);
                let phase = (t - self.start).rem_euclid(period);
                if phase * 2 < period {
                    self.amplitude
                } else {
                    0.0
                }
            }
        };
        Some(v)
    }

    /// Applies this drift to one record; no-op outside the interval.
    pub fn apply(&self, record: &mut ScadaRecord) {
        let Some(a) = self.profile(record.timestamp) else { return };
        if self.kind == DriftKind::PowerLimitation {
            record.power = record.power.min(a);
            return;
        }
        match self.target {
            InjectionTarget::PowerOffset => record.power += a,
            InjectionTarget::PowerScale => record.power *= 1.0 + a,
            InjectionTarget::SensorOffset(c) => *record.channel_mut(c) += a,
        }
        record.wind_speed = record.wind_speed.max(0.0);
        record.turbulence = record.turbulence.clamp(0.0, 1.0);
        record.power = record.power.max(0.0);
    }
}

/// Synthetic turbine configuration. All values are configuration, not physics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// kW
    pub rated_power: f64,
    /// m/s
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
    /// Additive power noise sd, kW.
    pub noise_sd: f64,
    /// Gain of the turbulence-proportional multiplicative noise, relative to `noise_sd / rated_power`.
    pub turbulence_noise_gain: f64,
    pub seed: u64,
    pub n_records: usize,
    pub start: Timestamp,
    /// Annual mean temperature, °C.
    pub temp_mean: f64,
    /// Seasonal amplitude, °C; coldest mid-January.
    pub temp_amplitude: f64,
    pub temp_daily_amplitude: f64,
    pub temp_noise_sd: f64,
    pub weibull_shape: f64,
    pub weibull_scale: f64,
    /// Lag-one autocorrelation of the latent wind process.
    pub wind_autocorrelation: f64,
    /// Reference turbulence intensity of the normal turbulence model.
    pub turbulence_ref: f64,
    pub turbulence_log_sd: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            rated_power: 2000.0,
            cut_in: 3.0,
            rated_speed: 12.0,
            cut_out: 25.0,
            noise_sd: 40.0,
            turbulence_noise_gain: 1.0,
            seed: 0,
            n_records: 52_560,
            // 2016-01-01T00:00:00Z
            start: Timestamp(1_451_606_400),
            temp_mean: 10.0,
            temp_amplitude: 8.0,
            temp_daily_amplitude: 3.0,
            temp_noise_sd: 1.0,
            weibull_shape: 2.0,
            weibull_scale: 8.0,
            wind_autocorrelation: 0.97,
            turbulence_ref: 0.12,
            turbulence_log_sd: 0.15,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ScadaError> {
        let bad = |m: &str| Err(ScadaError::Config(m.into()));
        if !(self.cut_in > 0.0 && self.cut_in < self.rated_speed && self.rated_speed < self.cut_out) {
            return bad("requires 0 < cut_in < rated_speed < cut_out");
        }
        if !(self.rated_power > 0.0) {
            return bad("rated_power must be positive");
        }
        if !(self.noise_sd >= 0.0) || !(self.turbulence_noise_gain >= 0.0) {
            return bad("noise parameters must be non-negative");
        }
        if self.n_records == 0 {
            return bad("n_records must be at least 1");
        }
        if !(self.weibull_shape > 0.0 && self.weibull_scale > 0.0) {
            return bad("Weibull shape and scale must be positive");
        }
        if !(0.0..1.0).contains(&self.wind_autocorrelation) {
            return bad("wind_autocorrelation must lie in [0, 1)");
        }
        if !(self.turbulence_ref > 0.0 && self.turbulence_log_sd >= 0.0 && self.temp_noise_sd >= 0.0) {
            return bad("weather noise parameters out of range");
        }
        Ok(())
    }

    pub fn end(&self) -> Timestamp {
        self.start + (self.n_records as i64 - 1) * GRID_SECONDS
    }
}

/// Piecewise power curve with a cubic ramp between cut-in and rated speed.
pub fn theoretical_power(wind_speed: f64, config: &GeneratorConfig) -> f64 {
    let v = wind_speed;
    if v < config.cut_in || v > config.cut_out {
        0.0
    } else if v >= config.rated_speed {
        config.rated_power
    } else {
        let ci3 = config.cut_in * config.cut_in * config.cut_in;
        let rs3 = config.rated_speed * config.rated_speed * config.rated_speed;
        config.rated_power * (v * v * v - ci3) / (rs3 - ci3)
    }
}

const YEAR_SECONDS: f64 = 365.25 * 86_400.0;
const DAY_SECONDS: f64 = 86_400.0;

/// Deterministic synthetic series for `config.seed`, with `injections`
/// applied in order of start time. Returns the series and the applied
/// injections as ground truth.
pub fn generate_series(
    turbine_id: &str,
    config: &GeneratorConfig,
    injections: &[DriftInjection],
) -> Result<(TurbineSeries, Vec<DriftInjection>), ScadaError> {
    config.validate()?;
    let span_start = config.start;
    let span_end = config.end();
    for inj in injections {
        inj.validate()?;
        if inj.start < span_start || inj.end > span_end {
            return Err(ScadaError::OutOfRange { start: inj.start, end: inj.end, span_start, span_end });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let rho = config.wind_autocorrelation;
    let innovation_sd = libm::sqrt(1.0 - rho * rho);
    let mut latent = 0.0;

    let mut records = Vec::with_capacity(config.n_records);
    for i in 0..config.n_records {
        let t = config.start + i as i64 * GRID_SECONDS;
        let secs = t.unix() as f64;

        let seasonal = -libm::cos(2.0 * PI * (secs - 15.0 * DAY_SECONDS) / YEAR_SECONDS);
        let diurnal = libm::sin(2.0 * PI * (secs.rem_euclid(DAY_SECONDS) - 9.0 * 3600.0) / DAY_SECONDS);
        let ambient_temp = config.temp_mean
            + config.temp_amplitude * seasonal
            + config.temp_daily_amplitude * diurnal
            + config.temp_noise_sd * normal();

        let eta = normal();
        latent = if i == 0 { eta } else { rho * latent + innovation_sd * eta };
        let u = normal_cdf(latent).clamp(1e-12, 1.0 - 1e-12);
        let wind_speed = config.weibull_scale * libm::pow(-libm::log1p(-u), 1.0 / config.weibull_shape);

        let ti_base = config.turbulence_ref * (0.75 + 5.6 / wind_speed.max(1.0));
        let turbulence = (ti_base * libm::exp(config.turbulence_log_sd * normal())).clamp(0.01, 1.0);

        let mult = turbulence * config.turbulence_noise_gain * (config.noise_sd / config.rated_power) * normal();
        let add = config.noise_sd * normal();
        let power = (theoretical_power(wind_speed, config) * (1.0 + mult) + add).max(0.0);

        records.push(ScadaRecord { timestamp: t, ambient_temp, wind_speed, turbulence, power });
    }

    let mut applied: Vec<DriftInjection> = injections.to_vec();
    applied.sort_by_key(|inj| (inj.start, inj.end));
    for inj in &applied {
        for r in records.iter_mut() {
            inj.apply(r);
        }
    }

    let series = TurbineSeries::new(turbine_id, records)?;
    Ok((series, applied))
}

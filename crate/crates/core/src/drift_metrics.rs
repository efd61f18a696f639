//! Drift characterisation: magnitude, duration and path length of a drift
//! period, measured on histograms of the residual.
//!
//! Compared histograms always share bin edges. For a magnitude the edges are
//! equal-width bins over the pooled range of the pre-drift window
//! `[t − w, t)` and the post-drift window `[u, u + w)`. Path length reuses
//! those same edges for every intermediate concept (values outside are
//! clipped to the end bins), so the sum of step distances can never fall
//! below the end-to-end magnitude.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ensemble::{bin_index, equal_width_edges, ResidualSeries};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("insufficient samples in {window}: need {needed}, got {got}")]
    InsufficientSamples { window: WindowRole, needed: usize, got: usize },
    #[error("histograms differ in length: {0} vs {1}")]
    Shape(usize, usize),
    #[error("drift end {end} must be after start {start}")]
    Ordering { start: Timestamp, end: Timestamp },
    #[error("invalid metrics parameter: {0}")]
    Invalid(&'static str),
}

/// Which window fell short of samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowRole {
    Sample,
    Before,
    After,
    /// Intermediate path-length concept `k` of `n`.
    Step(usize, usize),
}

impl core::fmt::Display for WindowRole {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            WindowRole::Sample => f.write_str("sample"),
            WindowRole::Before => f.write_str("pre-drift window"),
            WindowRole::After => f.write_str("post-drift window"),
            WindowRole::Step(k, n) => write!(f, "path-length step {k} of {n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Hellinger,
    #[serde(rename = "tv")]
    TotalVariation,
}

impl DistanceMetric {
    pub fn distance(self, p: &[f64], q: &[f64]) -> Result<f64, MetricsError> {
        match self {
            DistanceMetric::Hellinger => hellinger_distance(p, q),
            DistanceMetric::TotalVariation => total_variation_distance(p, q),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DistanceMetric::Hellinger => "hellinger",
            DistanceMetric::TotalVariation => "tv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub bins: usize,
    pub min_samples: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { bins: 20, min_samples: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

/// Histogram of `values` on `edges`; values outside the edges are clipped
/// into the end bins.
pub fn empirical_distribution(values: &[f64], edges: &[f64], min_samples: usize) -> Result<Histogram, MetricsError> {
    histogram(values, edges, min_samples, WindowRole::Sample)
}

fn histogram(values: &[f64], edges: &[f64], min_samples: usize, role: WindowRole) -> Result<Histogram, MetricsError> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(MetricsError::Invalid("edges must be strictly increasing"));
    }
    let needed = min_samples.max(1);
    if values.len() < needed {
        return Err(MetricsError::InsufficientSamples { window: role, needed, got: values.len() });
    }
    let bins = edges.len() - 1;
    let mut counts = alloc::vec![0usize; bins];
    for &v in values {
        let b = if v < edges[0] {
            0
        } else if v > edges[bins] {
            bins - 1
        } else {
            bin_index(edges, v).unwrap_or(bins - 1)
        };
        counts[b] += 1;
    }
    let total = values.len() as f64;
    Ok(Histogram { edges: edges.to_vec(), masses: counts.iter().map(|&c| c as f64 / total).collect() })
}

/// Equal-width edges over the pooled range of two samples. A zero-width range
/// is widened to one unit around the common value.
pub fn shared_edges(a: &[f64], b: &[f64], bins: usize) -> Vec<f64> {
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo < hi {
        equal_width_edges(lo, hi, bins)
    } else {
        equal_width_edges(lo - 0.5, lo + 0.5, bins)
    }
}

fn check_len(p: &[f64], q: &[f64]) -> Result<(), MetricsError> {
    if p.len() != q.len() {
        Err(MetricsError::Shape(p.len(), q.len()))
    } else {
        Ok(())
    }
}

/// `H(P, Q) = (1/√2) · ‖√P − √Q‖₂`, in `[0, 1]` for probability vectors.
pub fn hellinger_distance(p: &[f64], q: &[f64]) -> Result<f64, MetricsError> {
    check_len(p, q)?;
    let ss: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let d = libm::sqrt(*a) - libm::sqrt(*b);
            d * d
        })
        .sum();
    Ok((libm::sqrt(ss) * core::f64::consts::FRAC_1_SQRT_2).min(1.0))
}

/// `TV(P, Q) = ½ Σ |pᵢ − qᵢ|`.
pub fn total_variation_distance(p: &[f64], q: &[f64]) -> Result<f64, MetricsError> {
    check_len(p, q)?;
    let s: f64 = p.iter().zip(q).map(|(a, b)| libm::fabs(a - b)).sum();
    Ok((0.5 * s).min(1.0))
}

/// `u − t` in seconds.
pub fn drift_duration(t: Timestamp, u: Timestamp) -> Result<i64, MetricsError> {
    if u <= t {
        return Err(MetricsError::Ordering { start: t, end: u });
    }
    Ok(u - t)
}

fn check_window(window: i64, config: &MetricsConfig) -> Result<(), MetricsError> {
    if window <= 0 {
        return Err(MetricsError::Invalid("window must be positive"));
    }
    if config.bins < 1 {
        return Err(MetricsError::Invalid("bins must be at least 1"));
    }
    Ok(())
}

struct Endpoints {
    before: Vec<f64>,
    after: Vec<f64>,
    edges: Vec<f64>,
}

fn endpoints(
    series: &ResidualSeries,
    t: Timestamp,
    u: Timestamp,
    window: i64,
    config: &MetricsConfig,
) -> Result<Endpoints, MetricsError> {
    check_window(window, config)?;
    if u < t {
        return Err(MetricsError::Ordering { start: t, end: u });
    }
    let before = series.values_in(t - window, t);
    let after = series.values_in(u, u + window);
    let needed = config.min_samples.max(1);
    if before.len() < needed {
        return Err(MetricsError::InsufficientSamples { window: WindowRole::Before, needed, got: before.len() });
    }
    if after.len() < needed {
        return Err(MetricsError::InsufficientSamples { window: WindowRole::After, needed, got: after.len() });
    }
    let edges = shared_edges(&before, &after, config.bins);
    Ok(Endpoints { before, after, edges })
}

/// Distance between the residual distributions of `[t − window, t)` and
/// `[u, u + window)`.
pub fn drift_magnitude(
    series: &ResidualSeries,
    t: Timestamp,
    u: Timestamp,
    window: i64,
    metric: DistanceMetric,
    config: &MetricsConfig,
) -> Result<f64, MetricsError> {
    let ep = endpoints(series, t, u, window, config)?;
    let p = histogram(&ep.before, &ep.edges, config.min_samples, WindowRole::Before)?;
    let q = histogram(&ep.after, &ep.edges, config.min_samples, WindowRole::After)?;
    metric.distance(&p.masses, &q.masses)
}

/// Sum of distances between consecutive concepts at
/// `τ_k = t + k·(u − t)/n_steps`, `k = 0..=n_steps`.
///
/// The first concept is the pre-drift window `[t − w, t)`, the last the
/// post-drift window `[u, u + w)`, and intermediate concepts are windows of
/// width `w` centred on `τ_k`.
pub fn drift_path_length(
    series: &ResidualSeries,
    t: Timestamp,
    u: Timestamp,
    n_steps: usize,
    window: i64,
    metric: DistanceMetric,
    config: &MetricsConfig,
) -> Result<f64, MetricsError> {
    if n_steps == 0 {
        return Err(MetricsError::Invalid("n_steps must be at least 1"));
    }
    let ep = endpoints(series, t, u, window, config)?;
    let span = (u - t) as i128;
    let mut concepts = Vec::with_capacity(n_steps + 1);
    concepts.push(histogram(&ep.before, &ep.edges, config.min_samples, WindowRole::Before)?);
    for k in 1..n_steps {
        let tau = t + (span * k as i128 / n_steps as i128) as i64;
        let lo = tau - window / 2;
        let values = series.values_in(lo, lo + window);
        concepts.push(histogram(&values, &ep.edges, config.min_samples, WindowRole::Step(k, n_steps))?);
    }
    concepts.push(histogram(&ep.after, &ep.edges, config.min_samples, WindowRole::After)?);
    let mut total = 0.0;
    for w in concepts.windows(2) {
        total += metric.distance(&w[0].masses, &w[1].masses)?;
    }
    Ok(total)
}

/// Characterisation of one drift period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCharacterization {
    pub start: Timestamp,
    pub end: Timestamp,
    pub magnitude: f64,
    pub duration_s: i64,
    pub path_length: f64,
    pub n_steps: usize,
    pub metric: DistanceMetric,
    pub window_s: i64,
}

pub fn characterize(
    series: &ResidualSeries,
    t: Timestamp,
    u: Timestamp,
    n_steps: usize,
    window: i64,
    metric: DistanceMetric,
    config: &MetricsConfig,
) -> Result<DriftCharacterization, MetricsError> {
    let duration_s = drift_duration(t, u)?;
    let magnitude = drift_magnitude(series, t, u, window, metric, config)?;
    let path_length = drift_path_length(series, t, u, n_steps, window, metric, config)?;
    Ok(DriftCharacterization { start: t, end: u, magnitude, duration_s, path_length, n_steps, metric, window_s: window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hellinger_hand_values() {
        assert_eq!(hellinger_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((hellinger_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        let h = hellinger_distance(&[0.5, 0.5], &[0.9, 0.1]).unwrap();
        // sqrt(1 − (√0.45 + √0.05))
        let closed = libm::sqrt(1.0 - (libm::sqrt(0.45) + libm::sqrt(0.05)));
        assert!((h - closed).abs() < 1e-12);
        assert!((h - 0.3250).abs() < 1e-4);
    }

    #[test]
    fn tv_hand_values() {
        assert_eq!(total_variation_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(total_variation_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((total_variation_distance(&[0.5, 0.5], &[0.9, 0.1]).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(total_variation_distance(&[1.0], &[0.5, 0.5]), Err(MetricsError::Shape(1, 2)));
        assert_eq!(hellinger_distance(&[1.0], &[0.5, 0.5]), Err(MetricsError::Shape(1, 2)));
    }

    #[test]
    fn empirical_distribution_counting() {
        let h = empirical_distribution(&[1.0, 2.0, 3.0, 4.0], &[0.0, 2.5, 5.0], 1).unwrap();
        assert_eq!(h.masses, vec![0.5, 0.5]);
        let same = empirical_distribution(&[7.0; 100], &[0.0, 5.0, 10.0], 50).unwrap();
        assert_eq!(same.masses, vec![0.0, 1.0]);
        let clipped = empirical_distribution(&[-100.0, 100.0], &[0.0, 1.0, 2.0], 1).unwrap();
        assert_eq!(clipped.masses, vec![0.5, 0.5]);
        assert!(matches!(
            empirical_distribution(&[1.0], &[0.0, 1.0], 2),
            Err(MetricsError::InsufficientSamples { needed: 2, got: 1, .. })
        ));
    }

    #[test]
    fn duration_checks() {
        let t = Timestamp::parse_rfc3339("2016-01-01T00:00:00Z").unwrap();
        let u = Timestamp::parse_rfc3339("2016-01-03T00:00:00Z").unwrap();
        assert_eq!(drift_duration(t, u), Ok(172_800));
        assert_eq!(drift_duration(t, t + 600), Ok(600));
        assert!(matches!(drift_duration(t, t), Err(MetricsError::Ordering { .. })));
    }

    #[test]
    fn identical_windows_have_zero_magnitude() {
        // period-100 pattern: [t−w, t) and [u, u+w) hold the same multiset
        let vals: Vec<f64> = (0..1000).map(|i| ((i % 100) as f64).sin()).collect();
        let s = ResidualSeries::from_residuals(Timestamp(0), 600, &vals);
        let w = 100 * 600;
        let m = drift_magnitude(&s, Timestamp(200 * 600), Timestamp(500 * 600), w, DistanceMetric::Hellinger, &MetricsConfig::default()).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn short_windows_are_reported() {
        let s = ResidualSeries::from_residuals(Timestamp(0), 600, &[0.0; 100]);
        let cfg = MetricsConfig::default();
        let err = drift_magnitude(&s, Timestamp(600 * 10), Timestamp(600 * 50), 600 * 40, DistanceMetric::Hellinger, &cfg).unwrap_err();
        assert!(matches!(err, MetricsError::InsufficientSamples { window: WindowRole::Before, got: 10, .. }));
        let err = drift_path_length(&s, Timestamp(600 * 50), Timestamp(600 * 50), 1, 600 * 50, DistanceMetric::Hellinger, &cfg);
        assert!(err.is_ok());
    }

    #[test]
    fn path_length_single_step_equals_magnitude() {
        let vals: Vec<f64> = (0..2000).map(|i| if i < 1000 { (i as f64 * 0.37).sin() } else { 1.0 + (i as f64 * 0.11).cos() }).collect();
        let s = ResidualSeries::from_residuals(Timestamp(0), 600, &vals);
        let cfg = MetricsConfig::default();
        let (t, u, w) = (Timestamp(600 * 900), Timestamp(600 * 1100), 600 * 300);
        for metric in [DistanceMetric::Hellinger, DistanceMetric::TotalVariation] {
            let m = drift_magnitude(&s, t, u, w, metric, &cfg).unwrap();
            let p1 = drift_path_length(&s, t, u, 1, w, metric, &cfg).unwrap();
            assert_eq!(m, p1);
            let p4 = drift_path_length(&s, t, u, 4, w, metric, &cfg).unwrap();
            assert!(p4 >= m - 1e-9);
        }
    }

    #[test]
    fn step_shortfall_names_the_step() {
        let mut entries = ResidualSeries::from_residuals(Timestamp(0), 600, &[0.5; 400]).entries;
        for e in &mut entries[150..250] {
            e.residual = None;
            e.predicted = None;
        }
        let s = ResidualSeries::new(entries);
        let err = drift_path_length(&s, Timestamp(600 * 100), Timestamp(600 * 300), 2, 600 * 60, DistanceMetric::Hellinger, &MetricsConfig::default())
            .unwrap_err();
        assert!(matches!(err, MetricsError::InsufficientSamples { window: WindowRole::Step(1, 2), .. }));
    }
}

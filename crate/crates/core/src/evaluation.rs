//! Scoring detector triggers against labelled drift periods.
//!
//! Matching is period-level. A period counts as detected when at least one
//! event falls inside it once both ends are widened by the tolerance. Events
//! outside every widened period are false positives. Several events inside
//! the same period count once.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::detectors::{run_detector, DetectionEvent, DetectorConfig, DetectorError, DetectorKind};
use crate::ensemble::ResidualSeries;
use crate::time::Timestamp;

/// Identifier carried by every set of counts produced here.
pub const MATCHING_POLICY: &str = "period-any-event";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvaluationError {
    #[error("labelled periods overlap ({first_end} > {second_start}); merge them with consensus first")]
    OverlappingPeriods { first_end: Timestamp, second_start: Timestamp },
    #[error("labelled period must have start < end, got [{start}, {end}]")]
    InvalidPeriod { start: Timestamp, end: Timestamp },
    #[error("tolerance must be non-negative, got {0} s")]
    NegativeTolerance(i64),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("series `{0}` has no labelled periods and is not marked drift-free")]
    UnlabelledSeries(String),
    #[error("cannot pool counts computed with different policies or tolerances")]
    IncompatibleCounts,
    #[error("series `{series}`: {source}")]
    Detector { series: String, source: DetectorError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodSource {
    Expert,
    Consensus,
    #[serde(alias = "ground_truth")]
    InjectedGroundTruth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelledPeriod {
    pub start: Timestamp,
    pub end: Timestamp,
    pub source: PeriodSource,
}

impl LabelledPeriod {
    pub fn new(start: Timestamp, end: Timestamp, source: PeriodSource) -> Self {
        Self { start, end, source }
    }
}

/// Merges overlapping periods into their unions. Touching periods stay apart.
pub fn flatten_periods(mut periods: Vec<LabelledPeriod>) -> Vec<LabelledPeriod> {
    periods.sort_by_key(|p| (p.start, p.end));
    let mut out: Vec<LabelledPeriod> = Vec::with_capacity(periods.len());
    for p in periods {
        match out.last_mut() {
            Some(last) if p.start < last.end => last.end = last.end.max(p.end),
            _ => out.push(p),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub policy: String,
    pub tolerance_s: i64,
}

impl ConfusionCounts {
    pub fn empty(tolerance_s: i64) -> Self {
        Self { tp: 0, fp: 0, fn_: 0, policy: MATCHING_POLICY.to_string(), tolerance_s }
    }

    /// Adds another set of counts computed under the same policy.
    pub fn pool(&mut self, other: &ConfusionCounts) -> Result<(), EvaluationError> {
        if self.policy != other.policy || self.tolerance_s != other.tolerance_s {
            return Err(EvaluationError::IncompatibleCounts);
        }
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        Ok(())
    }

    pub fn periods(&self) -> u64 {
        self.tp + self.fn_
    }
}

/// Precision and sensitivity, each undefined when its denominator is zero.
pub fn precision_sensitivity(counts: &ConfusionCounts) -> (Option<f64>, Option<f64>) {
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    (ratio(counts.tp, counts.tp + counts.fp), ratio(counts.tp, counts.tp + counts.fn_))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub detector: DetectorKind,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub counts: ConfusionCounts,
}

impl EvalResult {
    pub fn from_counts(detector: DetectorKind, counts: ConfusionCounts) -> Self {
        let (precision, sensitivity) = precision_sensitivity(&counts);
        Self { detector, precision, sensitivity, counts }
    }
}

fn check_periods(periods: &[LabelledPeriod]) -> Result<Vec<(Timestamp, Timestamp)>, EvaluationError> {
    let mut spans: Vec<(Timestamp, Timestamp)> = Vec::with_capacity(periods.len());
    for p in periods {
        if p.start >= p.end {
            return Err(EvaluationError::InvalidPeriod { start: p.start, end: p.end });
        }
        spans.push((p.start, p.end));
    }
    spans.sort();
    for w in spans.windows(2) {
        if w[0].1 > w[1].0 {
            return Err(EvaluationError::OverlappingPeriods { first_end: w[0].1, second_start: w[1].0 });
        }
    }
    Ok(spans)
}

/// Counts detected periods, missed periods and unmatched events.
pub fn match_triggers(
    periods: &[LabelledPeriod],
    events: &[Timestamp],
    tolerance_s: i64,
) -> Result<ConfusionCounts, EvaluationError> {
    if tolerance_s < 0 {
        return Err(EvaluationError::NegativeTolerance(tolerance_s));
    }
    let spans = check_periods(periods)?;
    let mut times = events.to_vec();
    times.sort();

    let mut counts = ConfusionCounts::empty(tolerance_s);
    for &(start, end) in &spans {
        let lo = times.partition_point(|&t| t < start - tolerance_s);
        if lo < times.len() && times[lo] <= end + tolerance_s {
            counts.tp += 1;
        } else {
            counts.fn_ += 1;
        }
    }
    // Ends are sorted because periods do not overlap, so the last period
    // starting at or before `t` (after widening) has the furthest reach.
    for &t in &times {
        let k = spans.partition_point(|&(s, _)| s - tolerance_s <= t);
        let covered = k > 0 && t <= spans[k - 1].1 + tolerance_s;
        if !covered {
            counts.fp += 1;
        }
    }
    Ok(counts)
}

/// One series of a benchmark corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSeries {
    pub id: String,
    pub residuals: ResidualSeries,
    pub periods: Vec<LabelledPeriod>,
    /// Explicitly declared free of drift, so an empty period list is expected.
    pub drift_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub series_id: String,
    pub result: EvalResult,
    pub events: usize,
}

/// Unweighted per-series averages, over series where the ratio is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroResult {
    pub detector: DetectorKind,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub series: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub tolerance_s: i64,
    /// One row per detector config, counts pooled over the corpus.
    pub pooled: Vec<EvalResult>,
    pub macro_averages: Vec<MacroResult>,
    pub per_series: Vec<SeriesResult>,
}

pub fn validate_corpus(corpus: &[CorpusSeries]) -> Result<(), EvaluationError> {
    if corpus.is_empty() {
        return Err(EvaluationError::EmptyCorpus);
    }
    for s in corpus {
        if s.periods.is_empty() && !s.drift_free {
            return Err(EvaluationError::UnlabelledSeries(s.id.clone()));
        }
        check_periods(&s.periods)?;
    }
    Ok(())
}

/// Runs one detector over one series and scores it.
pub fn evaluate_series(
    series: &CorpusSeries,
    config: &DetectorConfig,
    tolerance_s: i64,
) -> Result<(SeriesResult, Vec<DetectionEvent>), EvaluationError> {
    let events = run_detector(config, &series.residuals)
        .map_err(|source| EvaluationError::Detector { series: series.id.clone(), source })?;
    let times: Vec<Timestamp> = events.iter().map(|e| e.timestamp).collect();
    let counts = match_triggers(&series.periods, &times, tolerance_s)?;
    let result = SeriesResult { series_id: series.id.clone(), result: EvalResult::from_counts(config.kind(), counts), events: events.len() };
    Ok((result, events))
}

/// Builds the table from per-series results laid out config-major:
/// `per_series[c * corpus_len + s]` belongs to config `c` and series `s`.
pub fn assemble_table(
    configs: &[DetectorConfig],
    corpus_len: usize,
    per_series: Vec<SeriesResult>,
    tolerance_s: i64,
) -> Result<BenchmarkTable, EvaluationError> {
    let mut pooled = Vec::with_capacity(configs.len());
    let mut macro_averages = Vec::with_capacity(configs.len());
    for (c, config) in configs.iter().enumerate() {
        let rows = &per_series[c * corpus_len..(c + 1) * corpus_len];
        let mut counts = ConfusionCounts::empty(tolerance_s);
        for r in rows {
            counts.pool(&r.result.counts)?;
        }
        pooled.push(EvalResult::from_counts(config.kind(), counts));
        let mean = |pick: fn(&EvalResult) -> Option<f64>| {
            let vals: Vec<f64> = rows.iter().filter_map(|r| pick(&r.result)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        macro_averages.push(MacroResult {
            detector: config.kind(),
            precision: mean(|r| r.precision),
            sensitivity: mean(|r| r.sensitivity),
            series: corpus_len,
        });
    }
    Ok(BenchmarkTable { tolerance_s, pooled, macro_averages, per_series })
}

/// Runs every config over every series and pools the counts per config.
pub fn benchmark_detectors(
    corpus: &[CorpusSeries],
    configs: &[DetectorConfig],
    tolerance_s: i64,
) -> Result<BenchmarkTable, EvaluationError> {
    validate_corpus(corpus)?;
    if tolerance_s < 0 {
        return Err(EvaluationError::NegativeTolerance(tolerance_s));
    }
    let mut per_series = Vec::with_capacity(configs.len() * corpus.len());
    for config in configs {
        for series in corpus {
            per_series.push(evaluate_series(series, config, tolerance_s)?.0);
        }
    }
    assemble_table(configs, corpus.len(), per_series, tolerance_s)
}

//! Per-batch ELM ensembles gated by certainty filters, and the residual
//! series they produce.
//!
//! A series is cut into contiguous fixed-size batches. Each batch trains
//! one ELM on a random train/validation split and builds a certainty filter
//! from its training inputs. At prediction time only members whose filter
//! accepts the input contribute, weighted by inverse validation RMSE and
//! renormalised over the contributing subset.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elm::{predict_elm, train_elm, validation_rmse, ElmError, ElmModel, ElmParams};
use crate::linalg::Matrix;
use crate::scada::{Channel, TurbineSeries};
use crate::time::Timestamp;

/// Validation RMSE floor used when computing member weights.
pub const RMSE_FLOOR: f64 = 1e-6;
/// Degenerate-dimension acceptance tolerance.
pub const CONSTANT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnsembleError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid ensemble config: {0}")]
    Config(String),
    #[error("every ensemble member was rejected by the validation RMSE threshold")]
    NoUsableModel,
    #[error("member training failed: {0}")]
    Elm(#[from] ElmError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub index: usize,
    /// Row range `[start, end)` into the parent series.
    pub start: usize,
    pub end: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

fn batch_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Contiguous non-overlapping batches over `n_rows` rows. A trailing partial
/// batch is kept when it holds at least half a batch.
pub fn partition_rows(
    n_rows: usize,
    batch_size: usize,
    validation_fraction: f64,
    seed: u64,
) -> Result<Vec<Batch>, EnsembleError> {
    if batch_size < 20 {
        return Err(EnsembleError::Config("batch_size must be at least 20".into()));
    }
    if !(validation_fraction > 0.0 && validation_fraction < 0.5) {
        return Err(EnsembleError::Config("validation_fraction must lie in (0, 0.5)".into()));
    }
    if n_rows * 2 < batch_size {
        return Err(EnsembleError::InsufficientData(alloc::format!(
            "{n_rows} rows is shorter than half a batch of {batch_size}"
        )));
    }
    let mut batches = Vec::new();
    let mut start = 0;
    while start < n_rows {
        let end = (start + batch_size).min(n_rows);
        let len = end - start;
        if len < batch_size && len * 2 < batch_size {
            break;
        }
        let index = batches.len();
        let n_val = (validation_fraction * len as f64 + 0.5) as usize;
        let n_val = n_val.clamp(1, len - 2);
        let mut rng = batch_rng(seed, index);
        let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, len, n_val).into_iter().collect();
        picked.sort_unstable();
        let mut validation = Vec::with_capacity(n_val);
        let mut train = Vec::with_capacity(len - n_val);
        let mut it = picked.iter().peekable();
        for off in 0..len {
            if it.peek() == Some(&&off) {
                it.next();
                validation.push(start + off);
            } else {
                train.push(start + off);
            }
        }
        batches.push(Batch { index, start, end, train, validation });
        start = end;
    }
    Ok(batches)
}

pub fn partition_batches(
    series: &TurbineSeries,
    batch_size: usize,
    validation_fraction: f64,
    seed: u64,
) -> Result<Vec<Batch>, EnsembleError> {
    partition_rows(series.len(), batch_size, validation_fraction, seed)
}

/// Occupancy histogram of one input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionBins {
    /// Equal-width bins. Bins are `[e_i, e_{i+1})` except the last, which is
    /// closed on the right; a value on an interior edge belongs to the upper bin.
    Binned { edges: Vec<f64>, counts: Vec<u64> },
    /// Training values were all equal.
    Constant { value: f64, count: u64 },
}

/// Bin index of `v` under the edge rule of [`DimensionBins::Binned`], or
/// `None` when `v` lies outside `[edges[0], edges[last]]`.
pub fn bin_index(edges: &[f64], v: f64) -> Option<usize> {
    let last = *edges.last()?;
    if !(v >= edges[0] && v <= last) {
        return None;
    }
    let b = edges.len() - 1;
    if v == last {
        return Some(b - 1);
    }
    Some(edges.partition_point(|e| *e <= v) - 1)
}

/// `bins + 1` equal-width edges over `[min, max]`; the last edge is exactly `max`.
pub fn equal_width_edges(min: f64, max: f64, bins: usize) -> Vec<f64> {
    let width = (max - min) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| min + width * i as f64).collect();
    edges.push(max);
    edges
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertaintyFilter {
    pub dims: Vec<DimensionBins>,
    pub min_occupancy: u64,
}

impl CertaintyFilter {
    /// Equal-width bins spanning each training dimension's range.
    pub fn build(x_train: &Matrix, bins: usize, min_occupancy: u64) -> Result<Self, EnsembleError> {
        if x_train.rows() == 0 {
            return Err(EnsembleError::InsufficientData("certainty filter needs training rows".into()));
        }
        if bins < 2 {
            return Err(EnsembleError::Config("certainty filter needs at least 2 bins".into()));
        }
        let dims = (0..x_train.cols())
            .map(|j| {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for r in 0..x_train.rows() {
                    let v = x_train.get(r, j);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if lo == hi {
                    DimensionBins::Constant { value: lo, count: x_train.rows() as u64 }
                } else {
                    let edges = equal_width_edges(lo, hi, bins);
                    count_into(edges, x_train, j)
                }
            })
            .collect();
        Ok(Self { dims, min_occupancy })
    }

    /// Filter on caller-supplied edges; training values outside the edges are
    /// not counted.
    pub fn with_edges(edges: Vec<Vec<f64>>, x_train: &Matrix, min_occupancy: u64) -> Result<Self, EnsembleError> {
        if edges.len() != x_train.cols() {
            return Err(EnsembleError::Config("one edge vector per dimension required".into()));
        }
        let mut dims = Vec::with_capacity(edges.len());
        for (j, e) in edges.into_iter().enumerate() {
            if e.len() < 3 || e.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(EnsembleError::Config("edges must be strictly increasing with at least 2 bins".into()));
            }
            dims.push(count_into(e, x_train, j));
        }
        Ok(Self { dims, min_occupancy })
    }

    pub fn input_dim(&self) -> usize {
        self.dims.len()
    }

    /// True iff every coordinate falls in the training range and lands in a
    /// bin holding at least `min_occupancy` training samples.
    pub fn is_certain(&self, x: &[f64]) -> bool {
        if x.len() != self.dims.len() {
            return false;
        }
        self.dims.iter().zip(x).all(|(dim, &v)| match dim {
            DimensionBins::Constant { value, count } => {
                libm::fabs(v - value) <= CONSTANT_TOLERANCE && *count >= self.min_occupancy
            }
            DimensionBins::Binned { edges, counts } => {
                bin_index(edges, v).is_some_and(|b| counts[b] >= self.min_occupancy)
            }
        })
    }
}

fn count_into(edges: Vec<f64>, x: &Matrix, col: usize) -> DimensionBins {
    let mut counts = alloc::vec![0u64; edges.len() - 1];
    for r in 0..x.rows() {
        if let Some(b) = bin_index(&edges, x.get(r, col)) {
            counts[b] += 1;
        }
    }
    DimensionBins::Binned { edges, counts }
}

pub fn build_certainty_filter(x_train: &Matrix, bins: usize, min_occupancy: u64) -> Result<CertaintyFilter, EnsembleError> {
    CertaintyFilter::build(x_train, bins, min_occupancy)
}

pub fn is_certain(filter: &CertaintyFilter, x: &[f64]) -> bool {
    filter.is_certain(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub bins: usize,
    pub min_occupancy: u64,
    /// Members with a larger validation RMSE (kW) are excluded; `None` keeps all.
    pub max_validation_rmse: Option<f64>,
    /// Hidden-layer settings; `input_dim` and `seed` are set per member.
    pub elm: ElmParams,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            batch_size: 4320,
            validation_fraction: 0.2,
            bins: 20,
            min_occupancy: 3,
            max_validation_rmse: None,
            elm: ElmParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinationRule {
    /// Weight `1 / max(validation_rmse, RMSE_FLOOR)`, renormalised over certain members.
    InverseValidationRmse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub model: ElmModel,
    pub filter: CertaintyFilter,
    pub validation_rmse: f64,
    /// Unnormalised weight.
    pub weight: f64,
    pub batch_index: usize,
    pub first_timestamp: Timestamp,
    pub last_timestamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub predictors: Vec<Channel>,
    pub members: Vec<Member>,
    pub rule: CombinationRule,
}

/// Seed of the ELM trained on batch `index`.
pub fn member_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0xD134_2543_DE82_EF95).wrapping_add(index as u64 + 1)
}

/// Trains the member for one batch.
pub fn train_member(
    series: &TurbineSeries,
    predictors: &[Channel],
    batch: &Batch,
    config: &EnsembleConfig,
    seed: u64,
) -> Result<Member, EnsembleError> {
    let x_train = series.predictor_matrix_rows(predictors, batch.train.iter().copied());
    let y_train: Vec<f64> = batch.train.iter().map(|&i| series.records()[i].power).collect();
    let x_val = series.predictor_matrix_rows(predictors, batch.validation.iter().copied());
    let y_val: Vec<f64> = batch.validation.iter().map(|&i| series.records()[i].power).collect();
    let params = ElmParams { input_dim: predictors.len(), seed: member_seed(seed, batch.index), ..config.elm.clone() };
    let model = train_elm(&x_train, &y_train, &params)?;
    let filter = CertaintyFilter::build(&x_train, config.bins, config.min_occupancy)?;
    let rmse = validation_rmse(&model, &x_val, &y_val)?;
    Ok(Member {
        model,
        filter,
        validation_rmse: rmse,
        weight: 1.0 / rmse.max(RMSE_FLOOR),
        batch_index: batch.index,
        first_timestamp: series.records()[batch.start].timestamp,
        last_timestamp: series.records()[batch.end - 1].timestamp,
    })
}

/// Applies the rejection threshold and assembles the ensemble.
pub fn assemble_ensemble(
    predictors: &[Channel],
    members: Vec<Member>,
    config: &EnsembleConfig,
) -> Result<EnsembleModel, EnsembleError> {
    let members: Vec<Member> = members
        .into_iter()
        .filter(|m| config.max_validation_rmse.is_none_or(|t| m.validation_rmse <= t))
        .collect();
    if members.is_empty() {
        return Err(EnsembleError::NoUsableModel);
    }
    Ok(EnsembleModel { predictors: predictors.to_vec(), members, rule: CombinationRule::InverseValidationRmse })
}

/// Batches that train a member: every batch, provided at least one is full.
pub fn training_batches(series: &TurbineSeries, config: &EnsembleConfig, seed: u64) -> Result<Vec<Batch>, EnsembleError> {
    let batches = partition_batches(series, config.batch_size, config.validation_fraction, seed)?;
    if !batches.iter().any(|b| b.len() == config.batch_size) {
        return Err(EnsembleError::InsufficientData(alloc::format!(
            "{} rows do not fill one batch of {}",
            series.len(),
            config.batch_size
        )));
    }
    Ok(batches)
}

pub fn validate_predictors(predictors: &[Channel]) -> Result<(), EnsembleError> {
    if predictors.is_empty() {
        return Err(EnsembleError::Config("at least one predictor is required".into()));
    }
    if predictors.contains(&Channel::Power) {
        return Err(EnsembleError::Config("power is the response and cannot be a predictor".into()));
    }
    Ok(())
}

/// Trains one member per batch, sequentially.
pub fn train_ensemble(
    series: &TurbineSeries,
    predictors: &[Channel],
    config: &EnsembleConfig,
    seed: u64,
) -> Result<EnsembleModel, EnsembleError> {
    validate_predictors(predictors)?;
    let batches = training_batches(series, config, seed)?;
    let members = batches
        .iter()
        .map(|b| train_member(series, predictors, b, config, seed))
        .collect::<Result<Vec<_>, _>>()?;
    assemble_ensemble(predictors, members, config)
}

impl EnsembleModel {
    pub fn input_dim(&self) -> usize {
        self.predictors.len()
    }

    /// Normalised weights over the members certain about `x`, in member order;
    /// members that are not certain get 0.
    pub fn weights_at(&self, x: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> =
            self.members.iter().map(|m| if m.filter.is_certain(x) { m.weight } else { 0.0 }).collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            raw.iter().map(|w| w / total).collect()
        } else {
            raw
        }
    }

    /// Combined prediction and number of contributing members.
    pub fn predict_point(&self, x: &[f64], scratch: &mut [f64]) -> (Option<f64>, usize) {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut n = 0;
        for m in &self.members {
            if m.filter.is_certain(x) {
                num += m.weight * m.model.predict_row(x, scratch);
                den += m.weight;
                n += 1;
            }
        }
        if n == 0 {
            (None, 0)
        } else {
            (Some(num / den), n)
        }
    }

    /// Per-member predictions for a matrix, `None` where the member is uncertain.
    pub fn member_predictions(&self, x: &Matrix) -> Result<Vec<Vec<Option<f64>>>, ElmError> {
        self.members
            .iter()
            .map(|m| {
                let p = predict_elm(&m.model, x)?;
                Ok(p.into_iter()
                    .enumerate()
                    .map(|(r, v)| m.filter.is_certain(x.row(r)).then_some(v))
                    .collect())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub timestamp: Timestamp,
    pub actual: f64,
    pub predicted: Option<f64>,
    pub residual: Option<f64>,
    pub n_members: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualSeries {
    pub entries: Vec<ResidualEntry>,
}

impl ResidualSeries {
    pub fn new(entries: Vec<ResidualEntry>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(timestamp, residual)` for entries with a residual, in time order.
    pub fn present(&self) -> impl Iterator<Item = (Timestamp, f64)> + '_ {
        self.entries.iter().filter_map(|e| e.residual.map(|r| (e.timestamp, r)))
    }

    /// Residuals with timestamps in `[from, to)`.
    pub fn values_in(&self, from: Timestamp, to: Timestamp) -> Vec<f64> {
        let lo = self.entries.partition_point(|e| e.timestamp < from);
        let hi = self.entries.partition_point(|e| e.timestamp < to);
        self.entries[lo..hi.max(lo)].iter().filter_map(|e| e.residual).collect()
    }

    /// Builds a series directly from residual values, one per grid step.
    pub fn from_residuals(start: Timestamp, step: i64, values: &[f64]) -> Self {
        Self::new(
            values
                .iter()
                .enumerate()
                .map(|(i, &r)| ResidualEntry {
                    timestamp: start + i as i64 * step,
                    actual: r,
                    predicted: Some(0.0),
                    residual: Some(r),
                    n_members: 1,
                })
                .collect(),
        )
    }
}

/// Actual minus ensemble prediction at each record; missing where no member is certain.
pub fn ensemble_residuals(ensemble: &EnsembleModel, series: &TurbineSeries) -> ResidualSeries {
    let mut scratch = alloc::vec![0.0; ensemble.input_dim()];
    let mut row = alloc::vec![0.0; ensemble.input_dim()];
    let entries = series
        .records()
        .iter()
        .map(|r| {
            for (v, &c) in row.iter_mut().zip(&ensemble.predictors) {
                *v = r.channel(c);
            }
            let (predicted, n_members) = ensemble.predict_point(&row, &mut scratch);
            ResidualEntry {
                timestamp: r.timestamp,
                actual: r.power,
                predicted,
                residual: predicted.map(|p| r.power - p),
                n_members,
            }
        })
        .collect();
    ResidualSeries::new(entries)
}

//! Pipeline steps shared by the CLI and the HTTP service. Each step reads
//! and writes the files of a [`DataDir`]; the science lives in the core crate.

use std::collections::BTreeMap;
use std::fs;
use std::sync::Mutex;

use driftlab_core::detectors::{run_detector, DetectionEvent, DetectorConfig};
use driftlab_core::downsample::lttb_indices;
use driftlab_core::drift_metrics::{characterize, DistanceMetric, DriftCharacterization, MetricsConfig};
use driftlab_core::ensemble::{
    assemble_ensemble, ensemble_residuals, train_member, training_batches, validate_predictors, EnsembleConfig, EnsembleModel,
    ResidualSeries,
};
use driftlab_core::evaluation::{
    assemble_table, benchmark_detectors, evaluate_series, flatten_periods, validate_corpus, BenchmarkTable, CorpusSeries, EvalResult,
    LabelledPeriod, PeriodSource, MATCHING_POLICY,
};
use driftlab_core::labels::{consensus, effective_labels, DriftLabel, LabelFilter};
use driftlab_core::scada::{generate_series, Channel, DriftInjection, GeneratorConfig, TurbineSeries};
use driftlab_core::{Timestamp, GRID_SECONDS};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io::detector_config::{detector_set_to_value, parse_detector_set};
use crate::io::model_file::{load_ensemble, save_ensemble};
use crate::io::tables::{read_residual_csv, read_scada_csv, write_events_csv, write_residual_csv, write_scada_csv};
use crate::io::{read_json, read_jsonl, write_json, write_jsonl};
use crate::label_store::LabelStore;
use crate::workspace::{validate_id, DataDir};

pub const DEFAULT_MODEL_ID: &str = "ensemble";

/// Current wall-clock time, whole seconds.
pub fn now() -> Timestamp {
    let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs() as i64);
    Timestamp::from_unix(secs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateReport {
    pub turbine_id: String,
    pub records: usize,
    pub injections: usize,
    pub first: Timestamp,
    pub last: Timestamp,
}

/// Synthesises a turbine series with the given drift injections.
pub fn generate(data: &DataDir, turbine: &str, config: &GeneratorConfig, injections: Vec<DriftInjection>) -> Result<GenerateReport> {
    validate_id("turbine_id", turbine)?;
    let (series, injections) = generate_series(turbine, config, &injections)?;
    write_scada_csv(&data.series_path(turbine), &series)?;
    write_jsonl(&data.injections_path(turbine), &injections)?;
    Ok(GenerateReport {
        turbine_id: turbine.into(),
        records: series.len(),
        injections: injections.len(),
        first: series.first_timestamp(),
        last: series.last_timestamp(),
    })
}

pub fn load_series(data: &DataDir, turbine: &str) -> Result<TurbineSeries> {
    validate_id("turbine_id", turbine)?;
    let path = data.series_path(turbine);
    if !path.exists() {
        return Err(Error::NotFound { what: "turbine", id: turbine.into() });
    }
    Ok(read_scada_csv(&path, turbine)?.series)
}

pub fn load_injections(data: &DataDir, turbine: &str) -> Result<Vec<DriftInjection>> {
    let path = data.injections_path(turbine);
    if path.exists() {
        read_jsonl(&path)
    } else {
        Ok(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    pub predictors: Vec<Channel>,
    pub ensemble: EnsembleConfig,
    pub seed: u64,
    /// Only records before this instant are used for training.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_until: Option<Timestamp>,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self { predictors: Channel::PREDICTORS.to_vec(), ensemble: EnsembleConfig::default(), seed: 0, train_until: None }
    }
}

impl TrainSettings {
    /// The part of `series` used for training.
    pub fn training_series(&self, series: &TurbineSeries) -> Result<TurbineSeries> {
        match self.train_until {
            None => Ok(series.clone()),
            Some(until) => {
                let records: Vec<_> = series.records().iter().take_while(|r| r.timestamp < until).copied().collect();
                if records.is_empty() {
                    return Err(Error::Validation(format!("no records before train_until {until}")));
                }
                Ok(TurbineSeries::new(series.turbine_id(), records)?)
            }
        }
    }
}

/// Trains one member per batch in parallel. Member order, and hence the
/// model, does not depend on the thread count.
pub fn train_parallel(series: &TurbineSeries, settings: &TrainSettings) -> Result<EnsembleModel> {
    validate_predictors(&settings.predictors)?;
    let series = settings.training_series(series)?;
    let batches = training_batches(&series, &settings.ensemble, settings.seed)?;
    let members = batches
        .par_iter()
        .map(|b| train_member(&series, &settings.predictors, b, &settings.ensemble, settings.seed))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(assemble_ensemble(&settings.predictors, members, &settings.ensemble)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub turbine_id: String,
    pub model_id: String,
    pub batches: usize,
    pub members: usize,
    pub validation_rmse: Vec<f64>,
}

pub fn train(data: &DataDir, turbine: &str, model_id: &str, settings: &TrainSettings) -> Result<TrainReport> {
    validate_id("model_id", model_id)?;
    let series = load_series(data, turbine)?;
    let batches = training_batches(&settings.training_series(&series)?, &settings.ensemble, settings.seed)?.len();
    let model = train_parallel(&series, settings)?;
    save_ensemble(&data.model_path(turbine, model_id), &model)?;
    write_json(&data.model_meta_path(turbine, model_id), settings)?;
    Ok(TrainReport {
        turbine_id: turbine.into(),
        model_id: model_id.into(),
        batches,
        members: model.members.len(),
        validation_rmse: model.members.iter().map(|m| m.validation_rmse).collect(),
    })
}

pub fn load_model(data: &DataDir, turbine: &str, model_id: &str) -> Result<EnsembleModel> {
    validate_id("turbine_id", turbine)?;
    validate_id("model_id", model_id)?;
    let path = data.model_path(turbine, model_id);
    if !path.exists() {
        return Err(Error::NotFound { what: "model", id: format!("{turbine}/{model_id}") });
    }
    load_ensemble(&path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub turbine_id: String,
    pub model_id: String,
    pub entries: usize,
    pub missing: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

pub fn compute_residuals(data: &DataDir, turbine: &str, model_id: &str) -> Result<ResidualReport> {
    let model = load_model(data, turbine, model_id)?;
    let series = load_series(data, turbine)?;
    let residuals = ensemble_residuals(&model, &series);
    write_residual_csv(&data.residuals_path(turbine, model_id), &residuals)?;
    let values: Vec<f64> = residuals.present().map(|(_, r)| r).collect();
    Ok(ResidualReport {
        turbine_id: turbine.into(),
        model_id: model_id.into(),
        entries: residuals.len(),
        missing: residuals.len() - values.len(),
        mean: driftlab_core::stats::mean(&values),
        sd: driftlab_core::stats::sample_sd(&values),
    })
}

pub fn load_residuals(data: &DataDir, turbine: &str, model_id: &str) -> Result<ResidualSeries> {
    validate_id("turbine_id", turbine)?;
    validate_id("model_id", model_id)?;
    let path = data.residuals_path(turbine, model_id);
    if !path.exists() {
        return Err(Error::NotFound { what: "residuals", id: format!("{turbine}/{model_id}") });
    }
    read_residual_csv(&path)
}

/// Runs every config over the series, in parallel, keeping config order.
pub fn run_detectors(configs: &[DetectorConfig], residuals: &ResidualSeries) -> Result<Vec<Vec<DetectionEvent>>> {
    Ok(configs.par_iter().map(|c| run_detector(c, residuals)).collect::<std::result::Result<Vec<_>, _>>()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub status: RunStatus,
    pub turbine_id: String,
    pub model_id: String,
    /// Detector set keyed by kind, as accepted by the config file.
    pub detectors: Value,
    pub events: BTreeMap<String, Vec<DetectionEvent>>,
}

impl RunRecord {
    pub fn configs(&self) -> Result<Vec<DetectorConfig>> {
        parse_detector_set(self.detectors.clone())
    }

    pub fn all_events(&self) -> Vec<DetectionEvent> {
        let mut out: Vec<DetectionEvent> = self.events.values().flatten().cloned().collect();
        out.sort_by_key(|e| (e.detector, e.sample_index));
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RunKey {
    key: String,
    run_id: String,
}

/// Allocates run ids and remembers idempotency keys for detector runs.
pub struct RunRegistry {
    data: DataDir,
    keys: Mutex<BTreeMap<String, String>>,
}

const RUN_KEYS_FILE: &str = "idempotency.jsonl";

impl RunRegistry {
    pub fn open(data: DataDir) -> Result<Self> {
        let path = data.runs_dir().join(RUN_KEYS_FILE);
        let keys = if path.exists() { read_jsonl::<RunKey>(&path)? } else { Vec::new() };
        Ok(Self { data, keys: Mutex::new(keys.into_iter().map(|k| (k.key, k.run_id)).collect()) })
    }

    fn next_run_dir(&self) -> Result<String> {
        let runs = self.data.runs_dir();
        fs::create_dir_all(&runs).map_err(|e| Error::io(&runs, e))?;
        let highest = fs::read_dir(&runs)
            .map_err(|e| Error::io(&runs, e))?
            .filter_map(|e| e.ok()?.file_name().to_str()?.strip_prefix('R')?.parse::<u64>().ok())
            .max()
            .unwrap_or(0);
        let mut n = highest + 1;
        loop {
            let id = format!("R{n:08}");
            match fs::create_dir(self.data.run_dir(&id)) {
                Ok(()) => return Ok(id),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
                Err(e) => return Err(Error::io(self.data.run_dir(&id), e)),
            }
        }
    }

    /// Runs the detectors and persists the run. A repeated idempotency key
    /// returns the stored run instead.
    pub fn detect(
        &self,
        turbine: &str,
        model_id: &str,
        configs: &[DetectorConfig],
        idempotency_key: Option<&str>,
    ) -> Result<(RunRecord, bool)> {
        let mut keys = self.keys.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(run_id) = idempotency_key.and_then(|k| keys.get(k)) {
            return Ok((load_run(&self.data, run_id)?, false));
        }
        let residuals = load_residuals(&self.data, turbine, model_id)?;
        let events = run_detectors(configs, &residuals)?;
        let run_id = self.next_run_dir()?;
        let record = RunRecord {
            run_id: run_id.clone(),
            status: RunStatus::Completed,
            turbine_id: turbine.into(),
            model_id: model_id.into(),
            detectors: detector_set_to_value(configs),
            events: configs.iter().zip(events).map(|(c, ev)| (c.kind().name().to_string(), ev)).collect(),
        };
        let dir = self.data.run_dir(&run_id);
        write_events_csv(&dir.join("events.csv"), &record.all_events())?;
        write_json(&dir.join("run.json"), &record)?;
        if let Some(key) = idempotency_key {
            keys.insert(key.into(), run_id.clone());
            let all: Vec<RunKey> = keys.iter().map(|(k, v)| RunKey { key: k.clone(), run_id: v.clone() }).collect();
            write_jsonl(&self.data.runs_dir().join(RUN_KEYS_FILE), &all)?;
        }
        Ok((record, true))
    }
}

pub fn load_run(data: &DataDir, run_id: &str) -> Result<RunRecord> {
    validate_id("run_id", run_id)?;
    let path = data.run_dir(run_id).join("run.json");
    if !path.exists() {
        return Err(Error::NotFound { what: "run", id: run_id.into() });
    }
    read_json(&path)
}

/// Most recent run for a turbine and model.
pub fn latest_run(data: &DataDir, turbine: &str, model_id: &str) -> Result<Option<RunRecord>> {
    let Ok(entries) = fs::read_dir(data.runs_dir()) else { return Ok(None) };
    let mut ids: Vec<String> = entries.filter_map(|e| e.ok()?.file_name().to_str().map(str::to_string)).filter(|n| n.starts_with('R')).collect();
    ids.sort();
    for id in ids.iter().rev() {
        if !data.run_dir(id).join("run.json").exists() {
            continue;
        }
        let run = load_run(data, id)?;
        if run.turbine_id == turbine && run.model_id == model_id {
            return Ok(Some(run));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Expert,
    Consensus,
    #[default]
    #[serde(alias = "injected_ground_truth")]
    GroundTruth,
}

impl std::str::FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.into())).map_err(|_| Error::Validation(format!("unknown label source `{s}`")))
    }
}

/// Which labelled periods to score against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeriodQuery {
    pub source: LabelSource,
    /// Restricts expert labels to one expert.
    pub expert_id: Option<String>,
    /// Jaccard threshold for the consensus source.
    pub overlap_threshold: f64,
}

impl Default for PeriodQuery {
    fn default() -> Self {
        Self { source: LabelSource::GroundTruth, expert_id: None, overlap_threshold: 0.5 }
    }
}

fn turbine_labels(labels: &LabelStore, turbine: &str, model_id: &str, expert: Option<&str>) -> Vec<DriftLabel> {
    let all = labels.query(&LabelFilter { turbine_id: Some(turbine.into()), model_id: Some(model_id.into()), ..Default::default() });
    effective_labels(&all).into_iter().filter(|l| expert.is_none_or(|e| l.expert_id == e)).cloned().collect()
}

/// Labelled periods for one turbine and model. Ground truth and consensus
/// periods are flattened so they never overlap; expert periods are returned
/// as labelled and must already be disjoint to be scored.
pub fn labelled_periods(data: &DataDir, labels: &LabelStore, turbine: &str, model_id: &str, query: &PeriodQuery) -> Result<Vec<LabelledPeriod>> {
    Ok(match query.source {
        LabelSource::GroundTruth => flatten_periods(
            load_injections(data, turbine)?
                .iter()
                .map(|i| LabelledPeriod::new(i.start, i.end, PeriodSource::InjectedGroundTruth))
                .collect(),
        ),
        LabelSource::Expert => {
            let mut ps: Vec<LabelledPeriod> = turbine_labels(labels, turbine, model_id, query.expert_id.as_deref())
                .iter()
                .map(|l| LabelledPeriod::new(l.start, l.end, PeriodSource::Expert))
                .collect();
            ps.sort_by_key(|p| (p.start, p.end));
            ps
        }
        LabelSource::Consensus => {
            let ls = turbine_labels(labels, turbine, model_id, query.expert_id.as_deref());
            flatten_periods(consensus(&ls, query.overlap_threshold).iter().map(|c| c.to_labelled_period()).collect())
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub run_id: String,
    pub turbine_id: String,
    pub model_id: String,
    pub source: LabelSource,
    pub policy: &'static str,
    pub tolerance_s: i64,
    pub periods: usize,
    pub results: Vec<EvalResult>,
}

/// Scores a stored run on its single series via the benchmark routine.
pub fn evaluate_run(data: &DataDir, labels: &LabelStore, run_id: &str, query: &PeriodQuery, tolerance_s: i64) -> Result<EvaluationReport> {
    let run = load_run(data, run_id)?;
    let configs = run.configs()?;
    let residuals = load_residuals(data, &run.turbine_id, &run.model_id)?;
    let periods = labelled_periods(data, labels, &run.turbine_id, &run.model_id, query)?;
    let corpus = [CorpusSeries { id: run.turbine_id.clone(), residuals, drift_free: periods.is_empty(), periods }];
    let table = benchmark_detectors(&corpus, &configs, tolerance_s)?;
    Ok(EvaluationReport {
        run_id: run.run_id,
        turbine_id: run.turbine_id,
        model_id: run.model_id,
        source: query.source,
        policy: MATCHING_POLICY,
        tolerance_s,
        periods: corpus[0].periods.len(),
        results: table.pooled,
    })
}

/// Parallel version of the core benchmark: every (config, series) pair runs
/// independently and the counts are pooled afterwards.
pub fn benchmark_parallel(corpus: &[CorpusSeries], configs: &[DetectorConfig], tolerance_s: i64) -> Result<BenchmarkTable> {
    validate_corpus(corpus)?;
    let pairs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..corpus.len()).map(move |s| (c, s))).collect();
    let per_series = pairs
        .par_iter()
        .map(|&(c, s)| evaluate_series(&corpus[s], &configs[c], tolerance_s).map(|(r, _)| r))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(assemble_table(configs, corpus.len(), per_series, tolerance_s)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CharacterizeParams {
    pub metric: DistanceMetric,
    pub window_s: i64,
    pub n_steps: usize,
    pub metrics: MetricsConfig,
}

impl Default for CharacterizeParams {
    fn default() -> Self {
        Self { metric: DistanceMetric::Hellinger, window_s: 7 * 86_400, n_steps: 4, metrics: MetricsConfig::default() }
    }
}

/// One characterisation line. Periods that cannot be characterised carry
/// the reason instead of the measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationRecord {
    pub turbine_id: String,
    pub model_id: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub magnitude: Option<f64>,
    pub duration_s: i64,
    pub path_length: Option<f64>,
    pub n_steps: usize,
    pub metric: DistanceMetric,
    pub window_s: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn characterize_periods(
    data: &DataDir,
    labels: &LabelStore,
    turbine: &str,
    model_id: &str,
    query: &PeriodQuery,
    params: &CharacterizeParams,
) -> Result<Vec<CharacterizationRecord>> {
    let residuals = load_residuals(data, turbine, model_id)?;
    let periods = labelled_periods(data, labels, turbine, model_id, query)?;
    Ok(periods
        .iter()
        .map(|p| {
            let base = CharacterizationRecord {
                turbine_id: turbine.into(),
                model_id: model_id.into(),
                start: p.start,
                end: p.end,
                magnitude: None,
                duration_s: p.end - p.start,
                path_length: None,
                n_steps: params.n_steps,
                metric: params.metric,
                window_s: params.window_s,
                error: None,
            };
            match characterize(&residuals, p.start, p.end, params.n_steps, params.window_s, params.metric, &params.metrics) {
                Ok(DriftCharacterization { magnitude, path_length, duration_s, .. }) => {
                    CharacterizationRecord { magnitude: Some(magnitude), path_length: Some(path_length), duration_s, ..base }
                }
                Err(e) => CharacterizationRecord { error: Some(e.to_string()), ..base },
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub timestamp: Timestamp,
    pub actual: Option<f64>,
    pub predicted: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualPage {
    pub turbine_id: String,
    pub model_id: String,
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    /// Points in range before downsampling, gap markers included.
    pub total_points: usize,
    pub downsampled: bool,
    pub points: Vec<ResidualPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<DriftLabel>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<DetectionEvent>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PageRequest {
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    pub max_points: Option<usize>,
    pub overlay_labels: bool,
    pub overlay_events: bool,
    /// Run whose events are overlaid; the latest matching run by default.
    pub run_id: Option<String>,
}

/// Residuals in `[from, to)` for display. Missing residuals, and holes in
/// the record grid, appear as points with null values.
pub fn residual_page(data: &DataDir, labels: &LabelStore, turbine: &str, model_id: &str, req: &PageRequest) -> Result<ResidualPage> {
    if let (Some(f), Some(t)) = (req.from, req.to) {
        if f >= t {
            return Err(Error::Validation(format!("`from` ({f}) must be before `to` ({t})")));
        }
    }
    if req.max_points.is_some_and(|m| m < 2) {
        return Err(Error::Validation("max_points must be at least 2".into()));
    }
    let residuals = load_residuals(data, turbine, model_id)?;
    let in_range = |t: Timestamp| req.from.is_none_or(|f| t >= f) && req.to.is_none_or(|u| t < u);

    let mut points: Vec<ResidualPoint> = Vec::new();
    let mut prev: Option<Timestamp> = None;
    for e in residuals.entries.iter().filter(|e| in_range(e.timestamp)) {
        if let Some(p) = prev {
            if e.timestamp - p > GRID_SECONDS {
                points.push(ResidualPoint { timestamp: p + GRID_SECONDS, actual: None, predicted: None, residual: None });
            }
        }
        points.push(ResidualPoint { timestamp: e.timestamp, actual: Some(e.actual), predicted: e.predicted, residual: e.residual });
        prev = Some(e.timestamp);
    }
    let total_points = points.len();
    let downsampled = req.max_points.is_some_and(|m| total_points > m);
    if let (true, Some(m)) = (downsampled, req.max_points) {
        let xs: Vec<f64> = points.iter().map(|p| p.timestamp.unix() as f64).collect();
        let ys: Vec<Option<f64>> = points.iter().map(|p| p.residual).collect();
        let keep = lttb_indices(&xs, &ys, m);
        let kept = keep
            .into_iter()
            .map(|k| {
                let p = &points[k];
                if p.residual.is_none() {
                    ResidualPoint { timestamp: p.timestamp, actual: None, predicted: None, residual: None }
                } else {
                    p.clone()
                }
            })
            .collect();
        points = kept;
    }

    let labels_overlay = req.overlay_labels.then(|| {
        labels.query(&LabelFilter {
            turbine_id: Some(turbine.into()),
            model_id: Some(model_id.into()),
            from: req.from,
            to: req.to,
            ..Default::default()
        })
    });
    let (events, run_id) = if req.overlay_events {
        let run = match &req.run_id {
            Some(id) => Some(load_run(data, id)?),
            None => latest_run(data, turbine, model_id)?,
        };
        match run {
            Some(r) => (Some(r.all_events().into_iter().filter(|e| in_range(e.timestamp)).collect()), Some(r.run_id)),
            None => (Some(Vec::new()), None),
        }
    } else {
        (None, None)
    };
    Ok(ResidualPage {
        turbine_id: turbine.into(),
        model_id: model_id.into(),
        from: req.from,
        to: req.to,
        total_points,
        downsampled,
        points,
        labels: labels_overlay,
        events,
        run_id,
    })
}

//! Command-line interface. Subcommands mirror the HTTP API and read and
//! write the same files as the service.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use driftlab_core::detectors::DetectorConfig;
use driftlab_core::drift_metrics::DistanceMetric;
use driftlab_core::evaluation::CorpusSeries;
use driftlab_core::labels::{Cause, ExpertInfo, LabelDraft, LabelFilter};
use driftlab_core::scada::{DriftInjection, GeneratorConfig};
use driftlab_core::Timestamp;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io::detector_config::{default_detector_set, parse_detector_set, read_detector_set};
use crate::io::tables::{write_results_csv, write_results_csv_to};
use crate::io::{read_config, read_json, read_jsonl, write_json, write_jsonl};
use crate::label_store::LabelStore;
use crate::service::{self, ServiceConfig};
use crate::workflow::{self, CharacterizeParams, LabelSource, PeriodQuery, RunRegistry, TrainSettings, DEFAULT_MODEL_ID};
use crate::workspace::DataDir;

#[derive(Debug, Parser)]
#[command(name = "driftlab", version, about = "Drift labelling workbench for wind-turbine SCADA residuals")]
pub struct Cli {
    /// Data directory holding series, models, residuals, runs and labels.
    #[arg(long, global = true, default_value = "data")]
    pub data_dir: PathBuf,
    /// Overrides the generator and training seeds of the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Pipeline configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesise a turbine series with optional drift injections.
    Generate {
        #[arg(long)]
        turbine: String,
        /// Number of 10-minute records.
        #[arg(long)]
        records: Option<usize>,
        /// Injections as a JSON array or one JSON object per line.
        #[arg(long)]
        injections: Option<PathBuf>,
    },
    /// Train the normal-behaviour ensemble for a turbine.
    Train(ModelArgs),
    /// Compute ensemble residuals for a trained model.
    Residuals(ModelArgs),
    /// Run detectors over stored residuals; prints the run id.
    Detect {
        #[command(flatten)]
        model: ModelArgs,
        /// Detector set keyed by kind; the configuration or defaults otherwise.
        #[arg(long)]
        detectors: Option<PathBuf>,
        #[arg(long)]
        idempotency_key: Option<String>,
    },
    /// Score a detector run against labelled periods.
    Evaluate {
        #[arg(long)]
        run: String,
        #[command(flatten)]
        periods: PeriodArgs,
        /// Matching tolerance in seconds.
        #[arg(long, default_value_t = 0)]
        tolerance: i64,
        /// Results CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Manage labels.
    #[command(subcommand)]
    Labels(LabelsCommand),
    /// Manage the expert registry.
    #[command(subcommand)]
    Experts(ExpertsCommand),
    /// Magnitude, duration and path length of labelled periods, as JSON lines.
    Characterize {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        periods: PeriodArgs,
        #[arg(long, value_parser = parse_metric)]
        metric: Option<DistanceMetric>,
        /// Comparison window in seconds.
        #[arg(long)]
        window: Option<i64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark detectors over every turbine with residuals and ground truth.
    Benchmark {
        #[arg(long, default_value = DEFAULT_MODEL_ID)]
        model: String,
        #[arg(long)]
        detectors: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        tolerance: i64,
        /// Pooled results CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full table with macro averages and per-series rows, as JSON.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long)]
        read_only: bool,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub turbine: String,
    #[arg(long, default_value = DEFAULT_MODEL_ID)]
    pub model: String,
}

#[derive(Debug, Args)]
pub struct PeriodArgs {
    /// expert, consensus or ground_truth.
    #[arg(long, default_value = "ground_truth")]
    pub source: LabelSource,
    /// Only this expert's labels.
    #[arg(long)]
    pub expert: Option<String>,
    /// Jaccard threshold for consensus merging.
    #[arg(long)]
    pub overlap_threshold: Option<f64>,
}

impl PeriodArgs {
    fn query(&self) -> PeriodQuery {
        let mut q = PeriodQuery { source: self.source, expert_id: self.expert.clone(), ..Default::default() };
        if let Some(t) = self.overlap_threshold {
            q.overlap_threshold = t;
        }
        q
    }
}

#[derive(Debug, Subcommand)]
pub enum LabelsCommand {
    /// Write matching labels as JSON lines.
    Export {
        #[arg(long)]
        turbine: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        expert: Option<String>,
        #[arg(long, value_parser = parse_timestamp)]
        from: Option<Timestamp>,
        #[arg(long, value_parser = parse_timestamp)]
        to: Option<Timestamp>,
        #[arg(long, value_parser = parse_cause)]
        cause: Option<Cause>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Append one label from a JSON file.
    Add {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        idempotency_key: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExpertsCommand {
    Add {
        #[arg(long)]
        id: String,
        #[arg(long)]
        name: String,
    },
    List,
}

fn parse_timestamp(s: &str) -> std::result::Result<Timestamp, String> {
    Timestamp::parse_rfc3339(s).ok_or_else(|| format!("`{s}` is not an RFC 3339 timestamp with whole seconds"))
}

fn parse_enum<T: for<'de> Deserialize<'de>>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(Value::String(s.into())).map_err(|e| e.to_string())
}

fn parse_cause(s: &str) -> std::result::Result<Cause, String> {
    parse_enum(s)
}

fn parse_metric(s: &str) -> std::result::Result<DistanceMetric, String> {
    parse_enum(s)
}

/// Contents of the `--config` file. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub generator: GeneratorConfig,
    pub train: TrainSettings,
    /// Detector set keyed by kind.
    pub detectors: Option<Value>,
    pub characterize: CharacterizeParams,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut config: Self = match path {
            Some(p) => read_config(p)?,
            None => Self::default(),
        };
        if let Some(s) = seed {
            config.generator.seed = s;
            config.train.seed = s;
        }
        Ok(config)
    }

    fn detector_set(&self, file: Option<&Path>) -> Result<Vec<DetectorConfig>> {
        match (file, &self.detectors) {
            (Some(f), _) => read_detector_set(f),
            (None, Some(v)) => parse_detector_set(v.clone()),
            (None, None) => Ok(default_detector_set()),
        }
    }
}

fn read_injections(path: &Path) -> Result<Vec<DriftInjection>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| Error::format(path, e))
    } else {
        read_jsonl(path)
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Validation(e.to_string()))?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn run(cli: Cli) -> Result<()> {
    let config = PipelineConfig::load(cli.config.as_deref(), cli.seed)?;
    let data = DataDir::new(&cli.data_dir);
    match cli.command {
        Command::Generate { turbine, records, injections } => {
            ensure_dir(data.root())?;
            let mut generator = config.generator.clone();
            if let Some(n) = records {
                generator.n_records = n;
            }
            let injections = injections.as_deref().map(read_injections).transpose()?.unwrap_or_default();
            print_json(&workflow::generate(&data, &turbine, &generator, injections)?)
        }
        Command::Train(m) => print_json(&workflow::train(&data, &m.turbine, &m.model, &config.train)?),
        Command::Residuals(m) => print_json(&workflow::compute_residuals(&data, &m.turbine, &m.model)?),
        Command::Detect { model, detectors, idempotency_key } => {
            let configs = config.detector_set(detectors.as_deref())?;
            let registry = RunRegistry::open(data.clone())?;
            let (run, _) = registry.detect(&model.turbine, &model.model, &configs, idempotency_key.as_deref())?;
            println!("{}", run.run_id);
            Ok(())
        }
        Command::Evaluate { run, periods, tolerance, out } => {
            let labels = LabelStore::open(data.labels_dir(), true)?;
            let report = workflow::evaluate_run(&data, &labels, &run, &periods.query(), tolerance)?;
            match out {
                Some(p) => write_results_csv(&p, &report.results),
                None => write_results_csv_to(std::io::stdout().lock(), &report.results).map_err(|e| Error::io("<stdout>", e)),
            }
        }
        Command::Labels(LabelsCommand::Export { turbine, model, expert, from, to, cause, out }) => {
            let labels = LabelStore::open(data.labels_dir(), true)?;
            let found = labels.query(&LabelFilter { turbine_id: turbine, model_id: model, expert_id: expert, from, to, cause });
            match out {
                Some(p) => write_jsonl(&p, &found),
                None => {
                    let mut stdout = std::io::stdout().lock();
                    for l in &found {
                        serde_json::to_writer(&mut stdout, l).map_err(|e| Error::Validation(e.to_string()))?;
                        writeln!(stdout).map_err(|e| Error::io("<stdout>", e))?;
                    }
                    Ok(())
                }
            }
        }
        Command::Labels(LabelsCommand::Add { file, idempotency_key }) => {
            let draft: LabelDraft = read_json(&file)?;
            let labels = LabelStore::open(data.labels_dir(), false)?;
            print_json(&labels.append(draft, idempotency_key.as_deref(), workflow::now())?.label)
        }
        Command::Experts(ExpertsCommand::Add { id, name }) => {
            let labels = LabelStore::open(data.labels_dir(), false)?;
            labels.add_expert(ExpertInfo { expert_id: id, display_name: name })
        }
        Command::Experts(ExpertsCommand::List) => {
            let labels = LabelStore::open(data.labels_dir(), true)?;
            print_json(&labels.experts())
        }
        Command::Characterize { model, periods, metric, window, steps, out } => {
            let mut params = config.characterize;
            params.metric = metric.unwrap_or(params.metric);
            params.window_s = window.unwrap_or(params.window_s);
            params.n_steps = steps.unwrap_or(params.n_steps);
            let labels = LabelStore::open(data.labels_dir(), true)?;
            let records = workflow::characterize_periods(&data, &labels, &model.turbine, &model.model, &periods.query(), &params)?;
            match out {
                Some(p) => write_jsonl(&p, &records),
                None => {
                    for r in &records {
                        println!("{}", serde_json::to_string(r).map_err(|e| Error::Validation(e.to_string()))?);
                    }
                    Ok(())
                }
            }
        }
        Command::Benchmark { model, detectors, tolerance, out, table } => {
            let configs = config.detector_set(detectors.as_deref())?;
            let labels = LabelStore::open(data.labels_dir(), true)?;
            let ground_truth = PeriodQuery { source: LabelSource::GroundTruth, ..Default::default() };
            let mut corpus = Vec::new();
            for t in data.turbines().into_iter().filter(|t| t.residual_models.contains(&model)) {
                let residuals = workflow::load_residuals(&data, &t.turbine_id, &model)?;
                let periods = workflow::labelled_periods(&data, &labels, &t.turbine_id, &model, &ground_truth)?;
                corpus.push(CorpusSeries { id: t.turbine_id, residuals, drift_free: periods.is_empty(), periods });
            }
            let result = workflow::benchmark_parallel(&corpus, &configs, tolerance)?;
            if let Some(p) = table {
                write_json(&p, &result)?;
            }
            match out {
                Some(p) => write_results_csv(&p, &result.pooled),
                None => write_results_csv_to(std::io::stdout().lock(), &result.pooled).map_err(|e| Error::io("<stdout>", e)),
            }
        }
        Command::Serve { listen, read_only } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io(data.root(), e))?;
            runtime.block_on(service::serve(ServiceConfig { listen, data_dir: data, read_only }))
        }
    }
}

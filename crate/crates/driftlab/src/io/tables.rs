//! CSV tables: SCADA series, residuals, detector events and evaluation results.

use std::io::{Read, Write};
use std::path::Path;

use driftlab_core::detectors::DetectionEvent;
use driftlab_core::ensemble::{ResidualEntry, ResidualSeries};
use driftlab_core::evaluation::EvalResult;
use driftlab_core::scada::{ScadaRecord, TurbineSeries};
use driftlab_core::Timestamp;
use serde::{Deserialize, Serialize};

use super::write_with;
use crate::error::{Error, Result};

pub const SCADA_HEADER: [&str; 5] = ["timestamp", "ambient_temp", "wind_speed", "turbulence", "power"];
pub const RESIDUAL_HEADER: [&str; 5] = ["timestamp", "actual", "predicted", "residual", "n_members"];
pub const EVENTS_HEADER: [&str; 4] = ["detector", "timestamp", "sample_index", "statistic"];
pub const RESULTS_HEADER: [&str; 7] = ["detector", "precision", "sensitivity", "tp", "fp", "fn", "tolerance_s"];

/// A parsed series and the number of rows that could not be used.
#[derive(Debug, Clone, PartialEq)]
pub struct ScadaImport {
    pub series: TurbineSeries,
    pub dropped: usize,
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str], source: &Path) -> Result<()> {
    let header = reader.headers().map_err(|e| Error::format(source, e))?;
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::format(source, format!("expected header `{}`, found `{}`", expected.join(","), header.iter().collect::<Vec<_>>().join(","))));
    }
    Ok(())
}

fn parse_scada_row(row: &csv::StringRecord) -> Option<ScadaRecord> {
    if row.len() != SCADA_HEADER.len() {
        return None;
    }
    let num = |i: usize| row[i].trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let record = ScadaRecord {
        timestamp: Timestamp::parse_rfc3339(row[0].trim())?,
        ambient_temp: num(1)?,
        wind_speed: num(2)?,
        turbulence: num(3)?,
        power: num(4)?,
    };
    record.validate().ok().map(|_| record)
}

/// Parses SCADA CSV. Rows with unparseable or out-of-range values are
/// dropped and counted. The remaining rows are sorted by timestamp.
pub fn parse_scada_csv(source: impl Read, turbine_id: &str, origin: &Path) -> Result<ScadaImport> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    check_header(&mut reader, &SCADA_HEADER, origin)?;
    let mut records = Vec::new();
    let mut dropped = 0;
    for row in reader.records() {
        match row.ok().as_ref().and_then(parse_scada_row) {
            Some(r) => records.push(r),
            None => dropped += 1,
        }
    }
    records.sort_by_key(|r| r.timestamp);
    let series = TurbineSeries::new(turbine_id, records)?;
    Ok(ScadaImport { series, dropped })
}

pub fn read_scada_csv(path: &Path, turbine_id: &str) -> Result<ScadaImport> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_scada_csv(file, turbine_id, path)
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

pub fn write_scada_csv_to(w: impl Write, series: &TurbineSeries) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in series.records() {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_scada_csv(path: &Path, series: &TurbineSeries) -> Result<()> {
    write_with(path, |w| write_scada_csv_to(w, series))
}

pub fn write_residual_csv(path: &Path, residuals: &ResidualSeries) -> Result<()> {
    write_with(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        for e in &residuals.entries {
            out.serialize(e).map_err(csv_err)?;
        }
        out.flush()
    })
}

pub fn read_residual_csv(path: &Path) -> Result<ResidualSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    check_header(&mut reader, &RESIDUAL_HEADER, path)?;
    let entries = reader
        .deserialize::<ResidualEntry>()
        .enumerate()
        .map(|(n, row)| row.map_err(|e| Error::format(path, format!("row {}: {e}", n + 2))))
        .collect::<Result<Vec<_>>>()?;
    if entries.windows(2).any(|w| w[0].timestamp >= w[1].timestamp) {
        return Err(Error::format(path, "timestamps must be strictly increasing"));
    }
    Ok(ResidualSeries::new(entries))
}

pub fn write_events_csv(path: &Path, events: &[DetectionEvent]) -> Result<()> {
    write_with(path, |w| {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        out.write_record(EVENTS_HEADER).map_err(csv_err)?;
        for e in events {
            out.serialize(e).map_err(csv_err)?;
        }
        out.flush()
    })
}

pub fn read_events_csv(path: &Path) -> Result<Vec<DetectionEvent>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    check_header(&mut reader, &EVENTS_HEADER, path)?;
    reader.deserialize().map(|r| r.map_err(|e| Error::format(path, e))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ResultRow {
    detector: String,
    precision: Option<f64>,
    sensitivity: Option<f64>,
    tp: u64,
    fp: u64,
    #[serde(rename = "fn")]
    fn_: u64,
    tolerance_s: i64,
}

pub fn write_results_csv_to(w: impl Write, results: &[EvalResult]) -> std::io::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for r in results {
        out.serialize(ResultRow {
            detector: r.detector.name().to_string(),
            precision: r.precision,
            sensitivity: r.sensitivity,
            tp: r.counts.tp,
            fp: r.counts.fp,
            fn_: r.counts.fn_,
            tolerance_s: r.counts.tolerance_s,
        })
        .map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_results_csv(path: &Path, results: &[EvalResult]) -> Result<()> {
    write_with(path, |w| write_results_csv_to(w, results))
}

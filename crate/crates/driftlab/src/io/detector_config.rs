//! Detector sets keyed by kind, e.g. in TOML:
//!
//! ```toml
//! [CUSUM]
//! threshold = 5.0
//! transform = "standardized"
//!
//! [ADWIN]
//! delta = 0.002
//! ```
//!
//! Each section holds the kind's named parameters plus the optional
//! `transform` and `standardize_warmup` keys. Omitted parameters take their
//! defaults.

use std::path::Path;

use driftlab_core::detectors::{DetectorConfig, DetectorKind, DetectorParams, InputTransform, DEFAULT_WARMUP};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

fn section_to_config(kind: DetectorKind, section: Value) -> Result<DetectorConfig> {
    let mut fields = match section {
        Value::Object(m) => m,
        Value::Null => Map::new(),
        other => return Err(Error::Validation(format!("{kind}: expected a table of parameters, found {other}"))),
    };
    let transform: InputTransform = match fields.remove("transform") {
        Some(v) => serde_json::from_value(v).map_err(|e| Error::Validation(format!("{kind}.transform: {e}")))?,
        None => InputTransform::default(),
    };
    let standardize_warmup = match fields.remove("standardize_warmup") {
        Some(v) => serde_json::from_value(v).map_err(|e| Error::Validation(format!("{kind}.standardize_warmup: {e}")))?,
        None => DEFAULT_WARMUP,
    };
    let tagged = serde_json::json!({ "kind": kind.name(), "params": Value::Object(fields) });
    let params: DetectorParams = serde_json::from_value(tagged).map_err(|e| Error::Validation(format!("{kind}: {e}")))?;
    let config = DetectorConfig { params, transform, standardize_warmup };
    config.validate()?;
    Ok(config)
}

/// Builds configs from a JSON object keyed by detector name, in canonical kind order.
pub fn parse_detector_set(value: Value) -> Result<Vec<DetectorConfig>> {
    let map = match value {
        Value::Object(m) => m,
        Value::Null => Map::new(),
        other => return Err(Error::Validation(format!("detector set must be an object keyed by kind, found {other}"))),
    };
    let mut configs = map
        .into_iter()
        .map(|(name, section)| section_to_config(DetectorKind::from_name(&name)?, section))
        .collect::<Result<Vec<_>>>()?;
    configs.sort_by_key(|c| c.kind());
    Ok(configs)
}

/// Inverse of [`parse_detector_set`].
pub fn detector_set_to_value(configs: &[DetectorConfig]) -> Value {
    let mut out = Map::new();
    for c in configs {
        let Value::Object(mut tagged) = serde_json::to_value(c).expect("configs serialize") else { unreachable!() };
        let mut section = match tagged.remove("params") {
            Some(Value::Object(p)) => p,
            _ => Map::new(),
        };
        section.insert("transform".into(), tagged.remove("transform").unwrap_or(Value::Null));
        section.insert("standardize_warmup".into(), tagged.remove("standardize_warmup").unwrap_or(Value::Null));
        out.insert(c.kind().name().into(), Value::Object(section));
    }
    Value::Object(out)
}

/// Every kind at its defaults.
pub fn default_detector_set() -> Vec<DetectorConfig> {
    DetectorKind::ALL.into_iter().map(DetectorConfig::default_for).collect()
}

pub fn read_detector_set(path: &Path) -> Result<Vec<DetectorConfig>> {
    let value: Value = super::read_config(path)?;
    parse_detector_set(value).map_err(|e| match e {
        Error::Validation(m) => Error::format(path, m),
        other => other,
    })
}

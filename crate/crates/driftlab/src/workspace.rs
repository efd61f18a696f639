//! Layout of a data directory.
//!
//! ```text
//! series/<turbine>.csv                 SCADA records
//! series/<turbine>.injections.jsonl    ground-truth drift injections
//! models/<turbine>/<model>.ens         trained ensemble
//! models/<turbine>/<model>.json        training settings
//! residuals/<turbine>/<model>.csv      ensemble residuals
//! runs/<run_id>/run.json               detector run with its events
//! runs/<run_id>/events.csv
//! labels/                              label store
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataDir {
    root: PathBuf,
}

/// Identifiers become file names, so they are restricted to a safe alphabet.
pub fn validate_id(kind: &str, id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(format!("{kind} `{id}` must be 1-64 characters of [A-Za-z0-9._-] and not start with '.'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TurbineInfo {
    pub turbine_id: String,
    pub models: Vec<String>,
    pub residual_models: Vec<String>,
}

fn stems_with_extension(dir: &Path, ext: &str) -> Vec<String> {
    let Ok(entries) = fs::read_dir(dir) else { return Vec::new() };
    let mut out: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == ext))
        .filter_map(|p| p.file_stem().and_then(|s| s.to_str()).map(str::to_string))
        .filter(|s| !s.contains('.'))
        .collect();
    out.sort();
    out
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn series_path(&self, turbine: &str) -> PathBuf {
        self.root.join("series").join(format!("{turbine}.csv"))
    }

    pub fn injections_path(&self, turbine: &str) -> PathBuf {
        self.root.join("series").join(format!("{turbine}.injections.jsonl"))
    }

    pub fn model_path(&self, turbine: &str, model: &str) -> PathBuf {
        self.root.join("models").join(turbine).join(format!("{model}.ens"))
    }

    pub fn model_meta_path(&self, turbine: &str, model: &str) -> PathBuf {
        self.root.join("models").join(turbine).join(format!("{model}.json"))
    }

    pub fn residuals_path(&self, turbine: &str, model: &str) -> PathBuf {
        self.root.join("residuals").join(turbine).join(format!("{model}.csv"))
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.runs_dir().join(run_id)
    }

    pub fn labels_dir(&self) -> PathBuf {
        self.root.join("labels")
    }

    pub fn turbines(&self) -> Vec<TurbineInfo> {
        stems_with_extension(&self.root.join("series"), "csv")
            .into_iter()
            .map(|t| TurbineInfo {
                models: stems_with_extension(&self.root.join("models").join(&t), "ens"),
                residual_models: stems_with_extension(&self.root.join("residuals").join(&t), "csv"),
                turbine_id: t,
            })
            .collect()
    }

    /// Fails unless the root exists and, for writers, accepts files.
    pub fn check(&self, writable: bool) -> Result<()> {
        let meta = fs::metadata(&self.root).map_err(|e| Error::io(&self.root, e))?;
        if !meta.is_dir() {
            return Err(Error::Validation(format!("{} is not a directory", self.root.display())));
        }
        if writable {
            let probe = self.root.join(".write-probe");
            fs::write(&probe, b"").and_then(|_| fs::remove_file(&probe)).map_err(|e| Error::io(&self.root, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_path_safe() {
        for ok in ["T01", "wt-3", "model_a.v2"] {
            assert!(validate_id("id", ok).is_ok());
        }
        for bad in ["", "../x", ".hidden", "a/b", "a b"] {
            assert!(validate_id("id", bad).is_err(), "{bad}");
        }
    }
}

//! Append-only label log with an in-memory index.
//!
//! The store directory holds three line-delimited JSON files:
//! `labels.jsonl` (one [`DriftLabel`] per line), `experts.jsonl` and
//! `idempotency.jsonl`. All appends go through one mutex-guarded writer and
//! are flushed to disk before they are acknowledged. Readers work on an
//! immutable snapshot that the writer swaps after each append.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use driftlab_core::labels::{filter_labels, DriftLabel, ExpertInfo, FieldError, LabelDraft, LabelFilter};
use driftlab_core::Timestamp;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LABELS_FILE: &str = "labels.jsonl";
pub const EXPERTS_FILE: &str = "experts.jsonl";
pub const IDEMPOTENCY_FILE: &str = "idempotency.jsonl";

#[derive(Debug, Serialize, Deserialize)]
struct KeyRecord {
    key: String,
    label_id: String,
}

struct Writer {
    labels: File,
    experts: File,
    keys: File,
    next_id: u64,
    key_index: HashMap<String, String>,
}

pub struct LabelStore {
    dir: PathBuf,
    writer: Option<Mutex<Writer>>,
    labels: RwLock<Arc<Vec<DriftLabel>>>,
    experts: RwLock<Arc<BTreeMap<String, ExpertInfo>>>,
}

/// Outcome of an append.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Appended {
    pub label: DriftLabel,
    /// False when an earlier append with the same idempotency key was replayed.
    pub created: bool,
}

pub fn format_label_id(n: u64) -> String {
    format!("L{n:08}")
}

fn parse_label_number(id: &str) -> Option<u64> {
    id.strip_prefix('L')?.parse().ok()
}

/// Parses every complete line. A final line without its newline is a torn
/// write; its byte offset is returned so a writer can cut it off.
fn load_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(Vec<T>, Option<u64>)> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), None)),
        Err(e) => return Err(Error::io(path, e)),
    };
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let torn = (complete < bytes.len()).then_some(complete as u64);
    let text = std::str::from_utf8(&bytes[..complete]).map_err(|e| Error::format(path, e))?;
    let mut items = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(line).map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?);
    }
    Ok((items, torn))
}

fn open_append(path: &Path, torn_at: Option<u64>) -> Result<File> {
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    if let Some(len) = torn_at {
        file.set_len(len).map_err(|e| Error::io(path, e))?;
    }
    Ok(file)
}

fn append_line<T: Serialize>(file: &mut File, path: &Path, item: &T) -> Result<()> {
    let mut line = serde_json::to_vec(item).expect("records serialize");
    line.push(b'\n');
    file.write_all(&line).and_then(|_| file.sync_data()).map_err(|e| Error::io(path, e))
}

impl LabelStore {
    /// Opens (creating if needed) the store in `dir`. A read-only store
    /// never touches the files beyond reading them.
    pub fn open(dir: impl Into<PathBuf>, read_only: bool) -> Result<Self> {
        let dir = dir.into();
        if !read_only {
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        let (labels, labels_torn) = load_lines::<DriftLabel>(&dir.join(LABELS_FILE))?;
        let (experts, experts_torn) = load_lines::<ExpertInfo>(&dir.join(EXPERTS_FILE))?;
        let (keys, keys_torn) = load_lines::<KeyRecord>(&dir.join(IDEMPOTENCY_FILE))?;

        let writer = if read_only {
            None
        } else {
            let next_id = labels.iter().filter_map(|l| parse_label_number(&l.label_id)).max().unwrap_or(0) + 1;
            Some(Mutex::new(Writer {
                labels: open_append(&dir.join(LABELS_FILE), labels_torn)?,
                experts: open_append(&dir.join(EXPERTS_FILE), experts_torn)?,
                keys: open_append(&dir.join(IDEMPOTENCY_FILE), keys_torn)?,
                next_id,
                key_index: keys.into_iter().map(|k| (k.key, k.label_id)).collect(),
            }))
        };
        let experts = experts.into_iter().map(|e| (e.expert_id.clone(), e)).collect();
        Ok(Self { dir, writer, labels: RwLock::new(Arc::new(labels)), experts: RwLock::new(Arc::new(experts)) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn is_read_only(&self) -> bool {
        self.writer.is_none()
    }

    fn writer(&self) -> Result<std::sync::MutexGuard<'_, Writer>> {
        let w = self.writer.as_ref().ok_or(Error::ReadOnly)?;
        Ok(w.lock().unwrap_or_else(|p| p.into_inner()))
    }

    /// Every stored label in append order.
    pub fn snapshot(&self) -> Arc<Vec<DriftLabel>> {
        self.labels.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn get(&self, label_id: &str) -> Option<DriftLabel> {
        self.snapshot().iter().find(|l| l.label_id == label_id).cloned()
    }

    pub fn query(&self, filter: &LabelFilter) -> Vec<DriftLabel> {
        filter_labels(self.snapshot().iter(), filter)
    }

    pub fn experts(&self) -> Vec<ExpertInfo> {
        self.experts.read().unwrap_or_else(|p| p.into_inner()).values().cloned().collect()
    }

    pub fn is_registered(&self, expert_id: &str) -> bool {
        self.experts.read().unwrap_or_else(|p| p.into_inner()).contains_key(expert_id)
    }

    pub fn add_expert(&self, info: ExpertInfo) -> Result<()> {
        if info.expert_id.trim().is_empty() {
            return Err(Error::Validation("expert_id must not be empty".into()));
        }
        let mut w = self.writer()?;
        if self.is_registered(&info.expert_id) {
            return Err(Error::Validation(format!("expert `{}` is already registered", info.expert_id)));
        }
        append_line(&mut w.experts, &self.dir.join(EXPERTS_FILE), &info)?;
        let mut guard = self.experts.write().unwrap_or_else(|p| p.into_inner());
        let mut next = (**guard).clone();
        next.insert(info.expert_id.clone(), info);
        *guard = Arc::new(next);
        Ok(())
    }

    /// Validates and durably appends a label. With an idempotency key that
    /// was seen before, the earlier label is returned instead.
    pub fn append(&self, draft: LabelDraft, idempotency_key: Option<&str>, now: Timestamp) -> Result<Appended> {
        let mut w = self.writer()?;
        if let Some(id) = idempotency_key.and_then(|k| w.key_index.get(k)) {
            let label = self.get(id).expect("idempotency index points at a stored label");
            return Ok(Appended { label, created: false });
        }
        draft.validate().map_err(Error::InvalidLabel)?;
        if !self.is_registered(&draft.expert_id) {
            return Err(Error::UnknownExpert(draft.expert_id));
        }
        if let Some(target) = &draft.supersedes {
            if self.get(target).is_none() {
                return Err(Error::InvalidLabel(vec![FieldError { field: "supersedes", message: format!("unknown label `{target}`") }]));
            }
        }

        let label = draft.into_label(format_label_id(w.next_id), now);
        append_line(&mut w.labels, &self.dir.join(LABELS_FILE), &label)?;
        w.next_id += 1;
        if let Some(key) = idempotency_key {
            let record = KeyRecord { key: key.to_string(), label_id: label.label_id.clone() };
            append_line(&mut w.keys, &self.dir.join(IDEMPOTENCY_FILE), &record)?;
            w.key_index.insert(record.key, record.label_id);
        }
        let mut guard = self.labels.write().unwrap_or_else(|p| p.into_inner());
        let mut next = (**guard).clone();
        next.push(label.clone());
        *guard = Arc::new(next);
        Ok(Appended { label, created: true })
    }
}

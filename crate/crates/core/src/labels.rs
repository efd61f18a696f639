//! Expert drift labels, filters and the multi-expert consensus view.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::evaluation::{LabelledPeriod, PeriodSource};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftType {
    Sudden,
    Gradual,
    Recurring,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    SensorMiscalibration,
    MaintenanceAction,
    PowerLimitation,
    Wear,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Low,
    Medium,
    High,
}

/// A stored, immutable expert label. Corrections are new labels that name
/// the label they replace in `supersedes`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftLabel {
    pub label_id: String,
    pub turbine_id: String,
    pub model_id: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub drift_type: DriftType,
    pub cause: Cause,
    pub severity: u8,
    pub confidence: Confidence,
    pub expert_id: String,
    pub created_at: Timestamp,
    pub note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersedes: Option<String>,
}

/// A label as submitted, before the store assigns its id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelDraft {
    pub turbine_id: String,
    pub model_id: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub drift_type: DriftType,
    pub cause: Cause,
    pub severity: u8,
    pub confidence: Confidence,
    pub expert_id: String,
    #[serde(default)]
    pub created_at: Option<Timestamp>,
    #[serde(default)]
    pub note: String,
    #[serde(default)]
    pub supersedes: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl LabelDraft {
    /// Checks the label invariants, reporting every failing field.
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errors = Vec::new();
        let mut fail = |field, message: &str| errors.push(FieldError { field, message: message.into() });
        for (field, value) in [("turbine_id", &self.turbine_id), ("model_id", &self.model_id), ("expert_id", &self.expert_id)] {
            if value.trim().is_empty() {
                fail(field, "must not be empty");
            }
        }
        if self.start >= self.end {
            fail("end", "must be after start");
        }
        if !(1..=5).contains(&self.severity) {
            fail("severity", "must be between 1 and 5");
        }
        if matches!(&self.supersedes, Some(s) if s.trim().is_empty()) {
            fail("supersedes", "must not be empty when given");
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    pub fn into_label(self, label_id: String, now: Timestamp) -> DriftLabel {
        DriftLabel {
            label_id,
            turbine_id: self.turbine_id,
            model_id: self.model_id,
            start: self.start,
            end: self.end,
            drift_type: self.drift_type,
            cause: self.cause,
            severity: self.severity,
            confidence: self.confidence,
            expert_id: self.expert_id,
            created_at: self.created_at.unwrap_or(now),
            note: self.note,
            supersedes: self.supersedes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertInfo {
    pub expert_id: String,
    pub display_name: String,
}

/// Conjunctive label filter. The time range keeps labels overlapping `[from, to)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelFilter {
    pub turbine_id: Option<String>,
    pub model_id: Option<String>,
    pub expert_id: Option<String>,
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    pub cause: Option<Cause>,
}

impl LabelFilter {
    pub fn matches(&self, l: &DriftLabel) -> bool {
        let eq = |want: &Option<String>, have: &str| want.as_deref().is_none_or(|w| w == have);
        eq(&self.turbine_id, &l.turbine_id)
            && eq(&self.model_id, &l.model_id)
            && eq(&self.expert_id, &l.expert_id)
            && self.from.is_none_or(|f| l.end > f)
            && self.to.is_none_or(|t| l.start < t)
            && self.cause.is_none_or(|c| c == l.cause)
    }
}

/// Matching labels ordered by start, then by id.
pub fn filter_labels<'a>(labels: impl IntoIterator<Item = &'a DriftLabel>, filter: &LabelFilter) -> Vec<DriftLabel> {
    let mut out: Vec<DriftLabel> = labels.into_iter().filter(|l| filter.matches(l)).cloned().collect();
    out.sort_by(|a, b| (a.start, a.end, &a.label_id).cmp(&(b.start, b.end, &b.label_id)));
    out
}

/// Labels not replaced by a later correction.
pub fn effective_labels(labels: &[DriftLabel]) -> Vec<&DriftLabel> {
    let superseded: BTreeSet<&str> = labels.iter().filter_map(|l| l.supersedes.as_deref()).collect();
    labels.iter().filter(|l| !superseded.contains(l.label_id.as_str())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusPeriod {
    pub start: Timestamp,
    pub end: Timestamp,
    /// Number of distinct experts behind the period.
    pub support: usize,
    pub experts: Vec<String>,
    pub majority_cause: Cause,
    /// Set when two or more causes share the top vote count.
    pub cause_tie: bool,
    pub severity: u8,
    pub cause_votes: BTreeMap<Cause, usize>,
    pub label_ids: Vec<String>,
}

impl ConsensusPeriod {
    fn from_label(l: &DriftLabel) -> Self {
        let mut cause_votes = BTreeMap::new();
        cause_votes.insert(l.cause, 1);
        Self {
            start: l.start,
            end: l.end,
            support: 1,
            experts: alloc::vec![l.expert_id.clone()],
            majority_cause: l.cause,
            cause_tie: false,
            severity: l.severity,
            cause_votes,
            label_ids: alloc::vec![l.label_id.clone()],
        }
    }

    fn absorb(&mut self, other: ConsensusPeriod) {
        self.start = self.start.min(other.start);
        self.end = self.end.max(other.end);
        self.experts.extend(other.experts);
        self.experts.sort();
        self.experts.dedup();
        self.support = self.experts.len();
        self.severity = self.severity.max(other.severity);
        for (cause, n) in other.cause_votes {
            *self.cause_votes.entry(cause).or_insert(0) += n;
        }
        self.label_ids.extend(other.label_ids);
        self.label_ids.sort();
        let top = self.cause_votes.values().copied().max().unwrap_or(0);
        let mut leaders = self.cause_votes.iter().filter(|(_, &n)| n == top).map(|(&c, _)| c);
        self.majority_cause = leaders.next().expect("at least one vote");
        self.cause_tie = leaders.next().is_some();
    }

    pub fn to_labelled_period(&self) -> LabelledPeriod {
        LabelledPeriod::new(self.start, self.end, PeriodSource::Consensus)
    }
}

/// Intersection over union of two intervals, zero when they do not overlap.
pub fn jaccard(a: (Timestamp, Timestamp), b: (Timestamp, Timestamp)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0);
    if inter == 0 {
        return 0.0;
    }
    let union = a.1.max(b.1) - a.0.min(b.0);
    inter as f64 / union as f64
}

/// Repeatedly merges the most-overlapping pair of periods backed by disjoint
/// expert sets whose Jaccard overlap reaches `threshold`, until no pair
/// qualifies. Output is ordered by start.
pub fn merge_periods(mut periods: Vec<ConsensusPeriod>, threshold: f64) -> Vec<ConsensusPeriod> {
    let sort = |ps: &mut Vec<ConsensusPeriod>| ps.sort_by(|a, b| (a.start, a.end, &a.label_ids).cmp(&(b.start, b.end, &b.label_ids)));
    sort(&mut periods);
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..periods.len() {
            for j in i + 1..periods.len() {
                let (a, b) = (&periods[i], &periods[j]);
                if b.start >= a.end {
                    break;
                }
                let overlap = jaccard((a.start, a.end), (b.start, b.end));
                if overlap == 0.0 || overlap < threshold {
                    continue;
                }
                if a.experts.iter().any(|e| b.experts.binary_search(e).is_ok()) {
                    continue;
                }
                if best.is_none_or(|(o, _, _)| overlap > o) {
                    best = Some((overlap, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        let absorbed = periods.remove(j);
        periods[i].absorb(absorbed);
        sort(&mut periods);
    }
    periods
}

/// Consensus periods for the labels of one turbine and model. Superseded
/// labels are ignored.
pub fn consensus(labels: &[DriftLabel], overlap_threshold: f64) -> Vec<ConsensusPeriod> {
    let seeds = effective_labels(labels).into_iter().map(ConsensusPeriod::from_label).collect();
    merge_periods(seeds, overlap_threshold)
}

//! ADWIN, Bifet and Gavaldà (2007), "Learning from time-changing data with
//! adaptive windowing".
//!
//! The window is held as an exponential histogram: row `i` keeps at most
//! `max_buckets` buckets summarising `2^i` observations each. Every `clock`
//! samples each bucket boundary is tried as a cut point and drift is declared
//! when the two sub-window means differ by more than the variance-aware
//! threshold.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{adwin_epsilon, at_least, ln, probability, Moments, Status, StepOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdwinParams {
    /// Confidence parameter; smaller values make cuts rarer.
    pub delta: f64,
    /// Samples between cut checks.
    pub clock: u64,
    /// Buckets per histogram row before two are merged.
    pub max_buckets: usize,
    /// Smallest sub-window on either side of a cut.
    pub min_window: u64,
}

impl Default for AdwinParams {
    fn default() -> Self {
        Self { delta: 0.002, clock: 32, max_buckets: 5, min_window: 5 }
    }
}

impl AdwinParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        probability(self.delta, "delta")?;
        at_least(self.clock as usize, 1, "clock")?;
        at_least(self.max_buckets, 2, "max_buckets")?;
        at_least(self.min_window as usize, 1, "min_window")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adwin {
    params: AdwinParams,
    rows: Vec<VecDeque<Moments>>,
    total: Moments,
    ticks: u64,
    last_gap: f64,
}

impl Adwin {
    pub fn new(params: AdwinParams) -> Self {
        Self { params, rows: Vec::new(), total: Moments::default(), ticks: 0, last_gap: 0.0 }
    }

    pub fn min_samples(&self) -> u64 {
        let need = 2 * self.params.min_window;
        need.div_ceil(self.params.clock) * self.params.clock
    }

    /// Current window length.
    pub fn width(&self) -> u64 {
        self.total.n as u64
    }

    pub fn update(&mut self, x: f64) -> StepOutcome {
        self.insert(x);
        self.ticks += 1;
        if self.ticks.is_multiple_of(self.params.clock) && self.width() >= 2 * self.params.min_window && self.detect_cut() {
            return StepOutcome { status: Status::Drift, statistic: self.last_gap };
        }
        StepOutcome::stable(self.last_gap)
    }

    fn insert(&mut self, x: f64) {
        if self.rows.is_empty() {
            self.rows.push(VecDeque::new());
        }
        self.rows[0].push_front(Moments::one(x));
        self.total.push(x);
        let mut i = 0;
        while i < self.rows.len() && self.rows[i].len() > self.params.max_buckets {
            let older = self.rows[i].pop_back().expect("row over capacity");
            let newer = self.rows[i].pop_back().expect("row over capacity");
            if self.rows.len() == i + 1 {
                self.rows.push(VecDeque::new());
            }
            self.rows[i + 1].push_front(older.merge(&newer));
            i += 1;
        }
    }

    fn detect_cut(&mut self) -> bool {
        let total = self.total;
        let w = total.n;
        let dd = ln(2.0 * ln(w) / self.params.delta);
        let variance = total.variance();
        let min_w = self.params.min_window as f64;
        let mut n0 = 0.0;
        let mut s0 = 0.0;
        let mut gap_max = 0.0f64;
        let mut cut = false;
        'outer: for row in self.rows.iter().rev() {
            for b in row.iter().rev() {
                n0 += b.n;
                s0 += b.sum;
                let n1 = w - n0;
                if n1 < min_w {
                    break 'outer;
                }
                if n0 < min_w {
                    continue;
                }
                let gap = libm::fabs(s0 / n0 - (total.sum - s0) / n1);
                gap_max = gap_max.max(gap);
                let m = 1.0 / (n0 - min_w + 1.0) + 1.0 / (n1 - min_w + 1.0);
                if gap > adwin_epsilon(m, variance, dd) {
                    cut = true;
                    self.last_gap = gap;
                    break 'outer;
                }
            }
        }
        if !cut {
            self.last_gap = gap_max;
        }
        cut
    }
}

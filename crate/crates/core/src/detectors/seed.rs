//! SEED, Huang, Koh, Dobbie and Pears (2014), "Detecting volatility shift
//! in data streams".
//!
//! Observations are grouped into fixed-size blocks. When a block completes,
//! every block boundary is tested as a cut point with an ADWIN-style bound.
//! Periodically, neighbouring blocks whose means differ by less than
//! `epsilon_prime` are merged to keep the number of boundaries small.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{adwin_epsilon, at_least, ln, positive, probability, Moments, Status, StepOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedParams {
    pub delta: f64,
    pub block_size: usize,
    /// Largest mean difference at which two neighbouring blocks are merged.
    pub epsilon_prime: f64,
    /// Completed blocks between compression passes.
    pub compress_interval: usize,
}

impl Default for SeedParams {
    fn default() -> Self {
        Self { delta: 0.05, block_size: 32, epsilon_prime: 0.01, compress_interval: 75 }
    }
}

impl SeedParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        probability(self.delta, "delta")?;
        at_least(self.block_size, 2, "block_size")?;
        positive(self.epsilon_prime, "epsilon_prime")?;
        at_least(self.compress_interval, 1, "compress_interval")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    params: SeedParams,
    blocks: Vec<Moments>,
    current: Moments,
    total: Moments,
    completed: usize,
    last_gap: f64,
}

impl Seed {
    pub fn new(params: SeedParams) -> Self {
        Self { params, blocks: Vec::new(), current: Moments::default(), total: Moments::default(), completed: 0, last_gap: 0.0 }
    }

    pub fn min_samples(&self) -> u64 {
        2 * self.params.block_size as u64
    }

    /// Blocks currently held.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn update(&mut self, x: f64) -> StepOutcome {
        self.total.push(x);
        self.current.push(x);
        if (self.current.n as usize) < self.params.block_size {
            return StepOutcome::stable(self.last_gap);
        }
        self.blocks.push(core::mem::take(&mut self.current));
        self.completed += 1;
        if self.blocks.len() >= 2 && self.detect() {
            return StepOutcome { status: Status::Drift, statistic: self.last_gap };
        }
        if self.completed.is_multiple_of(self.params.compress_interval) {
            self.compress();
        }
        StepOutcome::stable(self.last_gap)
    }

    fn detect(&mut self) -> bool {
        let n = self.total.n;
        let dd = ln(2.0 * ln(n) / self.params.delta);
        let variance = self.total.variance();
        let mut n0 = 0.0;
        let mut s0 = 0.0;
        let mut gap_max = 0.0f64;
        for b in &self.blocks[..self.blocks.len() - 1] {
            n0 += b.n;
            s0 += b.sum;
            let n1 = n - n0;
            let gap = libm::fabs(s0 / n0 - (self.total.sum - s0) / n1);
            gap_max = gap_max.max(gap);
            if gap > adwin_epsilon(1.0 / n0 + 1.0 / n1, variance, dd) {
                self.last_gap = gap;
                return true;
            }
        }
        self.last_gap = gap_max;
        false
    }

    fn compress(&mut self) {
        let mut merged: Vec<Moments> = Vec::with_capacity(self.blocks.len());
        for b in self.blocks.drain(..) {
            match merged.last_mut() {
                Some(prev) if libm::fabs(prev.mean() - b.mean()) < self.params.epsilon_prime => *prev = prev.merge(&b),
                _ => merged.push(b),
            }
        }
        self.blocks = merged;
    }
}

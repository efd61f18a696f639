//! The SeqDrift detectors of Sakthithasan, Pears and Koh: SeqDrift1 (2013),
//! "One pass concept change detection for data streams", and SeqDrift2
//! (2013), "An effective concept change detection method based on
//! sequential hypothesis testing".
//!
//! New observations fill a right-hand block. When it is full its mean is
//! compared with the left-hand reference using an empirical Bernstein bound;
//! without drift the block is then absorbed into the reference. SeqDrift1
//! keeps exact moments of everything since the last reset. SeqDrift2 keeps a
//! fixed-size reservoir sample and tightens the confidence of the `k`-th test
//! to `δ / (k (k + 1))`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{at_least, bernstein_epsilon, probability, Moments, Status, StepOutcome};

fn test_blocks(left: &Moments, right: &Moments, delta: f64) -> (bool, f64) {
    let gap = libm::fabs(left.mean() - right.mean());
    let m = 1.0 / (1.0 / left.n + 1.0 / right.n);
    let variance = left.merge(right).variance();
    (gap > bernstein_epsilon(m, variance, delta), gap)
}

fn moments_of(xs: &[f64]) -> Moments {
    let mut m = Moments::default();
    for &v in xs {
        m.push(v);
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeqDrift1Params {
    pub delta: f64,
    pub block_size: usize,
}

impl Default for SeqDrift1Params {
    fn default() -> Self {
        Self { delta: 0.01, block_size: 200 }
    }
}

impl SeqDrift1Params {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        probability(self.delta, "delta")?;
        at_least(self.block_size, 2, "block_size")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeqDrift1 {
    params: SeqDrift1Params,
    left: Moments,
    right: Moments,
    last_gap: f64,
}

impl SeqDrift1 {
    pub fn new(params: SeqDrift1Params) -> Self {
        Self { params, left: Moments::default(), right: Moments::default(), last_gap: 0.0 }
    }

    pub fn min_samples(&self) -> u64 {
        2 * self.params.block_size as u64
    }

    pub fn update(&mut self, x: f64) -> StepOutcome {
        self.right.push(x);
        if (self.right.n as usize) < self.params.block_size {
            return StepOutcome::stable(self.last_gap);
        }
        let right = core::mem::take(&mut self.right);
        if self.left.n == 0.0 {
            self.left = right;
            return StepOutcome::stable(self.last_gap);
        }
        let (drift, gap) = test_blocks(&self.left, &right, self.params.delta);
        self.last_gap = gap;
        if drift {
            return StepOutcome { status: Status::Drift, statistic: gap };
        }
        self.left = self.left.merge(&right);
        StepOutcome::stable(gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeqDrift2Params {
    pub delta: f64,
    pub block_size: usize,
    pub reservoir_size: usize,
    /// Seed for the reservoir sampler.
    pub seed: u64,
}

impl Default for SeqDrift2Params {
    fn default() -> Self {
        Self { delta: 0.01, block_size: 200, reservoir_size: 200, seed: 0 }
    }
}

impl SeqDrift2Params {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        probability(self.delta, "delta")?;
        at_least(self.block_size, 2, "block_size")?;
        at_least(self.reservoir_size, 2, "reservoir_size")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeqDrift2 {
    params: SeqDrift2Params,
    reservoir: Vec<f64>,
    absorbed: u64,
    right: Vec<f64>,
    tests: u64,
    rng: ChaCha8Rng,
    last_gap: f64,
}

impl SeqDrift2 {
    pub fn new(params: SeqDrift2Params) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(params.seed);
        Self {
            reservoir: Vec::with_capacity(params.reservoir_size),
            right: Vec::with_capacity(params.block_size),
            params,
            absorbed: 0,
            tests: 0,
            rng,
            last_gap: 0.0,
        }
    }

    pub fn min_samples(&self) -> u64 {
        2 * self.params.block_size as u64
    }

    pub fn update(&mut self, x: f64) -> StepOutcome {
        self.right.push(x);
        if self.right.len() < self.params.block_size {
            return StepOutcome::stable(self.last_gap);
        }
        if !self.reservoir.is_empty() {
            self.tests += 1;
            let k = self.tests as f64;
            let delta = self.params.delta / (k * (k + 1.0));
            let (drift, gap) = test_blocks(&moments_of(&self.reservoir), &moments_of(&self.right), delta);
            self.last_gap = gap;
            if drift {
                return StepOutcome { status: Status::Drift, statistic: gap };
            }
        }
        let block = core::mem::take(&mut self.right);
        for v in block {
            self.absorb(v);
        }
        StepOutcome::stable(self.last_gap)
    }

    fn absorb(&mut self, v: f64) {
        self.absorbed += 1;
        if self.reservoir.len() < self.params.reservoir_size {
            self.reservoir.push(v);
        } else {
            let j = self.rng.random_range(0..self.absorbed) as usize;
            if j < self.params.reservoir_size {
                self.reservoir[j] = v;
            }
        }
    }
}

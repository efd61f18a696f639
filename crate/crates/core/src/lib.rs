//! Core algorithms for labelling and detecting concept drift in the
//! residuals of wind-turbine normal-behaviour models.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. File formats,
//! the label store, the HTTP service and the CLI live in the `driftlab` crate.
#![no_std]
// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod detectors;
pub mod downsample;
pub mod drift_metrics;
pub mod elm;
pub mod evaluation;
pub mod ensemble;
pub mod labels;
pub mod linalg;
pub mod scada;
pub mod stats;
pub mod time;

pub use time::{Timestamp, GRID_SECONDS};

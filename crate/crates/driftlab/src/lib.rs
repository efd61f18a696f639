//! Storage, HTTP service and command line for the drift-labelling workbench.
//! The numerical work lives in `driftlab_core`.

pub mod cli;
pub mod error;
pub mod io;
pub mod label_store;
pub mod service;
pub mod workflow;
pub mod workspace;

pub use error::{Error, Result};

//! Run store, JSON API and report export for reprtune sweeps.
//!
//! [`run_pipeline`] computes every representation of a dataset and writes
//! an immutable store; [`RunStore::load`] reads it back and [`api::router`]
//! serves it read-only.

pub mod api;
pub mod error;
pub mod fixtures;
pub mod pipeline;
pub mod query;
pub mod report;
pub mod store;
pub mod tensor;
pub mod views;

pub use error::{Result, StoreError};
pub use pipeline::run_pipeline;
pub use query::query_predictions;
pub use store::{PipelineOptions, RunStore};

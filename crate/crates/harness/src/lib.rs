//! Storage-efficiency experiments over [`chunktree`] stores.
//!
//! Each experiment inserts seeded random contents (or a directory corpus) into
//! fresh in-memory stores and records backend byte counts before and after,
//! one [`MeasurementRecord`] per trial and step. Records serialize to CSV with
//! the columns
//!
//! `experiment, scheme, height_policy, S, n, delta, trial, bytes_before,
//! bytes_after, delta_bytes, model_bound, step`.
//!
//! `model_bound` is empty where no closed-form estimate applies; `step` is the
//! version (or snapshot) index for `versions` and `corpus`, 0 elsewhere.

pub mod content;
pub mod corpus;
pub mod experiments;
pub mod variant;

pub use experiments::{run, Experiment, ExperimentConfig, ExperimentError, MeasurementRecord};
pub use variant::Variant;

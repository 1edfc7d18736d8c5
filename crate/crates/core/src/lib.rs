//! Reliability-aware ensemble scoring of social media documents.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`enricher`] turns a document observed at some time into one
//!    [`Information`](enricher::Information) per feature bundle, each scored
//!    for reliability from a binned lookup table.
//! 2. [`models`] hold independently trained base models that each consume
//!    some of those informations.
//! 3. [`aggregator`] combines base-model probabilities, by default weighting
//!    each model by the reliability of what it consumed for this document.
//! 4. [`explainer`] reports which model, network, information and factors
//!    drove the result.
//!
//! [`pipeline::Ensemble`] wires the stages together and [`eval`] runs
//! cross-validated experiments over [`dataset`] corpora.

pub mod aggregator;
pub mod dataset;
pub mod enricher;
pub mod error;
pub mod eval;
pub mod explainer;
pub mod models;
pub mod osmn;
pub mod pipeline;

pub use error::{Error, Result};

//! Real-time tweet filtering for standing interest profiles.
//!
//! Tweets are scored against each profile with a Dirichlet-smoothed query
//! likelihood, gated by a relevance threshold, and then passed through an
//! online novelty filter before being pushed. [`evalkit`] scores the
//! resulting runs against TREC-style ground truth.

pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod novelty;
pub mod pipeline;
pub mod refmodel;
pub mod scoring;

pub use error::{Error, Result};

//! Relevance scoring, smoothed document models, and cosine similarity.

mod dirichlet;

use crate::corpus::TermVector;
use crate::error::{Error, Result};
use crate::refmodel::ReferenceModel;

pub use dirichlet::{dirichlet_doc_prob, dirichlet_score, QueryScorer};

/// μ used by the smoothed method.
pub const DEFAULT_MU: f64 = 2500.0;
/// μ of the "almost unsmoothed" baseline; same code path, tiny prior.
pub const BASELINE_MU: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    pub mu: f64,
    /// Jelinek–Mercer weight on the reference model.
    pub lambda: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            mu: DEFAULT_MU,
            lambda: 0.5,
        }
    }
}

impl ScoringConfig {
    pub fn baseline() -> Self {
        ScoringConfig {
            mu: BASELINE_MU,
            ..Self::default()
        }
    }
}

/// Jelinek–Mercer document model `(1-λ)·c(w,d)/|d| + λ·p(w|C)`.
pub fn jm_doc_prob(
    doc: &TermVector,
    model: &ReferenceModel,
    lambda: f64,
    term: &str,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param("lambda", lambda, "must lie in [0, 1]"));
    }
    if lambda == 1.0 {
        return Ok(model.prob(term));
    }
    if doc.length() == 0 {
        return Err(Error::param(
            "lambda",
            lambda,
            "empty document requires lambda = 1",
        ));
    }
    let ml = f64::from(doc.count(term)) / doc.length() as f64;
    if lambda == 0.0 {
        return Ok(ml);
    }
    Ok((1.0 - lambda) * ml + lambda * model.prob(term))
}

/// Cosine of the raw count vectors, in `[0, 1]`; 0 when either is empty.
///
/// The inner product and norms are exact integers, so the result is
/// symmetric and `cosine(a, a) == 1` exactly.
pub fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    cosine_from_dot(a.dot(b), a.norm_sq(), b.norm_sq())
}

/// Cosine from an exact inner product and squared norms.
pub(crate) fn cosine_from_dot(dot: u64, norm_sq_a: u64, norm_sq_b: u64) -> f64 {
    if dot == 0 {
        return 0.0;
    }
    let denom = (norm_sq_a as f64 * norm_sq_b as f64).sqrt();
    (dot as f64 / denom).min(1.0)
}

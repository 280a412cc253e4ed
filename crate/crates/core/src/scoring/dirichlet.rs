use crate::corpus::TermVector;
use crate::error::{Error, Result};
use crate::refmodel::ReferenceModel;

/// A query bound to a reference model and μ, ready to score documents.
///
/// Scoring a document costs one lookup per distinct query term; the
/// background probabilities `μ·p(w|C)` are resolved once here. The score is
///
/// ```text
/// score(d, q) = Σ_{w ∈ d ∩ q} c(w,q)·ln(1 + c(w,d) / (μ·p(w|C))) + |q|·ln(μ / (|d| + μ))
/// ```
///
/// in natural-log units.
#[derive(Debug, Clone)]
pub struct QueryScorer {
    terms: Vec<QueryTerm>,
    query_len: f64,
    mu: f64,
}

#[derive(Debug, Clone)]
struct QueryTerm {
    term: String,
    count: f64,
    mu_p: f64,
}

impl QueryScorer {
    pub fn new(query: &TermVector, model: &ReferenceModel, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        if query.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let terms = query
            .iter()
            .map(|(term, count)| QueryTerm {
                term: term.to_owned(),
                count: f64::from(count),
                mu_p: mu * model.prob(term),
            })
            .collect();
        Ok(QueryScorer {
            terms,
            query_len: query.length() as f64,
            mu,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn score(&self, doc: &TermVector) -> f64 {
        let mut overlap = 0.0;
        for qt in &self.terms {
            let c = doc.count(&qt.term);
            if c > 0 {
                overlap += qt.count * (f64::from(c) / qt.mu_p).ln_1p();
            }
        }
        overlap + self.length_penalty(doc.length())
    }

    /// `|q|·ln(μ / (|d| + μ))`, the score of a document sharing no query term.
    pub fn length_penalty(&self, doc_len: u64) -> f64 {
        -self.query_len * (doc_len as f64 / self.mu).ln_1p()
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::param("mu", mu, "must be positive and finite"));
    }
    Ok(())
}

/// Dirichlet-smoothed query-likelihood relevance score of `doc` for `query`.
///
/// For repeated scoring against the same query build a [`QueryScorer`]
/// once instead.
pub fn dirichlet_score(
    doc: &TermVector,
    query: &TermVector,
    model: &ReferenceModel,
    mu: f64,
) -> Result<f64> {
    Ok(QueryScorer::new(query, model, mu)?.score(doc))
}

/// Dirichlet-prior document model
/// `p(w|d) = (c(w,d) + μ·p(w|C)) / (|d| + μ)`.
///
/// With μ = 0 this is the maximum-likelihood estimate; for an empty document
/// it is exactly `p(w|C)`.
pub fn dirichlet_doc_prob(
    doc: &TermVector,
    model: &ReferenceModel,
    mu: f64,
    term: &str,
) -> Result<f64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::param("mu", mu, "must be non-negative and finite"));
    }
    let len = doc.length() as f64;
    if len == 0.0 {
        if mu == 0.0 {
            return Err(Error::param("mu", mu, "|d| + mu must be positive"));
        }
        return Ok(model.prob(term));
    }
    let c = f64::from(doc.count(term));
    Ok((c + mu * model.prob(term)) / (len + mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// A model in which `a` has probability exactly `p_a` (given as a count
    /// out of 1000).
    fn model_with_a(a_per_mille: u64) -> ReferenceModel {
        ReferenceModel::from_counts([("a", a_per_mille), ("zz", 1000 - a_per_mille)]).unwrap()
    }

    #[test]
    fn hand_evaluated_score() {
        let q = TermVector::from_terms(["a"]);
        let d = TermVector::from_terms(["a", "a", "b"]);
        let model = model_with_a(100);
        let s = dirichlet_score(&d, &q, &model, 2.0).unwrap();
        // ln(1 + 2 / (2 * 0.1)) + 1 * ln(2 / 5)
        assert_relative_eq!(s, 11f64.ln() + 0.4f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(s, 1.4816, epsilon = 5e-5);
    }

    #[test]
    fn no_overlap_is_length_penalty_only() {
        let q = TermVector::from_counts([("x", 3), ("y", 2)]).unwrap();
        let d = TermVector::from_counts([("a", 4), ("b", 6)]).unwrap();
        let model = model_with_a(500);
        let s = dirichlet_score(&d, &q, &model, 2500.0).unwrap();
        assert_relative_eq!(s, 5.0 * (2500.0f64 / 2510.0).ln(), max_relative = 1e-12);
        assert_relative_eq!(s, -0.01996, epsilon = 5e-6);
    }

    #[test]
    fn near_zero_mu_baseline() {
        let q = TermVector::from_terms(["a"]);
        let d = TermVector::from_terms(["a"]);
        let s = dirichlet_score(&d, &q, &model_with_a(500), 1e-9).unwrap();
        assert_relative_eq!(s, 2f64.ln(), epsilon = 1e-4);
    }

    #[test]
    fn empty_document_scores_zero() {
        let q = TermVector::from_terms(["a", "b"]);
        let d = TermVector::default();
        assert_eq!(
            dirichlet_score(&d, &q, &model_with_a(500), 2500.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = model_with_a(500);
        let d = TermVector::from_terms(["a"]);
        assert!(matches!(
            dirichlet_score(&d, &TermVector::default(), &m, 1.0),
            Err(Error::EmptyQuery)
        ));
        for mu in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(dirichlet_score(&d, &d, &m, mu).is_err());
        }
    }

    #[test]
    fn doc_prob_edges() {
        let m = model_with_a(500);
        let d = TermVector::from_terms(["a", "a", "b"]);
        assert_eq!(dirichlet_doc_prob(&d, &m, 0.0, "a").unwrap(), 2.0 / 3.0);

        let m3 = ReferenceModel::from_counts([("a", 1), ("b", 2)]).unwrap();
        for mu in [0.5, 3.0, 2500.0] {
            assert_eq!(
                dirichlet_doc_prob(&TermVector::default(), &m3, mu, "a").unwrap(),
                m3.prob("a")
            );
        }
        assert!(dirichlet_doc_prob(&TermVector::default(), &m, 0.0, "a").is_err());
        assert!(dirichlet_doc_prob(&d, &m, -1.0, "a").is_err());

        let d1 = TermVector::from_terms(["a"]);
        assert_eq!(dirichlet_doc_prob(&d1, &m, 1.0, "a").unwrap(), 0.75);
    }
}

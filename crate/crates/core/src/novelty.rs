//! Online redundancy removal.
//!
//! Every admitted tweet starts a cluster and is that cluster's only stored
//! member. A new tweet is novel when its best cosine against all stored
//! representatives is strictly below θ; otherwise it is redundant and is
//! dropped without being stored.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{TermVector, TweetId};
use crate::error::{Error, Result};
use crate::scoring::cosine_from_dot;

pub const DEFAULT_THETA: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Novelty {
    Novel,
    /// Carries the id of the most similar representative (earliest on ties).
    Redundant {
        matched: TweetId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representative {
    pub id: TweetId,
    pub vector: TermVector,
}

/// Stored representatives plus an inverted index over their terms, so a
/// check only touches representatives that share a term with the tweet.
#[derive(Debug, Clone, Default)]
pub struct ClusterState {
    representatives: Vec<Representative>,
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl PartialEq for ClusterState {
    fn eq(&self, other: &Self) -> bool {
        self.representatives == other.representatives
    }
}

impl Eq for ClusterState {}

pub fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param("theta", theta, "must lie in [0, 1]"));
    }
    Ok(())
}

impl ClusterState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_representatives(representatives: Vec<Representative>) -> Self {
        let mut state = ClusterState::new();
        for r in representatives {
            state.push(r);
        }
        state
    }

    pub fn representatives(&self) -> &[Representative] {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Best cosine against the stored representatives and its first index;
    /// `None` when nothing is stored.
    pub fn best_match(&self, doc: &TermVector) -> Option<(usize, f64)> {
        if self.representatives.is_empty() {
            return None;
        }
        let mut dots = vec![0u64; self.representatives.len()];
        let mut touched = Vec::new();
        for (term, c) in doc.iter() {
            for &(rep, rc) in self.postings.get(term).map_or(&[][..], Vec::as_slice) {
                let slot = &mut dots[rep as usize];
                if *slot == 0 {
                    touched.push(rep as usize);
                }
                *slot += u64::from(c) * u64::from(rc);
            }
        }
        // Representatives sharing no term have cosine 0; the earliest wins a tie.
        let mut best = (0, 0.0);
        for i in touched {
            let c = cosine_from_dot(
                dots[i],
                doc.norm_sq(),
                self.representatives[i].vector.norm_sq(),
            );
            if c > best.1 || (c == best.1 && i < best.0) {
                best = (i, c);
            }
        }
        Some(best)
    }

    /// Decides whether `doc` is novel under `theta`, storing it if so.
    pub fn check(&mut self, id: &TweetId, doc: &TermVector, theta: f64) -> Result<Novelty> {
        check_theta(theta)?;
        match self.best_match(doc) {
            Some((i, c)) if c >= theta => Ok(Novelty::Redundant {
                matched: self.representatives[i].id.clone(),
            }),
            _ => {
                self.admit(id, doc);
                Ok(Novelty::Novel)
            }
        }
    }

    /// Stores `doc` as a new representative without testing it.
    pub(crate) fn admit(&mut self, id: &TweetId, doc: &TermVector) {
        self.push(Representative {
            id: id.clone(),
            vector: doc.clone(),
        });
    }

    fn push(&mut self, rep: Representative) {
        let idx =
            u32::try_from(self.representatives.len()).expect("fewer than 2^32 representatives");
        for (term, c) in rep.vector.iter() {
            self.postings
                .entry(term.to_owned())
                .or_default()
                .push((idx, c));
        }
        self.representatives.push(rep);
    }
}

/// Free-function form of [`ClusterState::check`].
pub fn novelty_check(
    state: &mut ClusterState,
    id: &TweetId,
    doc: &TermVector,
    theta: f64,
) -> Result<Novelty> {
    state.check(id, doc, theta)
}

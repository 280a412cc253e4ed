use std::cmp::Ordering;
use std::collections::btree_map::{self, BTreeMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse bag of terms with raw counts.
///
/// Terms iterate in byte order. `length` is the total number of tokens
/// and `norm_sq` the squared Euclidean norm of the count vector; both are
/// fixed at construction.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, u32>", into = "BTreeMap<String, u32>")]
pub struct TermVector {
    counts: BTreeMap<String, u32>,
    length: u64,
    norm_sq: u64,
}

impl TermVector {
    pub fn builder() -> TermVectorBuilder {
        TermVectorBuilder::default()
    }

    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut b = Self::builder();
        for t in terms {
            b.push(t.as_ref());
        }
        b.build()
    }

    /// Builds a vector from explicit counts. Zero counts and empty terms are
    /// rejected.
    pub fn from_counts<I, S>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (term, count) in counts {
            let term = term.into();
            if term.is_empty() {
                return Err(Error::InvalidTermVector("empty term".into()));
            }
            if count == 0 {
                return Err(Error::InvalidTermVector(format!("zero count for {term:?}")));
            }
            if map.insert(term.clone(), count).is_some() {
                return Err(Error::InvalidTermVector(format!("duplicate term {term:?}")));
            }
        }
        Ok(Self::from_map(map))
    }

    fn from_map(counts: BTreeMap<String, u32>) -> Self {
        let (length, norm_sq) = counts.values().fold((0u64, 0u64), |(l, n), &c| {
            let c = u64::from(c);
            (l + c, n + c * c)
        });
        TermVector {
            counts,
            length,
            norm_sq,
        }
    }

    pub fn count(&self, term: &str) -> u32 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    /// Total number of tokens, |d|.
    pub fn length(&self) -> u64 {
        self.length
    }

    /// Number of distinct terms.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn norm_sq(&self) -> u64 {
        self.norm_sq
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }

    /// Exact integer inner product of the two count vectors.
    pub fn dot(&self, other: &TermVector) -> u64 {
        let mut a = self.counts.iter().peekable();
        let mut b = other.counts.iter().peekable();
        let mut sum = 0u64;
        while let (Some((ta, ca)), Some((tb, cb))) = (a.peek(), b.peek()) {
            match ta.cmp(tb) {
                Ordering::Less => {
                    a.next();
                }
                Ordering::Greater => {
                    b.next();
                }
                Ordering::Equal => {
                    sum += u64::from(**ca) * u64::from(**cb);
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }
}

impl TryFrom<BTreeMap<String, u32>> for TermVector {
    type Error = Error;

    fn try_from(map: BTreeMap<String, u32>) -> Result<Self> {
        Self::from_counts(map)
    }
}

impl From<TermVector> for BTreeMap<String, u32> {
    fn from(v: TermVector) -> Self {
        v.counts
    }
}

impl<'a> IntoIterator for &'a TermVector {
    type Item = (&'a String, &'a u32);
    type IntoIter = btree_map::Iter<'a, String, u32>;

    fn into_iter(self) -> Self::IntoIter {
        self.counts.iter()
    }
}

#[derive(Debug, Default)]
pub struct TermVectorBuilder {
    counts: BTreeMap<String, u32>,
}

impl TermVectorBuilder {
    /// Adds one occurrence of `term`; empty strings are ignored.
    pub fn push(&mut self, term: &str) {
        if term.is_empty() {
            return;
        }
        match self.counts.get_mut(term) {
            Some(c) => *c += 1,
            None => {
                self.counts.insert(term.to_owned(), 1);
            }
        }
    }

    pub fn build(self) -> TermVector {
        TermVector::from_map(self.counts)
    }
}

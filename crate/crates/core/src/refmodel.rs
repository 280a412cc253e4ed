//! Background unigram language model p(w|C).
//!
//! The model stores integer counts only. Probabilities are computed on
//! demand as `count / N`; terms never seen in the corpus get the floor
//! `1 / (N + V + 1)`, which is below every seen-term probability.
//!
//! On disk a model is a directory holding `meta.json`
//! (`{"total_tokens": N, "vocab_size": V}`) and `terms.tsv` (`term<TAB>count`
//! lines sorted by term bytes, LF terminated).

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Tokenizer, Tweet};
use crate::error::{Error, Result};

pub const META_FILE: &str = "meta.json";
pub const TERMS_FILE: &str = "terms.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceModel {
    term_counts: HashMap<String, u64>,
    total_tokens: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    total_tokens: u64,
    vocab_size: u64,
}

impl ReferenceModel {
    pub fn from_counts<I, S>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut term_counts = HashMap::new();
        let mut total: u64 = 0;
        for (term, count) in counts {
            let term = term.into();
            validate_term(&term).map_err(Error::InvalidTermVector)?;
            if count == 0 {
                return Err(Error::InvalidTermVector(format!("zero count for {term:?}")));
            }
            total = total
                .checked_add(count)
                .ok_or_else(|| Error::InvalidTermVector("token total overflows u64".into()))?;
            if term_counts.insert(term.clone(), count).is_some() {
                return Err(Error::InvalidTermVector(format!("duplicate term {term:?}")));
            }
        }
        if total == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(ReferenceModel {
            term_counts,
            total_tokens: total,
        })
    }

    /// Counts every token of every text. Terms seen fewer than `min_count`
    /// times are dropped and N is recomputed over the kept terms.
    pub fn build<'a, I>(texts: I, tokenizer: &Tokenizer, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for text in texts {
            for (term, c) in &tokenizer.vectorize(text) {
                match counts.get_mut(term.as_str()) {
                    Some(n) => *n += u64::from(*c),
                    None => {
                        counts.insert(term.clone(), u64::from(*c));
                    }
                }
            }
        }
        if min_count > 1 {
            counts.retain(|_, c| *c >= min_count);
        }
        Self::from_counts(counts)
    }

    /// Total token count N.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Number of distinct terms V.
    pub fn vocab_size(&self) -> u64 {
        self.term_counts.len() as u64
    }

    pub fn count(&self, term: &str) -> u64 {
        self.term_counts.get(term).copied().unwrap_or(0)
    }

    pub fn unseen_epsilon(&self) -> f64 {
        1.0 / (self.total_tokens as f64 + self.vocab_size() as f64 + 1.0)
    }

    /// p(w|C); strictly positive for every input.
    pub fn prob(&self, term: &str) -> f64 {
        match self.term_counts.get(term) {
            Some(&c) => c as f64 / self.total_tokens as f64,
            None => self.unseen_epsilon(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.term_counts.iter().map(|(t, &c)| (t.as_str(), c))
    }

    pub fn persist(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let meta = Meta {
            total_tokens: self.total_tokens,
            vocab_size: self.vocab_size(),
        };
        fs::write(dir.join(META_FILE), serde_json::to_string(&meta)? + "\n")?;

        let mut terms: Vec<(&str, u64)> = self.terms().collect();
        terms.sort_unstable_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
        let mut out = BufWriter::new(fs::File::create(dir.join(TERMS_FILE))?);
        for (term, count) in terms {
            writeln!(out, "{term}\t{count}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Loads a model written by [`ReferenceModel::persist`], rejecting any
    /// directory whose terms file disagrees with its metadata.
    pub fn restore(dir: &Path) -> Result<Self> {
        let corrupt = |reason: String| Error::CorruptModel {
            path: dir.to_path_buf(),
            reason,
        };
        let meta_text = fs::read_to_string(dir.join(META_FILE))
            .map_err(|e| corrupt(format!("{META_FILE}: {e}")))?;
        let meta: Meta =
            serde_json::from_str(&meta_text).map_err(|e| corrupt(format!("{META_FILE}: {e}")))?;
        let terms_text = fs::read_to_string(dir.join(TERMS_FILE))
            .map_err(|e| corrupt(format!("{TERMS_FILE}: {e}")))?;
        if !terms_text.is_empty() && !terms_text.ends_with('\n') {
            return Err(corrupt(format!("{TERMS_FILE}: truncated final line")));
        }

        let mut term_counts = HashMap::with_capacity(meta.vocab_size.min(1 << 24) as usize);
        let mut total: u64 = 0;
        let mut prev: Option<&str> = None;
        for (idx, line) in terms_text.lines().enumerate() {
            let line_no = idx + 1;
            let bad = |why: &str| corrupt(format!("{TERMS_FILE} line {line_no}: {why}"));
            let (term, count) = line.split_once('\t').ok_or_else(|| bad("missing tab"))?;
            validate_term(term).map_err(|e| bad(&e))?;
            let count: u64 = count.parse().map_err(|_| bad("count is not an integer"))?;
            if count == 0 {
                return Err(bad("zero count"));
            }
            if let Some(p) = prev {
                if p.as_bytes() >= term.as_bytes() {
                    return Err(bad("terms not strictly ascending"));
                }
            }
            prev = Some(term);
            total = total
                .checked_add(count)
                .ok_or_else(|| bad("total overflows"))?;
            term_counts.insert(term.to_owned(), count);
        }

        if term_counts.len() as u64 != meta.vocab_size {
            return Err(corrupt(format!(
                "vocab_size {} but {} terms present",
                meta.vocab_size,
                term_counts.len()
            )));
        }
        if total != meta.total_tokens {
            return Err(corrupt(format!(
                "total_tokens {} but counts sum to {total}",
                meta.total_tokens
            )));
        }
        if total == 0 {
            return Err(corrupt("model has no tokens".into()));
        }
        Ok(ReferenceModel {
            term_counts,
            total_tokens: total,
        })
    }
}

fn validate_term(term: &str) -> std::result::Result<(), String> {
    if term.is_empty() {
        return Err("empty term".into());
    }
    if term.contains(['\t', '\n', '\r']) {
        return Err(format!("term {term:?} contains a tab or line break"));
    }
    Ok(())
}

/// Builds the model from tweet texts with the default tokenizer.
pub fn build_reference_model(tweets: &[Tweet]) -> Result<ReferenceModel> {
    ReferenceModel::build(
        tweets.iter().map(|t| t.text.as_str()),
        &Tokenizer::default(),
        1,
    )
}

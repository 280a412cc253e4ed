use std::collections::HashSet;

use super::{InterestProfile, ProfileField, TermVector};
use crate::error::{Error, Result};

const URL_PREFIXES: [&[u8]; 2] = [b"http://", b"https://"];

/// Splits tweet text into lowercased alphanumeric terms.
///
/// Whitespace-separated chunks that start with `http://` or `https://`
/// (after any leading punctuation such as `(` or `#`) are dropped whole.
/// Everything else is lowercased and cut into maximal runs of Unicode
/// alphanumeric characters, which strips `#`/`@` sigils for free.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    stopwords: Option<HashSet<String>>,
}

impl Tokenizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Terms in `stopwords` are removed after normalization. Stopwords are
    /// themselves normalized, so `"The"` in a list removes `the`.
    pub fn with_stopwords<I, S>(stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokenizer = Tokenizer::default();
        let set = stopwords
            .into_iter()
            .flat_map(|w| tokenizer.tokenize(w.as_ref()))
            .collect();
        Tokenizer {
            stopwords: Some(set),
        }
    }

    /// Reads a stopword list, one or more words per line. Lines starting with
    /// `#` are comments.
    pub fn from_stopword_list(text: &str) -> Self {
        Self::with_stopwords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        self.for_each_token(text, |t| out.push(t.to_owned()));
        out
    }

    pub fn vectorize(&self, text: &str) -> TermVector {
        let mut builder = TermVector::builder();
        self.for_each_token(text, |t| builder.push(t));
        builder.build()
    }

    /// Query vector for a profile built from the chosen fields, joined by a
    /// space. Fails when no field is chosen or the result has no terms.
    pub fn profile_query(
        &self,
        profile: &InterestProfile,
        fields: &[ProfileField],
    ) -> Result<TermVector> {
        if fields.is_empty() {
            return Err(Error::InvalidProfile(format!(
                "{}: no query fields selected",
                profile.topid
            )));
        }
        let text = fields
            .iter()
            .map(|f| profile.field(*f))
            .collect::<Vec<_>>()
            .join(" ");
        let query = self.vectorize(&text);
        if query.is_empty() {
            return Err(Error::EmptyQuery);
        }
        Ok(query)
    }

    fn for_each_token(&self, text: &str, mut emit: impl FnMut(&str)) {
        let mut lowered = String::new();
        for chunk in text.split_whitespace() {
            if is_url(chunk.trim_start_matches(|c: char| !c.is_alphanumeric())) {
                continue;
            }
            lowered.clear();
            lowered.extend(chunk.chars().flat_map(char::to_lowercase));
            for token in lowered.split(|c: char| !c.is_alphanumeric()) {
                if token.is_empty() {
                    continue;
                }
                if let Some(stop) = &self.stopwords {
                    if stop.contains(token) {
                        continue;
                    }
                }
                emit(token);
            }
        }
    }
}

fn is_url(chunk: &str) -> bool {
    let bytes = chunk.as_bytes();
    URL_PREFIXES
        .iter()
        .any(|p| bytes.len() >= p.len() && bytes[..p.len()].eq_ignore_ascii_case(p))
}

/// Tokenizes with the default rules and no stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

/// Query vector for `profile` using the default tokenizer.
pub fn profile_query(profile: &InterestProfile, fields: &[ProfileField]) -> Result<TermVector> {
    Tokenizer::default().profile_query(profile, fields)
}

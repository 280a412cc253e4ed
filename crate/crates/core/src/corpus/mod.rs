//! Tweets, interest profiles, and their conversion into term vectors.

mod tokenize;
mod vector;

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use tokenize::{profile_query, tokenize, Tokenizer};
pub use vector::{TermVector, TermVectorBuilder};

/// Tweet identifier, kept as the decimal string it arrived as.
///
/// Ids are ordered numerically without parsing: a longer digit string is the
/// larger id, equal lengths compare bytewise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TweetId(String);

impl TweetId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::parse(0, "empty tweet id"));
        }
        if id.chars().any(char::is_whitespace) {
            return Err(Error::parse(
                0,
                format!("tweet id {id:?} contains whitespace"),
            ));
        }
        Ok(TweetId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Ord for TweetId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.as_bytes().cmp(other.0.as_bytes()))
    }
}

impl PartialOrd for TweetId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl TryFrom<String> for TweetId {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        TweetId::new(s).map_err(|_| "tweet id must be non-empty without whitespace".to_string())
    }
}

impl From<TweetId> for String {
    fn from(id: TweetId) -> Self {
        id.0
    }
}

impl FromStr for TweetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TweetId::new(s)
    }
}

impl fmt::Display for TweetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for TweetId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: TweetId,
    pub timestamp_ms: u64,
    pub text: String,
}

impl Tweet {
    /// Replay order: by timestamp, then by numeric id.
    pub fn stream_key(&self) -> (u64, &TweetId) {
        (self.timestamp_ms, &self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterestProfile {
    pub topid: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub narrative: String,
}

impl InterestProfile {
    pub fn field(&self, field: ProfileField) -> &str {
        match field {
            ProfileField::Title => &self.title,
            ProfileField::Description => &self.description,
            ProfileField::Narrative => &self.narrative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProfileField {
    Title,
    Description,
    Narrative,
}

impl ProfileField {
    pub fn name(self) -> &'static str {
        match self {
            ProfileField::Title => "title",
            ProfileField::Description => "description",
            ProfileField::Narrative => "narrative",
        }
    }
}

impl FromStr for ProfileField {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "title" => Ok(ProfileField::Title),
            "description" => Ok(ProfileField::Description),
            "narrative" => Ok(ProfileField::Narrative),
            other => Err(format!(
                "unknown profile field {other:?} (expected title, description or narrative)"
            )),
        }
    }
}

impl fmt::Display for ProfileField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a line-delimited tweets document. Blank lines are skipped; line
/// numbers in errors are 1-based.
pub fn parse_tweets(text: &str) -> Result<Vec<Tweet>> {
    let mut seen = HashSet::new();
    let mut tweets = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tweet: Tweet =
            serde_json::from_str(line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        if !seen.insert(tweet.id.clone()) {
            return Err(Error::DuplicateTweet {
                line: line_no,
                id: tweet.id.to_string(),
            });
        }
        tweets.push(tweet);
    }
    Ok(tweets)
}

pub fn write_tweets<W: Write>(mut out: W, tweets: &[Tweet]) -> Result<()> {
    for t in tweets {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses a JSON array of interest profiles. Topic ids must be non-empty and
/// unique.
pub fn parse_profiles(text: &str) -> Result<Vec<InterestProfile>> {
    let profiles: Vec<InterestProfile> =
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    let mut seen = HashSet::new();
    for p in &profiles {
        if p.topid.trim().is_empty() {
            return Err(Error::InvalidProfile("empty topid".into()));
        }
        if p.topid.chars().any(char::is_whitespace) {
            return Err(Error::InvalidProfile(format!(
                "topid {:?} contains whitespace",
                p.topid
            )));
        }
        if !seen.insert(p.topid.as_str()) {
            return Err(Error::InvalidProfile(format!(
                "duplicate topid {}",
                p.topid
            )));
        }
    }
    Ok(profiles)
}

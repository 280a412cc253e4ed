use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PreparedStream, ProfileState, RunConfig, RunEntry};
use crate::corpus::TweetId;
use crate::error::{Error, Result};
use crate::novelty::Representative;

const FORMAT_VERSION: u32 = 1;

/// Snapshot of a replay: how far into the sorted stream it got, plus every
/// profile's pushes and stored novelty representatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    /// `RunConfig::describe()` of the run that wrote the checkpoint.
    pub config: String,
    pub tweets_processed: usize,
    pub last_tweet: Option<TweetId>,
    pub profiles: Vec<ProfileSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSnapshot {
    pub topid: String,
    pub pushed: Vec<RunEntry>,
    pub representatives: Vec<Representative>,
}

impl Checkpoint {
    pub(super) fn capture(
        config: &RunConfig,
        stream: &PreparedStream,
        processed: usize,
        states: &[ProfileState],
    ) -> Self {
        Checkpoint {
            version: FORMAT_VERSION,
            config: config.describe(),
            tweets_processed: processed,
            last_tweet: processed
                .checked_sub(1)
                .map(|i| stream.tweets()[i].id.clone()),
            profiles: states.iter().map(ProfileState::snapshot).collect(),
        }
    }

    /// Writes to a sibling temporary file and renames it into place.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        fs::write(&tmp, serde_json::to_vec(self)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_slice(&fs::read(path)?)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if cp.version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {}",
                cp.version
            )));
        }
        Ok(cp)
    }

    /// Returns the stream position to resume from.
    pub(super) fn validate_against(
        &self,
        config: &RunConfig,
        stream: &PreparedStream,
        states: &[ProfileState],
    ) -> Result<usize> {
        if self.config != config.describe() {
            return Err(Error::Checkpoint(format!(
                "written with `{}`, resuming with `{}`",
                self.config,
                config.describe()
            )));
        }
        if self.tweets_processed > stream.len() {
            return Err(Error::Checkpoint(format!(
                "{} tweets processed but stream has {}",
                self.tweets_processed,
                stream.len()
            )));
        }
        let expected = self
            .tweets_processed
            .checked_sub(1)
            .map(|i| &stream.tweets()[i].id);
        if expected != self.last_tweet.as_ref() {
            return Err(Error::Checkpoint(
                "stream does not match the checkpoint".into(),
            ));
        }
        let topids = states.iter().map(|s| s.profile().topid.as_str());
        if !topids.eq(self.profiles.iter().map(|p| p.topid.as_str())) {
            return Err(Error::Checkpoint(
                "profiles do not match the checkpoint".into(),
            ));
        }
        Ok(self.tweets_processed)
    }
}

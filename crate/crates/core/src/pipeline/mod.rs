//! Stream replay: relevance gate followed by online novelty filtering, run
//! independently for every interest profile.

mod checkpoint;
mod run;
pub mod synth;

use std::collections::HashSet;

use rayon::prelude::*;

use crate::corpus::{InterestProfile, ProfileField, TermVector, Tokenizer, Tweet, TweetId};
use crate::error::{Error, Result};
use crate::novelty::{self, ClusterState, Novelty};
use crate::refmodel::ReferenceModel;
use crate::scoring::{QueryScorer, DEFAULT_MU};

pub use checkpoint::{Checkpoint, ProfileSnapshot};
pub use run::{parse_run, write_run, Run, RunEntry, RunRecord};
pub use synth::{generate_synthetic, SyntheticConfig, SyntheticData};

pub const DEFAULT_RELEVANCE_THRESHOLD: f64 = 4.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mu: f64,
    /// Relevance gate t, in natural-log score units. May be ±∞.
    pub relevance_threshold: f64,
    pub theta: f64,
    pub novelty_enabled: bool,
    pub query_fields: Vec<ProfileField>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mu: DEFAULT_MU,
            relevance_threshold: DEFAULT_RELEVANCE_THRESHOLD,
            theta: novelty::DEFAULT_THETA,
            novelty_enabled: true,
            query_fields: vec![ProfileField::Narrative],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::param("mu", self.mu, "must be positive and finite"));
        }
        if self.relevance_threshold.is_nan() {
            return Err(Error::param(
                "t",
                self.relevance_threshold,
                "must be a number",
            ));
        }
        novelty::check_theta(self.theta)?;
        if self.query_fields.is_empty() {
            return Err(Error::param(
                "fields",
                "[]",
                "at least one field is required",
            ));
        }
        Ok(())
    }

    pub fn with_threshold(&self, t: f64) -> Self {
        RunConfig {
            relevance_threshold: t,
            ..self.clone()
        }
    }

    /// One-line description used in artifact headers.
    pub fn describe(&self) -> String {
        let fields: Vec<&str> = self.query_fields.iter().map(|f| f.name()).collect();
        format!(
            "mu={} t={} theta={} novelty={} fields={}",
            self.mu,
            self.relevance_threshold,
            self.theta,
            if self.novelty_enabled { "on" } else { "off" },
            fields.join(",")
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    DroppedIrrelevant { score: f64 },
    Pushed { rank: usize, score: f64 },
    DroppedRedundant { score: f64, matched: TweetId },
}

/// Mutable filtering state of one interest profile.
#[derive(Debug, Clone)]
pub struct ProfileState {
    profile: InterestProfile,
    query: TermVector,
    scorer: QueryScorer,
    threshold: f64,
    theta: f64,
    novelty_enabled: bool,
    clusters: ClusterState,
    pushed: RunRecord,
}

impl ProfileState {
    pub fn new(
        profile: &InterestProfile,
        model: &ReferenceModel,
        config: &RunConfig,
        tokenizer: &Tokenizer,
    ) -> Result<Self> {
        config.validate()?;
        let query = tokenizer
            .profile_query(profile, &config.query_fields)
            .map_err(|e| match e {
                Error::EmptyQuery => {
                    Error::InvalidProfile(format!("{}: query has no terms", profile.topid))
                }
                other => other,
            })?;
        let scorer = QueryScorer::new(&query, model, config.mu)?;
        Ok(ProfileState {
            profile: profile.clone(),
            query,
            scorer,
            threshold: config.relevance_threshold,
            theta: config.theta,
            novelty_enabled: config.novelty_enabled,
            clusters: ClusterState::new(),
            pushed: RunRecord::default(),
        })
    }

    pub fn profile(&self) -> &InterestProfile {
        &self.profile
    }

    pub fn query(&self) -> &TermVector {
        &self.query
    }

    pub fn clusters(&self) -> &ClusterState {
        &self.clusters
    }

    pub fn pushed(&self) -> &RunRecord {
        &self.pushed
    }

    pub fn into_record(self) -> RunRecord {
        self.pushed
    }

    /// Applies the relevance gate and, if enabled, the novelty filter to one
    /// tweet whose term vector is `doc`. Tweets must arrive in stream order.
    pub fn process(&mut self, tweet: &Tweet, doc: &TermVector) -> Result<Decision> {
        if let Some(last) = self.pushed.entries().last() {
            if tweet.timestamp_ms < last.timestamp_ms {
                return Err(Error::param(
                    "timestamp_ms",
                    tweet.timestamp_ms,
                    "tweet arrived before the last pushed tweet",
                ));
            }
        }
        let score = self.scorer.score(doc);
        if score < self.threshold {
            return Ok(Decision::DroppedIrrelevant { score });
        }
        if self.novelty_enabled {
            if let Novelty::Redundant { matched } =
                self.clusters.check(&tweet.id, doc, self.theta)?
            {
                return Ok(Decision::DroppedRedundant { score, matched });
            }
        } else {
            self.clusters.admit(&tweet.id, doc);
        }
        let rank = self.pushed.push(&tweet.id, score, tweet.timestamp_ms);
        Ok(Decision::Pushed { rank, score })
    }

    fn restore(&mut self, snapshot: ProfileSnapshot) -> Result<()> {
        let ids_match = snapshot.pushed.len() == snapshot.representatives.len()
            && snapshot
                .pushed
                .iter()
                .zip(&snapshot.representatives)
                .all(|(e, r)| e.tweet_id == r.id);
        if !ids_match {
            return Err(Error::Checkpoint(format!(
                "{}: pushed tweets and representatives disagree",
                snapshot.topid
            )));
        }
        self.pushed = RunRecord::from_entries(snapshot.pushed)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", snapshot.topid)))?;
        self.clusters = ClusterState::from_representatives(snapshot.representatives);
        Ok(())
    }

    fn snapshot(&self) -> ProfileSnapshot {
        ProfileSnapshot {
            topid: self.profile.topid.clone(),
            pushed: self.pushed.entries().to_vec(),
            representatives: self.clusters.representatives().to_vec(),
        }
    }
}

/// A tweet stream sorted into replay order and tokenized once.
#[derive(Debug, Clone)]
pub struct PreparedStream {
    tweets: Vec<Tweet>,
    docs: Vec<TermVector>,
}

impl PreparedStream {
    /// Sorts by (timestamp, numeric id). Duplicate ids are rejected before
    /// anything is tokenized.
    pub fn new(tweets: &[Tweet], tokenizer: &Tokenizer) -> Result<Self> {
        let mut seen = HashSet::with_capacity(tweets.len());
        for t in tweets {
            if !seen.insert(&t.id) {
                return Err(Error::DuplicateStreamId(t.id.to_string()));
            }
        }
        let mut tweets = tweets.to_vec();
        tweets.sort_by(|a, b| a.stream_key().cmp(&b.stream_key()));
        let docs = tweets
            .par_iter()
            .map(|t| tokenizer.vectorize(&t.text))
            .collect();
        Ok(PreparedStream { tweets, docs })
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Tweet, &TermVector)> + '_ {
        self.tweets.iter().zip(&self.docs)
    }
}

#[derive(Debug, Clone)]
pub struct CheckpointPolicy {
    pub path: std::path::PathBuf,
    pub every: usize,
}

/// Replays a stream against a set of profiles.
///
/// Profiles are independent, so they are processed in parallel; each
/// profile still sees tweets strictly in stream order and results do not
/// depend on the worker count.
#[derive(Debug, Clone)]
pub struct Replay<'a> {
    model: &'a ReferenceModel,
    config: RunConfig,
    tokenizer: Tokenizer,
    jobs: Option<usize>,
    checkpoint: Option<CheckpointPolicy>,
}

impl<'a> Replay<'a> {
    pub fn new(model: &'a ReferenceModel, config: RunConfig) -> Result<Self> {
        config.validate()?;
        Ok(Replay {
            model,
            config,
            tokenizer: Tokenizer::default(),
            jobs: None,
            checkpoint: None,
        })
    }

    pub fn tokenizer(mut self, tokenizer: Tokenizer) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    /// Caps the number of worker threads.
    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = Some(jobs.max(1));
        self
    }

    /// Writes a snapshot of every profile after each `every` tweets.
    pub fn checkpoint(mut self, path: impl Into<std::path::PathBuf>, every: usize) -> Self {
        self.checkpoint = Some(CheckpointPolicy {
            path: path.into(),
            every: every.max(1),
        });
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Same replay at another relevance threshold, without checkpointing or
    /// its own thread pool, for use inside an outer parallel loop.
    pub(crate) fn at_threshold(&self, t: f64) -> Result<Self> {
        let config = self.config.with_threshold(t);
        config.validate()?;
        Ok(Replay {
            config,
            jobs: None,
            checkpoint: None,
            ..self.clone()
        })
    }

    pub fn prepare(&self, tweets: &[Tweet]) -> Result<PreparedStream> {
        self.install(|| PreparedStream::new(tweets, &self.tokenizer))
    }

    pub fn run(&self, profiles: &[InterestProfile], tweets: &[Tweet]) -> Result<Run> {
        let stream = self.prepare(tweets)?;
        self.run_prepared(profiles, &stream)
    }

    pub fn run_prepared(
        &self,
        profiles: &[InterestProfile],
        stream: &PreparedStream,
    ) -> Result<Run> {
        let states = self.initial_states(profiles)?;
        self.install(|| self.drive(states, stream, 0))
    }

    /// Continues a replay from a checkpoint written by an identical
    /// configuration over the same stream.
    pub fn resume(
        &self,
        profiles: &[InterestProfile],
        tweets: &[Tweet],
        checkpoint: Checkpoint,
    ) -> Result<Run> {
        let stream = self.prepare(tweets)?;
        let mut states = self.initial_states(profiles)?;
        let start = checkpoint.validate_against(&self.config, &stream, &states)?;
        for (state, snapshot) in states.iter_mut().zip(checkpoint.profiles) {
            state.restore(snapshot)?;
        }
        self.install(|| self.drive(states, &stream, start))
    }

    fn initial_states(&self, profiles: &[InterestProfile]) -> Result<Vec<ProfileState>> {
        let mut seen = HashSet::new();
        profiles
            .iter()
            .map(|p| {
                if !seen.insert(p.topid.as_str()) {
                    return Err(Error::InvalidProfile(format!(
                        "duplicate topid {}",
                        p.topid
                    )));
                }
                ProfileState::new(p, self.model, &self.config, &self.tokenizer)
            })
            .collect()
    }

    fn drive(
        &self,
        mut states: Vec<ProfileState>,
        stream: &PreparedStream,
        start: usize,
    ) -> Result<Run> {
        let block = match &self.checkpoint {
            Some(policy) => policy.every,
            None => stream.len().max(1),
        };
        let mut pos = start;
        while pos < stream.len() {
            let end = (pos + block).min(stream.len());
            let slice_tweets = &stream.tweets[pos..end];
            let slice_docs = &stream.docs[pos..end];
            states.par_iter_mut().try_for_each(|state| {
                for (tweet, doc) in slice_tweets.iter().zip(slice_docs) {
                    state.process(tweet, doc)?;
                }
                Ok::<_, Error>(())
            })?;
            pos = end;
            if let Some(policy) = &self.checkpoint {
                Checkpoint::capture(&self.config, stream, pos, &states).write(&policy.path)?;
            }
        }
        Ok(Run::from_records(
            states
                .into_iter()
                .map(|s| (s.profile.topid.clone(), s.into_record())),
        ))
    }

    pub(crate) fn install<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        match self.jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))?
                .install(f),
            None => f(),
        }
    }
}

/// Replays `tweets` against every profile with the default tokenizer.
pub fn run_stream(
    profiles: &[InterestProfile],
    tweets: &[Tweet],
    model: &ReferenceModel,
    config: &RunConfig,
) -> Result<Run> {
    Replay::new(model, config.clone())?.run(profiles, tweets)
}

//! Seeded synthetic streams with planted clusters.
//!
//! Every profile owns three keywords (its narrative) and a private pool of
//! cluster words. A cluster tweet has ten distinct tokens: one to three of
//! the profile keywords, cluster words shared by all members, and a single
//! member-specific word, so members share 90% of their tokens. Noise tweets
//! draw ten tokens from a background pool no profile uses.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{write_tweets, InterestProfile, Tweet, TweetId};
use crate::error::{Error, Result};
use crate::evalkit::{GroundTruth, Label};

pub const TWEETS_FILE: &str = "tweets.jsonl";
pub const PROFILES_FILE: &str = "profiles.json";
pub const QRELS_FILE: &str = "qrels.txt";
pub const CLUSTERS_FILE: &str = "clusters.json";

const TOKENS_PER_TWEET: usize = 10;
const KEYWORDS_PER_PROFILE: usize = 3;
const BACKGROUND_VOCAB: usize = 500;
const BASE_TIMESTAMP_MS: u64 = 1_470_096_000_000;
const SPAN_MS: u64 = 10 * 24 * 3600 * 1000;
const BASE_ID: u64 = 760_000_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub n_profiles: usize,
    pub clusters_per_profile: usize,
    pub tweets_per_cluster: usize,
    pub n_noise: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// In stream order.
    pub tweets: Vec<Tweet>,
    pub profiles: Vec<InterestProfile>,
    pub ground_truth: GroundTruth,
}

pub fn topid(p: usize) -> String {
    format!("SYN{:03}", p + 1)
}

fn keyword(p: usize, k: usize) -> String {
    format!("t{p}k{k}")
}

// Owner of a generated tweet before ids are assigned.
enum Origin {
    Cluster { profile: usize, cluster: usize },
    Noise,
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    let clustered = cfg
        .n_profiles
        .checked_mul(cfg.clusters_per_profile)
        .and_then(|n| n.checked_mul(cfg.tweets_per_cluster))
        .ok_or_else(|| Error::param("synthetic size", "overflow", "too many tweets"))?;
    let total = clustered
        .checked_add(cfg.n_noise)
        .ok_or_else(|| Error::param("synthetic size", "overflow", "too many tweets"))?;
    if total == 0 {
        return Err(Error::EmptySynthetic);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut drafts: Vec<(u64, Origin, Vec<String>)> = Vec::with_capacity(total);

    for p in 0..cfg.n_profiles {
        for c in 0..cfg.clusters_per_profile {
            let n_kw = rng.gen_range(1..=KEYWORDS_PER_PROFILE);
            let mut shared: Vec<String> =
                (0..KEYWORDS_PER_PROFILE).map(|k| keyword(p, k)).collect();
            shared.shuffle(&mut rng);
            shared.truncate(n_kw);
            shared.extend((0..TOKENS_PER_TWEET - 1 - n_kw).map(|k| format!("t{p}c{c}w{k}")));
            for m in 0..cfg.tweets_per_cluster {
                let mut tokens = shared.clone();
                tokens.push(format!("t{p}c{c}m{m}"));
                tokens.shuffle(&mut rng);
                let ts = BASE_TIMESTAMP_MS + rng.gen_range(0..SPAN_MS);
                drafts.push((
                    ts,
                    Origin::Cluster {
                        profile: p,
                        cluster: c,
                    },
                    tokens,
                ));
            }
        }
    }
    let background: Vec<usize> = (0..BACKGROUND_VOCAB).collect();
    for _ in 0..cfg.n_noise {
        let tokens = background
            .choose_multiple(&mut rng, TOKENS_PER_TWEET)
            .map(|k| format!("bg{k}"))
            .collect();
        let ts = BASE_TIMESTAMP_MS + rng.gen_range(0..SPAN_MS);
        drafts.push((ts, Origin::Noise, tokens));
    }

    // Ids are assigned in time order.
    drafts.sort_by_key(|d| d.0);

    let mut tweets = Vec::with_capacity(total);
    let mut members: BTreeMap<(usize, usize), Vec<TweetId>> = BTreeMap::new();
    let mut noise = Vec::new();
    for (i, (ts, origin, tokens)) in drafts.into_iter().enumerate() {
        let id = TweetId::new((BASE_ID + i as u64).to_string())?;
        match origin {
            Origin::Cluster { profile, cluster } => members
                .entry((profile, cluster))
                .or_default()
                .push(id.clone()),
            Origin::Noise => noise.push(id.clone()),
        }
        tweets.push(Tweet {
            id,
            timestamp_ms: ts,
            text: tokens.join(" "),
        });
    }

    let profiles: Vec<InterestProfile> = (0..cfg.n_profiles)
        .map(|p| InterestProfile {
            topid: topid(p),
            title: format!("synthetic topic {}", p + 1),
            description: String::new(),
            narrative: (0..KEYWORDS_PER_PROFILE)
                .map(|k| keyword(p, k))
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect();

    let mut labels = BTreeMap::new();
    let mut clusters = BTreeMap::new();
    for p in 0..cfg.n_profiles {
        let judged: &mut BTreeMap<TweetId, Label> = labels.entry(topid(p)).or_default();
        for id in &noise {
            judged.insert(id.clone(), Label::Irrelevant);
        }
        let mut topic_clusters = Vec::new();
        for c in 0..cfg.clusters_per_profile {
            let Some(ids) = members.remove(&(p, c)) else {
                continue;
            };
            for (m, id) in ids.iter().enumerate() {
                let label = if m == 0 {
                    Label::Relevant
                } else {
                    Label::Redundant
                };
                judged.insert(id.clone(), label);
            }
            topic_clusters.push(ids);
        }
        if judged.is_empty() {
            labels.remove(&topid(p));
        }
        if !topic_clusters.is_empty() {
            clusters.insert(topid(p), topic_clusters);
        }
    }

    Ok(SyntheticData {
        tweets,
        profiles,
        ground_truth: GroundTruth::new(labels, clusters)?,
    })
}

impl SyntheticData {
    /// Writes the tweets, profiles, qrels and clusters files into `dir`,
    /// creating it if needed.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut buf = Vec::new();
        write_tweets(&mut buf, &self.tweets)?;
        fs::write(dir.join(TWEETS_FILE), buf)?;
        let mut profiles = serde_json::to_string_pretty(&self.profiles)?;
        profiles.push('\n');
        fs::write(dir.join(PROFILES_FILE), profiles)?;
        fs::write(dir.join(QRELS_FILE), self.ground_truth.qrels_text())?;
        fs::write(dir.join(CLUSTERS_FILE), self.ground_truth.clusters_json())?;
        Ok(())
    }
}

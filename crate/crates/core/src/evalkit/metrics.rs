use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::{GroundTruth, Label};
use crate::corpus::TweetId;
use crate::error::{Error, Result};
use crate::pipeline::{Run, RunEntry, RunRecord};

/// How a pushed tweet earns gain for CG/DCG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMode {
    /// 1 for the first pushed member of each ground-truth cluster, 0 for
    /// later members and non-relevant tweets.
    #[default]
    ClusterFirst,
    /// 1 iff the tweet carries label 1.
    LabelBased,
}

impl FromStr for GainMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cluster-first" => Ok(GainMode::ClusterFirst),
            "label-based" => Ok(GainMode::LabelBased),
            other => Err(format!(
                "unknown gain mode {other:?} (expected cluster-first or label-based)"
            )),
        }
    }
}

impl fmt::Display for GainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GainMode::ClusterFirst => "cluster-first",
            GainMode::LabelBased => "label-based",
        })
    }
}

/// Order in which a run is read as a ranked list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankOrder {
    /// Chronological push order (the rank column).
    #[default]
    Push,
    /// Descending score, push order among ties.
    Score,
}

impl FromStr for RankOrder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "push" => Ok(RankOrder::Push),
            "score" => Ok(RankOrder::Score),
            other => Err(format!(
                "unknown rank order {other:?} (expected push or score)"
            )),
        }
    }
}

impl fmt::Display for RankOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankOrder::Push => "push",
            RankOrder::Score => "score",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalConfig {
    pub k: usize,
    pub discount_base: u32,
    pub gain_mode: GainMode,
    pub rank_order: RankOrder,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 30,
            discount_base: 2,
            gain_mode: GainMode::ClusterFirst,
            rank_order: RankOrder::Push,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("k", self.k, "must be at least 1"));
        }
        if self.discount_base < 2 {
            return Err(Error::param(
                "discount_base",
                self.discount_base,
                "must be at least 2",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub pushed: usize,
    pub relevant_pushed: usize,
    pub total_relevant: usize,
    /// `None` when nothing was pushed.
    pub precision: Option<f64>,
    /// `None` when the topic has no relevant tweets.
    pub recall: Option<f64>,
}

/// Relevance of each pushed tweet in order. A tweet id pushed more than once
/// only counts the first time.
fn relevance_flags<'a>(
    ids: impl Iterator<Item = &'a TweetId>,
    gt: &GroundTruth,
    topid: &str,
) -> Vec<bool> {
    let mut seen = HashSet::new();
    ids.map(|id| seen.insert(id) && gt.label(topid, id).is_some_and(Label::is_relevant))
        .collect()
}

pub fn precision_recall(run: &RunRecord, gt: &GroundTruth, topid: &str) -> PrecisionRecall {
    let flags = relevance_flags(run.entries().iter().map(|e| &e.tweet_id), gt, topid);
    let pushed = flags.len();
    let relevant_pushed = flags.iter().filter(|&&f| f).count();
    let total_relevant = gt.total_relevant(topid);
    PrecisionRecall {
        pushed,
        relevant_pushed,
        total_relevant,
        precision: (pushed > 0).then(|| relevant_pushed as f64 / pushed as f64),
        recall: (total_relevant > 0).then(|| relevant_pushed as f64 / total_relevant as f64),
    }
}

fn ap_of(flags: &[bool], total_relevant: usize) -> Option<f64> {
    if total_relevant == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &rel) in flags.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / total_relevant as f64)
}

/// Average precision of a run in push order; `None` for topics without any
/// relevant tweet.
pub fn average_precision(run: &RunRecord, gt: &GroundTruth, topid: &str) -> Option<f64> {
    let flags = relevance_flags(run.entries().iter().map(|e| &e.tweet_id), gt, topid);
    ap_of(&flags, gt.total_relevant(topid))
}

/// Mean AP over ground-truth topics that have at least one relevant tweet.
/// Topics absent from the run contribute AP 0.
pub fn mean_ap(run: &Run, gt: &GroundTruth) -> Option<f64> {
    let empty = RunRecord::default();
    let aps: Vec<f64> = gt
        .topics()
        .into_iter()
        .filter_map(|t| average_precision(run.record(t).unwrap_or(&empty), gt, t))
        .collect();
    (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
}

fn gains_of<'a>(
    ids: impl Iterator<Item = &'a TweetId>,
    gt: &GroundTruth,
    topid: &str,
    mode: GainMode,
) -> Vec<f64> {
    let mut seen_ids = HashSet::new();
    match mode {
        GainMode::LabelBased => ids
            .map(|id| {
                let first = seen_ids.insert(id);
                if first && gt.label(topid, id) == Some(Label::Relevant) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
        GainMode::ClusterFirst => {
            let cluster_of: HashMap<&TweetId, usize> = gt
                .clusters(topid)
                .iter()
                .enumerate()
                .flat_map(|(c, members)| members.iter().map(move |m| (m, c)))
                .collect();
            // Relevant tweets outside every cluster act as singleton clusters.
            let mut seen_clusters = HashSet::new();
            ids.map(|id| {
                if !seen_ids.insert(id) || !gt.label(topid, id).is_some_and(Label::is_relevant) {
                    return 0.0;
                }
                let key = cluster_of.get(id).map_or(Err(id), |&c| Ok(c));
                if seen_clusters.insert(key) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
        }
    }
}

/// Gain of every pushed tweet, in push order.
pub fn gains_for_run(run: &RunRecord, gt: &GroundTruth, topid: &str, mode: GainMode) -> Vec<f64> {
    gains_of(run.entries().iter().map(|e| &e.tweet_id), gt, topid, mode)
}

pub fn cg_at_k(gains: &[f64], k: usize) -> f64 {
    gains.iter().take(k).sum()
}

/// Discounted cumulative gain; the gain at 1-based position i is divided by
/// `max(1, log_base(i + 1))`.
pub fn dcg_at_k(gains: &[f64], k: usize, base: u32) -> f64 {
    let log = |x: f64| {
        if base == 2 {
            x.log2()
        } else {
            x.ln() / f64::from(base).ln()
        }
    };
    gains
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| g / log((i + 2) as f64).max(1.0))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicEval {
    pub ap: Option<f64>,
    pub cg: f64,
    pub dcg: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanEval {
    pub map: Option<f64>,
    pub cg: Option<f64>,
    pub dcg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub k: usize,
    pub per_topic: BTreeMap<String, TopicEval>,
    pub mean: MeanEval,
}

fn ordered(record: &RunRecord, order: RankOrder) -> Vec<&RunEntry> {
    let mut entries: Vec<&RunEntry> = record.entries().iter().collect();
    if order == RankOrder::Score {
        entries.sort_by(|a, b| b.score.total_cmp(&a.score));
    }
    entries
}

/// Evaluates every topic that appears in the ground truth or the run.
pub fn evaluate(run: &Run, gt: &GroundTruth, config: &EvalConfig) -> Result<EvalReport> {
    config.validate()?;
    let empty = RunRecord::default();
    let topics: BTreeSet<&str> = gt
        .topics()
        .into_iter()
        .chain(run.records().keys().map(String::as_str))
        .collect();

    let mut per_topic = BTreeMap::new();
    for topid in topics {
        let record = run.record(topid).unwrap_or(&empty);
        let entries = ordered(record, config.rank_order);
        let ids = || entries.iter().map(|e| &e.tweet_id);
        let flags = relevance_flags(ids(), gt, topid);
        let gains = gains_of(ids(), gt, topid, config.gain_mode);
        let pr = precision_recall(record, gt, topid);
        per_topic.insert(
            topid.to_owned(),
            TopicEval {
                ap: ap_of(&flags, pr.total_relevant),
                cg: cg_at_k(&gains, config.k),
                dcg: dcg_at_k(&gains, config.k, config.discount_base),
                precision: pr.precision,
                recall: pr.recall,
            },
        );
    }

    let mean_of =
        |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    let mean = MeanEval {
        map: mean_of(per_topic.values().filter_map(|t| t.ap).collect()),
        cg: mean_of(per_topic.values().map(|t| t.cg).collect()),
        dcg: mean_of(per_topic.values().map(|t| t.dcg).collect()),
    };
    Ok(EvalReport {
        k: config.k,
        per_topic,
        mean,
    })
}

fn fixed(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "null".to_owned(),
    }
}

impl EvalReport {
    /// JSON document with every number printed to 6 decimals; undefined
    /// values are `null`.
    pub fn to_json(&self) -> String {
        let k = self.k;
        let mut out = String::from("{\n  \"per_topic\": {");
        for (i, (topid, t)) in self.per_topic.iter().enumerate() {
            let sep = if i == 0 { "\n" } else { ",\n" };
            let key = serde_json::to_string(topid).expect("string serializes");
            let _ = write!(
                out,
                "{sep}    {key}: {{\"ap\": {}, \"cg{k}\": {}, \"dcg{k}\": {}, \"precision\": {}, \"recall\": {}}}",
                fixed(t.ap),
                fixed(Some(t.cg)),
                fixed(Some(t.dcg)),
                fixed(t.precision),
                fixed(t.recall),
            );
        }
        if !self.per_topic.is_empty() {
            out.push_str("\n  ");
        }
        let _ = write!(
            out,
            "}},\n  \"mean\": {{\"map\": {}, \"cg{k}\": {}, \"dcg{k}\": {}}}\n}}\n",
            fixed(self.mean.map),
            fixed(self.mean.cg),
            fixed(self.mean.dcg),
        );
        out
    }
}

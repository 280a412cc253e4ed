//! Ground truth handling and evaluation metrics.

mod metrics;
mod sweep;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde_json::Value;

use crate::corpus::TweetId;
use crate::error::{Error, Result};

pub use metrics::{
    average_precision, cg_at_k, dcg_at_k, evaluate, gains_for_run, mean_ap, precision_recall,
    EvalConfig, EvalReport, GainMode, MeanEval, PrecisionRecall, RankOrder, TopicEval,
};
pub use sweep::{sweep, sweep_row, sweep_runs, threshold_range, write_sweep_csv, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Irrelevant = 0,
    Relevant = 1,
    Redundant = 2,
}

impl Label {
    pub fn from_value(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Irrelevant),
            1 => Some(Label::Relevant),
            2 => Some(Label::Redundant),
            _ => None,
        }
    }

    pub fn value(self) -> u8 {
        self as u8
    }

    /// Both relevant and redundant tweets count as relevant for precision,
    /// recall and AP.
    pub fn is_relevant(self) -> bool {
        self != Label::Irrelevant
    }
}

type Clusters = Vec<Vec<TweetId>>;

/// Relevance labels and equivalence clusters per topic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    labels: BTreeMap<String, BTreeMap<TweetId, Label>>,
    clusters: BTreeMap<String, Clusters>,
}

impl GroundTruth {
    /// Every cluster member must be judged relevant (label 1 or 2).
    pub fn new(
        labels: BTreeMap<String, BTreeMap<TweetId, Label>>,
        clusters: BTreeMap<String, Clusters>,
    ) -> Result<Self> {
        for (topid, cs) in &clusters {
            let mut seen = HashSet::new();
            for member in cs.iter().flatten() {
                match labels.get(topid).and_then(|l| l.get(member)) {
                    Some(l) if l.is_relevant() => {}
                    Some(_) => {
                        return Err(Error::Inconsistent(format!(
                            "topic {topid}: cluster member {member} is labeled 0"
                        )))
                    }
                    None => {
                        return Err(Error::Inconsistent(format!(
                            "topic {topid}: cluster member {member} has no judgment"
                        )))
                    }
                }
                if !seen.insert(member) {
                    return Err(Error::Inconsistent(format!(
                        "topic {topid}: tweet {member} appears in more than one cluster"
                    )));
                }
            }
        }
        Ok(GroundTruth { labels, clusters })
    }

    pub fn label(&self, topid: &str, id: &TweetId) -> Option<Label> {
        self.labels.get(topid)?.get(id).copied()
    }

    pub fn labels(&self, topid: &str) -> impl Iterator<Item = (&TweetId, Label)> + '_ {
        self.labels
            .get(topid)
            .into_iter()
            .flat_map(|m| m.iter().map(|(id, l)| (id, *l)))
    }

    pub fn clusters(&self, topid: &str) -> &[Vec<TweetId>] {
        self.clusters.get(topid).map_or(&[], Vec::as_slice)
    }

    /// Topics that have judgments or clusters, in id order.
    pub fn topics(&self) -> BTreeSet<&str> {
        self.labels
            .keys()
            .chain(self.clusters.keys())
            .map(String::as_str)
            .collect()
    }

    /// Number of tweets judged relevant (label 1 or 2) for `topid`.
    pub fn total_relevant(&self, topid: &str) -> usize {
        self.labels(topid).filter(|(_, l)| l.is_relevant()).count()
    }

    /// Restricts the ground truth to tweets that are actually in the
    /// evaluated stream and re-derives redundancy labels.
    ///
    /// Within each cluster the earliest available member (by `order`, ties
    /// by id) becomes the relevant one and every later member redundant.
    /// Clusters left empty are removed, as are judgments of unavailable
    /// tweets.
    pub fn relabel(
        &self,
        available: &HashSet<TweetId>,
        order: &HashMap<TweetId, u64>,
    ) -> GroundTruth {
        let mut labels: BTreeMap<String, BTreeMap<TweetId, Label>> = BTreeMap::new();
        for (topid, judged) in &self.labels {
            let kept: BTreeMap<TweetId, Label> = judged
                .iter()
                .filter(|(id, _)| available.contains(*id))
                .map(|(id, l)| (id.clone(), *l))
                .collect();
            if !kept.is_empty() {
                labels.insert(topid.clone(), kept);
            }
        }

        let mut clusters: BTreeMap<String, Clusters> = BTreeMap::new();
        for (topid, cs) in &self.clusters {
            let mut out = Vec::new();
            for cluster in cs {
                let mut members: Vec<&TweetId> = cluster
                    .iter()
                    .filter(|id| available.contains(*id))
                    .collect();
                if members.is_empty() {
                    continue;
                }
                members.sort_by_key(|id| (order.get(*id).copied().unwrap_or(u64::MAX), *id));
                let topic_labels = labels.entry(topid.clone()).or_default();
                for (i, id) in members.iter().enumerate() {
                    let label = if i == 0 {
                        Label::Relevant
                    } else {
                        Label::Redundant
                    };
                    topic_labels.insert((*id).clone(), label);
                }
                out.push(members.into_iter().cloned().collect());
            }
            if !out.is_empty() {
                clusters.insert(topid.clone(), out);
            }
        }
        GroundTruth { labels, clusters }
    }

    /// TREC-style qrels, `topid Q0 tweet_id label`, sorted by topic then id.
    pub fn qrels_text(&self) -> String {
        let mut out = String::new();
        for (topid, judged) in &self.labels {
            for (id, label) in judged {
                let _ = writeln!(out, "{topid} Q0 {id} {}", label.value());
            }
        }
        out
    }

    /// `{"topid": [["id", …], …], …}`, pretty-printed.
    pub fn clusters_json(&self) -> String {
        let map: BTreeMap<&str, Vec<Vec<&str>>> = self
            .clusters
            .iter()
            .map(|(t, cs)| {
                (
                    t.as_str(),
                    cs.iter()
                        .map(|c| c.iter().map(TweetId::as_str).collect())
                        .collect(),
                )
            })
            .collect();
        serde_json::to_string_pretty(&map).expect("string map serializes") + "\n"
    }
}

/// Parses qrels and clusters documents.
///
/// Qrels lines are `topid tweet_id label` or `topid iter tweet_id label`;
/// blank lines and `#` comments are skipped. The clusters document is either
/// `{"topid": [[ids…], …]}` or the nested
/// `{"topics": {"topid": {"clusters": [[ids…], …]}}}` layout.
pub fn load_ground_truth(qrels: &str, clusters: &str) -> Result<GroundTruth> {
    let labels = parse_qrels(qrels)?;
    let clusters = parse_clusters(clusters)?;
    GroundTruth::new(labels, clusters)
}

pub fn parse_qrels(text: &str) -> Result<BTreeMap<String, BTreeMap<TweetId, Label>>> {
    let mut labels: BTreeMap<String, BTreeMap<TweetId, Label>> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        let (topid, id, label) = match cols[..] {
            [t, id, l] => (t, id, l),
            [t, _, id, l] => (t, id, l),
            _ => {
                return Err(Error::parse(
                    line_no,
                    format!("expected 3 or 4 columns, found {}", cols.len()),
                ))
            }
        };
        let value = label
            .parse::<u8>()
            .ok()
            .and_then(Label::from_value)
            .ok_or_else(|| Error::InvalidLabel {
                line: line_no,
                label: label.to_owned(),
            })?;
        let id = TweetId::new(id).map_err(|_| Error::parse(line_no, "bad tweet id"))?;
        let topic = labels.entry(topid.to_owned()).or_default();
        if let Some(prev) = topic.insert(id.clone(), value) {
            if prev != value {
                return Err(Error::parse(
                    line_no,
                    format!("conflicting labels for {topid} {id}"),
                ));
            }
        }
    }
    Ok(labels)
}

pub fn parse_clusters(text: &str) -> Result<BTreeMap<String, Clusters>> {
    if text.trim().is_empty() {
        return Ok(BTreeMap::new());
    }
    let root: Value =
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    let bad = |msg: String| Error::Inconsistent(format!("clusters document: {msg}"));
    let obj = root
        .as_object()
        .ok_or_else(|| bad("expected a JSON object".into()))?;

    let nested = obj.len() == 1 && obj.get("topics").is_some_and(Value::is_object);
    let topics: Vec<(&String, &Value)> = if nested {
        obj["topics"]
            .as_object()
            .expect("checked above")
            .iter()
            .map(|(t, v)| match v.get("clusters") {
                Some(c) => Ok((t, c)),
                None => Err(bad(format!("topic {t} has no \"clusters\" array"))),
            })
            .collect::<Result<_>>()?
    } else {
        obj.iter().collect()
    };

    let mut out = BTreeMap::new();
    for (topid, value) in topics {
        let arr = value
            .as_array()
            .ok_or_else(|| bad(format!("topic {topid}: expected an array of clusters")))?;
        let mut cs = Vec::with_capacity(arr.len());
        for cluster in arr {
            let members = cluster
                .as_array()
                .ok_or_else(|| bad(format!("topic {topid}: cluster is not an array")))?;
            let ids = members
                .iter()
                .map(|m| {
                    let s = match m {
                        Value::String(s) => s.clone(),
                        Value::Number(n) if n.is_u64() => n.to_string(),
                        other => return Err(bad(format!("topic {topid}: bad tweet id {other}"))),
                    };
                    TweetId::new(s).map_err(|_| bad(format!("topic {topid}: empty tweet id")))
                })
                .collect::<Result<Vec<_>>>()?;
            cs.push(ids);
        }
        out.insert(topid.clone(), cs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn id(s: &str) -> TweetId {
        TweetId::new(s).unwrap()
    }

    #[test]
    fn three_and_four_column_qrels() {
        let gt = load_ground_truth("T1 101 1\nT1 Q0 102 2\n\n# note\nT2 5 0\n", "{}").unwrap();
        assert_eq!(gt.label("T1", &id("101")), Some(Label::Relevant));
        assert_eq!(gt.label("T1", &id("102")), Some(Label::Redundant));
        assert_eq!(gt.label("T2", &id("5")), Some(Label::Irrelevant));
        assert_eq!(gt.total_relevant("T1"), 2);
        assert_eq!(gt.total_relevant("T2"), 0);
    }

    #[test]
    fn invalid_label_reports_line() {
        match load_ground_truth("T1 100 1\nT1 101 5\n", "{}") {
            Err(Error::InvalidLabel { line: 2, label }) => assert_eq!(label, "5"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_ground_truth("T1 101 -1\n", "{}"),
            Err(Error::InvalidLabel { line: 1, .. })
        ));
        assert!(matches!(
            load_ground_truth("T1 101\n", "{}"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn cluster_member_with_label_zero_is_inconsistent() {
        let r = load_ground_truth("T1 1 1\nT1 2 0\n", r#"{"T1": [["1", "2"]]}"#);
        assert!(matches!(r, Err(Error::Inconsistent(_))));
        let r = load_ground_truth("T1 1 1\n", r#"{"T1": [["1", "3"]]}"#);
        assert!(matches!(r, Err(Error::Inconsistent(_))));
    }

    #[test]
    fn nested_clusters_layout() {
        let gt = load_ground_truth(
            "RTS1 Q0 1 1\nRTS1 Q0 2 2\n",
            r#"{"topics": {"RTS1": {"clusters": [["1", 2]]}}}"#,
        )
        .unwrap();
        assert_eq!(gt.clusters("RTS1"), &[vec![id("1"), id("2")]]);
    }

    fn fixture() -> GroundTruth {
        load_ground_truth(
            "T1 1 1\nT1 2 2\nT1 3 2\nT1 4 1\nT1 5 2\nT1 6 0\nT1 7 1\nT1 8 2\n",
            r#"{"T1": [["1","2","3"], ["4","5"], ["7","8"]]}"#,
        )
        .unwrap()
    }

    fn times() -> HashMap<TweetId, u64> {
        (1..=8)
            .map(|i| (id(&i.to_string()), i as u64 * 10))
            .collect()
    }

    #[test]
    fn relabel_promotes_earliest_available() {
        let gt = fixture();
        let available: HashSet<TweetId> = ["2", "3", "4", "5", "6"].iter().map(|s| id(s)).collect();
        let r = gt.relabel(&available, &times());
        assert_eq!(r.label("T1", &id("1")), None);
        assert_eq!(r.label("T1", &id("2")), Some(Label::Relevant));
        assert_eq!(r.label("T1", &id("3")), Some(Label::Redundant));
        assert_eq!(r.label("T1", &id("4")), Some(Label::Relevant));
        assert_eq!(r.label("T1", &id("5")), Some(Label::Redundant));
        assert_eq!(r.label("T1", &id("6")), Some(Label::Irrelevant));
        // cluster [7, 8] vanished entirely
        assert_eq!(r.clusters("T1").len(), 2);
        assert_eq!(r.label("T1", &id("7")), None);
    }

    #[test]
    fn relabel_fully_available_is_identity() {
        let gt = fixture();
        let all: HashSet<TweetId> = (1..=8).map(|i| id(&i.to_string())).collect();
        assert_eq!(gt.relabel(&all, &times()), gt);
    }

    #[test]
    fn relabel_breaks_timestamp_ties_by_id() {
        let gt = load_ground_truth("T 10 2\nT 9 1\n", r#"{"T": [["9", "10"]]}"#).unwrap();
        let all: HashSet<TweetId> = [id("9"), id("10")].into();
        let same: HashMap<TweetId, u64> = [(id("9"), 5), (id("10"), 5)].into();
        let r = gt.relabel(&all, &same);
        assert_eq!(r.label("T", &id("9")), Some(Label::Relevant));
        let later: HashMap<TweetId, u64> = [(id("9"), 6), (id("10"), 5)].into();
        let r = gt.relabel(&all, &later);
        assert_eq!(r.label("T", &id("10")), Some(Label::Relevant));
        assert_eq!(r.label("T", &id("9")), Some(Label::Redundant));
    }

    #[test]
    fn writers_round_trip() {
        let gt = fixture();
        let back = load_ground_truth(&gt.qrels_text(), &gt.clusters_json()).unwrap();
        assert_eq!(back, gt);
    }

    proptest! {
        #[test]
        fn relabel_invariants(mask in proptest::collection::vec(any::<bool>(), 8), ts in proptest::collection::vec(0u64..5, 8)) {
            let gt = fixture();
            let available: HashSet<TweetId> = (1..=8).filter(|i| mask[i - 1]).map(|i| id(&i.to_string())).collect();
            let order: HashMap<TweetId, u64> = (1..=8).map(|i| (id(&i.to_string()), ts[i - 1])).collect();
            let once = gt.relabel(&available, &order);
            for cluster in once.clusters("T1") {
                let firsts: Vec<_> = cluster.iter().filter(|m| once.label("T1", m) == Some(Label::Relevant)).collect();
                prop_assert_eq!(firsts.len(), 1);
                let earliest = cluster.iter().min_by_key(|m| (order[*m], (*m).clone())).unwrap();
                prop_assert_eq!(firsts[0], earliest);
                prop_assert!(cluster.iter().all(|m| available.contains(m)));
            }
            prop_assert_eq!(once.relabel(&available, &order), once);
        }
    }
}

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::TweetId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    /// 1-based push order.
    pub rank: usize,
    pub tweet_id: TweetId,
    pub score: f64,
    pub timestamp_ms: u64,
}

/// Pushed tweets of one profile, in push order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    entries: Vec<RunEntry>,
}

impl RunRecord {
    /// Accepts entries whose ranks run 1, 2, 3, … and whose timestamps never
    /// decrease.
    pub fn from_entries(entries: Vec<RunEntry>) -> std::result::Result<Self, String> {
        for (i, e) in entries.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(format!("rank {} at position {}", e.rank, i + 1));
            }
            if i > 0 && e.timestamp_ms < entries[i - 1].timestamp_ms {
                return Err(format!("timestamp decreases at rank {}", e.rank));
            }
        }
        Ok(RunRecord { entries })
    }

    pub(crate) fn push(&mut self, id: &TweetId, score: f64, timestamp_ms: u64) -> usize {
        let rank = self.entries.len() + 1;
        self.entries.push(RunEntry {
            rank,
            tweet_id: id.clone(),
            score,
            timestamp_ms,
        });
        rank
    }

    pub fn entries(&self) -> &[RunEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Run records keyed by topic id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Run {
    records: BTreeMap<String, RunRecord>,
}

impl Run {
    pub fn from_records(records: impl IntoIterator<Item = (String, RunRecord)>) -> Self {
        Run {
            records: records.into_iter().collect(),
        }
    }

    pub fn records(&self) -> &BTreeMap<String, RunRecord> {
        &self.records
    }

    pub fn record(&self, topid: &str) -> Option<&RunRecord> {
        self.records.get(topid)
    }

    pub fn total_pushed(&self) -> usize {
        self.records.values().map(RunRecord::len).sum()
    }
}

/// Writes `topid<TAB>tweet_id<TAB>score<TAB>rank<TAB>timestamp_ms` lines,
/// grouped by topic, preceded by `# `-prefixed header lines.
pub fn write_run<W: Write>(mut out: W, run: &Run, header: &[String]) -> Result<()> {
    for h in header {
        writeln!(out, "# {h}")?;
    }
    for (topid, record) in &run.records {
        for e in &record.entries {
            writeln!(
                out,
                "{topid}\t{}\t{:.6}\t{}\t{}",
                e.tweet_id, e.score, e.rank, e.timestamp_ms
            )?;
        }
    }
    Ok(())
}

/// Reads a run file. `#` lines and blank lines are ignored. Each topic's
/// lines must be contiguous with ranks 1, 2, 3, …
pub fn parse_run(text: &str) -> Result<Run> {
    let mut records: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [topid, id, score, rank, ts] = fields[..] else {
            return Err(Error::parse(
                line_no,
                format!("expected 5 tab-separated fields, found {}", fields.len()),
            ));
        };
        let entry = RunEntry {
            tweet_id: TweetId::new(id).map_err(|_| Error::parse(line_no, "empty tweet id"))?,
            score: score
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad score {score:?}")))?,
            rank: rank
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad rank {rank:?}")))?,
            timestamp_ms: ts
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad timestamp {ts:?}")))?,
        };
        if topid.is_empty() {
            return Err(Error::parse(line_no, "empty topid"));
        }
        if current.as_deref() != Some(topid) {
            if records.contains_key(topid) {
                return Err(Error::parse(
                    line_no,
                    format!("lines for topic {topid} are not contiguous"),
                ));
            }
            current = Some(topid.to_owned());
        }
        let entries = records.entry(topid.to_owned()).or_default();
        if entry.rank != entries.len() + 1 {
            return Err(Error::parse(
                line_no,
                format!("expected rank {}, found {}", entries.len() + 1, entry.rank),
            ));
        }
        entries.push(entry);
    }
    let records = records
        .into_iter()
        .map(|(topid, entries)| {
            let rec = RunRecord::from_entries(entries)
                .map_err(|e| Error::parse(0, format!("topic {topid}: {e}")))?;
            Ok((topid, rec))
        })
        .collect::<Result<_>>()?;
    Ok(Run { records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> TweetId {
        TweetId::new(s).unwrap()
    }

    fn sample() -> Run {
        let mut a = RunRecord::default();
        a.push(&id("11"), 5.25, 100);
        a.push(&id("12"), 4.5, 120);
        let mut b = RunRecord::default();
        b.push(&id("11"), -0.0000004, 100);
        Run::from_records([("RTS2".to_string(), b), ("RTS1".to_string(), a)])
    }

    #[test]
    fn tsv_layout() {
        let mut buf = Vec::new();
        write_run(&mut buf, &sample(), &["mu=2500".into()]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# mu=2500\nRTS1\t11\t5.250000\t1\t100\nRTS1\t12\t4.500000\t2\t120\nRTS2\t11\t-0.000000\t1\t100\n"
        );
    }

    #[test]
    fn parse_round_trip() {
        let mut buf = Vec::new();
        write_run(&mut buf, &sample(), &[]).unwrap();
        let back = parse_run(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.records().len(), 2);
        assert_eq!(back.record("RTS1").unwrap().entries()[1].tweet_id, id("12"));
        assert_eq!(back.record("RTS1").unwrap().entries()[0].score, 5.25);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_run("# header\nA\t1\t0.5\t2\t10\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_run("A\t1\t0.5\t1\n") {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse_run("A\t1\t0.5\t1\t10\nB\t2\t0.5\t1\t10\nA\t3\t0.5\t2\t11\n").is_err());
        assert!(parse_run("A\t1\t0.5\t1\t10\nA\t2\t0.5\t2\t9\n").is_err());
    }

    #[test]
    fn record_invariants() {
        let e = |rank, ts| RunEntry {
            rank,
            tweet_id: id("1"),
            score: 0.0,
            timestamp_ms: ts,
        };
        assert!(RunRecord::from_entries(vec![e(1, 5), e(2, 5)]).is_ok());
        assert!(RunRecord::from_entries(vec![e(2, 5)]).is_err());
        assert!(RunRecord::from_entries(vec![e(1, 5), e(2, 4)]).is_err());
    }
}

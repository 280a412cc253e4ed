use std::io::Write;

use rayon::prelude::*;

use super::{precision_recall, GroundTruth};
use crate::corpus::{InterestProfile, Tweet};
use crate::error::{Error, Result};
use crate::pipeline::{PreparedStream, Replay, Run, RunConfig, RunRecord};
use crate::refmodel::ReferenceModel;

/// Totals over all profiles at one relevance threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub pushed: usize,
    pub relevant_pushed: usize,
    /// `None` when nothing was pushed.
    pub precision: Option<f64>,
    /// `None` when no profile has a relevant tweet.
    pub recall: Option<f64>,
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::param(
            "thresholds",
            "[]",
            "at least one threshold is required",
        ));
    }
    if thresholds.iter().any(|t| t.is_nan()) {
        return Err(Error::param(
            "thresholds",
            "NaN",
            "thresholds must be numbers",
        ));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param(
            "thresholds",
            format!("{thresholds:?}"),
            "must be strictly increasing",
        ));
    }
    Ok(())
}

/// One full replay per threshold, all sharing a single tokenized stream.
/// Results come back in threshold order whatever order they finish in.
pub fn sweep_runs(
    replay: &Replay<'_>,
    profiles: &[InterestProfile],
    stream: &PreparedStream,
    thresholds: &[f64],
) -> Result<Vec<(f64, Run)>> {
    check_thresholds(thresholds)?;
    replay.install(|| {
        thresholds
            .par_iter()
            .map(|&t| Ok((t, replay.at_threshold(t)?.run_prepared(profiles, stream)?)))
            .collect()
    })
}

/// Micro-averaged precision and recall over `profiles` for each threshold.
pub fn sweep(
    profiles: &[InterestProfile],
    tweets: &[Tweet],
    model: &ReferenceModel,
    config: &RunConfig,
    thresholds: &[f64],
    gt: &GroundTruth,
) -> Result<Vec<SweepRow>> {
    check_thresholds(thresholds)?;
    let replay = Replay::new(model, config.clone())?;
    let stream = replay.prepare(tweets)?;
    let runs = sweep_runs(&replay, profiles, &stream, thresholds)?;
    Ok(runs
        .iter()
        .map(|(t, run)| sweep_row(*t, run, profiles, gt))
        .collect())
}

/// Totals for one threshold's run over `profiles`.
pub fn sweep_row(
    threshold: f64,
    run: &Run,
    profiles: &[InterestProfile],
    gt: &GroundTruth,
) -> SweepRow {
    let empty = RunRecord::default();
    let (mut pushed, mut relevant_pushed, mut total_relevant) = (0, 0, 0);
    for p in profiles {
        let pr = precision_recall(run.record(&p.topid).unwrap_or(&empty), gt, &p.topid);
        pushed += pr.pushed;
        relevant_pushed += pr.relevant_pushed;
        total_relevant += pr.total_relevant;
    }
    SweepRow {
        threshold,
        pushed,
        relevant_pushed,
        precision: (pushed > 0).then(|| relevant_pushed as f64 / pushed as f64),
        recall: (total_relevant > 0).then(|| relevant_pushed as f64 / total_relevant as f64),
    }
}

/// Parses `A:B:STEP` (A inclusive, B exclusive) or a comma-separated list.
pub fn threshold_range(text: &str) -> std::result::Result<Vec<f64>, String> {
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("{s:?} is not a number"))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts[..] {
        [a, b, step] => {
            let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
            if !(a.is_finite() && b.is_finite() && step.is_finite()) || step <= 0.0 {
                return Err("range bounds must be finite and STEP positive".into());
            }
            // Tolerance keeps B out when (B - A) / STEP lands a hair above an integer.
            let n = ((b - a) / step - 1e-9).ceil().max(0.0) as usize;
            if n > 1_000_000 {
                return Err(format!("range yields {n} thresholds"));
            }
            (0..n).map(|i| a + i as f64 * step).collect()
        }
        [_] => text
            .split(',')
            .map(parse)
            .collect::<std::result::Result<Vec<_>, _>>()?,
        _ => return Err("expected A:B:STEP or a comma-separated list".into()),
    };
    if values.is_empty() {
        return Err("range is empty".into());
    }
    check_thresholds(&values).map_err(|e| e.to_string())?;
    Ok(values)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// CSV with header `threshold,pushed,relevant_pushed,precision,recall`;
/// undefined values are empty fields.
pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow], header: &[String]) -> Result<()> {
    for h in header {
        writeln!(out, "# {h}")?;
    }
    writeln!(out, "threshold,pushed,relevant_pushed,precision,recall")?;
    for r in rows {
        writeln!(
            out,
            "{:.6},{},{},{},{}",
            r.threshold,
            r.pushed,
            r.relevant_pushed,
            fmt_opt(r.precision),
            fmt_opt(r.recall)
        )?;
    }
    Ok(())
}

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use tweetfilter::corpus::{
    parse_profiles, parse_tweets, InterestProfile, ProfileField, Tokenizer, Tweet,
};
use tweetfilter::evalkit::{
    self, load_ground_truth, threshold_range, EvalConfig, GainMode, GroundTruth, RankOrder,
};
use tweetfilter::pipeline::{
    generate_synthetic, parse_run, write_run, Checkpoint, Replay, RunConfig, SyntheticConfig,
};
use tweetfilter::refmodel::ReferenceModel;

#[derive(Debug, Parser)]
#[command(
    name = "tweetfilter",
    version,
    about = "Filter tweet streams for standing interest profiles"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a background unigram model from a tweets file.
    BuildRefmodel(BuildRefmodel),
    /// Replay a stream against profiles and write the pushed tweets.
    Run(RunCmd),
    /// Replay once per relevance threshold and write precision/recall as CSV.
    Sweep(SweepCmd),
    /// Score a run against ground truth.
    Eval(EvalCmd),
    /// Restrict ground truth to a stream and re-derive redundancy labels.
    Relabel(RelabelCmd),
    /// Generate a synthetic stream with planted clusters.
    Synth(SynthCmd),
}

#[derive(Debug, Args)]
struct BuildRefmodel {
    #[arg(long)]
    tweets: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Drop terms seen fewer than N times.
    #[arg(long, default_value_t = 1, value_parser = positive_u64)]
    min_count: u64,
    /// File with one stopword per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Reference model directory written by build-refmodel.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long)]
    tweets: PathBuf,
    /// Dirichlet prior.
    #[arg(long, default_value_t = tweetfilter::scoring::DEFAULT_MU, value_parser = positive_f64, allow_hyphen_values = true)]
    mu: f64,
    /// Novelty threshold: a tweet is redundant when its cosine to a pushed tweet reaches it.
    #[arg(long, default_value_t = tweetfilter::novelty::DEFAULT_THETA, value_parser = unit_f64, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long)]
    no_novelty: bool,
    /// Profile fields that form the query.
    #[arg(long, value_delimiter = ',', default_value = "narrative")]
    fields: Vec<ProfileField>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = positive_usize)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct RunCmd {
    #[command(flatten)]
    replay: ReplayArgs,
    /// Relevance threshold.
    #[arg(long, default_value_t = tweetfilter::pipeline::DEFAULT_RELEVANCE_THRESHOLD, value_parser = number, allow_hyphen_values = true)]
    t: f64,
    #[arg(long)]
    out: PathBuf,
    /// Snapshot file for long replays.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000, value_parser = positive_usize, requires = "checkpoint")]
    checkpoint_every: usize,
    /// Continue from the snapshot in --checkpoint if it exists.
    #[arg(long, requires = "checkpoint")]
    resume: bool,
}

#[derive(Debug, Args)]
struct SweepCmd {
    #[command(flatten)]
    replay: ReplayArgs,
    /// `A:B:STEP` (B excluded) or a comma-separated list.
    #[arg(long, value_parser = thresholds, allow_hyphen_values = true)]
    thresholds: Thresholds,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalCmd {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    clusters: PathBuf,
    /// Relabel the ground truth against this stream first.
    #[arg(long)]
    tweets: Option<PathBuf>,
    #[arg(long, default_value = "cluster-first")]
    gain_mode: GainMode,
    #[arg(long, default_value = "push")]
    rank_by: RankOrder,
    #[arg(long, default_value_t = 30, value_parser = positive_usize)]
    k: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    discount_base: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RelabelCmd {
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long)]
    tweets: PathBuf,
    #[arg(long)]
    out_qrels: PathBuf,
    #[arg(long)]
    out_clusters: PathBuf,
}

#[derive(Debug, Args)]
struct SynthCmd {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    profiles: usize,
    /// Clusters per profile.
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    /// Tweets per cluster.
    #[arg(long, default_value_t = 3)]
    per_cluster: usize,
    #[arg(long, default_value_t = 200)]
    noise: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone)]
struct Thresholds(Vec<f64>);

fn thresholds(s: &str) -> Result<Thresholds, String> {
    threshold_range(s).map(Thresholds)
}

fn number(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => Err(format!("{s:?} is not a number")),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match number(s)? {
        v if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err("must be positive and finite".into()),
    }
}

fn unit_f64(s: &str) -> Result<f64, String> {
    match number(s)? {
        v if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err("must lie in [0, 1]".into()),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err("must be a positive integer".into()),
    }
}

fn positive_u64(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err("must be a positive integer".into()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn load_tweets(path: &Path) -> Result<Vec<Tweet>> {
    parse_tweets(&read(path)?).with_context(|| path.display().to_string())
}

fn load_profiles(path: &Path) -> Result<Vec<InterestProfile>> {
    parse_profiles(&read(path)?).with_context(|| path.display().to_string())
}

fn load_gt(qrels: &Path, clusters: &Path) -> Result<GroundTruth> {
    let q = read(qrels)?;
    let c = read(clusters)?;
    load_ground_truth(&q, &c)
        .with_context(|| format!("{} / {}", qrels.display(), clusters.display()))
}

fn tokenizer(stopwords: Option<&Path>) -> Result<Tokenizer> {
    Ok(match stopwords {
        Some(p) => Tokenizer::from_stopword_list(&read(p)?),
        None => Tokenizer::default(),
    })
}

fn relabel_against(gt: &GroundTruth, tweets: &[Tweet]) -> GroundTruth {
    let available: HashSet<_> = tweets.iter().map(|t| t.id.clone()).collect();
    let order: HashMap<_, _> = tweets
        .iter()
        .map(|t| (t.id.clone(), t.timestamp_ms))
        .collect();
    gt.relabel(&available, &order)
}

struct Summary {
    command: &'static str,
    tweets: usize,
    pushes: usize,
}

impl Summary {
    fn print(&self, started: Instant) {
        let secs = started.elapsed().as_secs_f64();
        let rate = if secs > 0.0 {
            self.tweets as f64 / secs
        } else {
            0.0
        };
        eprintln!(
            "{}: {} tweets processed, {} pushes, {:.3}s elapsed, {:.0} tweets/sec",
            self.command, self.tweets, self.pushes, secs, rate
        );
    }
}

struct Loaded {
    model: ReferenceModel,
    profiles: Vec<InterestProfile>,
    tweets: Vec<Tweet>,
    tokenizer: Tokenizer,
}

impl ReplayArgs {
    fn load(&self) -> Result<Loaded> {
        let model = ReferenceModel::restore(&self.model)?;
        Ok(Loaded {
            model,
            profiles: load_profiles(&self.profiles)?,
            tweets: load_tweets(&self.tweets)?,
            tokenizer: tokenizer(self.stopwords.as_deref())?,
        })
    }

    fn config(&self, t: f64) -> RunConfig {
        RunConfig {
            mu: self.mu,
            relevance_threshold: t,
            theta: self.theta,
            novelty_enabled: !self.no_novelty,
            query_fields: self.fields.clone(),
        }
    }

    fn replay<'a>(&self, data: &'a Loaded, config: RunConfig) -> Result<Replay<'a>> {
        let mut replay = Replay::new(&data.model, config)?.tokenizer(data.tokenizer.clone());
        if let Some(j) = self.jobs {
            replay = replay.jobs(j);
        }
        Ok(replay)
    }

    fn header(&self, command: &str, config: &RunConfig, data: &Loaded) -> Vec<String> {
        vec![
            format!("tweetfilter {} {command}", env!("CARGO_PKG_VERSION")),
            config.describe(),
            format!(
                "model total_tokens={} vocab_size={}",
                data.model.total_tokens(),
                data.model.vocab_size()
            ),
            format!(
                "profiles={} tweets={}",
                data.profiles.len(),
                data.tweets.len()
            ),
        ]
    }
}

fn build_refmodel(cmd: BuildRefmodel) -> Result<Summary> {
    let tweets = load_tweets(&cmd.tweets)?;
    let tok = tokenizer(cmd.stopwords.as_deref())?;
    let model = ReferenceModel::build(tweets.iter().map(|t| t.text.as_str()), &tok, cmd.min_count)
        .with_context(|| cmd.tweets.display().to_string())?;
    model.persist(&cmd.out)?;
    Ok(Summary {
        command: "build-refmodel",
        tweets: tweets.len(),
        pushes: 0,
    })
}

fn run(cmd: RunCmd) -> Result<Summary> {
    let data = cmd.replay.load()?;
    let config = cmd.replay.config(cmd.t);
    let mut replay = cmd.replay.replay(&data, config.clone())?;
    if let Some(cp) = &cmd.checkpoint {
        replay = replay.checkpoint(cp, cmd.checkpoint_every);
    }
    let run = match &cmd.checkpoint {
        Some(cp) if cmd.resume && cp.exists() => {
            let snapshot = Checkpoint::read(cp)?;
            replay
                .resume(&data.profiles, &data.tweets, snapshot)
                .with_context(|| format!("resuming from {}", cp.display()))?
        }
        _ => replay.run(&data.profiles, &data.tweets)?,
    };
    let mut buf = Vec::new();
    write_run(&mut buf, &run, &cmd.replay.header("run", &config, &data))?;
    write(&cmd.out, buf)?;
    Ok(Summary {
        command: "run",
        tweets: data.tweets.len(),
        pushes: run.total_pushed(),
    })
}

fn sweep(cmd: SweepCmd) -> Result<Summary> {
    let data = cmd.replay.load()?;
    let gt = relabel_against(&load_gt(&cmd.qrels, &cmd.clusters)?, &data.tweets);
    let config = cmd.replay.config(cmd.thresholds.0[0]);
    let replay = cmd.replay.replay(&data, config.clone())?;
    let stream = replay.prepare(&data.tweets)?;
    let runs = evalkit::sweep_runs(&replay, &data.profiles, &stream, &cmd.thresholds.0)?;
    let rows: Vec<_> = runs
        .iter()
        .map(|(t, run)| evalkit::sweep_row(*t, run, &data.profiles, &gt))
        .collect();
    let mut header = cmd.replay.header("sweep", &config, &data);
    header[1] =
        config
            .describe()
            .replacen(&format!("t={}", config.relevance_threshold), "t=swept", 1);
    let mut buf = Vec::new();
    evalkit::write_sweep_csv(&mut buf, &rows, &header)?;
    write(&cmd.out, buf)?;
    Ok(Summary {
        command: "sweep",
        tweets: data.tweets.len() * rows.len(),
        pushes: rows.iter().map(|r| r.pushed).sum(),
    })
}

fn eval(cmd: EvalCmd) -> Result<Summary> {
    let text = read(&cmd.run)?;
    let run = parse_run(&text).with_context(|| cmd.run.display().to_string())?;
    let mut gt = load_gt(&cmd.qrels, &cmd.clusters)?;
    if let Some(path) = &cmd.tweets {
        gt = relabel_against(&gt, &load_tweets(path)?);
    }
    let config = EvalConfig {
        k: cmd.k,
        discount_base: cmd.discount_base,
        gain_mode: cmd.gain_mode,
        rank_order: cmd.rank_by,
    };
    let report = evalkit::evaluate(&run, &gt, &config)?;
    write(&cmd.out, report.to_json())?;
    Ok(Summary {
        command: "eval",
        tweets: run.total_pushed(),
        pushes: run.total_pushed(),
    })
}

fn relabel(cmd: RelabelCmd) -> Result<Summary> {
    let gt = load_gt(&cmd.qrels, &cmd.clusters)?;
    let tweets = load_tweets(&cmd.tweets)?;
    let out = relabel_against(&gt, &tweets);
    write(&cmd.out_qrels, out.qrels_text())?;
    write(&cmd.out_clusters, out.clusters_json())?;
    Ok(Summary {
        command: "relabel",
        tweets: tweets.len(),
        pushes: 0,
    })
}

fn synth(cmd: SynthCmd) -> Result<Summary> {
    let data = generate_synthetic(&SyntheticConfig {
        n_profiles: cmd.profiles,
        clusters_per_profile: cmd.clusters,
        tweets_per_cluster: cmd.per_cluster,
        n_noise: cmd.noise,
        seed: cmd.seed,
    })?;
    data.write_to_dir(&cmd.out_dir)
        .with_context(|| format!("cannot write {}", cmd.out_dir.display()))?;
    Ok(Summary {
        command: "synth",
        tweets: data.tweets.len(),
        pushes: 0,
    })
}

pub fn execute(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let summary = match cli.command {
        Command::BuildRefmodel(c) => build_refmodel(c),
        Command::Run(c) => run(c),
        Command::Sweep(c) => sweep(c),
        Command::Eval(c) => eval(c),
        Command::Relabel(c) => relabel(c),
        Command::Synth(c) => synth(c),
    }?;
    summary.print(started);
    Ok(())
}

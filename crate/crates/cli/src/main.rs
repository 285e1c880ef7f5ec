//! `abbrev`: build and use abbreviation dictionaries mined from n-gram
//! corpora.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(
    name = "abbrev",
    version,
    about = "Mine abbreviation dictionaries from n-gram corpora"
)]
struct Cli {
    /// TOML configuration file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse 1-gram and 2-gram files into a reloadable aggregate.
    Ingest(IngestArgs),
    /// Classify word forms and write the dictionary.
    Build(BuildArgs),
    /// Write summary reports for a dictionary.
    Stats(StatsArgs),
    /// Split text into sentences and tokens.
    Segment(SegmentArgs),
    /// Generate a synthetic corpus and text with ground truth.
    Synth(SynthArgs),
    /// Estimate p0/p1 from seed lists and find the error operating point.
    Params(ParamsArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus files (plain or .gz); unigram and bigram files may be mixed.
    #[arg(value_name = "FILE")]
    pub inputs: Vec<PathBuf>,
    /// Aggregate state file to write.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Years kept in the aggregate [default: 1990-2008].
    #[arg(long, value_name = "START-END")]
    pub window: Option<String>,
    /// Accepted scripts, comma separated [default: cyrillic,latin].
    #[arg(long, value_name = "LIST")]
    pub scripts: Option<String>,
    /// Merge word forms that differ only in case.
    #[arg(long)]
    pub case_fold: bool,
    /// Worker threads; the output does not depend on it [default: all cores].
    #[arg(long)]
    pub threads: Option<usize>,
    /// Stop at the first malformed line instead of skipping it.
    #[arg(long)]
    pub abort_on_error: bool,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Aggregate produced by `ingest`.
    #[arg(value_name = "AGGREGATE")]
    pub aggregate: Option<PathBuf>,
    /// Analysis window [default: 1990-2008].
    #[arg(long, value_name = "START-END")]
    pub window: Option<String>,
    /// Decision method: median, lrt or both [default: median].
    #[arg(long)]
    pub method: Option<String>,
    /// Median-share threshold, strict [default: 0.9].
    #[arg(long)]
    pub median_threshold: Option<f64>,
    /// With-period share of common words [default: 0.068].
    #[arg(long)]
    pub p0: Option<f64>,
    /// With-period share of abbreviations [default: 0.955].
    #[arg(long)]
    pub p1: Option<f64>,
    /// Likelihood-ratio threshold C [default: 1].
    #[arg(long)]
    pub c: Option<f64>,
    /// Type I error target; with --beta, sets the minimum usage.
    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,
    /// Type II error target; with --alpha, sets the minimum usage.
    #[arg(long, requires = "alpha")]
    pub beta: Option<f64>,
    /// Minimum total usage N over the window [default: 40].
    #[arg(long)]
    pub min_usage: Option<u64>,
    /// Minimum with-period volume count [default: 2].
    #[arg(long)]
    pub min_volumes: Option<u64>,
    /// Minimum number of years with period usage [default: 2].
    #[arg(long)]
    pub min_active_years: Option<u32>,
    /// Write the annotated TSV table here.
    #[arg(long, value_name = "FILE")]
    pub tsv: Option<PathBuf>,
    /// Write the plain word list here.
    #[arg(long, value_name = "FILE")]
    pub list: Option<PathBuf>,
    /// Write the JSON document here.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Aggregate produced by `ingest`.
    #[arg(value_name = "AGGREGATE")]
    pub aggregate: Option<PathBuf>,
    /// Dictionary (JSON or TSV) produced by `build`.
    #[arg(long, value_name = "FILE")]
    pub dictionary: Option<PathBuf>,
    /// Directory receiving one file per report.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Reports, comma separated: rare-cumulative, p-series,
    /// length-histogram, freq-by-length, dynamics [default: all].
    #[arg(long, value_name = "LIST")]
    pub reports: Option<String>,
    /// Output format: tsv or json [default: tsv].
    #[arg(long)]
    pub format: Option<String>,
    /// Analysis window for the p-series [default: 1990-2008].
    #[arg(long, value_name = "START-END")]
    pub window: Option<String>,
    /// Years averaged into the mean shares [default: 1998-2008].
    #[arg(long, value_name = "START-END")]
    pub mean_window: Option<String>,
    /// Years of the dynamics report [default: 1940-2008].
    #[arg(long, value_name = "START-END")]
    pub dynamics: Option<String>,
    /// Size of the most-used subset in the dynamics report [default: 300].
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Largest volume cap in the rare-cumulative report [default: 100].
    #[arg(long)]
    pub max_volumes: Option<u64>,
    /// Corpus totals file used to normalize the dynamics report.
    #[arg(long, value_name = "FILE")]
    pub totals: Option<PathBuf>,
    /// Seed abbreviations for the p-series [default: dictionary entries].
    #[arg(long, value_name = "FILE")]
    pub seed_abbrevs: Option<PathBuf>,
    /// Seed common words for the p-series [default: all other used forms].
    #[arg(long, value_name = "FILE")]
    pub seed_commons: Option<PathBuf>,
    /// Share pooling: pooled or macro-average [default: pooled].
    #[arg(long)]
    pub pooling: Option<String>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Text file; reads standard input when absent.
    #[arg(value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Dictionary in any `build` output format.
    #[arg(long, value_name = "FILE")]
    pub dictionary: Option<PathBuf>,
    /// Title-like abbreviations (one per line) that do not end a sentence
    /// before a capitalized word.
    #[arg(long, value_name = "FILE")]
    pub titles: Option<PathBuf>,
    /// Use the period-space-capital rule only.
    #[arg(long)]
    pub baseline: bool,
    /// Emit token and sentence byte offsets as JSON.
    #[arg(long)]
    pub spans: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Spec file in TOML or JSON.
    #[arg(value_name = "SPEC")]
    pub spec: PathBuf,
    /// Output directory.
    #[arg(short, long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Number of shards per n-gram order [default: 1].
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    /// Also write `text.txt` and `gold.json` with this many sentences.
    #[arg(long)]
    pub sentences: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    /// Aggregate produced by `ingest`; needed with seed lists.
    #[arg(value_name = "AGGREGATE")]
    pub aggregate: Option<PathBuf>,
    /// Known abbreviations, one per line.
    #[arg(long, value_name = "FILE")]
    pub seed_abbrevs: Option<PathBuf>,
    /// Known common words, one per line.
    #[arg(long, value_name = "FILE")]
    pub seed_commons: Option<PathBuf>,
    /// Estimation window [default: 1990-2008].
    #[arg(long, value_name = "START-END")]
    pub window: Option<String>,
    /// Years averaged into the estimates [default: 1998-2008].
    #[arg(long, value_name = "START-END")]
    pub mean_window: Option<String>,
    /// Share pooling: pooled or macro-average [default: pooled].
    #[arg(long)]
    pub pooling: Option<String>,
    /// p0 when no seed lists are given [default: 0.068].
    #[arg(long)]
    pub p0: Option<f64>,
    /// p1 when no seed lists are given [default: 0.955].
    #[arg(long)]
    pub p1: Option<f64>,
    /// Likelihood-ratio threshold C [default: 1].
    #[arg(long)]
    pub c: Option<f64>,
    /// Type I error target [default: 0.001].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Type II error target [default: 0.001].
    #[arg(long)]
    pub beta: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config::FileConfig::load(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Ingest(a) => commands::ingest(a, cfg.ingest),
        Command::Build(a) => commands::build(a, cfg.build),
        Command::Stats(a) => commands::stats(a, cfg.stats),
        Command::Segment(a) => commands::segment(a, cfg.segment),
        Command::Synth(a) => commands::synth(a),
        Command::Params(a) => commands::params(a, cfg.params),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // a closed downstream pipe (`| head`) is not a failure
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

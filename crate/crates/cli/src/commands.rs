use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use abbrev_core::analytics::{self, Report, ReportKind};
use abbrev_core::dict::{
    build_dictionary, read_tsv_entries, AbbrevDictionary, AbbrevEntry, BuildConfig, BuildMethod, CorpusInfo,
    ErrorTargets,
};
use abbrev_core::ingest::{ingest_files, Aggregate, ErrorPolicy, IngestConfig, Script, WordFilter, YearRange};
use abbrev_core::segment::{baseline_segment, dict_segment, parse_plain_list, AbbrevLexicon, SentenceSpan};
use abbrev_core::stats::{estimate_share_params, min_usage_for_error, HypothesisParams, Pooling};
use abbrev_core::synth::{generate_ngrams, generate_text, SynthSpec};
use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use crate::config::{BuildSection, IngestSection, ParamsSection, SegmentSection, StatsSection};
use crate::{BuildArgs, IngestArgs, ParamsArgs, SegmentArgs, StatsArgs, SynthArgs};

fn range(flag: Option<String>, file: Option<String>, default: YearRange) -> Result<YearRange> {
    match flag.or(file) {
        Some(s) => s.parse().map_err(|e| anyhow!("{e}")),
        None => Ok(default),
    }
}

fn pooling(flag: Option<String>, file: Option<String>) -> Result<Pooling> {
    match flag.or(file).as_deref() {
        None | Some("pooled") => Ok(Pooling::Pooled),
        Some("macro-average") | Some("macro") => Ok(Pooling::MacroAverage),
        Some(other) => bail!("unknown pooling `{other}` (expected pooled or macro-average)"),
    }
}

fn hypothesis(p0: Option<f64>, p1: Option<f64>, c: Option<f64>) -> Result<HypothesisParams> {
    Ok(HypothesisParams::new(
        p0.unwrap_or(HypothesisParams::DEFAULT_P0),
        p1.unwrap_or(HypothesisParams::DEFAULT_P1),
        c.unwrap_or(1.0),
    )?)
}

fn require<'a>(path: Option<&'a PathBuf>, what: &str) -> Result<&'a Path> {
    let path = path.ok_or_else(|| anyhow!("missing {what}"))?;
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(path)
}

fn read_aggregate(path: &Path) -> Result<Aggregate> {
    let file = File::open(path).with_context(|| format!("opening aggregate {}", path.display()))?;
    Aggregate::read_json(BufReader::new(file)).with_context(|| format!("reading aggregate {}", path.display()))
}

fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_plain_list(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn ingest(args: IngestArgs, cfg: IngestSection) -> Result<()> {
    let mut inputs = args.inputs;
    if inputs.is_empty() {
        inputs = cfg.unigrams.into_iter().chain(cfg.bigrams).collect();
    }
    if inputs.is_empty() {
        bail!("nothing to ingest: no input files given");
    }
    for p in &inputs {
        require(Some(p), "input")?;
    }
    let output = args.output.or(cfg.output).ok_or_else(|| anyhow!("missing --output"))?;
    let window = range(args.window, cfg.window, YearRange::DEFAULT_WINDOW)?;
    let scripts = match args.scripts {
        Some(s) => s
            .split(',')
            .map(|x| x.trim().parse::<Script>().map_err(|e| anyhow!("{e}")))
            .collect(),
        None => match cfg.scripts {
            Some(list) => list
                .iter()
                .map(|x| x.parse::<Script>().map_err(|e| anyhow!("{e}")))
                .collect(),
            None => Ok(WordFilter::default().scripts().to_vec()),
        },
    }?;
    let case_fold = args.case_fold || cfg.case_fold.unwrap_or(false);
    let policy = if args.abort_on_error || cfg.abort_on_error.unwrap_or(false) {
        ErrorPolicy::Abort
    } else {
        ErrorPolicy::Skip
    };
    let threads = args
        .threads
        .or(cfg.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let config = IngestConfig {
        window,
        filter: WordFilter::new(scripts, case_fold),
    };
    let agg = ingest_files(&inputs, &config, policy, threads)?;
    let mut out = create(&output)?;
    agg.write_json(&mut out)?;
    out.flush()?;
    let s = agg.stats();
    eprintln!(
        "ingested {} files: {} lines, {} skipped, {} word forms, {} clamped cells",
        inputs.len(),
        s.lines,
        s.skipped,
        agg.word_count(),
        agg.inconsistent_cells()
    );
    Ok(())
}

pub fn build(args: BuildArgs, cfg: BuildSection) -> Result<()> {
    let agg_path = args.aggregate.or(cfg.aggregate);
    let agg = read_aggregate(require(agg_path.as_ref(), "aggregate")?)?;
    let window = range(args.window, cfg.window, YearRange::DEFAULT_WINDOW)?;
    let method: BuildMethod = match args.method.or(cfg.method) {
        Some(m) => m.parse().map_err(|e: String| anyhow!(e))?,
        None => BuildMethod::default(),
    };
    let error_targets = match (args.alpha.or(cfg.alpha), args.beta.or(cfg.beta)) {
        (Some(alpha), Some(beta)) => Some(ErrorTargets { alpha, beta }),
        (None, None) => None,
        _ => bail!("alpha and beta targets must be given together"),
    };
    let defaults = BuildConfig::default();
    let config = BuildConfig {
        window,
        method,
        median_threshold: args
            .median_threshold
            .or(cfg.median_threshold)
            .unwrap_or(defaults.median_threshold),
        params: hypothesis(args.p0.or(cfg.p0), args.p1.or(cfg.p1), args.c.or(cfg.c))?,
        error_targets,
        min_usage: args.min_usage.or(cfg.min_usage).unwrap_or(defaults.min_usage),
        min_volumes: args.min_volumes.or(cfg.min_volumes).unwrap_or(defaults.min_volumes),
        min_active_years: args
            .min_active_years
            .or(cfg.min_active_years)
            .unwrap_or(defaults.min_active_years),
    };
    config.validate()?;
    warn_window(&agg, &window, "build window");
    let corpus = CorpusInfo {
        fingerprint: agg.input_digests().to_vec(),
        case_fold: agg.config().filter.case_fold(),
    };
    let dict = build_dictionary(&agg.finalize(&window), &config, &corpus)?;

    let (tsv, list, json) = (args.tsv.or(cfg.tsv), args.list.or(cfg.list), args.json.or(cfg.json));
    if tsv.is_none() && list.is_none() && json.is_none() {
        let stdout = io::stdout();
        dict.write_tsv(stdout.lock())?;
    }
    if let Some(p) = tsv {
        let mut out = create(&p)?;
        dict.write_tsv(&mut out)?;
        out.flush()?;
    }
    if let Some(p) = list {
        let mut out = create(&p)?;
        dict.write_list(&mut out)?;
        out.flush()?;
    }
    if let Some(p) = json {
        let mut out = create(&p)?;
        dict.write_json(&mut out)?;
        out.flush()?;
    }
    let m = &dict.meta;
    eprintln!(
        "{} entries from {} candidates ({} below min usage {}, {} accepted before filters, {} removed low volume, {} removed short timespan)",
        dict.entries.len(),
        m.candidates,
        m.undecidable,
        m.min_usage,
        m.accepted_before_filters,
        m.removed_low_volume,
        m.removed_short_timespan
    );
    Ok(())
}

fn warn_window(agg: &Aggregate, window: &YearRange, what: &str) {
    let ingested = agg.config().window;
    if window.start < ingested.start || window.end > ingested.end {
        eprintln!("warning: {what} {window} extends beyond the ingested years {ingested}");
    }
}

fn read_entries(path: &Path) -> Result<Vec<AbbrevEntry>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading dictionary {}", path.display()))?;
    let entries = if text.trim_start().starts_with('{') {
        AbbrevDictionary::read_json(text.as_bytes())?.entries
    } else {
        read_tsv_entries(text.as_bytes())?
    };
    Ok(entries)
}

pub fn stats(args: StatsArgs, cfg: StatsSection) -> Result<()> {
    let kinds: BTreeSet<ReportKind> = match args
        .reports
        .map(|s| s.split(',').map(|x| x.trim().to_string()).collect())
        .or(cfg.reports)
    {
        Some(list) => list
            .iter()
            .map(|k| k.parse().map_err(|e: String| anyhow!(e)))
            .collect::<Result<_>>()?,
        None => ReportKind::ALL.into_iter().collect(),
    };
    let json = match args.format.or(cfg.format).as_deref() {
        None | Some("tsv") => false,
        Some("json") => true,
        Some(other) => bail!("unknown format `{other}` (expected tsv or json)"),
    };
    let out_dir = args
        .out_dir
        .or(cfg.out_dir)
        .ok_or_else(|| anyhow!("missing --out-dir"))?;
    let dict_path = args.dictionary.or(cfg.dictionary);
    let entries = if kinds.iter().any(|k| k.needs_dictionary()) {
        let path = dict_path
            .as_ref()
            .ok_or_else(|| anyhow!("reports {} need --dictionary", list_kinds(&kinds)))?;
        Some(read_entries(require(Some(path), "dictionary")?)?)
    } else {
        None
    };
    let needs_profiles = kinds.contains(&ReportKind::PSeries) || kinds.contains(&ReportKind::Dynamics);
    let window = range(args.window, cfg.window, YearRange::DEFAULT_WINDOW)?;
    let profiles = if needs_profiles {
        let agg_path = args.aggregate.or(cfg.aggregate);
        let agg = read_aggregate(require(agg_path.as_ref(), "aggregate")?)?;
        Some((agg.finalize(&window), agg))
    } else {
        None
    };

    let mut reports: Vec<Report> = Vec::new();
    for kind in &kinds {
        let entries = entries.as_deref().unwrap_or(&[]);
        let report = match kind {
            ReportKind::RareCumulative => {
                analytics::rare_cumulative(entries, args.max_volumes.or(cfg.max_volumes).unwrap_or(100))
            }
            ReportKind::LengthHistogram => analytics::length_histogram(entries),
            ReportKind::FreqByLength => analytics::frequency_by_length(entries).report,
            ReportKind::PSeries => {
                let (profiles, _) = profiles.as_ref().expect("loaded above");
                let abbrevs = match args.seed_abbrevs.as_ref().or(cfg.seed_abbrevs.as_ref()) {
                    Some(p) => read_word_list(p)?,
                    None => match &entries_for_seeds(dict_path.as_deref())? {
                        Some(list) => list.clone(),
                        None => bail!("p-series needs --seed-abbrevs or --dictionary"),
                    },
                };
                let commons = match args.seed_commons.as_ref().or(cfg.seed_commons.as_ref()) {
                    Some(p) => read_word_list(p)?,
                    None => {
                        let known: BTreeSet<&str> = abbrevs.iter().map(String::as_str).collect();
                        profiles
                            .values()
                            .filter(|p| p.usage_total > 0 && !known.contains(p.word.as_str()))
                            .map(|p| p.word.clone())
                            .collect()
                    }
                };
                let mean_window = range(
                    args.mean_window.clone(),
                    cfg.mean_window.clone(),
                    YearRange::DEFAULT_MEAN_WINDOW,
                )?;
                let pooling = pooling(args.pooling.clone(), cfg.pooling.clone())?;
                analytics::p_series(profiles, &abbrevs, &commons, &window, &mean_window, pooling)?
            }
            ReportKind::Dynamics => {
                let (profiles, agg) = profiles.as_ref().expect("loaded above");
                let years = range(args.dynamics.clone(), cfg.dynamics.clone(), YearRange::DEFAULT_DYNAMICS)?;
                warn_window(agg, &years, "dynamics window");
                let totals = match args.totals.as_ref().or(cfg.totals.as_ref()) {
                    Some(p) => {
                        let file = File::open(p).with_context(|| format!("opening totals {}", p.display()))?;
                        Some(analytics::read_total_counts(BufReader::new(file))?)
                    }
                    None => None,
                };
                let top_k = args.top_k.or(cfg.top_k).unwrap_or(300);
                analytics::dynamics(entries, profiles, &years, top_k, totals.as_ref())
            }
        };
        reports.push(report);
    }

    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for report in &reports {
        let path = out_dir.join(format!("{}.{}", report.kind, if json { "json" } else { "tsv" }));
        let mut out = create(&path)?;
        if json {
            report.write_json(&mut out)?;
        } else {
            report.write_tsv(&mut out)?;
        }
        out.flush()?;
    }
    eprintln!("wrote {} reports to {}", reports.len(), out_dir.display());
    Ok(())
}

fn entries_for_seeds(path: Option<&Path>) -> Result<Option<Vec<String>>> {
    match path {
        Some(p) => Ok(Some(read_entries(p)?.into_iter().map(|e| e.word).collect())),
        None => Ok(None),
    }
}

fn list_kinds(kinds: &BTreeSet<ReportKind>) -> String {
    kinds
        .iter()
        .filter(|k| k.needs_dictionary())
        .map(|k| k.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Serialize)]
struct BaselineSpans<'a> {
    sentences: &'a [SentenceSpan],
}

pub fn segment(args: SegmentArgs, cfg: SegmentSection) -> Result<()> {
    let mut text = String::new();
    match &args.input {
        Some(p) => {
            File::open(p)
                .and_then(|mut f| f.read_to_string(&mut text))
                .with_context(|| format!("reading {}", p.display()))?;
        }
        None => {
            io::stdin()
                .read_to_string(&mut text)
                .context("reading standard input")?;
        }
    }
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let sentences = if args.baseline {
        let sentences = baseline_segment(&text);
        if args.spans {
            serde_json::to_writer_pretty(&mut out, &BaselineSpans { sentences: &sentences })?;
            writeln!(out)?;
            return Ok(out.flush()?);
        }
        sentences
    } else {
        let dict_path = args.dictionary.or(cfg.dictionary);
        let path = require(dict_path.as_ref(), "dictionary")?;
        let mut lexicon =
            AbbrevLexicon::load(path).with_context(|| format!("loading dictionary {}", path.display()))?;
        if let Some(titles) = args.titles.or(cfg.titles) {
            lexicon = lexicon.with_titles(read_word_list(&titles)?);
        }
        let seg = dict_segment(&text, &lexicon);
        if args.spans {
            serde_json::to_writer_pretty(&mut out, &seg)?;
            writeln!(out)?;
            return Ok(out.flush()?);
        }
        seg.sentences
    };
    for s in &sentences {
        let line: String = text[s.start..s.end]
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        writeln!(out, "{line}")?;
    }
    Ok(out.flush()?)
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let content = fs::read_to_string(&args.spec).with_context(|| format!("reading spec {}", args.spec.display()))?;
    let spec: SynthSpec = if args.spec.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&content)?
    } else {
        toml::from_str(&content)?
    };
    let ngrams = generate_ngrams(&spec)?;
    let paths = ngrams.write_files(&args.out_dir, args.shards)?;
    eprintln!(
        "wrote {} files: {} unigram and {} bigram records for {} abbreviations and {} common words",
        paths.len(),
        ngrams.unigrams.len(),
        ngrams.bigrams.len(),
        ngrams.truth.abbreviations.len(),
        ngrams.truth.commons.len()
    );
    if let Some(count) = args.sentences {
        let text = generate_text(&spec, count)?;
        fs::write(args.out_dir.join("text.txt"), &text.text).context("writing text.txt")?;
        let mut out = create(&args.out_dir.join("gold.json"))?;
        serde_json::to_writer_pretty(&mut out, &text.gold)?;
        writeln!(out)?;
        out.flush()?;
        eprintln!(
            "wrote {count} sentences with {} planted abbreviations",
            text.gold.abbreviations.len()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ParamsReport {
    p0: f64,
    p1: f64,
    c: f64,
    alpha_target: f64,
    beta_target: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<abbrev_core::stats::ShareEstimate>,
    operating_point: abbrev_core::stats::OperatingPoint,
}

pub fn params(args: ParamsArgs, cfg: ParamsSection) -> Result<()> {
    let abbrevs = args.seed_abbrevs.or(cfg.seed_abbrevs);
    let commons = args.seed_commons.or(cfg.seed_commons);
    let c = args.c.or(cfg.c);
    let estimate = match (abbrevs, commons) {
        (Some(a), Some(cm)) => {
            let agg_path = args.aggregate.or(cfg.aggregate);
            let agg = read_aggregate(require(agg_path.as_ref(), "aggregate")?)?;
            let window = range(args.window, cfg.window, YearRange::DEFAULT_WINDOW)?;
            let mean_window = range(args.mean_window, cfg.mean_window, YearRange::DEFAULT_MEAN_WINDOW)?;
            let est = estimate_share_params(
                &agg.finalize(&window),
                &read_word_list(&a)?,
                &read_word_list(&cm)?,
                &window,
                &mean_window,
                pooling(args.pooling, cfg.pooling)?,
            )?;
            for w in &est.warnings {
                eprintln!("warning: seed `{}`: {}", w.word, w.reason);
            }
            Some(est)
        }
        (None, None) => None,
        _ => bail!("seed lists must be given together"),
    };
    let hypothesis = match &estimate {
        Some(est) => HypothesisParams::new(est.mean_p0, est.mean_p1, c.unwrap_or(1.0))?,
        None => hypothesis(args.p0.or(cfg.p0), args.p1.or(cfg.p1), c)?,
    };
    let alpha_target = args.alpha.or(cfg.alpha).unwrap_or(0.001);
    let beta_target = args.beta.or(cfg.beta).unwrap_or(0.001);
    let operating_point = min_usage_for_error(&hypothesis, alpha_target, beta_target)?;
    let report = ParamsReport {
        p0: hypothesis.p0(),
        p1: hypothesis.p1(),
        c: hypothesis.c(),
        alpha_target,
        beta_target,
        estimate,
        operating_point,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

//! Reading Google-Books-Ngram style 1-gram and 2-gram files into per-word
//! yearly usage profiles.
//!
//! Each line is `ngram TAB year TAB match_count TAB volume_count`. A
//! unigram line `w` contributes to the total usage of `w`, a bigram line
//! `w .` to its with-period usage. Shards are aggregated independently and
//! combined with [`Aggregate::merge`], which is a commutative monoid over
//! the raw counts.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dict::{median_share, yearly_shares};

/// Inclusive range of years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    /// Years retained and analysed by default.
    pub const DEFAULT_WINDOW: YearRange = YearRange { start: 1990, end: 2008 };
    /// Sub-window over which share estimates are averaged.
    pub const DEFAULT_MEAN_WINDOW: YearRange = YearRange { start: 1998, end: 2008 };
    /// Years covered by the usage dynamics report.
    pub const DEFAULT_DYNAMICS: YearRange = YearRange { start: 1940, end: 2008 };
    /// Years a corpus line may carry before it is rejected as corrupt.
    pub const PLAUSIBLE: YearRange = YearRange { start: 1500, end: 2100 };

    pub fn new(start: i32, end: i32) -> Result<Self, RangeError> {
        if start > end {
            return Err(RangeError(format!("{start}-{end}")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }

    pub fn years(&self) -> std::ops::RangeInclusive<i32> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid year range `{0}` (expected START-END with START <= END)")]
pub struct RangeError(String);

impl FromStr for YearRange {
    type Err = RangeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || RangeError(s.to_string());
        let (a, b) = s.split_once('-').ok_or_else(err)?;
        let start = a.trim().parse().map_err(|_| err())?;
        let end = b.trim().parse().map_err(|_| err())?;
        YearRange::new(start, end).map_err(|_| err())
    }
}

/// One parsed corpus line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramRecord {
    pub tokens: Vec<String>,
    pub year: i32,
    pub match_count: u64,
    pub volume_count: u64,
}

impl NgramRecord {
    /// The line in corpus format, without the trailing newline.
    pub fn render(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.tokens.join(" "),
            self.year,
            self.match_count,
            self.volume_count
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("expected 4 tab-separated fields, found {0}")]
    FieldCount(usize),
    #[error("empty token in ngram field")]
    EmptyToken,
    #[error("ngram has {0} tokens, only 1-grams and 2-grams are supported")]
    TokenCount(usize),
    #[error("{field} is not a non-negative integer: `{value}`")]
    BadInteger { field: &'static str, value: String },
    #[error("year {0} outside plausible range")]
    Year(i32),
    #[error("volume_count must be at least 1")]
    ZeroVolume,
    #[error("volume_count {volumes} exceeds match_count {matches}")]
    VolumesExceedMatches { volumes: u64, matches: u64 },
    #[error("line is not valid UTF-8")]
    Utf8,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

fn parse_count(field: &'static str, value: &str) -> Result<u64, ParseErrorKind> {
    // u64::from_str accepts a leading '+'; the corpus never has one
    if value.starts_with('+') {
        return Err(ParseErrorKind::BadInteger {
            field,
            value: value.to_string(),
        });
    }
    value.parse().map_err(|_| ParseErrorKind::BadInteger {
        field,
        value: value.to_string(),
    })
}

/// Parses one corpus line. `line_no` is only used for error reporting.
pub fn parse_line(line: &str, line_no: usize, plausible: &YearRange) -> Result<NgramRecord, ParseError> {
    parse_fields(line.strip_suffix('\n').unwrap_or(line), plausible).map_err(|kind| ParseError { line: line_no, kind })
}

fn parse_fields(line: &str, plausible: &YearRange) -> Result<NgramRecord, ParseErrorKind> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(ParseErrorKind::FieldCount(fields.len()));
    }
    let tokens: Vec<String> = fields[0].split(' ').map(str::to_string).collect();
    if tokens.iter().any(|t| t.is_empty() || t.contains(['\n', '\r'])) {
        return Err(ParseErrorKind::EmptyToken);
    }
    if tokens.len() > 2 {
        return Err(ParseErrorKind::TokenCount(tokens.len()));
    }
    let year: i32 = fields[1].parse().map_err(|_| ParseErrorKind::BadInteger {
        field: "year",
        value: fields[1].to_string(),
    })?;
    if !plausible.contains(year) {
        return Err(ParseErrorKind::Year(year));
    }
    let match_count = parse_count("match_count", fields[2])?;
    let volume_count = parse_count("volume_count", fields[3])?;
    if volume_count == 0 {
        return Err(ParseErrorKind::ZeroVolume);
    }
    if volume_count > match_count {
        return Err(ParseErrorKind::VolumesExceedMatches {
            volumes: volume_count,
            matches: match_count,
        });
    }
    Ok(NgramRecord {
        tokens,
        year,
        match_count,
        volume_count,
    })
}

/// Alphabets a candidate word form may be written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    Cyrillic,
    Latin,
}

impl Script {
    fn contains(self, c: char) -> bool {
        match self {
            Script::Cyrillic => {
                matches!(c, '\u{0400}'..='\u{052F}' | '\u{1C80}'..='\u{1C8F}' | '\u{2DE0}'..='\u{2DFF}' | '\u{A640}'..='\u{A69F}')
            }
            Script::Latin => c.is_ascii_alphabetic() || matches!(c, '\u{00C0}'..='\u{024F}' | '\u{1E00}'..='\u{1EFF}'),
        }
    }
}

impl FromStr for Script {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cyrillic" => Ok(Script::Cyrillic),
            "latin" => Ok(Script::Latin),
            other => Err(format!("unknown script `{other}` (expected cyrillic or latin)")),
        }
    }
}

/// Character-class filter and case policy applied to word forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordFilter {
    scripts: Vec<Script>,
    case_fold: bool,
}

impl Default for WordFilter {
    fn default() -> Self {
        Self::new(vec![Script::Cyrillic, Script::Latin], false)
    }
}

impl WordFilter {
    pub fn new(mut scripts: Vec<Script>, case_fold: bool) -> Self {
        scripts.sort();
        scripts.dedup();
        Self { scripts, case_fold }
    }

    pub fn scripts(&self) -> &[Script] {
        &self.scripts
    }

    pub fn case_fold(&self) -> bool {
        self.case_fold
    }

    /// True for non-empty tokens made only of letters from the allowed
    /// scripts; digits, punctuation and POS tags (`_NOUN`) are rejected.
    pub fn accepts(&self, token: &str) -> bool {
        !token.is_empty()
            && token
                .chars()
                .all(|c| c.is_alphabetic() && self.scripts.iter().any(|s| s.contains(c)))
    }

    pub fn normalize(&self, token: &str) -> String {
        if self.case_fold {
            token.to_lowercase()
        } else {
            token.to_string()
        }
    }
}

/// A `w .` bigram: evidence that `w` was used with the period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodObservation {
    pub word: String,
    pub year: i32,
    pub match_count: u64,
    pub volume_count: u64,
}

/// Returns the with-period observation carried by a bigram record, if any.
pub fn classify_bigram(record: &NgramRecord, filter: &WordFilter) -> Option<PeriodObservation> {
    match record.tokens.as_slice() {
        [word, period] if period == "." && filter.accepts(word) => Some(PeriodObservation {
            word: filter.normalize(word),
            year: record.year,
            match_count: record.match_count,
            volume_count: record.volume_count,
        }),
        _ => None,
    }
}

/// Settings that must agree between shards before they can be merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Years retained; records outside are counted and dropped.
    pub window: YearRange,
    pub filter: WordFilter,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            window: YearRange::DEFAULT_WINDOW,
            filter: WordFilter::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorPolicy {
    #[default]
    Skip,
    Abort,
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot merge aggregates built with different configurations")]
    ConfigMismatch,
    #[error("malformed aggregate state: {0}")]
    State(#[from] serde_json::Error),
    #[error("failed to start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Raw per-year counts for one word form, before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "[u64; 3]", into = "[u64; 3]")]
pub struct RawCounts {
    pub with_period: u64,
    pub total: u64,
    pub volumes_with_period: u64,
}

impl From<[u64; 3]> for RawCounts {
    fn from([with_period, total, volumes_with_period]: [u64; 3]) -> Self {
        Self {
            with_period,
            total,
            volumes_with_period,
        }
    }
}

impl From<RawCounts> for [u64; 3] {
    fn from(c: RawCounts) -> Self {
        [c.with_period, c.total, c.volumes_with_period]
    }
}

impl RawCounts {
    fn add(&mut self, other: &RawCounts) {
        self.with_period += other.with_period;
        self.total += other.total;
        self.volumes_with_period += other.volumes_with_period;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines: u64,
    pub skipped: u64,
    pub unigrams: u64,
    pub period_bigrams: u64,
    /// Parsed records that matched no word form or fell outside the window.
    pub ignored: u64,
}

impl IngestStats {
    fn add(&mut self, other: &IngestStats) {
        self.lines += other.lines;
        self.skipped += other.skipped;
        self.unigrams += other.unigrams;
        self.period_bigrams += other.period_bigrams;
        self.ignored += other.ignored;
    }
}

/// Mergeable aggregation state over any number of input shards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregate {
    config: IngestConfig,
    stats: IngestStats,
    /// SHA-256 digests of the input files, sorted.
    inputs: Vec<String>,
    words: BTreeMap<String, BTreeMap<i32, RawCounts>>,
}

impl Aggregate {
    pub fn new(config: IngestConfig) -> Self {
        Self {
            config,
            stats: IngestStats::default(),
            inputs: Vec::new(),
            words: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &IngestConfig {
        &self.config
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn input_digests(&self) -> &[String] {
        &self.inputs
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn raw_counts(&self) -> &BTreeMap<String, BTreeMap<i32, RawCounts>> {
        &self.words
    }

    /// Number of (word, year) cells whose with-period count exceeds the
    /// unigram total and will be normalized on finalize.
    pub fn inconsistent_cells(&self) -> u64 {
        self.words
            .values()
            .flat_map(|s| s.values())
            .filter(|c| c.with_period > c.total)
            .count() as u64
    }

    fn cell(&mut self, word: &str, year: i32) -> &mut RawCounts {
        if !self.words.contains_key(word) {
            self.words.insert(word.to_string(), BTreeMap::new());
        }
        self.words
            .get_mut(word)
            .expect("inserted above")
            .entry(year)
            .or_default()
    }

    pub fn add_observation(&mut self, obs: &PeriodObservation) {
        if !self.config.window.contains(obs.year) {
            self.stats.ignored += 1;
            return;
        }
        self.stats.period_bigrams += 1;
        let cell = self.cell(&obs.word, obs.year);
        cell.with_period += obs.match_count;
        cell.volumes_with_period += obs.volume_count;
    }

    pub fn add_record(&mut self, record: &NgramRecord) {
        match record.tokens.len() {
            1 => {
                let token = &record.tokens[0];
                if !self.config.window.contains(record.year) || !self.config.filter.accepts(token) {
                    self.stats.ignored += 1;
                    return;
                }
                self.stats.unigrams += 1;
                let word = self.config.filter.normalize(token);
                self.cell(&word, record.year).total += record.match_count;
            }
            _ => match classify_bigram(record, &self.config.filter) {
                Some(obs) => self.add_observation(&obs),
                None => self.stats.ignored += 1,
            },
        }
    }

    /// Reads corpus lines from `reader`. Line numbers in errors are 1-based.
    pub fn ingest_reader<R: BufRead>(&mut self, mut reader: R, policy: ErrorPolicy) -> Result<(), ReadError> {
        let mut buf = Vec::with_capacity(256);
        let mut line_no = 0usize;
        loop {
            buf.clear();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            line_no += 1;
            let bytes = buf.strip_suffix(b"\n").unwrap_or(&buf);
            if bytes.is_empty() {
                continue;
            }
            self.stats.lines += 1;
            let parsed = std::str::from_utf8(bytes)
                .map_err(|_| ParseError {
                    line: line_no,
                    kind: ParseErrorKind::Utf8,
                })
                .and_then(|line| parse_line(line, line_no, &YearRange::PLAUSIBLE));
            match parsed {
                Ok(record) => self.add_record(&record),
                Err(_) if policy == ErrorPolicy::Skip => self.stats.skipped += 1,
                Err(err) => return Err(err.into()),
            }
        }
        Ok(())
    }

    /// Ingests one file, transparently decompressing `*.gz`, and records
    /// the digest of its bytes.
    pub fn ingest_file(&mut self, path: &Path, policy: ErrorPolicy) -> Result<(), IngestError> {
        let with_path = |err: ReadError| match err {
            ReadError::Parse(source) => IngestError::Parse {
                path: path.to_path_buf(),
                source,
            },
            ReadError::Io(source) => IngestError::Io {
                path: path.to_path_buf(),
                source,
            },
        };
        let file = File::open(path).map_err(|e| with_path(e.into()))?;
        let mut hashing = HashingReader::new(file);
        if path.extension().is_some_and(|e| e == "gz") {
            self.ingest_reader(BufReader::new(MultiGzDecoder::new(&mut hashing)), policy)
        } else {
            self.ingest_reader(BufReader::with_capacity(1 << 16, &mut hashing), policy)
        }
        .map_err(with_path)?;
        // drain anything the decoder left unread so the digest covers the file
        io::copy(&mut hashing, &mut io::sink()).map_err(|e| with_path(e.into()))?;
        self.inputs.push(hashing.finish());
        self.inputs.sort();
        Ok(())
    }

    /// Pointwise sum of two states built with the same configuration.
    pub fn merge(mut self, other: Aggregate) -> Result<Aggregate, IngestError> {
        self.merge_from(other)?;
        Ok(self)
    }

    pub fn merge_from(&mut self, other: Aggregate) -> Result<(), IngestError> {
        if self.config != other.config {
            return Err(IngestError::ConfigMismatch);
        }
        self.stats.add(&other.stats);
        self.inputs.extend(other.inputs);
        self.inputs.sort();
        for (word, series) in other.words {
            match self.words.get_mut(&word) {
                Some(mine) => {
                    for (year, counts) in series {
                        mine.entry(year).or_default().add(&counts);
                    }
                }
                None => {
                    self.words.insert(word, series);
                }
            }
        }
        Ok(())
    }

    /// Normalized per-word profiles with aggregates over `window`.
    pub fn finalize(&self, window: &YearRange) -> Profiles {
        self.words
            .iter()
            .map(|(word, series)| (word.clone(), WordProfile::from_raw(word, series, window)))
            .collect()
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self, IngestError> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// Ingests every file as its own shard on a pool of `threads` workers and
/// merges the shard states. The result does not depend on `threads`.
pub fn ingest_files(
    paths: &[PathBuf],
    config: &IngestConfig,
    policy: ErrorPolicy,
    threads: usize,
) -> Result<Aggregate, IngestError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
    pool.install(|| {
        paths
            .par_iter()
            .map(|path| {
                let mut shard = Aggregate::new(config.clone());
                shard.ingest_file(path, policy)?;
                Ok(shard)
            })
            .try_reduce(|| Aggregate::new(config.clone()), Aggregate::merge)
    })
}

struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> HashingReader<R> {
    fn new(inner: R) -> Self {
        Self {
            inner,
            hasher: Sha256::new(),
        }
    }

    fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

/// One year of normalized usage for a word form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearlyUsage {
    pub year: i32,
    pub with_period: u64,
    pub total: u64,
    pub volumes_with_period: u64,
}

/// Finalized usage profile of one word form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordProfile {
    pub word: String,
    /// Every retained year, including those outside `window`.
    pub series: BTreeMap<i32, YearlyUsage>,
    pub window: YearRange,
    /// `n`: with-period usages inside the window.
    pub with_period_total: u64,
    /// `N`: all usages inside the window.
    pub usage_total: u64,
    pub median_share: Option<f64>,
    pub active_years: u32,
    pub volumes_total: u64,
    /// Years where the with-period count exceeded the unigram total.
    pub clamped_years: u32,
    /// Years with with-period usage but no unigram line.
    pub missing_unigram_years: u32,
}

pub type Profiles = BTreeMap<String, WordProfile>;

impl WordProfile {
    fn from_raw(word: &str, raw: &BTreeMap<i32, RawCounts>, window: &YearRange) -> Self {
        let mut profile = WordProfile {
            word: word.to_string(),
            series: BTreeMap::new(),
            window: *window,
            with_period_total: 0,
            usage_total: 0,
            median_share: None,
            active_years: 0,
            volumes_total: 0,
            clamped_years: 0,
            missing_unigram_years: 0,
        };
        for (&year, counts) in raw {
            let mut usage = YearlyUsage {
                year,
                with_period: counts.with_period,
                total: counts.total,
                volumes_with_period: counts.volumes_with_period,
            };
            let in_window = window.contains(year);
            if usage.total == 0 && usage.with_period > 0 {
                usage.total = usage.with_period;
                if in_window {
                    profile.missing_unigram_years += 1;
                }
            } else if usage.with_period > usage.total {
                usage.with_period = usage.total;
                if in_window {
                    profile.clamped_years += 1;
                }
            }
            profile.series.insert(year, usage);
        }
        profile.recompute();
        profile
    }

    /// Builds a profile from already-normalized yearly usage.
    pub fn from_series(word: &str, series: impl IntoIterator<Item = YearlyUsage>, window: YearRange) -> Self {
        let mut profile = WordProfile {
            word: word.to_string(),
            series: series
                .into_iter()
                .map(|u| {
                    assert!(u.with_period <= u.total, "with_period exceeds total for {word}");
                    (u.year, u)
                })
                .collect(),
            window,
            with_period_total: 0,
            usage_total: 0,
            median_share: None,
            active_years: 0,
            volumes_total: 0,
            clamped_years: 0,
            missing_unigram_years: 0,
        };
        profile.recompute();
        profile
    }

    fn recompute(&mut self) {
        let in_window = self.series.values().filter(|u| self.window.contains(u.year));
        let (mut n, mut big_n, mut vols, mut active) = (0, 0, 0, 0);
        for u in in_window {
            n += u.with_period;
            big_n += u.total;
            vols += u.volumes_with_period;
            if u.total > 0 {
                active += 1;
            }
        }
        self.with_period_total = n;
        self.usage_total = big_n;
        self.volumes_total = vols;
        self.active_years = active;
        let shares: Vec<f64> = yearly_shares(self).into_iter().map(|(_, s)| s).collect();
        self.median_share = median_share(&shares);
    }

    /// True when any year in the window needed count normalization.
    pub fn has_clamped_counts(&self) -> bool {
        self.clamped_years > 0 || self.missing_unigram_years > 0
    }
}

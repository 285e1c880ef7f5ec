//! Synthetic corpora with known ground truth.
//!
//! Ngram files follow the binomial usage model directly: for every word
//! and year a total count is drawn log-uniformly, and the with-period
//! count is drawn from `Binomial(total, p)`. Running text is assembled
//! from the same vocabulary with planted abbreviations and exact gold
//! sentence boundaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{NgramRecord, YearRange};
use crate::stats::HypothesisParams;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A planted word, optionally with its own with-period share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordSpec {
    Bare(String),
    Weighted { word: String, p: f64 },
}

impl WordSpec {
    pub fn word(&self) -> &str {
        match self {
            WordSpec::Bare(w) | WordSpec::Weighted { word: w, .. } => w,
        }
    }

    fn p(&self, default: f64) -> f64 {
        match self {
            WordSpec::Bare(_) => default,
            WordSpec::Weighted { p, .. } => *p,
        }
    }
}

fn default_p0() -> f64 {
    HypothesisParams::DEFAULT_P0
}
fn default_p1() -> f64 {
    HypothesisParams::DEFAULT_P1
}
fn default_years() -> YearRange {
    YearRange::DEFAULT_WINDOW
}
fn default_min_total() -> u64 {
    40
}
fn default_max_total() -> u64 {
    5000
}
fn default_volume_divisor() -> u64 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    #[serde(default = "default_years")]
    pub years: YearRange,
    #[serde(default)]
    pub abbrevs: Vec<WordSpec>,
    #[serde(default)]
    pub commons: Vec<WordSpec>,
    /// Additional randomly spelled abbreviations.
    #[serde(default)]
    pub random_abbrevs: usize,
    /// Additional randomly spelled common words.
    #[serde(default)]
    pub random_commons: usize,
    #[serde(default = "default_p1")]
    pub p1: f64,
    #[serde(default = "default_p0")]
    pub p0: f64,
    /// Yearly totals are log-uniform over `min_total..=max_total`.
    #[serde(default = "default_min_total")]
    pub min_total: u64,
    #[serde(default = "default_max_total")]
    pub max_total: u64,
    /// Volume counts are `max(1, ceil(match_count / volume_divisor))`.
    #[serde(default = "default_volume_divisor")]
    pub volume_divisor: u64,
    /// Probability that a period occurrence is recorded as a comma.
    #[serde(default)]
    pub comma_swap_prob: f64,
    /// Abbreviations that precede proper nouns in generated text.
    #[serde(default)]
    pub titles: Vec<String>,
    #[serde(default)]
    pub proper_nouns: Vec<String>,
}

impl SynthSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            years: default_years(),
            abbrevs: Vec::new(),
            commons: Vec::new(),
            random_abbrevs: 0,
            random_commons: 0,
            p1: HypothesisParams::DEFAULT_P1,
            p0: HypothesisParams::DEFAULT_P0,
            min_total: default_min_total(),
            max_total: default_max_total(),
            volume_divisor: default_volume_divisor(),
            comma_swap_prob: 0.0,
            titles: Vec::new(),
            proper_nouns: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        for (name, p) in [
            ("p0", self.p0),
            ("p1", self.p1),
            ("comma_swap_prob", self.comma_swap_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is outside [0, 1]"));
            }
        }
        for w in self.abbrevs.iter().chain(&self.commons) {
            let p = w.p(0.5);
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("p = {p} for `{}` is outside [0, 1]", w.word()));
            }
            if w.word().is_empty() || w.word().chars().any(|c| c.is_whitespace()) {
                return bad(format!("`{}` is not a single word", w.word()));
            }
        }
        let abbrevs: BTreeSet<&str> = self.abbrevs.iter().map(WordSpec::word).collect();
        if let Some(w) = self.commons.iter().find(|w| abbrevs.contains(w.word())) {
            return bad(format!("`{}` is in both word lists", w.word()));
        }
        if self.titles.iter().any(|t| self.commons.iter().any(|c| c.word() == t)) {
            return bad("a title is also a common word".to_string());
        }
        if self.min_total == 0 || self.min_total > self.max_total {
            return bad(format!(
                "total range {}..{} is empty or starts at 0",
                self.min_total, self.max_total
            ));
        }
        if self.volume_divisor == 0 {
            return bad("volume_divisor must be at least 1".to_string());
        }
        if !YearRange::PLAUSIBLE.contains(self.years.start) || !YearRange::PLAUSIBLE.contains(self.years.end) {
            return bad(format!("years {} fall outside {}", self.years, YearRange::PLAUSIBLE));
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Named and random words with their true shares.
    pub fn resolve_words(&self) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
        let mut rng = self.rng(0);
        let mut used: BTreeSet<String> = self
            .abbrevs
            .iter()
            .chain(&self.commons)
            .map(|w| w.word().to_string())
            .chain(self.titles.iter().cloned())
            .collect();
        let mut abbrevs: BTreeMap<String, f64> = self
            .abbrevs
            .iter()
            .map(|w| (w.word().to_string(), w.p(self.p1)))
            .collect();
        let mut commons: BTreeMap<String, f64> = self
            .commons
            .iter()
            .map(|w| (w.word().to_string(), w.p(self.p0)))
            .collect();
        for _ in 0..self.random_abbrevs {
            abbrevs.insert(fresh_word(&mut rng, &mut used, 2, 4), self.p1);
        }
        for _ in 0..self.random_commons {
            commons.insert(fresh_word(&mut rng, &mut used, 4, 9), self.p0);
        }
        (abbrevs, commons)
    }
}

const LETTERS: [char; 32] = [
    'а', 'б', 'в', 'г', 'д', 'е', 'ж', 'з', 'и', 'й', 'к', 'л', 'м', 'н', 'о', 'п', 'р', 'с', 'т', 'у', 'ф', 'х', 'ц',
    'ч', 'ш', 'щ', 'ъ', 'ы', 'ь', 'э', 'ю', 'я',
];

fn fresh_word(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>, min_len: usize, max_len: usize) -> String {
    loop {
        let len = rng.random_range(min_len..=max_len);
        let word: String = (0..len).map(|_| LETTERS[rng.random_range(0..LETTERS.len())]).collect();
        if used.insert(word.clone()) {
            return word;
        }
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub abbreviations: BTreeMap<String, f64>,
    pub commons: BTreeMap<String, f64>,
    /// Per word: `[with_period, total]` summed over all generated years.
    pub totals: BTreeMap<String, [u64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthNgrams {
    pub unigrams: Vec<NgramRecord>,
    pub bigrams: Vec<NgramRecord>,
    pub truth: GroundTruth,
}

fn record(tokens: &[&str], year: i32, count: u64, divisor: u64) -> NgramRecord {
    NgramRecord {
        tokens: tokens.iter().map(|t| t.to_string()).collect(),
        year,
        match_count: count,
        volume_count: count.div_ceil(divisor).max(1),
    }
}

/// Draws the unigram and bigram records for every word and year.
pub fn generate_ngrams(spec: &SynthSpec) -> Result<SynthNgrams, SynthError> {
    spec.validate()?;
    let (abbreviations, commons) = spec.resolve_words();
    let mut rng = spec.rng(1);
    let (lo, hi) = ((spec.min_total as f64).ln(), (spec.max_total as f64 + 1.0).ln());
    let mut unigrams = Vec::new();
    let mut bigrams = Vec::new();
    let mut totals = BTreeMap::new();
    for (word, &p) in abbreviations.iter().chain(&commons) {
        let (mut wp_sum, mut total_sum) = (0u64, 0u64);
        for year in spec.years.years() {
            let total = (rng.random_range(lo..hi).exp().floor() as u64).clamp(spec.min_total, spec.max_total);
            let hits = Binomial::new(total, p).expect("p validated").sample(&mut rng);
            let swapped = if spec.comma_swap_prob > 0.0 && hits > 0 {
                Binomial::new(hits, spec.comma_swap_prob)
                    .expect("p validated")
                    .sample(&mut rng)
            } else {
                0
            };
            let with_period = hits - swapped;
            unigrams.push(record(&[word], year, total, spec.volume_divisor));
            if with_period > 0 {
                bigrams.push(record(&[word, "."], year, with_period, spec.volume_divisor));
            }
            if swapped > 0 {
                bigrams.push(record(&[word, ","], year, swapped, spec.volume_divisor));
            }
            wp_sum += with_period;
            total_sum += total;
        }
        totals.insert(word.clone(), [wp_sum, total_sum]);
    }
    Ok(SynthNgrams {
        unigrams,
        bigrams,
        truth: GroundTruth {
            abbreviations,
            commons,
            totals,
        },
    })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SynthError + '_ {
    move |source| SynthError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl SynthNgrams {
    /// Writes `1gram-NN.tsv` and `2gram-NN.tsv` shards (records dealt
    /// round-robin) and `truth.json`. Returns the ngram file paths.
    pub fn write_files(&self, dir: &Path, shards: usize) -> Result<Vec<PathBuf>, SynthError> {
        let shards = shards.max(1);
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut paths = Vec::new();
        for (prefix, records) in [("1gram", &self.unigrams), ("2gram", &self.bigrams)] {
            for shard in 0..shards {
                let path = dir.join(format!("{prefix}-{shard:02}.tsv"));
                let file = File::create(&path).map_err(io_err(&path))?;
                let mut out = BufWriter::new(file);
                for rec in records.iter().skip(shard).step_by(shards) {
                    writeln!(out, "{}", rec.render()).map_err(io_err(&path))?;
                }
                out.flush().map_err(io_err(&path))?;
                paths.push(path);
            }
        }
        let truth_path = dir.join("truth.json");
        let file = File::create(&truth_path).map_err(io_err(&truth_path))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &self.truth)?;
        Ok(paths)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Exact annotations for a generated text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldText {
    /// Byte offsets at which sentences end.
    pub boundaries: Vec<usize>,
    /// Abbreviation tokens including their period.
    pub abbreviations: Vec<GoldSpan>,
    pub abbreviation_words: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthText {
    pub text: String,
    pub gold: GoldText,
}

struct TextBuilder {
    text: String,
    abbreviations: Vec<GoldSpan>,
}

impl TextBuilder {
    fn word(&mut self, w: &str) {
        if !self.text.is_empty() && !self.text.ends_with(' ') {
            self.text.push(' ');
        }
        self.text.push_str(w);
    }

    fn abbreviation(&mut self, stem: &str) {
        self.word(stem);
        let start = self.text.len() - stem.len();
        self.text.push('.');
        self.abbreviations.push(GoldSpan {
            start,
            end: self.text.len(),
            text: self.text[start..].to_string(),
        });
    }
}

/// Generates `sentences` sentences. Abbreviations appear mid-sentence
/// before lowercase words, at sentence ends, and (for titles) before
/// capitalized proper nouns.
pub fn generate_text(spec: &SynthSpec, sentences: usize) -> Result<SynthText, SynthError> {
    spec.validate()?;
    if sentences == 0 {
        return Err(SynthError::Invalid("sentence count must be at least 1".to_string()));
    }
    let (abbrevs, commons) = spec.resolve_words();
    let abbrevs: Vec<&str> = abbrevs.keys().map(String::as_str).collect();
    let commons: Vec<&str> = commons.keys().map(String::as_str).collect();
    if commons.is_empty() {
        return Err(SynthError::Invalid("text needs at least one common word".to_string()));
    }
    let mut rng = spec.rng(2);
    let proper: Vec<String> = if spec.proper_nouns.is_empty() {
        let mut used: BTreeSet<String> = commons.iter().chain(&abbrevs).map(|w| w.to_string()).collect();
        (0..20)
            .map(|_| capitalize(&fresh_word(&mut rng, &mut used, 4, 8)))
            .collect()
    } else {
        spec.proper_nouns.clone()
    };
    let pick = |rng: &mut ChaCha8Rng, list: &[&str]| list[rng.random_range(0..list.len())].to_string();

    let mut b = TextBuilder {
        text: String::new(),
        abbreviations: Vec::new(),
    };
    let mut boundaries = Vec::with_capacity(sentences);
    let mut words = BTreeSet::new();
    for _ in 0..sentences {
        b.word(&capitalize(&pick(&mut rng, &commons)));
        let length = rng.random_range(3..=9);
        for _ in 0..length {
            let roll: f64 = rng.random();
            if roll < 0.15 && !abbrevs.is_empty() {
                let stem = pick(&mut rng, &abbrevs);
                b.abbreviation(&stem);
                words.insert(stem);
                b.word(&pick(&mut rng, &commons));
            } else if roll < 0.25 && !spec.titles.is_empty() {
                let title = &spec.titles[rng.random_range(0..spec.titles.len())];
                b.abbreviation(title);
                words.insert(title.clone());
                b.word(&proper[rng.random_range(0..proper.len())]);
            } else if roll < 0.28 {
                let (whole, frac) = (rng.random_range(1..100u32), rng.random_range(0..100u32));
                b.word(&format!("{whole}.{frac}"));
            } else {
                b.word(&pick(&mut rng, &commons));
                if rng.random_bool(0.08) {
                    b.text.push(',');
                }
            }
        }
        if !abbrevs.is_empty() && rng.random_bool(0.2) {
            let stem = pick(&mut rng, &abbrevs);
            b.abbreviation(&stem);
            words.insert(stem);
        } else {
            b.word(&pick(&mut rng, &commons));
            b.text.push('.');
        }
        boundaries.push(b.text.len());
    }
    Ok(SynthText {
        text: b.text,
        gold: GoldText {
            boundaries,
            abbreviations: b.abbreviations,
            abbreviation_words: words,
        },
    })
}

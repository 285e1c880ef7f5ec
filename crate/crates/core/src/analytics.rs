//! Plot-ready summaries of an abbreviation dictionary.
//!
//! Every report is a table keyed by its first column (volume cap, year or
//! word length), written either as TSV with a single `#` header line or as
//! a JSON document that also carries the report metadata.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dict::AbbrevEntry;
use crate::ingest::{Profiles, YearRange};
use crate::stats::{estimate_share_params, Pooling, StatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    RareCumulative,
    PSeries,
    LengthHistogram,
    FreqByLength,
    Dynamics,
}

impl ReportKind {
    pub const ALL: [ReportKind; 5] = [
        ReportKind::RareCumulative,
        ReportKind::PSeries,
        ReportKind::LengthHistogram,
        ReportKind::FreqByLength,
        ReportKind::Dynamics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::RareCumulative => "rare-cumulative",
            ReportKind::PSeries => "p-series",
            ReportKind::LengthHistogram => "length-histogram",
            ReportKind::FreqByLength => "freq-by-length",
            ReportKind::Dynamics => "dynamics",
        }
    }

    /// Whether the report is computed from dictionary entries.
    pub fn needs_dictionary(self) -> bool {
        self != ReportKind::PSeries
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ReportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown report kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: ReportKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub meta: BTreeMap<String, Value>,
}

impl Report {
    fn new(kind: ReportKind, columns: &[&str]) -> Self {
        Self {
            kind,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    /// Value in `column` of the row whose key equals `key`.
    pub fn lookup(&self, key: f64, column: &str) -> Option<f64> {
        let col = self.columns.iter().position(|c| c == column)?;
        self.rows.iter().find(|r| r[0] == key).map(|r| r[col])
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# {}", self.columns.join("\t"))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(out, "{}", cells.join("\t"))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)
    }
}

/// Cumulative rarity counts: for `v = 1..=max_volumes`, how many entries
/// occur in at most `v` volumes.
pub fn rare_cumulative(entries: &[AbbrevEntry], max_volumes: u64) -> Report {
    let mut by_volume: BTreeMap<u64, u64> = BTreeMap::new();
    for e in entries {
        *by_volume.entry(e.volumes_total).or_default() += 1;
    }
    let mut report = Report::new(ReportKind::RareCumulative, &["max_volumes", "entries"]);
    let mut running = 0u64;
    let mut counts = by_volume.into_iter().peekable();
    for v in 1..=max_volumes.max(1) {
        while let Some((_, c)) = counts.next_if(|&(vol, _)| vol <= v) {
            running += c;
        }
        report.rows.push(vec![v as f64, running as f64]);
    }
    report.with_meta("entries_total", entries.len())
}

/// Yearly with-period shares of the two seed lists.
pub fn p_series(
    profiles: &Profiles,
    seed_abbrevs: &[String],
    seed_commons: &[String],
    window: &YearRange,
    mean_window: &YearRange,
    pooling: Pooling,
) -> Result<Report, StatError> {
    let est = estimate_share_params(profiles, seed_abbrevs, seed_commons, window, mean_window, pooling)?;
    let mut report = Report::new(ReportKind::PSeries, &["year", "p0", "p1"]);
    for (&year, &p0) in &est.p0_by_year {
        if let Some(&p1) = est.p1_by_year.get(&year) {
            report.rows.push(vec![year as f64, p0, p1]);
        }
    }
    Ok(report
        .with_meta("window", window.to_string())
        .with_meta("mean_window", mean_window.to_string())
        .with_meta("mean_p0", est.mean_p0)
        .with_meta("mean_p1", est.mean_p1)
        .with_meta("seed_warnings", est.warnings.len()))
}

/// Number of entries per word length in code points.
pub fn length_histogram(entries: &[AbbrevEntry]) -> Report {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for e in entries {
        *counts.entry(e.word.chars().count()).or_default() += 1;
    }
    let mut report = Report::new(ReportKind::LengthHistogram, &["length", "entries"]);
    report.rows = counts.into_iter().map(|(l, c)| vec![l as f64, c as f64]).collect();
    report
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares fit over `(x, y)` points; `None` with fewer than two
/// distinct `x` values.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    if points.len() < 2 {
        return None;
    }
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - residual / syy };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyByLength {
    pub report: Report,
    /// `log10(frequency)` against length.
    pub fit: Option<LinearFit>,
    /// `log10(frequency)` against `log10(length)`.
    pub log_log_fit: Option<LinearFit>,
}

/// Total with-period usage per word length, with log-linear and log-log
/// fits. Lengths whose entries were never seen with the period are left
/// out since their logarithm is undefined.
pub fn frequency_by_length(entries: &[AbbrevEntry]) -> FrequencyByLength {
    let mut freq: BTreeMap<usize, u64> = BTreeMap::new();
    for e in entries {
        *freq.entry(e.word.chars().count()).or_default() += e.n_total;
    }
    let mut report = Report::new(
        ReportKind::FreqByLength,
        &["length", "frequency", "log10_length", "log10_frequency"],
    );
    let mut semi_log = Vec::new();
    let mut log_log = Vec::new();
    for (len, f) in freq.into_iter().filter(|&(_, f)| f > 0) {
        let (x, y) = (len as f64, (f as f64).log10());
        report.rows.push(vec![x, f as f64, x.log10(), y]);
        semi_log.push((x, y));
        log_log.push((x.log10(), y));
    }
    let fit = linear_fit(&semi_log);
    let log_log_fit = linear_fit(&log_log);
    for (prefix, f) in [("fit", fit), ("loglog_fit", log_log_fit)] {
        if let Some(f) = f {
            report = report
                .with_meta(&format!("{prefix}_slope"), f.slope)
                .with_meta(&format!("{prefix}_intercept"), f.intercept)
                .with_meta(&format!("{prefix}_r_squared"), f.r_squared);
        }
    }
    FrequencyByLength {
        report,
        fit,
        log_log_fit,
    }
}

/// Yearly with-period usage summed over all entries and over the `top_k`
/// most used ones. With `normalization`, both sums are divided by that
/// year's corpus total (years missing from it give zero).
pub fn dynamics(
    entries: &[AbbrevEntry],
    profiles: &Profiles,
    years: &YearRange,
    top_k: usize,
    normalization: Option<&BTreeMap<i32, u64>>,
) -> Report {
    let usage_in = |word: &str, year: i32| -> u64 {
        profiles
            .get(word)
            .and_then(|p| p.series.get(&year))
            .map_or(0, |u| u.with_period)
    };
    let mut ranked: Vec<(u64, &str)> = entries
        .iter()
        .map(|e| (years.years().map(|y| usage_in(&e.word, y)).sum(), e.word.as_str()))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let top: Vec<&str> = ranked.iter().take(top_k).map(|&(_, w)| w).collect();

    let mut report = Report::new(ReportKind::Dynamics, &["year", "total", "top_k", "top_k_share"]);
    for year in years.years() {
        let total: u64 = entries.iter().map(|e| usage_in(&e.word, year)).sum();
        let top_sum: u64 = top.iter().map(|w| usage_in(w, year)).sum();
        let share = if total > 0 { top_sum as f64 / total as f64 } else { 0.0 };
        let (total_v, top_v) = match normalization {
            Some(norm) => match norm.get(&year) {
                Some(&n) if n > 0 => (total as f64 / n as f64, top_sum as f64 / n as f64),
                _ => (0.0, 0.0),
            },
            None => (total as f64, top_sum as f64),
        };
        report.rows.push(vec![year as f64, total_v, top_v, share]);
    }
    report
        .with_meta("years", years.to_string())
        .with_meta("top_k", top_k)
        .with_meta("normalized", normalization.is_some())
}

#[derive(Debug, Error)]
pub enum TotalsError {
    #[error("totals entry {index} is malformed: `{item}`")]
    Malformed { index: usize, item: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads a corpus totals file: whitespace-separated items of the form
/// `year,match_count[,page_count,volume_count]`.
pub fn read_total_counts<R: BufRead>(reader: R) -> Result<BTreeMap<i32, u64>, TotalsError> {
    let mut totals = BTreeMap::new();
    let mut index = 0;
    for line in reader.lines() {
        for item in line?.split_whitespace() {
            index += 1;
            let mut fields = item.split(',');
            let parsed = match (fields.next(), fields.next()) {
                (Some(y), Some(c)) => y.parse::<i32>().ok().zip(c.parse::<u64>().ok()),
                _ => None,
            };
            let (year, count) = parsed.ok_or_else(|| TotalsError::Malformed {
                index,
                item: item.to_string(),
            })?;
            *totals.entry(year).or_default() += count;
        }
    }
    Ok(totals)
}

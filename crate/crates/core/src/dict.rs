//! Building the abbreviation dictionary from finalized word profiles.
//!
//! Two decision rules are available: the median yearly with-period share
//! compared against a fixed threshold (90% by default), and the binomial
//! likelihood-ratio test. Accepted candidates then pass through the
//! occasionalism filters on volume count and active years.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, BufRead, Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Profiles, WordProfile, YearRange};
use crate::stats::{
    alpha_error, beta_error, decision_cutoff, ln_likelihood_ratio, min_usage_for_error, solve_threshold,
    DecisionMethod, DecisionRecord, HypothesisParams, OperatingPoint, StatError, Verdict,
};

/// `(year, n / N)` for every year of the profile's window with usage.
pub fn yearly_shares(profile: &WordProfile) -> Vec<(i32, f64)> {
    profile
        .series
        .values()
        .filter(|u| profile.window.contains(u.year) && u.total > 0)
        .map(|u| (u.year, u.with_period as f64 / u.total as f64))
        .collect()
}

/// Median of the share values; `None` for an empty slice.
pub fn median_share(shares: &[f64]) -> Option<f64> {
    if shares.is_empty() {
        return None;
    }
    let mut sorted = shares.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

/// Abbreviation iff the median yearly share is strictly above `threshold`.
pub fn decide_median(profile: &WordProfile, threshold: f64) -> DecisionRecord {
    let verdict = match profile.median_share {
        Some(m) if m > threshold => Verdict::Abbreviation,
        _ => Verdict::CommonWord,
    };
    DecisionRecord {
        word: profile.word.clone(),
        usage_total: profile.usage_total,
        with_period: profile.with_period_total,
        eta: None,
        ln_likelihood: None,
        alpha: None,
        beta: None,
        verdict,
        method: DecisionMethod::MedianThreshold,
        undecidable: profile.median_share.is_none(),
    }
}

/// Likelihood-ratio verdict on the window-pooled `(n, N)`. The recorded
/// error probabilities are those of the rule as applied, i.e. at the first
/// integer count strictly above `eta`.
pub fn decide_lrt(profile: &WordProfile, params: &HypothesisParams) -> DecisionRecord {
    let (n, total) = (profile.with_period_total, profile.usage_total);
    let mut record = DecisionRecord {
        word: profile.word.clone(),
        usage_total: total,
        with_period: n,
        eta: None,
        ln_likelihood: None,
        alpha: None,
        beta: None,
        verdict: Verdict::CommonWord,
        method: DecisionMethod::Lrt,
        undecidable: false,
    };
    if total == 0 {
        record.undecidable = true;
        return record;
    }
    let eta = solve_threshold(total, params).expect("HypothesisParams guarantees p0 < p1");
    let cutoff = decision_cutoff(eta) as f64;
    record.eta = Some(eta);
    record.ln_likelihood = Some(ln_likelihood_ratio(n as f64, total as f64, params));
    record.alpha = Some(alpha_error(cutoff, total, params.p0()));
    record.beta = Some(beta_error(cutoff, total, params.p1()));
    if n as f64 > eta {
        record.verdict = Verdict::Abbreviation;
    }
    record
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    ClampedCounts,
    LowVolume,
    ShortTimespan,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::ClampedCounts => "clamped-counts",
            Flag::LowVolume => "low-volume",
            Flag::ShortTimespan => "short-timespan",
        }
    }
}

impl FromStr for Flag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clamped-counts" => Ok(Flag::ClampedCounts),
            "low-volume" => Ok(Flag::LowVolume),
            "short-timespan" => Ok(Flag::ShortTimespan),
            other => Err(format!("unknown flag `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbbrevEntry {
    pub word: String,
    pub decision: DecisionRecord,
    pub median_share: Option<f64>,
    pub n_total: u64,
    #[serde(rename = "N_total")]
    pub usage_total: u64,
    pub volumes_total: u64,
    pub active_years: u32,
    pub flags: BTreeSet<Flag>,
}

impl AbbrevEntry {
    pub fn new(profile: &WordProfile, decision: DecisionRecord) -> Self {
        let mut flags = BTreeSet::new();
        if profile.has_clamped_counts() {
            flags.insert(Flag::ClampedCounts);
        }
        Self {
            word: profile.word.clone(),
            decision,
            median_share: profile.median_share,
            n_total: profile.with_period_total,
            usage_total: profile.usage_total,
            volumes_total: profile.volumes_total,
            active_years: profile.active_years,
            flags,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedEntry {
    pub word: String,
    pub reasons: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<AbbrevEntry>,
    pub removed: Vec<RemovedEntry>,
}

/// Drops occasionalisms: entries seen in fewer than `min_volumes` volumes
/// or in fewer than `min_active_years` distinct years.
pub fn filter_occasional(entries: Vec<AbbrevEntry>, min_volumes: u64, min_active_years: u32) -> FilterOutcome {
    let mut kept = Vec::with_capacity(entries.len());
    let mut removed = Vec::new();
    for entry in entries {
        let mut reasons = Vec::new();
        if entry.volumes_total < min_volumes {
            reasons.push(Flag::LowVolume);
        }
        if entry.active_years < min_active_years {
            reasons.push(Flag::ShortTimespan);
        }
        if reasons.is_empty() {
            kept.push(entry);
        } else {
            removed.push(RemovedEntry {
                word: entry.word,
                reasons,
            });
        }
    }
    FilterOutcome { kept, removed }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuildMethod {
    #[default]
    Median,
    Lrt,
    BothMustAgree,
}

impl BuildMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BuildMethod::Median => "median",
            BuildMethod::Lrt => "lrt",
            BuildMethod::BothMustAgree => "both",
        }
    }
}

impl fmt::Display for BuildMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuildMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "median" => Ok(BuildMethod::Median),
            "lrt" => Ok(BuildMethod::Lrt),
            "both" | "both-must-agree" => Ok(BuildMethod::BothMustAgree),
            other => Err(format!("unknown method `{other}` (expected median, lrt or both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTargets {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub window: YearRange,
    pub method: BuildMethod,
    pub median_threshold: f64,
    pub params: HypothesisParams,
    /// When set, the minimum usage is derived from the operating point
    /// that meets these error rates instead of `min_usage`.
    pub error_targets: Option<ErrorTargets>,
    pub min_usage: u64,
    pub min_volumes: u64,
    pub min_active_years: u32,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            window: YearRange::DEFAULT_WINDOW,
            method: BuildMethod::Median,
            median_threshold: 0.9,
            params: HypothesisParams::default(),
            error_targets: None,
            min_usage: 40,
            min_volumes: 2,
            min_active_years: 2,
        }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("median threshold must lie in (0, 1), got {0}")]
    MedianThreshold(f64),
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error("profile for `{word}` was finalized over {found}, config expects {expected}")]
    WindowMismatch {
        word: String,
        found: YearRange,
        expected: YearRange,
    },
    #[error("dictionary line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl BuildConfig {
    pub fn validate(&self) -> Result<(), BuildError> {
        if !(self.median_threshold > 0.0 && self.median_threshold < 1.0) {
            return Err(BuildError::MedianThreshold(self.median_threshold));
        }
        if let Some(t) = self.error_targets {
            for v in [t.alpha, t.beta] {
                if !(v > 0.0 && v < 1.0) {
                    return Err(StatError::Target(v).into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildMeta {
    pub window: YearRange,
    pub method: BuildMethod,
    pub median_threshold: f64,
    pub params: HypothesisParams,
    pub error_targets: Option<ErrorTargets>,
    pub operating_point: Option<OperatingPoint>,
    /// Minimum `N_total` actually applied.
    pub min_usage: u64,
    pub min_volumes: u64,
    pub min_active_years: u32,
    pub case_fold: bool,
    pub corpus_fingerprint: Vec<String>,
    pub candidates: u64,
    pub undecidable: u64,
    pub accepted_before_filters: u64,
    pub removed_low_volume: u64,
    pub removed_short_timespan: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbbrevDictionary {
    pub meta: BuildMeta,
    pub entries: Vec<AbbrevEntry>,
    pub removed: Vec<RemovedEntry>,
}

/// Provenance of the profiles handed to [`build_dictionary`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusInfo {
    pub fingerprint: Vec<String>,
    pub case_fold: bool,
}

/// Classifies every profile and assembles the filtered dictionary. The
/// output is a pure function of the inputs.
pub fn build_dictionary(
    profiles: &Profiles,
    config: &BuildConfig,
    corpus: &CorpusInfo,
) -> Result<AbbrevDictionary, BuildError> {
    config.validate()?;
    if let Some(p) = profiles.values().find(|p| p.window != config.window) {
        return Err(BuildError::WindowMismatch {
            word: p.word.clone(),
            found: p.window,
            expected: config.window,
        });
    }
    let operating_point = config
        .error_targets
        .map(|t| min_usage_for_error(&config.params, t.alpha, t.beta))
        .transpose()?;
    let min_usage = operating_point.map_or(config.min_usage, |op| op.min_usage);

    let list: Vec<&WordProfile> = profiles.values().collect();
    let decisions: Vec<Option<DecisionRecord>> = list
        .par_iter()
        .map(|p| {
            if p.usage_total < min_usage.max(1) {
                return None;
            }
            Some(match config.method {
                BuildMethod::Median => decide_median(p, config.median_threshold),
                BuildMethod::Lrt => decide_lrt(p, &config.params),
                BuildMethod::BothMustAgree => {
                    let median = decide_median(p, config.median_threshold);
                    let mut lrt = decide_lrt(p, &config.params);
                    if !median.is_abbreviation() {
                        lrt.verdict = Verdict::CommonWord;
                    }
                    lrt
                }
            })
        })
        .collect();

    let undecidable = decisions.iter().filter(|d| d.is_none()).count() as u64;
    let accepted: Vec<AbbrevEntry> = list
        .iter()
        .zip(decisions)
        .filter_map(|(p, d)| {
            d.filter(DecisionRecord::is_abbreviation)
                .map(|d| AbbrevEntry::new(p, d))
        })
        .collect();
    let accepted_before_filters = accepted.len() as u64;
    let outcome = filter_occasional(accepted, config.min_volumes, config.min_active_years);
    let count_reason = |flag| outcome.removed.iter().filter(|r| r.reasons.contains(&flag)).count() as u64;

    Ok(AbbrevDictionary {
        meta: BuildMeta {
            window: config.window,
            method: config.method,
            median_threshold: config.median_threshold,
            params: config.params,
            error_targets: config.error_targets,
            operating_point,
            min_usage,
            min_volumes: config.min_volumes,
            min_active_years: config.min_active_years,
            case_fold: corpus.case_fold,
            corpus_fingerprint: corpus.fingerprint.clone(),
            candidates: profiles.len() as u64,
            undecidable,
            accepted_before_filters,
            removed_low_volume: count_reason(Flag::LowVolume),
            removed_short_timespan: count_reason(Flag::ShortTimespan),
        },
        entries: outcome.kept,
        removed: outcome.removed,
    })
}

pub const TSV_HEADER: &str =
    "# word\tmedian_share\tn_total\tN_total\tvolumes_total\tactive_years\tverdict_method\tflags";

impl AbbrevDictionary {
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TSV_HEADER}")?;
        for e in &self.entries {
            let median = e.median_share.map_or_else(|| "NA".to_string(), |m| m.to_string());
            let flags = if e.flags.is_empty() {
                "-".to_string()
            } else {
                e.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(",")
            };
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                e.word, median, e.n_total, e.usage_total, e.volumes_total, e.active_years, self.meta.method, flags
            )?;
        }
        Ok(())
    }

    pub fn write_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for w in self.words() {
            writeln!(out, "{w}")?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), BuildError> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self, BuildError> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// Parses the TSV dictionary format back into entries. LRT-specific
/// decision fields are not part of the format and come back unset.
pub fn read_tsv_entries<R: BufRead>(reader: R) -> Result<Vec<AbbrevEntry>, BuildError> {
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| BuildError::Malformed { line: line_no, reason };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 8 {
            return Err(malformed(format!("expected 8 columns, found {}", cols.len())));
        }
        let int = |i: usize| -> Result<u64, BuildError> {
            cols[i]
                .parse()
                .map_err(|_| malformed(format!("column {} is not an integer: `{}`", i + 1, cols[i])))
        };
        let median_share = match cols[1] {
            "NA" => None,
            v => Some(
                v.parse::<f64>()
                    .map_err(|_| malformed(format!("bad median share `{v}`")))?,
            ),
        };
        let method: BuildMethod = cols[6].parse().map_err(malformed)?;
        let flags = if cols[7] == "-" {
            BTreeSet::new()
        } else {
            cols[7]
                .split(',')
                .map(|f| f.parse::<Flag>())
                .collect::<Result<_, _>>()
                .map_err(malformed)?
        };
        let (n_total, usage_total) = (int(2)?, int(3)?);
        let word = cols[0].to_string();
        entries.push(AbbrevEntry {
            decision: DecisionRecord {
                word: word.clone(),
                usage_total,
                with_period: n_total,
                eta: None,
                ln_likelihood: None,
                alpha: None,
                beta: None,
                verdict: Verdict::Abbreviation,
                method: match method {
                    BuildMethod::Median => DecisionMethod::MedianThreshold,
                    _ => DecisionMethod::Lrt,
                },
                undecidable: false,
            },
            word,
            median_share,
            n_total,
            usage_total,
            volumes_total: int(4)?,
            active_years: int(5)? as u32,
            flags,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::YearlyUsage;

    fn profile(word: &str, cells: &[(i32, u64, u64)]) -> WordProfile {
        WordProfile::from_series(
            word,
            cells.iter().map(|&(year, with_period, total)| YearlyUsage {
                year,
                with_period,
                total,
                volumes_with_period: with_period.min(3),
            }),
            YearRange::DEFAULT_WINDOW,
        )
    }

    #[test]
    fn shares_skip_empty_years() {
        let p = profile("др", &[(1995, 120, 125)]);
        assert_eq!(yearly_shares(&p), vec![(1995, 0.96)]);
        let p = profile("дом", &[(1995, 0, 100), (1996, 0, 0)]);
        assert_eq!(yearly_shares(&p), vec![(1995, 0.0)]);
    }

    #[test]
    fn shares_ignore_years_outside_window() {
        let p = profile("др", &[(1950, 1, 2), (1995, 3, 4)]);
        assert_eq!(yearly_shares(&p), vec![(1995, 0.75)]);
    }

    #[test]
    fn nineteen_year_profile_matches_hand_ratios() {
        let cells: Vec<(i32, u64, u64)> = (0..19).map(|i| (1990 + i, 10 + i as u64, 20 + 3 * i as u64)).collect();
        let p = profile("х", &cells);
        let shares = yearly_shares(&p);
        assert_eq!(shares.len(), 19);
        for (i, (year, share)) in shares.into_iter().enumerate() {
            assert_eq!(year, 1990 + i as i32);
            assert_eq!(share, (10 + i) as f64 / (20 + 3 * i) as f64);
        }
    }

    #[test]
    fn median_cases() {
        assert_eq!(median_share(&[0.2, 0.9, 1.0]), Some(0.9));
        assert_eq!(median_share(&[1.0, 0.2, 0.9]), Some(0.9));
        assert!((median_share(&[0.8, 1.0]).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(median_share(&[]), None);
    }

    #[test]
    fn median_rule_is_strict() {
        let p = profile("др", &[(1995, 96, 100)]);
        assert!(decide_median(&p, 0.9).is_abbreviation());
        let p = profile("ровно", &[(1995, 9, 10)]);
        assert_eq!(p.median_share, Some(0.9));
        assert!(!decide_median(&p, 0.9).is_abbreviation());
        let empty = profile("пусто", &[]);
        let d = decide_median(&empty, 0.9);
        assert!(!d.is_abbreviation() && d.undecidable);
        assert!(d.eta.is_none() && d.alpha.is_none());
    }

    #[test]
    fn lrt_extremes() {
        let params = HypothesisParams::default();
        let always = profile("гл", &[(2000, 40, 40)]);
        let d = decide_lrt(&always, &params);
        assert!(d.is_abbreviation());
        assert!(d.alpha.unwrap() < 1e-9 && d.beta.unwrap() < 1e-9);
        let never = profile("дом", &[(2000, 0, 40)]);
        assert!(!decide_lrt(&never, &params).is_abbreviation());
        let nothing = profile("нет", &[]);
        let d = decide_lrt(&nothing, &params);
        assert!(d.undecidable && !d.is_abbreviation());
    }

    #[test]
    fn lrt_error_fields_follow_strict_rule() {
        // C chosen so eta is exactly 5: the rule accepts n >= 6
        let base = HypothesisParams::new(0.2, 0.8, 1.0).unwrap();
        let eta0 = solve_threshold(10, &base).unwrap();
        assert!((eta0 - 5.0).abs() < 1e-12);
        let p = profile("x", &[(2000, 5, 10)]);
        let d = decide_lrt(&p, &base);
        assert!(!d.is_abbreviation());
        assert!((d.alpha.unwrap() - alpha_error(6.0, 10, 0.2)).abs() < 1e-15);
        assert!((d.beta.unwrap() - beta_error(6.0, 10, 0.8)).abs() < 1e-15);
    }

    fn entry(word: &str, volumes: u64, years: u32) -> AbbrevEntry {
        let p = profile(word, &[(2000, 40, 40)]);
        let mut e = AbbrevEntry::new(&p, decide_median(&p, 0.9));
        e.volumes_total = volumes;
        e.active_years = years;
        e
    }

    #[test]
    fn occasional_filter_reasons() {
        let out = filter_occasional(vec![entry("а", 1, 5)], 2, 0);
        assert!(out.kept.is_empty());
        assert_eq!(out.removed[0].reasons, vec![Flag::LowVolume]);
        let out = filter_occasional(vec![entry("б", 50, 1)], 0, 3);
        assert_eq!(out.removed[0].reasons, vec![Flag::ShortTimespan]);
        let all = vec![entry("а", 1, 1), entry("б", 0, 0)];
        let out = filter_occasional(all.clone(), 0, 0);
        assert_eq!(out.kept, all);
    }

    #[test]
    fn empty_corpus_builds_empty_dictionary() {
        let dict = build_dictionary(&Profiles::new(), &BuildConfig::default(), &CorpusInfo::default()).unwrap();
        assert!(dict.entries.is_empty());
        assert_eq!(dict.meta.min_usage, 40);
        assert_eq!(dict.meta.window, YearRange::DEFAULT_WINDOW);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cfg = BuildConfig {
            median_threshold: 1.0,
            ..BuildConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(BuildError::MedianThreshold(_))));
        let cfg = BuildConfig {
            error_targets: Some(ErrorTargets { alpha: 0.0, beta: 0.1 }),
            ..BuildConfig::default()
        };
        assert!(cfg.validate().is_err());
        let p = profile("а", &[(2000, 1, 1)]);
        let mut wrong = p.clone();
        wrong.window = YearRange::new(1950, 1960).unwrap();
        let profiles: Profiles = [("а".to_string(), wrong)].into();
        assert!(matches!(
            build_dictionary(&profiles, &BuildConfig::default(), &CorpusInfo::default()),
            Err(BuildError::WindowMismatch { .. })
        ));
    }

    #[test]
    fn error_targets_set_min_usage() {
        let cfg = BuildConfig {
            error_targets: Some(ErrorTargets {
                alpha: 0.001,
                beta: 0.001,
            }),
            ..BuildConfig::default()
        };
        let dict = build_dictionary(&Profiles::new(), &cfg, &CorpusInfo::default()).unwrap();
        let op = dict.meta.operating_point.unwrap();
        assert_eq!(dict.meta.min_usage, op.min_usage);
    }

    #[test]
    fn tsv_round_trip_preserves_columns() {
        let p = profile("гл", &[(2000, 40, 40), (2001, 39, 40)]);
        let profiles: Profiles = [("гл".to_string(), p)].into();
        let dict = build_dictionary(&profiles, &BuildConfig::default(), &CorpusInfo::default()).unwrap();
        let mut buf = Vec::new();
        dict.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(TSV_HEADER));
        assert!(text.contains("гл\t0.9875\t79\t80\t6\t2\tmedian\t-"));
        let back = read_tsv_entries(&buf[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(
            (back[0].n_total, back[0].usage_total, back[0].volumes_total),
            (79, 80, 6)
        );
    }

    #[test]
    fn malformed_tsv_reports_line() {
        let err = read_tsv_entries("# h\nгл\t0.9\n".as_bytes()).unwrap_err();
        assert!(matches!(err, BuildError::Malformed { line: 2, .. }));
    }
}

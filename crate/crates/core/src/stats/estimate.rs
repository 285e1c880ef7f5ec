use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::StatError;
use crate::ingest::{Profiles, YearRange};

/// How per-word shares are combined into one share per year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// `sum(n) / sum(N)` over the seed words.
    #[default]
    Pooled,
    /// Unweighted mean of each seed word's `n / N`.
    MacroAverage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedWarning {
    pub word: String,
    pub reason: String,
}

/// Yearly with-period shares of the two seed lists and their means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareEstimate {
    pub p0_by_year: BTreeMap<i32, f64>,
    pub p1_by_year: BTreeMap<i32, f64>,
    pub mean_p0: f64,
    pub mean_p1: f64,
    pub mean_window: YearRange,
    pub warnings: Vec<SeedWarning>,
}

/// Estimates `p1` from known abbreviations and `p0` from known ordinary
/// words, year by year over `window`, then averages each series over
/// `mean_window`.
pub fn estimate_share_params(
    profiles: &Profiles,
    seed_abbrevs: &[String],
    seed_commons: &[String],
    window: &YearRange,
    mean_window: &YearRange,
    pooling: Pooling,
) -> Result<ShareEstimate, StatError> {
    let abbrevs: BTreeSet<&str> = seed_abbrevs.iter().map(String::as_str).collect();
    if let Some(w) = seed_commons.iter().find(|w| abbrevs.contains(w.as_str())) {
        return Err(StatError::OverlappingSeeds(w.clone()));
    }
    let mut warnings = Vec::new();
    let p1_by_year = share_series(profiles, seed_abbrevs, "abbreviations", window, pooling, &mut warnings)?;
    let p0_by_year = share_series(profiles, seed_commons, "common words", window, pooling, &mut warnings)?;
    let mean_p1 = window_mean(&p1_by_year, mean_window, "abbreviations")?;
    let mean_p0 = window_mean(&p0_by_year, mean_window, "common words")?;
    Ok(ShareEstimate {
        p0_by_year,
        p1_by_year,
        mean_p0,
        mean_p1,
        mean_window: *mean_window,
        warnings,
    })
}

fn share_series(
    profiles: &Profiles,
    seeds: &[String],
    list: &'static str,
    window: &YearRange,
    pooling: Pooling,
    warnings: &mut Vec<SeedWarning>,
) -> Result<BTreeMap<i32, f64>, StatError> {
    let mut usable = Vec::new();
    let mut seen = BTreeSet::new();
    for word in seeds {
        if !seen.insert(word.as_str()) {
            continue;
        }
        match profiles.get(word) {
            Some(p) if p.series.values().any(|u| window.contains(u.year) && u.total > 0) => usable.push(p),
            Some(_) => warnings.push(SeedWarning {
                word: word.clone(),
                reason: format!("no usage in {window}"),
            }),
            None => warnings.push(SeedWarning {
                word: word.clone(),
                reason: "absent from corpus".to_string(),
            }),
        }
    }
    if usable.is_empty() {
        return Err(StatError::EmptySeedList(list));
    }
    let mut series = BTreeMap::new();
    for year in window.years() {
        let cells = usable
            .iter()
            .filter_map(|p| p.series.get(&year))
            .filter(|u| u.total > 0);
        let share = match pooling {
            Pooling::Pooled => {
                let (n, big_n) = cells.fold((0u64, 0u64), |(n, t), u| (n + u.with_period, t + u.total));
                (big_n > 0).then(|| n as f64 / big_n as f64)
            }
            Pooling::MacroAverage => {
                let shares: Vec<f64> = cells.map(|u| u.with_period as f64 / u.total as f64).collect();
                (!shares.is_empty()).then(|| shares.iter().sum::<f64>() / shares.len() as f64)
            }
        };
        if let Some(share) = share {
            series.insert(year, share);
        }
    }
    Ok(series)
}

fn window_mean(series: &BTreeMap<i32, f64>, window: &YearRange, list: &'static str) -> Result<f64, StatError> {
    let values: Vec<f64> = series.range(window.start..=window.end).map(|(_, &v)| v).collect();
    if values.is_empty() {
        return Err(StatError::EmptyMeanWindow {
            list,
            start: window.start,
            end: window.end,
        });
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

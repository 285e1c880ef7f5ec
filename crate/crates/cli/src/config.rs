//! The declarative configuration file. Every value is optional here and
//! overridable on the command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub ingest: IngestSection,
    #[serde(default)]
    pub build: BuildSection,
    #[serde(default)]
    pub stats: StatsSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub segment: SegmentSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    #[serde(default)]
    pub unigrams: Vec<PathBuf>,
    #[serde(default)]
    pub bigrams: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub window: Option<String>,
    pub scripts: Option<Vec<String>>,
    pub case_fold: Option<bool>,
    pub threads: Option<usize>,
    pub abort_on_error: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildSection {
    pub aggregate: Option<PathBuf>,
    pub window: Option<String>,
    pub method: Option<String>,
    pub median_threshold: Option<f64>,
    pub p0: Option<f64>,
    pub p1: Option<f64>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub min_usage: Option<u64>,
    pub min_volumes: Option<u64>,
    pub min_active_years: Option<u32>,
    pub tsv: Option<PathBuf>,
    pub list: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    pub aggregate: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub reports: Option<Vec<String>>,
    pub format: Option<String>,
    pub window: Option<String>,
    pub mean_window: Option<String>,
    pub dynamics: Option<String>,
    pub top_k: Option<usize>,
    pub max_volumes: Option<u64>,
    pub totals: Option<PathBuf>,
    pub seed_abbrevs: Option<PathBuf>,
    pub seed_commons: Option<PathBuf>,
    pub pooling: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub aggregate: Option<PathBuf>,
    pub seed_abbrevs: Option<PathBuf>,
    pub seed_commons: Option<PathBuf>,
    pub window: Option<String>,
    pub mean_window: Option<String>,
    pub pooling: Option<String>,
    pub p0: Option<f64>,
    pub p1: Option<f64>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub dictionary: Option<PathBuf>,
    pub titles: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

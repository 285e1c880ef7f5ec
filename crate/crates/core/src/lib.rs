//! Mining abbreviation dictionaries from n-gram corpora.
//!
//! A word form that is almost always followed by a period in running text
//! is most likely an abbreviation. [`ingest`] turns Google-Books-Ngram
//! style 1-gram and 2-gram files into per-word yearly usage, [`dict`]
//! classifies every word form with the median-share rule or the binomial
//! likelihood-ratio test from [`stats`], [`analytics`] summarizes the
//! resulting dictionary, and [`segment`] uses it to decide whether a
//! period ends a sentence. [`synth`] generates corpora and texts with
//! known ground truth.

pub mod analytics;
pub mod dict;
pub mod ingest;
pub mod segment;
pub mod stats;
pub mod synth;

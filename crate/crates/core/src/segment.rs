//! Tokenization and sentence splitting around the period.
//!
//! The baseline is the period-space-capital rule: a period followed by
//! whitespace and an uppercase letter ends a sentence. The dictionary-aware
//! segmenter attaches the period to a known abbreviation stem and
//! suppresses the boundary unless the rule fires and the stem is not a
//! title-like prefix. End of text always closes the last sentence, and
//! periods inside numbers (`3.14`) are part of the number token.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufRead};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dict::{read_tsv_entries, AbbrevDictionary, BuildError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Word,
    AbbreviationWithPeriod,
    Punctuation,
    Number,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Byte offsets into the source.
    pub start: usize,
    pub end: usize,
    pub kind: TokenKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
    /// Token index range `first_token..end_token`.
    pub first_token: usize,
    pub end_token: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub tokens: Vec<Token>,
    pub sentences: Vec<SentenceSpan>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Dictionary(#[from] BuildError),
}

/// Read-only membership set of abbreviation stems.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbbrevLexicon {
    stems: HashSet<String>,
    titles: HashSet<String>,
    case_fold: bool,
}

impl AbbrevLexicon {
    pub fn new<I, S>(stems: I, case_fold: bool) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lexicon = Self {
            stems: HashSet::new(),
            titles: HashSet::new(),
            case_fold,
        };
        for s in stems {
            let key = lexicon.key(s.as_ref());
            lexicon.stems.insert(key);
        }
        lexicon
    }

    pub fn from_dictionary(dict: &AbbrevDictionary) -> Self {
        Self::new(dict.words(), dict.meta.case_fold)
    }

    /// Adds stems that may precede a capitalized name without ending
    /// the sentence (`г. Москва`). Titles are lexicon members as well.
    pub fn with_titles<I, S>(mut self, titles: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for t in titles {
            let key = self.key(t.as_ref());
            self.stems.insert(key.clone());
            self.titles.insert(key);
        }
        self
    }

    fn key(&self, stem: &str) -> String {
        if self.case_fold {
            stem.to_lowercase()
        } else {
            stem.to_string()
        }
    }

    pub fn contains(&self, stem: &str) -> bool {
        if self.case_fold {
            self.stems.contains(&stem.to_lowercase())
        } else {
            self.stems.contains(stem)
        }
    }

    pub fn is_title(&self, stem: &str) -> bool {
        if self.case_fold {
            self.titles.contains(&stem.to_lowercase())
        } else {
            self.titles.contains(stem)
        }
    }

    pub fn len(&self) -> usize {
        self.stems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stems.is_empty()
    }

    /// Parses any dictionary output format: the JSON document, the TSV
    /// table, or a plain list with one stem per line.
    pub fn parse(content: &str) -> Result<Self, LexiconError> {
        let first = content.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        if first.trim_start().starts_with('{') {
            let dict = AbbrevDictionary::read_json(content.as_bytes())?;
            return Ok(Self::from_dictionary(&dict));
        }
        if first.contains('\t') || first.starts_with("# word") {
            let entries = read_tsv_entries(content.as_bytes()).map_err(|e| match e {
                BuildError::Malformed { line, reason } => LexiconError::Malformed { line, reason },
                other => other.into(),
            })?;
            return Ok(Self::new(entries.iter().map(|e| e.word.as_str()), false));
        }
        parse_plain_list(content.as_bytes()).map(|stems| Self::new(stems, false))
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let content = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&content)
    }
}

/// One word per line; blank lines and `#` comments are skipped.
pub fn parse_plain_list<R: BufRead>(reader: R) -> Result<Vec<String>, LexiconError> {
    let mut words = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| LexiconError::Io {
            path: "<list>".to_string(),
            source,
        })?;
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        if word.chars().any(char::is_whitespace) {
            return Err(LexiconError::Malformed {
                line: idx + 1,
                reason: format!("`{word}` is not a single word"),
            });
        }
        words.push(word.to_string());
    }
    Ok(words)
}

/// Splits text into words, numbers, mixed alphanumerics and single
/// punctuation characters. Periods always come out as their own token.
fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if !c.is_alphanumeric() {
            let end = start + c.len_utf8();
            tokens.push(Token {
                text: text[start..end].to_string(),
                start,
                end,
                kind: TokenKind::Punctuation,
            });
            continue;
        }
        let mut end = start + c.len_utf8();
        let (mut letters, mut digits) = (c.is_alphabetic(), !c.is_alphabetic());
        loop {
            match chars.peek() {
                Some(&(i, d)) if d.is_alphanumeric() => {
                    letters |= d.is_alphabetic();
                    digits |= !d.is_alphabetic();
                    end = i + d.len_utf8();
                    chars.next();
                }
                // separator inside a pure number: 3.14, 1,5
                Some(&(i, sep)) if (sep == '.' || sep == ',') && digits && !letters => {
                    let after = &text[i + 1..];
                    match after.chars().next() {
                        Some(d) if d.is_ascii_digit() || d.is_numeric() && !d.is_alphabetic() => {
                            end = i + 1;
                            chars.next();
                        }
                        _ => break,
                    }
                }
                _ => break,
            }
        }
        let kind = match (letters, digits) {
            (true, false) => TokenKind::Word,
            (false, true) => TokenKind::Number,
            _ => TokenKind::Other,
        };
        tokens.push(Token {
            text: text[start..end].to_string(),
            start,
            end,
            kind,
        });
    }
    tokens
}

/// The period-space-capital test for a period ending at byte `end`.
fn period_space_capital(text: &str, end: usize) -> bool {
    let rest = &text[end..];
    let mut it = rest.chars();
    match it.next() {
        Some(c) if c.is_whitespace() => {}
        _ => return false,
    }
    rest.chars()
        .find(|c| !c.is_whitespace())
        .is_some_and(char::is_uppercase)
}

fn sentences_from(tokens: &[Token], terminal: &[bool]) -> Vec<SentenceSpan> {
    let mut sentences = Vec::new();
    let mut first = 0;
    for (i, &t) in terminal.iter().enumerate() {
        if t || i + 1 == tokens.len() {
            sentences.push(SentenceSpan {
                start: tokens[first].start,
                end: tokens[i].end,
                first_token: first,
                end_token: i + 1,
            });
            first = i + 1;
        }
    }
    sentences
}

/// Sentence spans under the period-space-capital rule alone.
pub fn baseline_segment(text: &str) -> Vec<SentenceSpan> {
    let tokens = tokenize(text);
    let terminal: Vec<bool> = tokens
        .iter()
        .map(|t| t.text == "." && period_space_capital(text, t.end))
        .collect();
    sentences_from(&tokens, &terminal)
}

/// Tokens and sentence spans using the abbreviation lexicon.
pub fn dict_segment(text: &str, lexicon: &AbbrevLexicon) -> Segmentation {
    let raw = tokenize(text);
    let mut tokens: Vec<Token> = Vec::with_capacity(raw.len());
    let mut terminal: Vec<bool> = Vec::with_capacity(raw.len());
    let last = raw.len().saturating_sub(1);
    for (i, tok) in raw.into_iter().enumerate() {
        if tok.text != "." {
            tokens.push(tok);
            terminal.push(false);
            continue;
        }
        let rule_fires = period_space_capital(text, tok.end);
        let stem_hit = tokens
            .last()
            .is_some_and(|prev| prev.kind == TokenKind::Word && prev.end == tok.start && lexicon.contains(&prev.text));
        if !stem_hit {
            tokens.push(tok);
            terminal.push(rule_fires);
            continue;
        }
        let at_end = i == last;
        let stem = &tokens.last().expect("stem_hit implies a previous token").text;
        let boundary = rule_fires && !lexicon.is_title(stem);
        if boundary && !at_end {
            tokens.push(tok);
            terminal.push(true);
        } else {
            let prev = tokens.last_mut().expect("stem_hit implies a previous token");
            prev.text.push('.');
            prev.end = tok.end;
            prev.kind = TokenKind::AbbreviationWithPeriod;
            *terminal.last_mut().expect("aligned with tokens") = boundary;
        }
    }
    let sentences = sentences_from(&tokens, &terminal);
    Segmentation { tokens, sentences }
}

/// Byte offsets at which the sentences end.
pub fn boundary_offsets(sentences: &[SentenceSpan]) -> Vec<usize> {
    sentences.iter().map(|s| s.end).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of predicted boundary offsets against gold.
pub fn score_boundaries(predicted: &[usize], gold: &[usize]) -> BoundaryScore {
    let gold_set: HashSet<usize> = gold.iter().copied().collect();
    let predicted_set: HashSet<usize> = predicted.iter().copied().collect();
    let hits = predicted_set.intersection(&gold_set).count() as f64;
    let precision = if predicted_set.is_empty() {
        1.0
    } else {
        hits / predicted_set.len() as f64
    };
    let recall = if gold_set.is_empty() {
        1.0
    } else {
        hits / gold_set.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    BoundaryScore { precision, recall, f1 }
}

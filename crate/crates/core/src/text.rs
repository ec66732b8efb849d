//! Request normalization: tokenization, number/unit/stop-word classification,
//! spell correction against the ontology vocabulary, and stemming.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_UNITS: &str = include_str!("../data/units.txt");
const STOPWORDS_EN: &str = include_str!("../data/stopwords_en.txt");

/// Words shorter than this are never spell-corrected (single-letter axis
/// names such as "X" must survive).
pub const MIN_CORRECTION_LEN: usize = 4;
pub const DEFAULT_MAX_DISTANCE: usize = 2;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("unsupported language `{0}` (expected one of: en, de, ru)")]
    UnsupportedLanguage(String),
    #[error("cannot read lexicon {path}: {source}")]
    Lexicon {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Language {
    #[default]
    #[serde(rename = "en")]
    English,
    #[serde(rename = "de")]
    German,
    #[serde(rename = "ru")]
    Russian,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::English => "en",
            Language::German => "de",
            Language::Russian => "ru",
        }
    }

    fn algorithm(self) -> Algorithm {
        match self {
            Language::English => Algorithm::English,
            Language::German => Algorithm::German,
            Language::Russian => Algorithm::Russian,
        }
    }
}

impl FromStr for Language {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(Language::English),
            "de" | "german" => Ok(Language::German),
            "ru" | "russian" => Ok(Language::Russian),
            _ => Err(TextError::UnsupportedLanguage(s.to_string())),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Number,
    Unit,
    Stopword,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Exact text as it appears in the request.
    pub surface: String,
    pub normalized: String,
    pub kind: TokenKind,
    /// Byte offset of `surface` in the raw request.
    pub position: usize,
    /// Set when spell correction replaced the word.
    pub corrected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProcessedRequest {
    pub raw: String,
    pub tokens: Vec<Token>,
    pub match_words: Vec<String>,
}

/// Parses a one-term-per-line lexicon. Blank lines are skipped; terms are
/// lower-cased.
pub fn parse_lexicon(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn read_lexicon(path: &Path) -> Result<HashSet<String>, TextError> {
    std::fs::read_to_string(path)
        .map(|t| parse_lexicon(&t))
        .map_err(|source| TextError::Lexicon {
            path: path.display().to_string(),
            source,
        })
}

/// Stems a lower-cased word. The stemmer is re-applied until it reaches a
/// fixed point, so `stem(stem(w)) == stem(w)` always holds.
pub fn stem(word: &str, language: Language) -> String {
    stem_with(&Stemmer::create(language.algorithm()), word)
}

fn stem_with(stemmer: &Stemmer, word: &str) -> String {
    let mut current = word.to_string();
    // Snowball stemmers never lengthen a word, so this settles quickly.
    for _ in 0..8 {
        let next = stemmer.stem(&current).into_owned();
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Replaces an out-of-vocabulary word with the nearest vocabulary term within
/// `max_distance` edits. Ties go to the lexicographically smallest term.
pub fn correct_spelling(
    word: &str,
    vocab: &BTreeSet<String>,
    max_distance: usize,
) -> (String, bool) {
    if vocab.contains(word) {
        return (word.to_string(), false);
    }
    let mut best: Option<(usize, &String)> = None;
    for term in vocab {
        let d = strsim::levenshtein(word, term);
        if d <= max_distance && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, term));
        }
    }
    match best {
        Some((_, term)) => (term.clone(), true),
        None => (word.to_string(), false),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RawKind {
    Alpha,
    Numeric,
    Punct,
}

/// Splits text into spans: alphanumeric runs starting with a letter, decimal
/// numerals (a digit run with at most one `.` fraction), and single
/// punctuation characters. A numeral directly followed by letters is split
/// there, so `100mm` becomes `100` and `mm`.
fn split_spans(text: &str) -> Vec<(usize, usize, RawKind)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            if j + 1 < chars.len() && chars[j].1 == '.' && chars[j + 1].1.is_ascii_digit() {
                j += 2;
                while j < chars.len() && chars[j].1.is_ascii_digit() {
                    j += 1;
                }
            }
            spans.push((start, end_of(j), RawKind::Numeric));
            i = j;
        } else if c.is_alphanumeric() {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_alphanumeric() {
                j += 1;
            }
            spans.push((start, end_of(j), RawKind::Alpha));
            i = j;
        } else {
            spans.push((start, end_of(i + 1), RawKind::Punct));
            i += 1;
        }
    }
    spans
}

/// Byte ranges of the word and numeral spans of `text`; punctuation and
/// whitespace are skipped.
pub fn word_spans(text: &str) -> Vec<Range<usize>> {
    split_spans(text)
        .into_iter()
        .filter(|&(_, _, k)| k != RawKind::Punct)
        .map(|(s, e, _)| s..e)
        .collect()
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub language: Language,
    pub stopwords: HashSet<String>,
    pub units: HashSet<String>,
    pub max_distance: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            language: Language::English,
            stopwords: parse_lexicon(STOPWORDS_EN),
            units: parse_lexicon(DEFAULT_UNITS),
            max_distance: DEFAULT_MAX_DISTANCE,
        }
    }
}

impl PipelineConfig {
    /// Defaults for a language. Only English ships with a stop-word list;
    /// other languages start empty and take theirs from a file.
    pub fn for_language(language: Language) -> Self {
        let stopwords = match language {
            Language::English => parse_lexicon(STOPWORDS_EN),
            _ => HashSet::new(),
        };
        PipelineConfig {
            language,
            stopwords,
            ..Default::default()
        }
    }
}

pub struct TextPipeline {
    config: PipelineConfig,
    stemmer: Stemmer,
}

impl fmt::Debug for TextPipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TextPipeline")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Default for TextPipeline {
    fn default() -> Self {
        Self::new(PipelineConfig::default())
    }
}

impl TextPipeline {
    pub fn new(config: PipelineConfig) -> Self {
        let stemmer = Stemmer::create(config.language.algorithm());
        TextPipeline { config, stemmer }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Splits and classifies, without spelling or stemming. Word tokens carry
    /// their lower-cased form as `normalized`.
    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        split_spans(text)
            .into_iter()
            .map(|(start, end, raw)| {
                let surface = &text[start..end];
                let lower = surface.to_lowercase();
                let kind = match raw {
                    RawKind::Punct => TokenKind::Punctuation,
                    RawKind::Numeric => TokenKind::Number,
                    RawKind::Alpha if self.config.units.contains(&lower) => TokenKind::Unit,
                    RawKind::Alpha if self.config.stopwords.contains(&lower) => {
                        TokenKind::Stopword
                    }
                    RawKind::Alpha => TokenKind::Word,
                };
                let normalized = match kind {
                    TokenKind::Number | TokenKind::Punctuation => surface.to_string(),
                    _ => lower,
                };
                Token {
                    surface: surface.to_string(),
                    normalized,
                    kind,
                    position: start,
                    corrected: false,
                }
            })
            .collect()
    }

    pub fn stem(&self, word: &str) -> String {
        stem_with(&self.stemmer, word)
    }

    /// Full pipeline: tokenize, classify, spell-correct words against
    /// `vocab`, then stem.
    pub fn preprocess(&self, text: &str, vocab: &BTreeSet<String>) -> ProcessedRequest {
        let mut tokens = self.tokenize(text);
        for token in tokens.iter_mut().filter(|t| t.kind == TokenKind::Word) {
            if token.normalized.chars().count() >= MIN_CORRECTION_LEN {
                let (word, corrected) =
                    correct_spelling(&token.normalized, vocab, self.config.max_distance);
                token.normalized = word;
                token.corrected = corrected;
            }
            token.normalized = self.stem(&token.normalized);
        }
        let match_words = tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Word)
            .map(|t| t.normalized.clone())
            .collect();
        ProcessedRequest {
            raw: text.to_string(),
            tokens,
            match_words,
        }
    }

    /// Normalized form of an ontology name: word tokens only, stemmed, joined
    /// by single spaces. Names are not spell-corrected.
    pub fn normalize_name(&self, name: &str) -> Vec<String> {
        self.tokenize(name)
            .into_iter()
            .filter(|t| matches!(t.kind, TokenKind::Word | TokenKind::Unit))
            .map(|t| self.stem(&t.normalized))
            .collect()
    }
}

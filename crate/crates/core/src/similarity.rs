//! Request-to-ontology similarity.
//!
//! Classes are scored with a fuzzy substring comparison between the class
//! name and the words of the request. Attributes are scored by searching for
//! the words of the attribute name, in order, in the raw request text.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::ontology::{Ontology, OntologyAttribute};
use crate::report::{Score, SimilarityReport};
use crate::text::{word_spans, ProcessedRequest, TextPipeline};

/// Class scores below this are dropped to zero.
pub const DEFAULT_CLASS_THRESHOLD: f64 = 0.3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("similarity is undefined for an empty string")]
    EmptyInput,
}

/// All distinct substrings of `s` shorter than `s` itself.
pub fn proper_substrings(s: &str) -> Result<BTreeSet<String>, SimilarityError> {
    let chars: Vec<char> = s.chars().collect();
    if chars.is_empty() {
        return Err(SimilarityError::EmptyInput);
    }
    let n = chars.len();
    Ok((1..n)
        .flat_map(|len| chars.windows(len))
        .map(|w| w.iter().collect())
        .collect())
}

/// Share of the proper substrings of `a` that occur in `b`.
///
/// Each distinct substring is anchored at its first position in `a`: it counts
/// as found when `b` holds it at that position or later. Comparison is
/// case-insensitive. With "motor" against "mortar" this finds m, o, t, r and
/// mo; "or" sits at 3 in "motor" but only at 1 in "mortar", giving 5/13.
///
/// A one-character `a` has no proper substrings and scores 1 if it occurs in
/// `b`, else 0. The measure is directional.
pub fn fuzzy_string_similarity(a: &str, b: &str) -> Result<f64, SimilarityError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimilarityError::EmptyInput);
    }
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    if a.len() == 1 {
        return Ok(if b.contains(&a[0]) { 1.0 } else { 0.0 });
    }

    let mut first_at: HashMap<&[char], usize> = HashMap::new();
    for start in 0..a.len() {
        for end in start + 1..=a.len() {
            if end - start < a.len() {
                first_at.entry(&a[start..end]).or_insert(start);
            }
        }
    }
    let total = first_at.len();
    let found = first_at
        .iter()
        .filter(|(sub, &from)| from < b.len() && b[from..].windows(sub.len()).any(|w| w == **sub))
        .count();
    Ok(found as f64 / total as f64)
}

/// Score of a class name (already normalized to words) against a request:
/// the best fuzzy similarity over every request word and every run of
/// consecutive request words up to the length of the class name. Scores
/// below `threshold` become 0.
pub fn request_class_similarity(
    req: &ProcessedRequest,
    class_words: &[String],
    threshold: f64,
) -> f64 {
    if class_words.is_empty() || req.match_words.is_empty() {
        return 0.0;
    }
    let name = class_words.join(" ");
    let max_len = class_words.len().min(req.match_words.len());
    let mut best = 0.0f64;
    'outer: for len in 1..=max_len {
        for window in req.match_words.windows(len) {
            let candidate = window.join(" ");
            let score = fuzzy_string_similarity(&name, &candidate).unwrap_or(0.0);
            best = best.max(score);
            if best >= 1.0 {
                break 'outer;
            }
        }
    }
    if best < threshold {
        0.0
    } else {
        best
    }
}

/// Entry score: share of attribute words found times share of attribute
/// characters found. Equal to 1 only when every word is found.
pub fn calc_similarity(
    matched_words: usize,
    total_words: usize,
    matched_chars: usize,
    total_chars: usize,
) -> f64 {
    if total_words == 0 || total_chars == 0 {
        return 0.0;
    }
    (matched_words as f64 / total_words as f64) * (matched_chars as f64 / total_chars as f64)
}

/// A run of consecutive attribute words found as consecutive words of the
/// request.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// The matched attribute words, as written in the attribute name.
    pub text: String,
    /// Index of the first matched attribute word.
    pub first_word: usize,
    pub word_count: usize,
    /// Byte offset of the entry in the request.
    pub position: usize,
    pub similarity: f64,
}

struct AttributeWords<'a> {
    surfaces: Vec<&'a str>,
    lower: Vec<String>,
    lengths: Vec<usize>,
    total_chars: usize,
}

impl<'a> AttributeWords<'a> {
    fn new(name: &'a str) -> Self {
        let surfaces: Vec<&str> = word_spans(name).into_iter().map(|r| &name[r]).collect();
        let lower: Vec<String> = surfaces.iter().map(|w| w.to_lowercase()).collect();
        let lengths: Vec<usize> = lower.iter().map(|w| w.chars().count()).collect();
        let total_chars = lengths.iter().sum();
        AttributeWords {
            surfaces,
            lower,
            lengths,
            total_chars,
        }
    }

    fn score(&self, words: usize, chars: usize) -> f64 {
        calc_similarity(words, self.lower.len(), chars, self.total_chars)
    }
}

fn request_words(request: &str) -> (Vec<String>, Vec<usize>) {
    word_spans(request)
        .into_iter()
        .map(|r| (request[r.clone()].to_lowercase(), r.start))
        .unzip()
}

/// Similarity of an attribute name to a raw request.
///
/// Attribute words are searched left to right. Each found word moves the
/// request position past the match and is removed from the words still to
/// find; the search then continues with the remaining words, and the best
/// score over all branches is kept. Words must appear in attribute order.
pub fn request_attribute_similarity(request: &str, attribute_name: &str) -> f64 {
    let attr = AttributeWords::new(attribute_name);
    let (words, _) = request_words(request);
    best_match(&attr, &words, 0, 0, 0, 0)
}

// Taking only the earliest occurrence of each word loses nothing: any match
// reachable from a later occurrence is reachable from the earlier one.
fn best_match(
    attr: &AttributeWords<'_>,
    request: &[String],
    next_word: usize,
    position: usize,
    matched: usize,
    chars: usize,
) -> f64 {
    let mut best = attr.score(matched, chars);
    for j in next_word..attr.lower.len() {
        if best >= 1.0 {
            break;
        }
        let Some(offset) = request[position..].iter().position(|w| *w == attr.lower[j]) else {
            continue;
        };
        let score = best_match(
            attr,
            request,
            j + 1,
            position + offset + 1,
            matched + 1,
            chars + attr.lengths[j],
        );
        best = best.max(score);
    }
    best
}

/// Maximal runs of attribute words found contiguously in the request, in
/// request order.
pub fn attribute_entries(request: &str, attribute_name: &str) -> Vec<Entry> {
    let attr = AttributeWords::new(attribute_name);
    let (words, offsets) = request_words(request);
    let mut entries = Vec::new();
    for p in 0..words.len() {
        for j in 0..attr.lower.len() {
            if words[p] != attr.lower[j] {
                continue;
            }
            // continuation of a run that started earlier
            if p > 0 && j > 0 && words[p - 1] == attr.lower[j - 1] {
                continue;
            }
            let mut len = 1;
            while p + len < words.len()
                && j + len < attr.lower.len()
                && words[p + len] == attr.lower[j + len]
            {
                len += 1;
            }
            let chars = attr.lengths[j..j + len].iter().sum();
            entries.push(Entry {
                text: attr.surfaces[j..j + len].join(" "),
                first_word: j,
                word_count: len,
                position: offsets[p],
                similarity: attr.score(len, chars),
            });
        }
    }
    entries
}

#[derive(Debug, Clone)]
struct NormalizedClass {
    id: String,
    words: Vec<String>,
}

/// Scores requests against one ontology. Holds the vocabulary and normalized
/// class names so they are computed once.
#[derive(Debug)]
pub struct Matcher<'o> {
    ontology: &'o Ontology,
    pipeline: TextPipeline,
    vocabulary: BTreeSet<String>,
    classes: Vec<NormalizedClass>,
    class_threshold: f64,
}

impl<'o> Matcher<'o> {
    pub fn new(ontology: &'o Ontology, pipeline: TextPipeline) -> Self {
        let classes = ontology
            .classes()
            .iter()
            .map(|c| NormalizedClass {
                id: c.id.clone(),
                words: pipeline.normalize_name(&c.name),
            })
            .collect();
        Matcher {
            ontology,
            vocabulary: ontology.vocabulary(),
            pipeline,
            classes,
            class_threshold: DEFAULT_CLASS_THRESHOLD,
        }
    }

    pub fn with_class_threshold(mut self, threshold: f64) -> Self {
        self.class_threshold = threshold;
        self
    }

    pub fn ontology(&self) -> &'o Ontology {
        self.ontology
    }

    pub fn preprocess(&self, text: &str) -> ProcessedRequest {
        self.pipeline.preprocess(text, &self.vocabulary)
    }

    pub fn class_similarity(&self, req: &ProcessedRequest, class_id: &str) -> f64 {
        self.classes
            .iter()
            .find(|c| c.id == class_id)
            .map_or(0.0, |c| {
                request_class_similarity(req, &c.words, self.class_threshold)
            })
    }

    pub fn attribute_similarity(&self, req: &ProcessedRequest, attr: &OntologyAttribute) -> f64 {
        request_attribute_similarity(&req.raw, &attr.name)
    }

    pub fn match_processed(&self, request_id: &str, req: &ProcessedRequest) -> SimilarityReport {
        let class_scores = self
            .classes
            .iter()
            .filter_map(|c| {
                let value = request_class_similarity(req, &c.words, self.class_threshold);
                (value > 0.0).then(|| Score::new(&c.id, value))
            })
            .collect();
        let attribute_scores = self
            .ontology
            .attributes()
            .iter()
            .filter_map(|a| {
                let value = request_attribute_similarity(&req.raw, &a.name);
                (value > 0.0).then(|| Score::new(&a.id, value))
            })
            .collect();
        SimilarityReport {
            request_id: request_id.to_string(),
            class_scores,
            attribute_scores,
        }
    }

    /// Preprocesses and scores one request.
    pub fn match_request(&self, request_id: &str, text: &str) -> SimilarityReport {
        self.match_processed(request_id, &self.preprocess(text))
    }
}

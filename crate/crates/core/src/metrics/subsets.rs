//! Gold-pair subsets: unseen values, multi-attribute values, canonicalized
//! values.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{value_in_text, AttributeValuePair, Corpus, ProductExample, Span};

/// Set of gold positives kept by a subset, keyed by example id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldFilter {
    pub name: String,
    keep: BTreeSet<(String, String, String)>,
}

impl GoldFilter {
    pub fn new(name: impl Into<String>) -> Self {
        GoldFilter {
            name: name.into(),
            keep: BTreeSet::new(),
        }
    }

    pub fn insert(&mut self, id: &str, pair: &AttributeValuePair) {
        self.keep
            .insert((id.to_string(), pair.attribute.clone(), pair.value.clone()));
    }

    pub fn contains(&self, id: &str, pair: &AttributeValuePair) -> bool {
        self.keep
            .contains(&(id.to_string(), pair.attribute.clone(), pair.value.clone()))
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, String, String)> {
        self.keep.iter()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnseenLevel {
    /// The value string is never a training value, under any attribute.
    #[default]
    Value,
    /// The (attribute, value) pair never occurs in training.
    Pair,
}

fn filter_positives(test: &Corpus, name: &str, mut keep: impl FnMut(&ProductExample, &AttributeValuePair) -> bool) -> GoldFilter {
    let mut filter = GoldFilter::new(name);
    for example in &test.examples {
        let unified = example.unified();
        for pair in unified.positives() {
            if keep(&unified, pair) {
                filter.insert(&example.id, pair);
            }
        }
    }
    filter
}

pub fn subset_unseen(test: &Corpus, train: &Corpus, level: UnseenLevel) -> GoldFilter {
    let positives = || train.examples.iter().flat_map(|e| e.positives());
    let values: HashSet<&str> = positives().map(|p| p.value.as_str()).collect();
    let pairs: HashSet<(&str, &str)> = positives().map(|p| p.key()).collect();
    filter_positives(test, "unseen", |_, p| match level {
        UnseenLevel::Value => !values.contains(p.value.as_str()),
        UnseenLevel::Pair => !pairs.contains(&p.key()),
    })
}

/// Character occurrences of `needle` in every paragraph.
fn find_occurrences(example: &ProductExample, needle: &str) -> Vec<Span> {
    let needle: Vec<char> = needle.chars().collect();
    if needle.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (p, paragraph) in example.paragraphs.iter().enumerate() {
        let hay: Vec<char> = paragraph.chars().collect();
        if hay.len() < needle.len() {
            continue;
        }
        for start in 0..=hay.len() - needle.len() {
            if hay[start..start + needle.len()] == needle[..] {
                out.push(Span::new(p, start, start + needle.len()));
            }
        }
    }
    out
}

/// Annotated spans, or raw-string matches for span-less pairs.
fn occurrences(example: &ProductExample, pair: &AttributeValuePair) -> Vec<Span> {
    if pair.spans.is_empty() {
        find_occurrences(example, &pair.value)
    } else {
        pair.spans.clone()
    }
}

/// Pairs every textual occurrence of which overlaps an occurrence of a pair
/// with a different attribute; they can only be recovered by assigning one
/// surface string to several attributes. Pairs with no occurrence are out.
pub fn subset_multiattr(test: &Corpus) -> GoldFilter {
    filter_positives(test, "multi_attribute", |example, pair| {
        let mine = occurrences(example, pair);
        if mine.is_empty() {
            return false;
        }
        let others: Vec<Span> = example
            .positives()
            .filter(|q| q.attribute != pair.attribute)
            .flat_map(|q| occurrences(example, q))
            .collect();
        mine.iter().all(|s| others.iter().any(|o| o.overlaps(s)))
    })
}

/// Pairs whose value does not appear verbatim in the text.
pub fn subset_canonicalized(test: &Corpus) -> GoldFilter {
    filter_positives(test, "canonicalized", |example, pair| {
        !value_in_text(&pair.value, &example.paragraphs)
    })
}

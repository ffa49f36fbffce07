//! Product data model: examples, attribute-value pairs, spans and corpora.

mod io;
mod stats;
pub mod synth;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::normalize_whitespace;

pub use io::{load_corpus, read_corpus, save_corpus, write_corpus, Schema};
pub use stats::{compute_stats, CorpusStats};
pub use synth::{generate_synthetic_corpus, SynthConfig, SynthManifest, SynthOutput};

/// Value string carried by negative (no value) annotations.
pub const NONE_VALUE: &str = "None";

/// Character span of a value inside one paragraph; `end` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    #[serde(rename = "paragraph")]
    pub paragraph_index: usize,
    pub begin: usize,
    pub end: usize,
}

impl Span {
    pub fn new(paragraph_index: usize, begin: usize, end: usize) -> Self {
        Span {
            paragraph_index,
            begin,
            end,
        }
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.paragraph_index == other.paragraph_index
            && self.begin < other.end
            && other.begin < self.end
    }
}

/// An ⟨attribute, value⟩ pair.
///
/// Equality, ordering and hashing look at `(attribute, value)` only, case
/// sensitively; spans and the negative flag ride along as annotation.
#[derive(Debug, Clone)]
pub struct AttributeValuePair {
    pub attribute: String,
    pub value: String,
    pub spans: Vec<Span>,
    pub is_negative: bool,
}

impl AttributeValuePair {
    pub fn new(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        AttributeValuePair {
            attribute: attribute.into(),
            value: value.into(),
            spans: Vec::new(),
            is_negative: false,
        }
    }

    pub fn with_spans(mut self, spans: Vec<Span>) -> Self {
        self.spans = spans;
        self
    }

    /// The "no value" annotation for `attribute`.
    pub fn negative(attribute: impl Into<String>) -> Self {
        AttributeValuePair {
            attribute: attribute.into(),
            value: NONE_VALUE.to_string(),
            spans: Vec::new(),
            is_negative: true,
        }
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.attribute, &self.value)
    }
}

impl PartialEq for AttributeValuePair {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for AttributeValuePair {}

impl Hash for AttributeValuePair {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for AttributeValuePair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AttributeValuePair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for AttributeValuePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}, {}⟩", self.attribute, self.value)
    }
}

/// Unordered set of pairs, as produced by every predictor.
pub type PairSet = BTreeSet<AttributeValuePair>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProductExample {
    pub id: String,
    /// Paragraph 0 is the title, the rest are description paragraphs.
    pub paragraphs: Vec<String>,
    pub pairs: Vec<AttributeValuePair>,
}

impl ProductExample {
    pub fn new(id: impl Into<String>, paragraphs: Vec<String>, pairs: Vec<AttributeValuePair>) -> Self {
        ProductExample {
            id: id.into(),
            paragraphs,
            pairs,
        }
    }

    pub fn positives(&self) -> impl Iterator<Item = &AttributeValuePair> {
        self.pairs.iter().filter(|p| !p.is_negative)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &AttributeValuePair> {
        self.pairs.iter().filter(|p| p.is_negative)
    }

    /// Unified positive pairs as a set.
    pub fn positive_set(&self) -> PairSet {
        self.positives().cloned().collect()
    }

    /// Copy of this example with its pairs unified.
    pub fn unified(&self) -> ProductExample {
        ProductExample {
            id: self.id.clone(),
            paragraphs: self.paragraphs.clone(),
            pairs: unify_pairs(&self.pairs),
        }
    }

    /// Substring addressed by `span`, if it resolves.
    pub fn span_text(&self, span: &Span) -> Option<String> {
        let paragraph = self.paragraphs.get(span.paragraph_index)?;
        if span.begin >= span.end || span.end > paragraph.chars().count() {
            return None;
        }
        Some(
            paragraph
                .chars()
                .skip(span.begin)
                .take(span.end - span.begin)
                .collect(),
        )
    }

    /// Checks attribute non-emptiness, negative-pair shape and span resolution.
    /// With `spans_match_value`, every span must also cover exactly the value.
    pub fn validate(&self, spans_match_value: bool) -> Result<()> {
        let invalid = |message: String| Error::InvalidExample {
            id: self.id.clone(),
            message,
        };
        for pair in &self.pairs {
            if pair.attribute.is_empty() {
                return Err(invalid("pair with empty attribute".into()));
            }
            if pair.is_negative && !pair.spans.is_empty() {
                return Err(invalid(format!("negative pair {pair} carries spans")));
            }
            for span in &pair.spans {
                let text = self.span_text(span).ok_or_else(|| {
                    invalid(format!(
                        "span ({}, {}, {}) of {pair} is out of range",
                        span.paragraph_index, span.begin, span.end
                    ))
                })?;
                if spans_match_value && text != pair.value {
                    return Err(invalid(format!(
                        "span ({}, {}, {}) covers {text:?}, not the value of {pair}",
                        span.paragraph_index, span.begin, span.end
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub split: Split,
    pub examples: Vec<ProductExample>,
}

impl Corpus {
    pub fn new(split: Split, examples: Vec<ProductExample>) -> Self {
        Corpus { split, examples }
    }

    pub fn empty(split: Split) -> Self {
        Corpus::new(split, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for ex in &self.examples {
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::DuplicateId(ex.id.clone()));
            }
        }
        Ok(())
    }

    /// Copy with every example's pairs unified.
    pub fn unified(&self) -> Corpus {
        Corpus::new(self.split, self.examples.iter().map(ProductExample::unified).collect())
    }

    pub fn get(&self, id: &str) -> Option<&ProductExample> {
        self.examples.iter().find(|e| e.id == id)
    }

    /// Id → example lookup table.
    pub fn by_id(&self) -> HashMap<&str, &ProductExample> {
        self.examples.iter().map(|e| (e.id.as_str(), e)).collect()
    }
}

/// Expands an attribute carrying several values into one pair per value.
pub fn decompose_multivalue<S: AsRef<str>>(attribute: &str, values: &[S]) -> Result<Vec<AttributeValuePair>> {
    if values.is_empty() {
        return Err(Error::Empty(format!("no values given for attribute {attribute:?}")));
    }
    Ok(values
        .iter()
        .map(|v| AttributeValuePair::new(attribute, v.as_ref()))
        .collect())
}

/// Collapses pairs equal under `(attribute, value)`. The first occurrence
/// keeps its position; spans of later duplicates are appended to it.
pub fn unify_pairs(pairs: &[AttributeValuePair]) -> Vec<AttributeValuePair> {
    let mut out: Vec<AttributeValuePair> = Vec::with_capacity(pairs.len());
    let mut position: HashMap<(&str, &str), usize> = HashMap::new();
    for pair in pairs {
        match position.get(&pair.key()) {
            Some(&i) => {
                let kept = &mut out[i];
                for span in &pair.spans {
                    if !kept.spans.contains(span) {
                        kept.spans.push(*span);
                    }
                }
            }
            None => {
                position.insert(pair.key(), out.len());
                out.push(pair.clone());
            }
        }
    }
    out
}

/// Whether `value` occurs verbatim (case-sensitive, whitespace runs
/// collapsed on both sides) in any paragraph.
pub fn value_in_text<S: AsRef<str>>(value: &str, paragraphs: &[S]) -> bool {
    let needle = normalize_whitespace(value);
    if needle.is_empty() {
        return false;
    }
    paragraphs
        .iter()
        .any(|p| normalize_whitespace(p.as_ref()).contains(&needle))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The MAVE-style jersey record: six span tuples plus one negative.
    pub fn jersey() -> ProductExample {
        let title = "Chicago Blackhawks Pet Dog Hockey Jersey LARGE";
        let desc = "Chicago Blackhawks pet jersey - size LARGE. This great-looking jersey features \
                    screened-on logos on the sleeves and screened-on team name/number on the back.";
        let tuple = |a: &str, v: &str, p, b, e| AttributeValuePair::new(a, v).with_spans(vec![Span::new(p, b, e)]);
        ProductExample::new(
            "B00000001",
            vec![title.into(), desc.into()],
            vec![
                tuple("Type", "Jersey", 0, 34, 40),
                tuple("Type", "jersey", 1, 23, 29),
                tuple("Type", "jersey", 1, 63, 69),
                tuple("Clothing Type", "Jersey", 0, 34, 40),
                tuple("Clothing Type", "jersey", 1, 23, 29),
                tuple("Clothing Type", "jersey", 1, 63, 69),
                AttributeValuePair::negative("Special use"),
            ],
        )
    }

    /// The in-house-style sneaker record with canonicalized values.
    pub fn sneakers() -> ProductExample {
        let mut pairs = decompose_multivalue("Shoe size (cm)", &["25.0", "26.0", "27.0"]).unwrap();
        pairs.push(AttributeValuePair::new("Color", "Red"));
        ProductExample::new(
            "R00000001",
            vec![
                "Northwave [northwave] Espresso Original Red Men's / Women's / Sneakers 25 - 27cm".into(),
                "Product description. These sneakers are the perfect accent for your feet and come in a \
                 soft red color. The sole is made of lightweight rubber to reduce weight. It is a popular color."
                    .into(),
            ],
            pairs,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jersey_fixture_spans_resolve() {
        let ex = jersey();
        ex.validate(true).unwrap();
        assert_eq!(ex.span_text(&Span::new(1, 63, 69)).unwrap(), "jersey");
    }

    #[test]
    fn unify_keeps_case_variants() {
        let unified = unify_pairs(&jersey().pairs);
        let keys: Vec<_> = unified.iter().map(|p| p.key()).collect();
        assert_eq!(
            keys,
            [
                ("Type", "Jersey"),
                ("Type", "jersey"),
                ("Clothing Type", "Jersey"),
                ("Clothing Type", "jersey"),
                ("Special use", "None"),
            ]
        );
        assert_eq!(unified[1].spans, [Span::new(1, 23, 29), Span::new(1, 63, 69)]);
        assert!(unified[4].is_negative);
    }

    #[test]
    fn unify_unique_list_is_unchanged() {
        let pairs = sneakers().pairs;
        let unified = unify_pairs(&pairs);
        assert_eq!(unified, pairs);
    }

    #[test]
    fn decompose_shoe_sizes() {
        let pairs = decompose_multivalue("Shoe size (cm)", &["25.0", "26.0", "27.0"]).unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].key(), ("Shoe size (cm)", "25.0"));
        assert_eq!(pairs[2].key(), ("Shoe size (cm)", "27.0"));
        assert_eq!(decompose_multivalue("Color", &["Red"]).unwrap().len(), 1);
        assert!(decompose_multivalue::<&str>("Color", &[]).is_err());
    }

    #[test]
    fn value_in_text_rules() {
        let paragraphs = ["Soft  red\tcolor", "Red"];
        assert!(value_in_text("red color", &paragraphs));
        assert!(value_in_text("Red", &paragraphs));
        assert!(!value_in_text("RED", &paragraphs));
        assert!(!value_in_text("25.0", &paragraphs));
        assert!(!value_in_text("", &paragraphs));
    }

    fn arb_pairs() -> impl Strategy<Value = Vec<AttributeValuePair>> {
        prop::collection::vec(("[ab]{1,2}", "[xyXY]{1,2}"), 0..16)
            .prop_map(|v| v.into_iter().map(|(a, b)| AttributeValuePair::new(a, b)).collect())
    }

    proptest! {
        #[test]
        fn unify_is_idempotent_and_order_stable(pairs in arb_pairs()) {
            let once = unify_pairs(&pairs);
            let twice = unify_pairs(&once);
            prop_assert_eq!(&once, &twice);
            // order of first occurrences
            let mut seen = HashSet::new();
            let firsts: Vec<_> = pairs.iter().filter(|p| seen.insert(p.key())).map(|p| p.key()).collect();
            let got: Vec<_> = once.iter().map(|p| p.key()).collect();
            prop_assert_eq!(firsts, got);
        }

        #[test]
        fn decompose_preserves_length(values in prop::collection::vec("[a-z0-9.]{1,5}", 1..10)) {
            let pairs = decompose_multivalue("Size", &values).unwrap();
            prop_assert_eq!(pairs.len(), values.len());
            for (p, v) in pairs.iter().zip(&values) {
                prop_assert_eq!(&p.value, v);
            }
        }
    }
}

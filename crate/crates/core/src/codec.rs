//! Linearization of pair lists into target token sequences, and back.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AttributeValuePair, Corpus, PairSet};
use crate::error::{Error, Result};
use crate::tokenize::{detokenize, Tokenizer};

pub const DEFAULT_SEP_AV: &str = "[SEP_av]";
pub const DEFAULT_SEP_PR: &str = "[SEP_pr]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    AttributeThenValue,
    ValueThenAttribute,
}

impl Composition {
    pub const ALL: [Composition; 2] = [Composition::AttributeThenValue, Composition::ValueThenAttribute];

    pub fn as_str(&self) -> &'static str {
        match self {
            Composition::AttributeThenValue => "attribute_then_value",
            Composition::ValueThenAttribute => "value_then_attribute",
        }
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Composition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Composition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown composition {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizationSpec {
    pub composition: Composition,
    #[serde(default = "default_sep_av")]
    pub sep_av: String,
    #[serde(default = "default_sep_pr")]
    pub sep_pr: String,
}

fn default_sep_av() -> String {
    DEFAULT_SEP_AV.to_string()
}

fn default_sep_pr() -> String {
    DEFAULT_SEP_PR.to_string()
}

impl LinearizationSpec {
    pub fn new(composition: Composition) -> Self {
        LinearizationSpec {
            composition,
            sep_av: default_sep_av(),
            sep_pr: default_sep_pr(),
        }
    }

    /// Separators must differ, be single whitespace-free tokens, and never
    /// occur inside any positive attribute or value of `corpora`.
    pub fn validate(&self, corpora: &[&Corpus]) -> Result<()> {
        if self.sep_av == self.sep_pr {
            return Err(Error::Config(format!("sep_av and sep_pr are both {:?}", self.sep_av)));
        }
        for sep in [&self.sep_av, &self.sep_pr] {
            if sep.is_empty() || sep.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("separator {sep:?} must be a non-empty single token")));
            }
        }
        for corpus in corpora {
            for pair in corpus.examples.iter().flat_map(|e| e.positives()) {
                self.check_fields(pair)?;
            }
        }
        Ok(())
    }

    fn check_fields(&self, pair: &AttributeValuePair) -> Result<()> {
        for field in [&pair.attribute, &pair.value] {
            for sep in [&self.sep_av, &self.sep_pr] {
                if field.contains(sep.as_str()) {
                    return Err(Error::SeparatorCollision {
                        separator: sep.clone(),
                        field: field.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeDiagnostics {
    pub malformed_segments: usize,
    pub duplicate_pairs_dropped: usize,
    pub empty_fields_dropped: usize,
}

impl DecodeDiagnostics {
    pub fn is_clean(&self) -> bool {
        *self == DecodeDiagnostics::default()
    }

    pub fn add(&mut self, other: &DecodeDiagnostics) {
        self.malformed_segments += other.malformed_segments;
        self.duplicate_pairs_dropped += other.duplicate_pairs_dropped;
        self.empty_fields_dropped += other.empty_fields_dropped;
    }
}

/// Serializes ordered pairs: `a sep_av v` (or `v sep_av a`) segments joined
/// by `sep_pr`.
pub fn linearize(
    ordered_pairs: &[AttributeValuePair],
    spec: &LinearizationSpec,
    tokenizer: &Tokenizer,
) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, pair) in ordered_pairs.iter().enumerate() {
        spec.check_fields(pair)?;
        if i > 0 {
            out.push(spec.sep_pr.clone());
        }
        let (first, second) = match spec.composition {
            Composition::AttributeThenValue => (&pair.attribute, &pair.value),
            Composition::ValueThenAttribute => (&pair.value, &pair.attribute),
        };
        out.extend(tokenizer.tokens(first));
        out.push(spec.sep_av.clone());
        out.extend(tokenizer.tokens(second));
    }
    Ok(out)
}

/// Parses any token sequence into a pair set. Segments without `sep_av` are
/// malformed; segments whose attribute or value is empty are dropped; repeated
/// pairs are dropped. Every drop is counted.
pub fn delinearize<S: AsRef<str>>(tokens: &[S], spec: &LinearizationSpec) -> (PairSet, DecodeDiagnostics) {
    let mut diagnostics = DecodeDiagnostics::default();
    let mut pairs = PairSet::new();
    if tokens.is_empty() {
        return (pairs, diagnostics);
    }
    for segment in tokens.split(|t| t.as_ref() == spec.sep_pr) {
        let Some(cut) = segment.iter().position(|t| t.as_ref() == spec.sep_av) else {
            diagnostics.malformed_segments += 1;
            continue;
        };
        let left = detokenize(&segment[..cut]).trim().to_string();
        let right = detokenize(&segment[cut + 1..]).trim().to_string();
        let (attribute, value) = match spec.composition {
            Composition::AttributeThenValue => (left, right),
            Composition::ValueThenAttribute => (right, left),
        };
        if attribute.is_empty() || value.is_empty() {
            diagnostics.empty_fields_dropped += 1;
            continue;
        }
        if !pairs.insert(AttributeValuePair::new(attribute, value)) {
            diagnostics.duplicate_pairs_dropped += 1;
        }
    }
    (pairs, diagnostics)
}

/// Expected token count of a linearization, from field token counts.
pub fn linearized_len(pairs: &[AttributeValuePair], tokenizer: &Tokenizer) -> usize {
    if pairs.is_empty() {
        return 0;
    }
    let fields: usize = pairs
        .iter()
        .map(|p| tokenizer.count(&p.attribute) + tokenizer.count(&p.value) + 1)
        .sum();
    fields + pairs.len() - 1
}

/// Checks that every pair's fields tokenize and detokenize back exactly.
pub fn is_round_trippable(pairs: &[AttributeValuePair], tokenizer: &Tokenizer) -> bool {
    let mut seen = HashSet::new();
    pairs.iter().all(|p| {
        seen.insert(p.key())
            && !p.attribute.is_empty()
            && !p.value.is_empty()
            && detokenize(&tokenizer.tokens(&p.attribute)) == p.attribute
            && detokenize(&tokenizer.tokens(&p.value)) == p.value
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rare_first_list() -> Vec<AttributeValuePair> {
        vec![
            AttributeValuePair::new("Material", "Nylon"),
            AttributeValuePair::new("Color", "Red"),
            AttributeValuePair::new("Color", "White"),
        ]
    }

    #[test]
    fn attribute_then_value_string() {
        let spec = LinearizationSpec::new(Composition::AttributeThenValue);
        let tokens = linearize(&rare_first_list(), &spec, &Tokenizer).unwrap();
        assert_eq!(
            tokens.join(" "),
            "Material [SEP_av] Nylon [SEP_pr] Color [SEP_av] Red [SEP_pr] Color [SEP_av] White"
        );
    }

    #[test]
    fn value_then_attribute_string() {
        let spec = LinearizationSpec::new(Composition::ValueThenAttribute);
        let tokens = linearize(&rare_first_list(), &spec, &Tokenizer).unwrap();
        assert_eq!(
            tokens.join(" "),
            "Nylon [SEP_av] Material [SEP_pr] Red [SEP_av] Color [SEP_pr] White [SEP_av] Color"
        );
    }

    #[test]
    fn empty_list_is_empty_sequence() {
        let spec = LinearizationSpec::new(Composition::AttributeThenValue);
        assert!(linearize(&[], &spec, &Tokenizer).unwrap().is_empty());
        let (pairs, diag) = delinearize::<String>(&[], &spec);
        assert!(pairs.is_empty() && diag.is_clean());
    }

    #[test]
    fn separator_collision_is_an_error() {
        let spec = LinearizationSpec::new(Composition::AttributeThenValue);
        let bad = [AttributeValuePair::new("Color", "red [SEP_pr] blue")];
        assert!(matches!(linearize(&bad, &spec, &Tokenizer), Err(Error::SeparatorCollision { .. })));
        let same = LinearizationSpec {
            sep_pr: DEFAULT_SEP_AV.into(),
            ..spec
        };
        assert!(same.validate(&[]).is_err());
    }

    #[test]
    fn segment_without_separator_is_malformed() {
        let spec = LinearizationSpec::new(Composition::AttributeThenValue);
        let toks: Vec<&str> = "Color [SEP_pr] Material [SEP_av] Nylon".split(' ').collect();
        let (pairs, diag) = delinearize(&toks, &spec);
        assert_eq!(pairs.into_iter().collect::<Vec<_>>(), [AttributeValuePair::new("Material", "Nylon")]);
        assert_eq!(diag.malformed_segments, 1);
    }

    #[test]
    fn duplicates_are_counted() {
        let spec = LinearizationSpec::new(Composition::AttributeThenValue);
        let toks: Vec<&str> = "Color [SEP_av] Red [SEP_pr] Color [SEP_av] Red".split(' ').collect();
        let (pairs, diag) = delinearize(&toks, &spec);
        assert_eq!(pairs.len(), 1);
        assert_eq!(diag.duplicate_pairs_dropped, 1);
        assert_eq!(diag.malformed_segments, 0);
    }

    #[test]
    fn empty_fields_and_stray_separators() {
        let spec = LinearizationSpec::new(Composition::AttributeThenValue);
        let toks: Vec<&str> = "[SEP_av] Red [SEP_pr] Color [SEP_av] [SEP_pr] Size [SEP_av] M [SEP_av] L"
            .split(' ')
            .collect();
        let (pairs, diag) = delinearize(&toks, &spec);
        assert_eq!(diag.empty_fields_dropped, 2);
        let got: Vec<_> = pairs.iter().map(|p| p.key()).collect();
        assert_eq!(got, [("Size", "M [SEP_av] L")]);
    }

    #[test]
    fn punctuated_fields_round_trip() {
        let spec = LinearizationSpec::new(Composition::ValueThenAttribute);
        let list = vec![AttributeValuePair::new("Shoe size (cm)", "25.0"), AttributeValuePair::new("Brand", "D&G")];
        let tokens = linearize(&list, &spec, &Tokenizer).unwrap();
        assert_eq!(tokens.len(), linearized_len(&list, &Tokenizer));
        let (pairs, diag) = delinearize(&tokens, &spec);
        assert!(diag.is_clean());
        assert_eq!(pairs, list.into_iter().collect());
    }

    fn field() -> impl Strategy<Value = String> {
        prop::collection::vec("[A-Za-z0-9]{1,6}|[(),.&/-]", 1..5).prop_map(|parts| {
            let mut s = String::new();
            for (i, p) in parts.iter().enumerate() {
                if i > 0 && p.len() > 1 {
                    s.push(' ');
                }
                s.push_str(p);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn round_trip_and_length(raw in prop::collection::vec((field(), field()), 0..12), vta in any::<bool>()) {
            let mut seen = HashSet::new();
            let list: Vec<_> = raw
                .into_iter()
                .map(|(a, v)| AttributeValuePair::new(a, v))
                .filter(|p| seen.insert(p.clone()))
                .collect();
            prop_assume!(is_round_trippable(&list, &Tokenizer));
            let composition = if vta { Composition::ValueThenAttribute } else { Composition::AttributeThenValue };
            let spec = LinearizationSpec::new(composition);
            let tokens = linearize(&list, &spec, &Tokenizer).unwrap();
            prop_assert_eq!(tokens.len(), linearized_len(&list, &Tokenizer));
            let (pairs, diag) = delinearize(&tokens, &spec);
            prop_assert!(diag.is_clean());
            prop_assert_eq!(pairs, list.into_iter().collect::<PairSet>());
        }

        #[test]
        fn delinearize_is_total(tokens in prop::collection::vec("\\[SEP_av\\]|\\[SEP_pr\\]|[a-z]{1,3}|##[a-z]", 0..30)) {
            let spec = LinearizationSpec::new(Composition::AttributeThenValue);
            let (pairs, _) = delinearize(&tokens, &spec);
            for p in pairs {
                prop_assert!(!p.attribute.is_empty() && !p.value.is_empty());
            }
        }
    }
}

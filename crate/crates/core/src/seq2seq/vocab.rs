use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::codec::LinearizationSpec;
use crate::corpus::Corpus;
use crate::tokenize::Tokenizer;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const SEP_AV: usize = 4;
pub const SEP_PR: usize = 5;
pub const NUM_RESERVED: usize = 6;

pub const PAD_TOKEN: &str = "<pad>";
pub const BOS_TOKEN: &str = "<bos>";
pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";

/// Token ↔ id mapping. Ids 0..6 are reserved; the two separator slots hold
/// the separator strings of the linearization spec.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    /// Reserved tokens followed by `tokens` in sorted order.
    pub fn new<I, S>(spec: &LinearizationSpec, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let reserved = [PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, &spec.sep_av, &spec.sep_pr];
        let mut all: Vec<String> = reserved.iter().map(|s| s.to_string()).collect();
        let rest: BTreeSet<String> = tokens
            .into_iter()
            .map(Into::into)
            .filter(|t| !reserved.contains(&t.as_str()))
            .collect();
        all.extend(rest);
        Vocab::from(all)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map_or(UNK_TOKEN, String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }
}

/// Vocabulary over every input token and every target field token of the
/// training split.
pub fn build_vocab(train: &Corpus, spec: &LinearizationSpec) -> Vocab {
    let tokenizer = Tokenizer;
    let mut tokens = BTreeSet::new();
    for example in &train.examples {
        for paragraph in &example.paragraphs {
            tokens.extend(tokenizer.tokens(paragraph));
        }
        for pair in example.positives() {
            tokens.extend(tokenizer.tokens(&pair.attribute));
            tokens.extend(tokenizer.tokens(&pair.value));
        }
    }
    Vocab::new(spec, tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Composition;
    use crate::corpus::{AttributeValuePair, ProductExample, Split};

    fn spec() -> LinearizationSpec {
        LinearizationSpec::new(Composition::AttributeThenValue)
    }

    #[test]
    fn empty_corpus_has_reserved_only() {
        let v = build_vocab(&Corpus::empty(Split::Train), &spec());
        assert_eq!(v.len(), NUM_RESERVED);
        assert_eq!(v.id("[SEP_av]"), SEP_AV);
        assert_eq!(v.id("[SEP_pr]"), SEP_PR);
        assert_eq!(v.id("<eos>"), EOS);
    }

    #[test]
    fn two_token_fixture() {
        let train = Corpus::new(
            Split::Train,
            vec![ProductExample::new("x", vec!["a b a".into()], vec![AttributeValuePair::new("a", "b")])],
        );
        let v = build_vocab(&train, &spec());
        assert_eq!(v.len(), 8);
        assert_eq!(v.id("zzz"), UNK);
        assert_eq!(build_vocab(&train, &spec()), v);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Vocab>(&json).unwrap(), v);
    }
}

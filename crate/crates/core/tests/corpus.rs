use std::collections::{BTreeSet, HashSet};

use pavi_core::corpus::{
    compute_stats, generate_synthetic_corpus, load_corpus, save_corpus, value_in_text, Schema, SynthConfig,
};
use pavi_core::{AttributeValuePair, Corpus, ProductExample, Split, Tokenizer};
use proptest::prelude::*;

fn small_config() -> SynthConfig {
    SynthConfig {
        train_examples: 400,
        dev_examples: 60,
        test_examples: 120,
        ..SynthConfig::default()
    }
}

fn has_pair(example: &ProductExample, attribute: &str, value: &str) -> bool {
    example.positives().any(|p| p.attribute == attribute && p.value == value)
}

#[test]
fn plants_describe_their_examples() {
    let data = generate_synthetic_corpus(&small_config(), 7).unwrap();
    let train_values: HashSet<&str> = data
        .train
        .examples
        .iter()
        .flat_map(|e| e.positives().map(|p| p.value.as_str()))
        .collect();
    for split in [Split::Train, Split::Dev, Split::Test] {
        let corpus = data.split(split);
        let plants = &data.manifest.plants[&split];
        let total: usize = corpus.examples.iter().map(|e| e.unified().positives().count()).sum();
        assert_eq!(plants.total_pairs, total, "{split:?}");
        for [id, attribute, value] in &plants.canonicalized {
            let e = corpus.get(id).unwrap();
            assert!(has_pair(e, attribute, value));
            assert!(!value_in_text(value, &e.paragraphs), "{id}: {value} is verbatim");
        }
        for [id, attribute, value] in plants.multi_attribute.iter().chain(&plants.unseen) {
            assert!(has_pair(corpus.get(id).unwrap(), attribute, value));
        }
        if split != Split::Train {
            for [id, _, value] in &plants.unseen {
                assert!(!train_values.contains(value.as_str()), "{id}: {value} occurs in train");
            }
        }
    }
    assert!(!data.manifest.plants[&Split::Test].unseen.is_empty());
}

#[test]
fn saved_corpora_load_back_identically() {
    let data = generate_synthetic_corpus(&small_config(), 8).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("test.jsonl");
    save_corpus(&data.test, &path, Schema::MaveLike).unwrap();
    let back = load_corpus(&path, Schema::MaveLike, Split::Test).unwrap();
    assert_eq!(back, data.test);
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    let pair = prop_oneof![
        4 => (0usize..4, 0usize..5).prop_map(|(a, v)| AttributeValuePair::new(format!("attr{a}"), format!("val {v}"))),
        1 => (0usize..4).prop_map(|a| AttributeValuePair::negative(format!("attr{a}"))),
    ];
    let example = (
        proptest::collection::vec("[a-z]{1,6}( [a-z]{1,6}){0,5}", 1..3),
        proptest::collection::vec(pair, 0..6),
    );
    proptest::collection::vec(example, 0..8).prop_map(|examples| {
        let examples = examples
            .into_iter()
            .enumerate()
            .map(|(i, (paragraphs, pairs))| ProductExample::new(format!("e{i}"), paragraphs, pairs))
            .collect();
        Corpus::new(Split::Train, examples)
    })
}

proptest! {
    #[test]
    fn stats_match_a_direct_recount(corpus in corpus_strategy()) {
        let stats = compute_stats(&corpus, &Tokenizer);
        let mut num_pairs = 0;
        let mut without_values = 0;
        let mut attributes = BTreeSet::new();
        let mut values = BTreeSet::new();
        let mut distinct = BTreeSet::new();
        for e in &corpus.examples {
            let keys: BTreeSet<(String, String)> =
                e.pairs.iter().map(|p| (p.attribute.clone(), p.value.clone())).collect();
            num_pairs += keys.len();
            if e.pairs.iter().all(|p| p.is_negative) {
                without_values += 1;
            }
            for (a, v) in keys {
                attributes.insert(a.clone());
                values.insert(v.clone());
                distinct.insert((a, v));
            }
        }
        prop_assert_eq!(stats.num_examples, corpus.len());
        prop_assert_eq!(stats.num_pairs, num_pairs);
        prop_assert_eq!(stats.num_examples_without_values, without_values);
        prop_assert_eq!(stats.num_distinct_attributes, attributes.len());
        prop_assert_eq!(stats.num_distinct_values, values.len());
        prop_assert_eq!(stats.num_distinct_pairs, distinct.len());
        prop_assert!(stats.num_pairs_value_in_text <= stats.num_pairs);
    }
}

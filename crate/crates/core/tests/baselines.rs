use std::collections::BTreeSet;

use pavi_core::baselines::*;
use pavi_core::corpus::{generate_synthetic_corpus, value_in_text, SynthConfig};
use pavi_core::metrics::evaluate_all;
use pavi_core::ordering::build_frequency_index;
use pavi_core::{AttributeValuePair, Corpus, ProductExample, Span, Split};

/// Ten examples; every value is a word of its own that appears once.
fn memorization_corpus() -> Corpus {
    let colors = ["crimson", "azure", "olive", "ebony", "ivory", "amber", "teal", "coral", "slate", "plum"];
    let materials = ["cotton", "linen", "wool", "silk", "denim"];
    let examples = (0..10)
        .map(|i| {
            let (c, m) = (colors[i], materials[i % 5]);
            let text = format!("lovely {c} top made of {m}");
            let cs = 7;
            let ms = text.len() - m.len();
            ProductExample::new(
                format!("m{i}"),
                vec![text.clone()],
                vec![
                    AttributeValuePair::new("Color", c).with_spans(vec![Span::new(0, cs, cs + c.len())]),
                    AttributeValuePair::new("Material", m).with_spans(vec![Span::new(0, ms, text.len())]),
                ],
            )
        })
        .collect();
    Corpus::new(Split::Train, examples)
}

fn small_synth(seed: u64) -> pavi_core::corpus::SynthOutput {
    let cfg = SynthConfig {
        train_examples: 300,
        dev_examples: 60,
        test_examples: 60,
        ..SynthConfig::default()
    };
    generate_synthetic_corpus(&cfg, seed).unwrap()
}

#[test]
fn tagger_memorizes_fixture() {
    let train = memorization_corpus();
    let space = build_tag_space(&train);
    let index = build_frequency_index(&train, 0);
    let tagged: Vec<TaggedExample> = train.examples.iter().map(|e| annotate_from_spans(e, &space, &index)).collect();
    let cfg = LearnerConfig { epochs: 20, ..LearnerConfig::default() };
    let (tagger, log) = train_tagger(&tagged, &train, &space, &cfg).unwrap();
    let f1 = evaluate_all(&train, &predict_tagger(&tagger, &train)).micro.f1;
    assert!(f1 >= 0.9, "tagger F1 {f1}, log {log:?}");
}

#[test]
fn mlc_memorizes_fixture() {
    let train = memorization_corpus();
    let space = build_label_space(&train);
    let cfg = LearnerConfig { epochs: 30, learning_rate: 0.5, ..LearnerConfig::default() };
    let (mlc, _) = train_mlc(&train, &train, &space, None, &cfg).unwrap();
    let f1 = evaluate_all(&train, &predict_mlc(&mlc, &train, None)).micro.f1;
    assert!(f1 >= 0.9, "mlc F1 {f1}");
}

#[test]
fn zero_epochs_predict_nothing() {
    let train = memorization_corpus();
    let space = build_label_space(&train);
    let cfg = LearnerConfig { epochs: 0, ..LearnerConfig::default() };
    let (mlc, log) = train_mlc(&train, &train, &space, None, &cfg).unwrap();
    assert!(log.epochs.is_empty());
    for e in &train.examples {
        assert!(mlc.scores(e, None).iter().all(|&(_, p)| p == 0.5));
        assert!(mlc.predict(e, None).is_empty());
    }
    let tag_space = build_tag_space(&train);
    let tagged: Vec<TaggedExample> = train.examples.iter().map(TaggedExample::outside).collect();
    let (tagger, _) = train_tagger(&tagged, &train, &tag_space, &cfg).unwrap();
    assert!(predict_tagger(&tagger, &train).values().all(|p| p.is_empty()));
    assert!(train_mlc(&Corpus::empty(Split::Train), &train, &space, None, &cfg).is_err());
    assert!(train_tagger(&[], &train, &tag_space, &cfg).is_err());
}

#[test]
fn decode_of_annotation_recovers_unconflicted_pairs() {
    for seed in 0..5 {
        let synth = small_synth(seed);
        let space = build_tag_space(&synth.train);
        let index = build_frequency_index(&synth.train, seed);
        for e in synth.train.examples.iter().chain(&synth.test.examples) {
            let tagged = annotate_from_spans(e, &space, &index);
            assert!(tagged.is_consistent(&space), "{}", e.id);
            let decoded = decode_bilou(&tagged, &space);
            let positives = e.positive_set();
            assert!(decoded.is_subset(&positives), "{}: {decoded:?} vs {positives:?}", e.id);
            for p in e.positives().filter(|p| !p.spans.is_empty() && space.attribute_index(&p.attribute).is_some()) {
                let conflicted = e
                    .positives()
                    .filter(|q| q.key() != p.key())
                    .any(|q| q.spans.iter().any(|s| p.spans.iter().any(|t| s.overlaps(t))));
                if !conflicted {
                    assert!(decoded.contains(p), "{}: lost {p}", e.id);
                }
            }
        }
    }
}

#[test]
fn category_masks_never_remove_gold_labels() {
    let synth = small_synth(3);
    let space = build_label_space(&synth.train);
    let taxonomy = Taxonomy::from_categories(&space, &synth.manifest.categories, &synth.manifest.example_categories);
    taxonomy.validate(&space).unwrap();
    for e in synth.train.examples.iter().chain(&synth.test.examples) {
        let mask: BTreeSet<usize> = taxonomy_mask(&space, Some(&taxonomy), &e.id).into_iter().collect();
        let gold = space.gold(&e.unified().pairs);
        assert!(gold.is_subset(&mask), "{}", e.id);
        assert!(mask.len() < space.len());
    }
}

#[test]
fn learners_respect_structural_limits() {
    let synth = small_synth(5);
    let space = build_label_space(&synth.train);
    let taxonomy = Taxonomy::from_categories(&space, &synth.manifest.categories, &synth.manifest.example_categories);
    let cfg = LearnerConfig { epochs: 3, learning_rate: 0.3, ..LearnerConfig::default() };
    let (mlc, _) = train_mlc(&synth.train, &synth.dev, &space, Some(&taxonomy), &cfg).unwrap();
    for e in &synth.test.examples {
        let mask: BTreeSet<usize> = taxonomy_mask(&space, Some(&taxonomy), &e.id).into_iter().collect();
        for p in mlc.predict(e, Some(&taxonomy)) {
            let l = space.index(&p.attribute, &p.value).expect("label outside the label space");
            assert!(mask.contains(&l));
            assert!(!p.is_negative);
        }
    }
    let tag_space = build_tag_space(&synth.train);
    let index = build_frequency_index(&synth.train, 0);
    let tagged: Vec<TaggedExample> = synth.train.examples.iter().map(|e| annotate_from_spans(e, &tag_space, &index)).collect();
    let (tagger, _) = train_tagger(&tagged, &synth.dev, &tag_space, &cfg).unwrap();
    let mut predicted = 0;
    for e in &synth.test.examples {
        for p in tagger.predict(e) {
            predicted += 1;
            assert!(value_in_text(&p.value, &e.paragraphs), "{}: {p}", e.id);
        }
    }
    assert!(predicted > 0);
}

#[test]
fn tagger_checkpoint_round_trip() {
    let train = memorization_corpus();
    let space = build_tag_space(&train);
    let index = build_frequency_index(&train, 0);
    let tagged: Vec<TaggedExample> = train.examples.iter().map(|e| annotate_from_spans(e, &space, &index)).collect();
    let (tagger, _) = train_tagger(&tagged, &train, &space, &LearnerConfig { epochs: 2, ..LearnerConfig::default() }).unwrap();
    let json = serde_json::to_string(&tagger).unwrap();
    assert_eq!(serde_json::from_str::<Tagger>(&json).unwrap(), tagger);
    let labels = build_label_space(&train);
    let (mlc, _) = train_mlc(&train, &train, &labels, None, &LearnerConfig { epochs: 2, ..LearnerConfig::default() }).unwrap();
    let json = serde_json::to_string(&mlc).unwrap();
    assert_eq!(serde_json::from_str::<Mlc>(&json).unwrap(), mlc);
}

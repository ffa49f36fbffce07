//! Inputs shared by the pipeline benchmarks.

use pavi_core::codec::{Composition, LinearizationSpec};
use pavi_core::corpus::{generate_synthetic_corpus, SynthConfig, SynthOutput};
use pavi_core::ordering::{build_frequency_index, OrderingKind, OrderingPolicy, PairFrequencyIndex};
use pavi_core::seq2seq::{build_vocab, encode_example, EncodedExample, ModelConfig, TinySeq2Seq, TrainConfig};
use pavi_core::AttributeValuePair;

pub struct Fixture {
    pub data: SynthOutput,
    pub spec: LinearizationSpec,
    pub policy: OrderingPolicy,
    pub index: PairFrequencyIndex,
}

/// A seeded synthetic corpus with `train` training and `test` test examples.
pub fn fixture(train: usize, test: usize) -> Fixture {
    let config = SynthConfig {
        train_examples: train,
        dev_examples: test,
        test_examples: test,
        ..SynthConfig::default()
    };
    let data = generate_synthetic_corpus(&config, 1).expect("default synth config is valid");
    let index = build_frequency_index(&data.train, 2);
    Fixture {
        data,
        spec: LinearizationSpec::new(Composition::AttributeThenValue),
        policy: OrderingPolicy::new(OrderingKind::RareFirst, 3),
        index,
    }
}

impl Fixture {
    /// Up to `n` distinct positive training pairs.
    pub fn pairs(&self, n: usize) -> Vec<AttributeValuePair> {
        let mut out: Vec<AttributeValuePair> = Vec::new();
        for p in self.data.train.examples.iter().flat_map(|e| e.positives()) {
            if out.len() == n {
                break;
            }
            if !out.contains(p) {
                out.push(AttributeValuePair::new(p.attribute.clone(), p.value.clone()));
            }
        }
        out
    }

    /// An untrained model over the training vocabulary.
    pub fn model(&self, config: ModelConfig) -> TinySeq2Seq {
        TinySeq2Seq::new(build_vocab(&self.data.train, &self.spec), config)
    }

    pub fn encoded_train(&self, model: &TinySeq2Seq, n: usize) -> Vec<EncodedExample> {
        self.data
            .train
            .examples
            .iter()
            .take(n)
            .map(|e| encode_example(e, &model.vocab, &self.spec, &self.policy, &self.index, &TrainConfig::default()))
            .collect::<Result<_, _>>()
            .expect("synthetic pairs never contain separators")
    }
}

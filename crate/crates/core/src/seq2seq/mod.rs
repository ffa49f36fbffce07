//! Generative approach: a small attention encoder-decoder trained with
//! teacher forcing on linearized pair sets and decoded with beam search.
//!
//! The encoder reads the paragraph tokens joined by the pair separator token
//! and closed by EOS; the decoder emits the linearized target followed by EOS.

mod beam;
mod model;
mod train;
mod vocab;

use std::thread;

use serde::{Deserialize, Serialize};

use crate::codec::{delinearize, linearize, DecodeDiagnostics, LinearizationSpec};
use crate::corpus::{Corpus, PairSet, ProductExample};
use crate::error::{Error, Result};
use crate::metrics::Predictions;
use crate::ordering::{order_pairs, OrderingPolicy, PairFrequencyIndex};
use crate::tokenize::Tokenizer;

pub use beam::{beam_search, greedy, Hypothesis, StepModel};
pub use model::{softmax, EncodedExample, Encoded, ModelConfig, TinySeq2Seq};
pub use train::{batch_gradients, dev_micro_f1, grad_check, mean_loss, train, Adam, EpochRecord, GradCheck, TrainLog};
pub use vocab::{build_vocab, Vocab, BOS, EOS, NUM_RESERVED, PAD, SEP_AV, SEP_PR, UNK};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    Greedy,
    #[default]
    Beam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub strategy: SearchStrategy,
    pub beam_size: usize,
    pub max_len: usize,
    pub max_encoder_len: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            strategy: SearchStrategy::Beam,
            beam_size: 4,
            max_len: 256,
            max_encoder_len: 512,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 || self.max_len == 0 || self.max_encoder_len == 0 {
            return Err(Error::Config("beam_size, max_len and max_encoder_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_encoder_len: usize,
    pub max_decoder_len: usize,
    /// Global gradient-norm clipping threshold; 0 disables clipping.
    pub clip_norm: f64,
    pub seed: u64,
    /// Decoding used for dev-set model selection.
    pub dev_decode: DecodeConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            learning_rate: 3e-4,
            max_encoder_len: 512,
            max_decoder_len: 256,
            clip_norm: 5.0,
            seed: 7,
            dev_decode: DecodeConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_encoder_len == 0 || self.max_decoder_len == 0 {
            return Err(Error::Config("batch_size, max_encoder_len and max_decoder_len must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate = {} must be positive", self.learning_rate)));
        }
        if self.clip_norm < 0.0 {
            return Err(Error::Config("clip_norm must be non-negative".into()));
        }
        self.dev_decode.validate()
    }
}

/// Input ids: paragraph tokens joined by the pair separator, truncated to
/// `max_len - 1` tokens, then EOS.
pub fn encode_input(example: &ProductExample, vocab: &Vocab, max_len: usize) -> Vec<usize> {
    let tokenizer = Tokenizer;
    let mut ids = Vec::new();
    for (i, paragraph) in example.paragraphs.iter().enumerate() {
        if i > 0 {
            ids.push(SEP_PR);
        }
        ids.extend(tokenizer.tokens(paragraph).iter().map(|t| vocab.id(t)));
    }
    ids.truncate(max_len.saturating_sub(1));
    ids.push(EOS);
    ids
}

/// Linearized target tokens of the unified positive pairs.
pub fn target_tokens(
    example: &ProductExample,
    spec: &LinearizationSpec,
    policy: &OrderingPolicy,
    index: &PairFrequencyIndex,
) -> Result<Vec<String>> {
    let unified = example.unified();
    let positives: Vec<_> = unified.positives().cloned().collect();
    let ordered = order_pairs(&positives, policy, index, &example.id);
    linearize(&ordered, spec, &Tokenizer)
}

pub fn encode_example(
    example: &ProductExample,
    vocab: &Vocab,
    spec: &LinearizationSpec,
    policy: &OrderingPolicy,
    index: &PairFrequencyIndex,
    cfg: &TrainConfig,
) -> Result<EncodedExample> {
    let mut target = vocab.encode(&target_tokens(example, spec, policy, index)?);
    target.truncate(cfg.max_decoder_len.saturating_sub(1));
    target.push(EOS);
    Ok(EncodedExample {
        input: encode_input(example, vocab, cfg.max_encoder_len),
        target,
    })
}

/// Generated token ids without the trailing EOS.
pub fn decode(model: &TinySeq2Seq, input: &[usize], cfg: &DecodeConfig) -> Vec<usize> {
    let encoded = model.encode(input);
    let hyp = match cfg.strategy {
        SearchStrategy::Greedy => greedy(&encoded, cfg.max_len),
        SearchStrategy::Beam => beam_search(&encoded, cfg.beam_size, cfg.max_len),
    };
    hyp.content(EOS).to_vec()
}

/// Decodes one example and parses the output into pairs.
pub fn predict_set(
    model: &TinySeq2Seq,
    example: &ProductExample,
    spec: &LinearizationSpec,
    cfg: &DecodeConfig,
) -> (PairSet, DecodeDiagnostics) {
    let input = encode_input(example, &model.vocab, cfg.max_encoder_len);
    let tokens = model.vocab.decode(&decode(model, &input, cfg));
    delinearize(&tokens, spec)
}

/// Predictions and diagnostics for every example, decoded on all available
/// cores. The result does not depend on the thread count.
pub fn predict_corpus(
    model: &TinySeq2Seq,
    corpus: &Corpus,
    spec: &LinearizationSpec,
    cfg: &DecodeConfig,
) -> (Predictions, Vec<(String, DecodeDiagnostics)>) {
    let threads = thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = corpus.examples.len().div_ceil(threads).max(1);
    let results: Vec<(String, PairSet, DecodeDiagnostics)> = thread::scope(|s| {
        let handles: Vec<_> = corpus
            .examples
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|e| {
                            let (pairs, diag) = predict_set(model, e, spec, cfg);
                            (e.id.clone(), pairs, diag)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("decoder thread panicked")).collect()
    });
    let mut preds = Predictions::new();
    let mut diags = Vec::with_capacity(results.len());
    for (id, pairs, diag) in results {
        preds.insert(id.clone(), pairs);
        diags.push((id, diag));
    }
    (preds, diags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Composition;
    use crate::corpus::{AttributeValuePair, Split};
    use crate::ordering::{build_frequency_index, OrderingKind};

    fn tiny_model(seed: u64) -> TinySeq2Seq {
        let spec = LinearizationSpec::new(Composition::AttributeThenValue);
        let vocab = Vocab::new(&spec, ["Color", "red", "blue", "shirt", "Size", "small"]);
        TinySeq2Seq::new(
            vocab,
            ModelConfig {
                embedding_dim: 6,
                hidden_dim: 7,
                init_seed: seed,
            },
        )
    }

    fn batch() -> Vec<EncodedExample> {
        vec![
            EncodedExample {
                input: vec![6, 7, EOS],
                target: vec![8, SEP_AV, 9, EOS],
            },
            EncodedExample {
                input: vec![10, 8, 9, 11, EOS],
                target: vec![6, SEP_AV, 7, SEP_PR, 9, SEP_AV, 10, EOS],
            },
        ]
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let model = tiny_model(5);
        let data = batch();
        let refs: Vec<&EncodedExample> = data.iter().collect();
        let check = grad_check(&model, &refs, 300, 11);
        assert_eq!(check.checked, 300);
        assert!(check.max_relative_error <= 1e-3, "{check:?}");
    }

    #[test]
    fn doubling_the_loss_doubles_gradients() {
        let model = tiny_model(5);
        let data = batch();
        let refs: Vec<&EncodedExample> = data.iter().collect();
        let (l1, g1) = batch_gradients(&model, &refs, 1.0);
        let (l2, g2) = batch_gradients(&model, &refs, 2.0);
        assert!((l2 - 2.0 * l1).abs() < 1e-9);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((b - 2.0 * a).abs() <= 1e-9);
        }
    }

    #[test]
    fn unused_embedding_rows_get_zero_gradient() {
        let model = tiny_model(5);
        let data = [EncodedExample {
            input: vec![6, EOS],
            target: vec![EOS],
        }];
        let refs: Vec<&EncodedExample> = data.iter().collect();
        let (_, g) = batch_gradients(&model, &refs, 1.0);
        for tok in [PAD, UNK, SEP_AV, 7, 8, 9, 10, 11] {
            assert!(g[model.embedding_row(tok)].iter().all(|&x| x == 0.0), "token {tok}");
        }
        assert!(g[model.embedding_row(6)].iter().any(|&x| x != 0.0));
    }

    #[test]
    fn untrained_prediction_is_total() {
        let model = tiny_model(1);
        let spec = LinearizationSpec::new(Composition::AttributeThenValue);
        let ex = ProductExample::new("x", vec!["red shirt".into(), "unknown words".into()], vec![]);
        let cfg = DecodeConfig {
            max_len: 12,
            ..DecodeConfig::default()
        };
        let (_, diag) = predict_set(&model, &ex, &spec, &cfg);
        let _ = diag.is_clean();
        let greedy_cfg = DecodeConfig {
            strategy: SearchStrategy::Greedy,
            ..cfg
        };
        let one = DecodeConfig { beam_size: 1, ..cfg };
        let input = encode_input(&ex, &model.vocab, 512);
        assert_eq!(decode(&model, &input, &greedy_cfg), decode(&model, &input, &one));
    }

    #[test]
    fn input_encoding_joins_paragraphs() {
        let model = tiny_model(1);
        let ex = ProductExample::new("x", vec!["red shirt".into(), "blue".into()], vec![]);
        let v = &model.vocab;
        assert_eq!(encode_input(&ex, v, 512), vec![v.id("red"), v.id("shirt"), SEP_PR, v.id("blue"), EOS]);
        assert_eq!(encode_input(&ex, v, 2), vec![v.id("red"), EOS]);
    }

    fn memorization_corpus() -> Corpus {
        let colors = ["red", "blue", "green", "black", "white"];
        let sizes = ["small", "large"];
        let mut examples = Vec::new();
        for i in 0..10 {
            let c = colors[i % 5];
            let s = sizes[i % 2];
            examples.push(ProductExample::new(
                format!("m{i}"),
                vec![format!("nice {c} shirt size {s}")],
                vec![AttributeValuePair::new("Color", c), AttributeValuePair::new("Size", s)],
            ));
        }
        Corpus::new(Split::Train, examples)
    }

    #[test]
    fn zero_epochs_returns_model_unchanged() {
        let train_set = memorization_corpus();
        let spec = LinearizationSpec::new(Composition::AttributeThenValue);
        let model = TinySeq2Seq::new(build_vocab(&train_set, &spec), ModelConfig::default());
        let index = build_frequency_index(&train_set, 0);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let policy = OrderingPolicy::new(OrderingKind::RareFirst, 0);
        let (out, log) = train(model.clone(), &train_set, &train_set, &spec, &policy, &index, &cfg).unwrap();
        assert_eq!(out, model);
        assert!(log.epochs.is_empty());
        assert!(train(model, &Corpus::empty(Split::Train), &train_set, &spec, &policy, &index, &cfg).is_err());
    }

    #[test]
    fn first_epoch_lowers_the_loss() {
        let train_set = memorization_corpus();
        let spec = LinearizationSpec::new(Composition::AttributeThenValue);
        let model = TinySeq2Seq::new(build_vocab(&train_set, &spec), ModelConfig::default());
        let index = build_frequency_index(&train_set, 0);
        let policy = OrderingPolicy::new(OrderingKind::RareFirst, 0);
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 2,
            learning_rate: 1e-2,
            dev_decode: DecodeConfig {
                max_len: 12,
                ..DecodeConfig::default()
            },
            ..TrainConfig::default()
        };
        let data: Vec<EncodedExample> = train_set
            .examples
            .iter()
            .map(|e| encode_example(e, &model.vocab, &spec, &policy, &index, &cfg).unwrap())
            .collect();
        let refs: Vec<&EncodedExample> = data.iter().collect();
        let before = mean_loss(&model, &refs);
        let (_, log) = train(model, &train_set, &train_set, &spec, &policy, &index, &cfg).unwrap();
        assert_eq!(log.epochs.len(), 1);
        assert!(log.epochs[0].loss < before);
        assert_eq!(log.best_epoch, Some(1));
    }
}

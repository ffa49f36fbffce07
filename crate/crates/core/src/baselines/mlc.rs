//! Per-label logistic classifier over bag-of-token features.

use std::collections::BTreeSet;

use log::info;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::labels::{taxonomy_mask, LabelSpace, Taxonomy};
use super::tagger::FeatureMap;
use super::LearnerConfig;
use crate::corpus::{Corpus, PairSet, ProductExample};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_all, Predictions};
use crate::seq2seq::{EpochRecord, TrainLog};
use crate::tokenize::Tokenizer;

/// A label is predicted when its probability is strictly above this.
pub const THRESHOLD: f64 = 0.5;

fn bag(example: &ProductExample) -> BTreeSet<String> {
    example.paragraphs.iter().flat_map(|p| Tokenizer.tokens(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlc {
    pub label_space: LabelSpace,
    pub features: FeatureMap,
    /// Row-major `labels × features`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Mlc {
    pub fn new(label_space: LabelSpace, features: FeatureMap) -> Self {
        Mlc {
            weights: vec![0.0; label_space.len() * features.len()],
            bias: vec![0.0; label_space.len()],
            label_space,
            features,
        }
    }

    fn active(&self, example: &ProductExample) -> Vec<usize> {
        bag(example).iter().filter_map(|t| self.features.get(t)).collect()
    }

    fn probability(&self, label: usize, active: &[usize]) -> f64 {
        let f = self.features.len();
        let row = &self.weights[label * f..(label + 1) * f];
        sigmoid(self.bias[label] + active.iter().map(|&i| row[i]).sum::<f64>())
    }

    /// Probabilities of the permitted labels.
    pub fn scores(&self, example: &ProductExample, taxonomy: Option<&Taxonomy>) -> Vec<(usize, f64)> {
        let active = self.active(example);
        taxonomy_mask(&self.label_space, taxonomy, &example.id)
            .into_iter()
            .map(|l| (l, self.probability(l, &active)))
            .collect()
    }

    /// Permitted positive labels scoring above the threshold. Negative
    /// labels are never output.
    pub fn predict(&self, example: &ProductExample, taxonomy: Option<&Taxonomy>) -> PairSet {
        self.scores(example, taxonomy)
            .into_iter()
            .filter(|&(l, p)| p > THRESHOLD && !self.label_space.is_negative(l))
            .map(|(l, _)| self.label_space.pair(l))
            .collect()
    }
}

pub fn predict_mlc(mlc: &Mlc, corpus: &Corpus, taxonomy: Option<&Taxonomy>) -> Predictions {
    corpus.examples.iter().map(|e| (e.id.clone(), mlc.predict(e, taxonomy))).collect()
}

/// SGD on the summed logistic losses of the permitted labels, with dev
/// micro-F1 epoch selection (earliest on ties).
pub fn train_mlc(
    train: &Corpus,
    dev: &Corpus,
    space: &LabelSpace,
    taxonomy: Option<&Taxonomy>,
    cfg: &LearnerConfig,
) -> Result<(Mlc, TrainLog)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("classifier training data".into()));
    }
    let mut features = Vec::new();
    let mut seen = BTreeSet::new();
    for e in &train.examples {
        for t in bag(e) {
            if seen.insert(t.clone()) {
                features.push(t);
            }
        }
    }
    let mut mlc = Mlc::new(space.clone(), FeatureMap::from(features));
    let data: Vec<(Vec<usize>, BTreeSet<usize>, Vec<usize>)> = train
        .examples
        .iter()
        .map(|e| {
            let gold = space.gold(&e.unified().pairs);
            (mlc.active(e), gold, taxonomy_mask(space, taxonomy, &e.id))
        })
        .collect();
    let nf = mlc.features.len();
    let mut log = TrainLog::default();
    let mut best: Option<(f64, Mlc)> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        let mut decisions = 0;
        for &k in &order {
            let (active, gold, mask) = &data[k];
            for &l in mask {
                let p = mlc.probability(l, active);
                let y = if gold.contains(&l) { 1.0 } else { 0.0 };
                loss -= if y > 0.0 { p.max(1e-300).ln() } else { (1.0 - p).max(1e-300).ln() };
                decisions += 1;
                let g = cfg.learning_rate * (p - y);
                mlc.bias[l] -= g;
                for &f in active {
                    mlc.weights[l * nf + f] -= g;
                }
            }
        }
        let loss = loss / decisions.max(1) as f64;
        let f1 = evaluate_all(dev, &predict_mlc(&mlc, dev, taxonomy)).micro.f1;
        info!("mlc epoch {epoch}: loss {loss:.5}, dev micro F1 {f1:.4}");
        log.epochs.push(EpochRecord {
            epoch,
            loss,
            dev_micro_f1: f1,
        });
        if best.as_ref().map_or(true, |(b, _)| f1 > *b) {
            best = Some((f1, mlc.clone()));
            log.best_epoch = Some(epoch);
        }
    }
    Ok((best.map(|(_, m)| m).unwrap_or(mlc), log))
}

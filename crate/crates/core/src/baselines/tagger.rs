//! Per-token linear softmax tagger over window features, decoded with a
//! BILOU-constrained Viterbi pass.

use std::collections::HashMap;

use log::info;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tags::{decode_bilou, Bilou, TagSpace, TaggedExample, OUTSIDE};
use super::LearnerConfig;
use crate::corpus::{Corpus, PairSet, ProductExample};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_all, Predictions};
use crate::seq2seq::{softmax, EpochRecord, TrainLog};

/// Feature string ↔ index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for FeatureMap {
    fn from(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        FeatureMap { names, index }
    }
}

impl From<FeatureMap> for Vec<String> {
    fn from(m: FeatureMap) -> Self {
        m.names
    }
}

impl FeatureMap {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn insert(&mut self, name: String) {
        if !self.index.contains_key(&name) {
            self.index.insert(name.clone(), self.names.len());
            self.names.push(name);
        }
    }
}

/// Window features of token `i`: the token, its lowercase form, and its
/// neighbours within the paragraph.
fn token_features(ex: &TaggedExample, i: usize) -> Vec<String> {
    let same = |j: usize| ex.paragraphs[j] == ex.paragraphs[i];
    let prev = if i > 0 && same(i - 1) { ex.tokens[i - 1].as_str() } else { "<s>" };
    let next = if i + 1 < ex.tokens.len() && same(i + 1) { ex.tokens[i + 1].as_str() } else { "</s>" };
    vec![
        "bias".to_string(),
        format!("w={}", ex.tokens[i]),
        format!("lw={}", ex.tokens[i].to_lowercase()),
        format!("p={prev}"),
        format!("n={next}"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tagger {
    pub tag_space: TagSpace,
    pub features: FeatureMap,
    /// Row-major `features × tags`.
    weights: Vec<f64>,
}

impl Tagger {
    /// A tagger with all weights zero.
    pub fn new(tag_space: TagSpace, features: FeatureMap) -> Self {
        let weights = vec![0.0; features.len() * tag_space.len()];
        Tagger {
            tag_space,
            features,
            weights,
        }
    }

    fn active(&self, ex: &TaggedExample, i: usize) -> Vec<usize> {
        token_features(ex, i).iter().filter_map(|f| self.features.get(f)).collect()
    }

    /// Tag probabilities of token `i`.
    pub fn probabilities(&self, ex: &TaggedExample, i: usize) -> Vec<f64> {
        let t = self.tag_space.len();
        let mut scores = vec![0.0; t];
        for f in self.active(ex, i) {
            for (s, w) in scores.iter_mut().zip(&self.weights[f * t..(f + 1) * t]) {
                *s += w;
            }
        }
        softmax(&mut scores);
        scores
    }

    /// Most probable BILOU-consistent tag sequence per paragraph. Ties go
    /// to the lowest tag id, so uniform scores give all `O`.
    pub fn tag(&self, ex: &TaggedExample) -> Vec<usize> {
        let n = ex.tokens.len();
        let mut tags = Vec::with_capacity(n);
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && ex.paragraphs[end] == ex.paragraphs[start] {
                end += 1;
            }
            let emissions: Vec<Vec<f64>> = (start..end)
                .map(|i| self.probabilities(ex, i).iter().map(|p| p.max(1e-300).ln()).collect())
                .collect();
            tags.extend(viterbi(&self.tag_space, &emissions));
            start = end;
        }
        tags
    }

    pub fn predict(&self, example: &ProductExample) -> PairSet {
        let mut tagged = TaggedExample::outside(example);
        tagged.tags = self.tag(&tagged);
        decode_bilou(&tagged, &self.tag_space)
    }
}

fn can_start(space: &TagSpace, tag: usize) -> bool {
    matches!(space.split(tag), None | Some((_, Bilou::B)) | Some((_, Bilou::U)))
}

fn can_end(space: &TagSpace, tag: usize) -> bool {
    matches!(space.split(tag), None | Some((_, Bilou::L)) | Some((_, Bilou::U)))
}

fn allowed(space: &TagSpace, prev: usize, next: usize) -> bool {
    match space.split(prev) {
        Some((a, Bilou::B)) | Some((a, Bilou::I)) => {
            matches!(space.split(next), Some((b, Bilou::I)) | Some((b, Bilou::L)) if b == a)
        }
        _ => can_start(space, next),
    }
}

fn viterbi(space: &TagSpace, emissions: &[Vec<f64>]) -> Vec<usize> {
    let t = space.len();
    let n = emissions.len();
    if n == 0 {
        return Vec::new();
    }
    let neg = f64::NEG_INFINITY;
    let mut score: Vec<f64> = (0..t).map(|k| if can_start(space, k) { emissions[0][k] } else { neg }).collect();
    let mut back = vec![vec![0usize; t]; n];
    for i in 1..n {
        let mut next = vec![neg; t];
        for k in 0..t {
            for p in 0..t {
                if score[p] > neg && allowed(space, p, k) {
                    let s = score[p] + emissions[i][k];
                    if s > next[k] {
                        next[k] = s;
                        back[i][k] = p;
                    }
                }
            }
        }
        score = next;
    }
    let mut best = OUTSIDE;
    for k in 0..t {
        if can_end(space, k) && score[k] > score[best] {
            best = k;
        }
    }
    let mut out = vec![best; n];
    for i in (1..n).rev() {
        out[i - 1] = back[i][out[i]];
    }
    out
}

/// Feature map over every training token window.
pub fn build_features(train: &[TaggedExample]) -> FeatureMap {
    let mut map = FeatureMap::default();
    for ex in train {
        for i in 0..ex.tokens.len() {
            for f in token_features(ex, i) {
                map.insert(f);
            }
        }
    }
    map
}

pub fn predict_tagger(tagger: &Tagger, corpus: &Corpus) -> Predictions {
    corpus.examples.iter().map(|e| (e.id.clone(), tagger.predict(e))).collect()
}

/// SGD on per-token cross-entropy; after each epoch the tagger is scored on
/// `dev` by pair-level micro F1 and the best epoch (earliest on ties) is
/// kept.
pub fn train_tagger(train: &[TaggedExample], dev: &Corpus, space: &TagSpace, cfg: &LearnerConfig) -> Result<(Tagger, TrainLog)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("tagger training data".into()));
    }
    let mut tagger = Tagger::new(space.clone(), build_features(train));
    let mut log = TrainLog::default();
    let mut best: Option<(f64, Tagger)> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let t = space.len();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        let mut tokens = 0;
        for &k in &order {
            let ex = &train[k];
            for i in 0..ex.tokens.len() {
                let probs = tagger.probabilities(ex, i);
                let gold = ex.tags[i];
                loss -= probs[gold].max(1e-300).ln();
                tokens += 1;
                for f in tagger.active(ex, i) {
                    let row = &mut tagger.weights[f * t..(f + 1) * t];
                    for (tag, w) in row.iter_mut().enumerate() {
                        let y = if tag == gold { 1.0 } else { 0.0 };
                        *w -= cfg.learning_rate * (probs[tag] - y);
                    }
                }
            }
        }
        let loss = loss / tokens.max(1) as f64;
        let f1 = evaluate_all(dev, &predict_tagger(&tagger, dev)).micro.f1;
        info!("tagger epoch {epoch}: loss {loss:.5}, dev micro F1 {f1:.4}");
        log.epochs.push(EpochRecord {
            epoch,
            loss,
            dev_micro_f1: f1,
        });
        if best.as_ref().map_or(true, |(b, _)| f1 > *b) {
            best = Some((f1, tagger.clone()));
            log.best_epoch = Some(epoch);
        }
    }
    Ok((best.map(|(_, m)| m).unwrap_or(tagger), log))
}

use std::fs;
use std::path::Path;

use log::info;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{EncodedExample, TinySeq2Seq};
use super::{encode_example, predict_corpus, DecodeConfig, TrainConfig};
use crate::codec::LinearizationSpec;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::evaluate_all;
use crate::ordering::{OrderingPolicy, PairFrequencyIndex};

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub dev_micro_f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch of the returned model, `None` when no epoch ran.
    pub best_epoch: Option<usize>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,dev_micro_f1\n");
        for r in &self.epochs {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.loss, r.dev_micro_f1));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn total_tokens(batch: &[&EncodedExample]) -> usize {
    batch.iter().map(|e| e.target.len()).sum()
}

/// Mean token negative log-likelihood of `batch` and its gradient, times
/// `scale`.
pub fn batch_gradients(model: &TinySeq2Seq, batch: &[&EncodedExample], scale: f64) -> (f64, Vec<f64>) {
    let mut grads = vec![0.0; model.num_params()];
    let tokens = total_tokens(batch).max(1) as f64;
    let mut loss = 0.0;
    for ex in batch {
        loss += model.accumulate_gradients(ex, scale / tokens, &mut grads);
    }
    (scale * loss / tokens, grads)
}

/// Mean token negative log-likelihood under teacher forcing.
pub fn mean_loss(model: &TinySeq2Seq, data: &[&EncodedExample]) -> f64 {
    let tokens = total_tokens(data).max(1) as f64;
    data.iter().map(|e| model.example_loss(e)).sum::<f64>() / tokens
}

fn clip(grads: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= s;
        }
    }
}

/// Dev micro F1 of the model under the given decoding.
pub fn dev_micro_f1(model: &TinySeq2Seq, dev: &Corpus, spec: &LinearizationSpec, decode: &DecodeConfig) -> f64 {
    let (preds, _) = predict_corpus(model, dev, spec, decode);
    evaluate_all(dev, &preds).micro.f1
}

/// Teacher-forced training with Adam. After each epoch the model is scored
/// on `dev` by micro F1 and the best epoch (earliest on ties) is returned.
pub fn train(
    model: TinySeq2Seq,
    train: &Corpus,
    dev: &Corpus,
    spec: &LinearizationSpec,
    policy: &OrderingPolicy,
    index: &PairFrequencyIndex,
    cfg: &TrainConfig,
) -> Result<(TinySeq2Seq, TrainLog)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training corpus".into()));
    }
    let mut log = TrainLog::default();
    if cfg.epochs == 0 {
        return Ok((model, log));
    }
    let data = train
        .examples
        .iter()
        .map(|e| encode_example(e, &model.vocab, spec, policy, index, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut model = model;
    let mut adam = Adam::new(model.num_params(), cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut best: Option<(f64, TinySeq2Seq)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut token_sum = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&EncodedExample> = chunk.iter().map(|&i| &data[i]).collect();
            let tokens = total_tokens(&batch);
            let (loss, mut grads) = batch_gradients(&model, &batch, 1.0);
            loss_sum += loss * tokens as f64;
            token_sum += tokens;
            clip(&mut grads, cfg.clip_norm);
            adam.step(model.params_mut(), &grads);
        }
        let loss = loss_sum / token_sum.max(1) as f64;
        let f1 = dev_micro_f1(&model, dev, spec, &cfg.dev_decode);
        info!("epoch {epoch}: loss {loss:.5}, dev micro F1 {f1:.4}");
        log.epochs.push(EpochRecord {
            epoch,
            loss,
            dev_micro_f1: f1,
        });
        if best.as_ref().map_or(true, |(b, _)| f1 > *b) {
            best = Some((f1, model.clone()));
            log.best_epoch = Some(epoch);
        }
    }
    Ok((best.map(|(_, m)| m).unwrap_or(model), log))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub checked: usize,
}

/// Compares analytic gradients with central differences (step 1e-4) on
/// `samples` randomly drawn parameters. The relative error of one parameter
/// is |a - n| / max(|a|, |n|, 1e-6).
pub fn grad_check(model: &TinySeq2Seq, batch: &[&EncodedExample], samples: usize, seed: u64) -> GradCheck {
    const STEP: f64 = 1e-4;
    let (_, grads) = batch_gradients(model, batch, 1.0);
    let mut probe = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let i = rng.gen_range(0..model.num_params());
        let original = probe.params()[i];
        probe.params_mut()[i] = original + STEP;
        let plus = mean_loss(&probe, batch);
        probe.params_mut()[i] = original - STEP;
        let minus = mean_loss(&probe, batch);
        probe.params_mut()[i] = original;
        let numeric = (plus - minus) / (2.0 * STEP);
        let analytic = grads[i];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    GradCheck {
        max_relative_error: worst,
        checked: samples,
    }
}

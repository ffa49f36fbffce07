//! Greedy and beam-search decoding over any step-wise scorer.

use std::cmp::Ordering;

/// An autoregressive scorer: log-probabilities of the next token given a
/// state and the previous token.
pub trait StepModel {
    type State: Clone;

    fn start(&self) -> Self::State;
    fn step(&self, state: &Self::State, token: usize) -> (Vec<f64>, Self::State);
    fn bos(&self) -> usize;
    fn eos(&self) -> usize;
}

/// A finished sequence. `tokens` includes the final EOS when one was emitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<usize>,
    pub log_prob: f64,
}

impl Hypothesis {
    /// Log-probability divided by the number of generated tokens.
    pub fn score(&self) -> f64 {
        if self.tokens.is_empty() {
            self.log_prob
        } else {
            self.log_prob / self.tokens.len() as f64
        }
    }

    /// Tokens without the trailing EOS.
    pub fn content(&self, eos: usize) -> &[usize] {
        match self.tokens.last() {
            Some(&t) if t == eos => &self.tokens[..self.tokens.len() - 1],
            _ => &self.tokens,
        }
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Picks the most probable token at every step until EOS or `max_len`.
pub fn greedy<M: StepModel>(model: &M, max_len: usize) -> Hypothesis {
    let mut state = model.start();
    let mut prev = model.bos();
    let mut out = Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
    };
    for _ in 0..max_len {
        let (log_probs, next) = model.step(&state, prev);
        let tok = argmax(&log_probs);
        out.tokens.push(tok);
        out.log_prob += log_probs[tok];
        if tok == model.eos() {
            break;
        }
        state = next;
        prev = tok;
    }
    out
}

/// Beam search. Every step expands each live hypothesis by every token and
/// keeps the `beam_size` best expansions by raw log-probability; those that
/// end in EOS are finished, the rest stay live. Live hypotheses still open at
/// `max_len` are finished as they are. Returns the finished hypothesis with
/// the best length-normalized score (earliest on ties).
pub fn beam_search<M: StepModel>(model: &M, beam_size: usize, max_len: usize) -> Hypothesis {
    let beam_size = beam_size.max(1);
    let eos = model.eos();
    let mut live: Vec<(Hypothesis, M::State, usize)> = vec![(
        Hypothesis {
            tokens: Vec::new(),
            log_prob: 0.0,
        },
        model.start(),
        model.bos(),
    )];
    let mut finished: Vec<Hypothesis> = Vec::new();
    for step in 0..max_len {
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        let mut states = Vec::with_capacity(live.len());
        for (i, (hyp, state, prev)) in live.iter().enumerate() {
            let (log_probs, next) = model.step(state, *prev);
            for (tok, lp) in log_probs.iter().enumerate() {
                candidates.push((hyp.log_prob + lp, i, tok));
            }
            states.push(next);
        }
        candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
        candidates.truncate(beam_size);
        let mut next_live = Vec::new();
        for (lp, i, tok) in candidates {
            let mut tokens = live[i].0.tokens.clone();
            tokens.push(tok);
            let hyp = Hypothesis { tokens, log_prob: lp };
            if tok == eos || step + 1 == max_len {
                finished.push(hyp);
            } else {
                next_live.push((hyp, states[i].clone(), tok));
            }
        }
        live = next_live;
        if live.is_empty() {
            break;
        }
    }
    let mut best: Option<Hypothesis> = None;
    for hyp in finished {
        if best.as_ref().map_or(true, |b| hyp.score() > b.score()) {
            best = Some(hyp);
        }
    }
    best.unwrap_or(Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
    })
}

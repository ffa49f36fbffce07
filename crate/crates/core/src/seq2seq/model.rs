//! GRU encoder-decoder with dot-product attention and hand-written
//! backpropagation.
//!
//! Per decoder step, with previous token y and state h:
//!
//! ```text
//! z = σ(W_z x + U_z h + b_z)     r = σ(W_r x + U_r h + b_r)
//! n = tanh(W_n x + r ⊙ (U_n h) + b_n)
//! h' = (1 - z) ⊙ n + z ⊙ h
//! a = softmax(h' · e_j)          c = Σ_j a_j e_j
//! o = tanh(W_c [h'; c] + b_c)    p = softmax(W_out o + b_out)
//! ```
//!
//! The encoder runs the same cell over the input and the decoder starts from
//! its last state. All parameters live in one flat vector.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::beam::StepModel;
use super::vocab::{Vocab, BOS, EOS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embedding_dim: 32,
            hidden_dim: 64,
            init_seed: 13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    offset: usize,
    rows: usize,
    cols: usize,
}

impl Slot {
    fn len(&self) -> usize {
        self.rows * self.cols
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Gru {
    w: Slot,
    u: Slot,
    b: Slot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    emb: Slot,
    enc: Gru,
    dec: Gru,
    comb_w: Slot,
    comb_b: Slot,
    out_w: Slot,
    out_b: Slot,
    total: usize,
}

impl Layout {
    fn new(vocab: usize, e: usize, h: usize) -> Layout {
        let mut offset = 0;
        let mut slot = |rows: usize, cols: usize| {
            let s = Slot { offset, rows, cols };
            offset += rows * cols;
            s
        };
        let emb = slot(vocab, e);
        let enc = Gru {
            w: slot(3 * h, e),
            u: slot(3 * h, h),
            b: slot(3 * h, 1),
        };
        let dec = Gru {
            w: slot(3 * h, e),
            u: slot(3 * h, h),
            b: slot(3 * h, 1),
        };
        let comb_w = slot(h, 2 * h);
        let comb_b = slot(h, 1);
        let out_w = slot(vocab, h);
        let out_b = slot(vocab, 1);
        Layout {
            emb,
            enc,
            dec,
            comb_w,
            comb_b,
            out_w,
            out_b,
            total: offset,
        }
    }
}

/// `out += W x` for a row-major `rows × cols` matrix.
fn matvec(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += Wᵀ y`.
fn matvec_t(w: &[f64], cols: usize, y: &[f64], out: &mut [f64]) {
    for (&yi, row) in y.iter().zip(w.chunks_exact(cols)) {
        if yi != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += yi * a;
            }
        }
    }
}

/// `g += y xᵀ`.
fn outer(g: &mut [f64], cols: usize, y: &[f64], x: &[f64]) {
    for (&yi, row) in y.iter().zip(g.chunks_exact_mut(cols)) {
        if yi != 0.0 {
            for (gij, xj) in row.iter_mut().zip(x) {
                *gij += yi * xj;
            }
        }
    }
}

fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable softmax in place.
pub fn softmax(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    xs.iter().map(|x| x - lse).collect()
}

struct GruCache {
    x: Vec<f64>,
    h: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    uh_n: Vec<f64>,
}

struct StepCache {
    gru: GruCache,
    h: Vec<f64>,
    attn: Vec<f64>,
    context: Vec<f64>,
    o: Vec<f64>,
    probs: Vec<f64>,
}

/// One training pair as token ids; `target` ends with EOS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub input: Vec<usize>,
    pub target: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TinySeq2Seq {
    pub config: ModelConfig,
    pub vocab: Vocab,
    params: Vec<f64>,
    layout: Layout,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    config: ModelConfig,
    vocab: Vocab,
    params: Vec<f64>,
}

const CHECKPOINT_FORMAT: &str = "pavi-seq2seq-v1";

impl TinySeq2Seq {
    /// Uniform initialization in ±1/√fan_in; biases start at zero.
    pub fn new(vocab: Vocab, config: ModelConfig) -> Self {
        let layout = Layout::new(vocab.len(), config.embedding_dim, config.hidden_dim);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let weights = [
            (layout.emb, 1.0),
            (layout.enc.w, config.embedding_dim as f64),
            (layout.enc.u, config.hidden_dim as f64),
            (layout.dec.w, config.embedding_dim as f64),
            (layout.dec.u, config.hidden_dim as f64),
            (layout.comb_w, 2.0 * config.hidden_dim as f64),
            (layout.out_w, config.hidden_dim as f64),
        ];
        for (slot, fan_in) in weights {
            let bound = 1.0 / fan_in.sqrt();
            for p in &mut params[slot.range()] {
                *p = rng.gen_range(-bound..bound);
            }
        }
        TinySeq2Seq {
            config,
            vocab,
            params,
            layout,
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// Flat-parameter range of the embedding row of `token`.
    pub fn embedding_row(&self, token: usize) -> std::ops::Range<usize> {
        let e = self.config.embedding_dim;
        let start = self.layout.emb.offset + token * e;
        start..start + e
    }

    fn slice(&self, s: Slot) -> &[f64] {
        &self.params[s.range()]
    }

    fn embed(&self, token: usize) -> Vec<f64> {
        self.params[self.embedding_row(token)].to_vec()
    }

    fn gru_forward(&self, g: Gru, x: Vec<f64>, h: &[f64]) -> (Vec<f64>, GruCache) {
        let hd = self.config.hidden_dim;
        let mut wx = self.slice(g.b).to_vec();
        matvec(self.slice(g.w), g.w.cols, &x, &mut wx);
        let mut uh = vec![0.0; 3 * hd];
        matvec(self.slice(g.u), g.u.cols, h, &mut uh);
        let mut z = vec![0.0; hd];
        let mut r = vec![0.0; hd];
        let mut n = vec![0.0; hd];
        let mut out = vec![0.0; hd];
        for i in 0..hd {
            z[i] = sigmoid(wx[i] + uh[i]);
            r[i] = sigmoid(wx[hd + i] + uh[hd + i]);
            n[i] = (wx[2 * hd + i] + r[i] * uh[2 * hd + i]).tanh();
            out[i] = (1.0 - z[i]) * n[i] + z[i] * h[i];
        }
        let uh_n = uh[2 * hd..].to_vec();
        let cache = GruCache {
            x,
            h: h.to_vec(),
            z,
            r,
            n,
            uh_n,
        };
        (out, cache)
    }

    /// Accumulates parameter gradients; returns (dx, dh_prev).
    fn gru_backward(&self, g: Gru, c: &GruCache, dh_out: &[f64], grads: &mut [f64]) -> (Vec<f64>, Vec<f64>) {
        let hd = self.config.hidden_dim;
        let mut da = vec![0.0; 3 * hd];
        let mut du = vec![0.0; 3 * hd];
        let mut dh = vec![0.0; hd];
        for i in 0..hd {
            let d = dh_out[i];
            let dn = d * (1.0 - c.z[i]);
            let dz = d * (c.h[i] - c.n[i]);
            dh[i] = d * c.z[i];
            let dan = dn * (1.0 - c.n[i] * c.n[i]);
            let dr = dan * c.uh_n[i];
            let daz = dz * c.z[i] * (1.0 - c.z[i]);
            let dar = dr * c.r[i] * (1.0 - c.r[i]);
            da[i] = daz;
            da[hd + i] = dar;
            da[2 * hd + i] = dan;
            du[i] = daz;
            du[hd + i] = dar;
            du[2 * hd + i] = dan * c.r[i];
        }
        outer(&mut grads[g.w.range()], g.w.cols, &da, &c.x);
        outer(&mut grads[g.u.range()], g.u.cols, &du, &c.h);
        axpy(&mut grads[g.b.range()], 1.0, &da);
        let mut dx = vec![0.0; c.x.len()];
        matvec_t(self.slice(g.w), g.w.cols, &da, &mut dx);
        matvec_t(self.slice(g.u), g.u.cols, &du, &mut dh);
        (dx, dh)
    }

    fn encode_states(&self, input: &[usize]) -> (Vec<Vec<f64>>, Vec<GruCache>) {
        let mut h = vec![0.0; self.config.hidden_dim];
        let mut states = Vec::with_capacity(input.len());
        let mut caches = Vec::with_capacity(input.len());
        for &tok in input {
            let (next, cache) = self.gru_forward(self.layout.enc, self.embed(tok), &h);
            h = next;
            states.push(h.clone());
            caches.push(cache);
        }
        (states, caches)
    }

    /// Encoder states for decoding.
    pub fn encode(&self, input: &[usize]) -> Encoded<'_> {
        let (states, _) = self.encode_states(input);
        Encoded { model: self, states }
    }

    /// Attention, combination and output layer on a fresh decoder state.
    fn readout(&self, h: &[f64], states: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let hd = self.config.hidden_dim;
        let mut attn: Vec<f64> = states.iter().map(|e| e.iter().zip(h).map(|(a, b)| a * b).sum()).collect();
        let mut context = vec![0.0; hd];
        if !attn.is_empty() {
            softmax(&mut attn);
            for (a, e) in attn.iter().zip(states) {
                axpy(&mut context, *a, e);
            }
        }
        let mut hc = h.to_vec();
        hc.extend_from_slice(&context);
        let mut o = self.slice(self.layout.comb_b).to_vec();
        matvec(self.slice(self.layout.comb_w), 2 * hd, &hc, &mut o);
        for v in &mut o {
            *v = v.tanh();
        }
        let mut logits = self.slice(self.layout.out_b).to_vec();
        matvec(self.slice(self.layout.out_w), hd, &o, &mut logits);
        (attn, context, o, logits)
    }

    /// Teacher-forced summed negative log-likelihood of one example.
    pub fn example_loss(&self, ex: &EncodedExample) -> f64 {
        let (states, _) = self.encode_states(&ex.input);
        let mut h = states.last().cloned().unwrap_or_else(|| vec![0.0; self.config.hidden_dim]);
        let mut prev = BOS;
        let mut loss = 0.0;
        for &y in &ex.target {
            let (next, _) = self.gru_forward(self.layout.dec, self.embed(prev), &h);
            h = next;
            let (_, _, _, logits) = self.readout(&h, &states);
            loss -= log_softmax(&logits)[y];
            prev = y;
        }
        loss
    }

    /// Adds `scale ×` the gradient of the summed token NLL of `ex` to
    /// `grads` and returns the unscaled loss.
    pub fn accumulate_gradients(&self, ex: &EncodedExample, scale: f64, grads: &mut [f64]) -> f64 {
        let hd = self.config.hidden_dim;
        let l = self.layout;
        let (states, enc_caches) = self.encode_states(&ex.input);
        let mut h = states.last().cloned().unwrap_or_else(|| vec![0.0; hd]);
        let mut prev = BOS;
        let mut loss = 0.0;
        let mut steps = Vec::with_capacity(ex.target.len());
        for &y in &ex.target {
            let (next, gru) = self.gru_forward(l.dec, self.embed(prev), &h);
            h = next;
            let (attn, context, o, mut probs) = self.readout(&h, &states);
            softmax(&mut probs);
            loss -= probs[y].max(f64::MIN_POSITIVE).ln();
            steps.push(StepCache {
                gru,
                h: h.clone(),
                attn,
                context,
                o,
                probs,
            });
            prev = y;
        }

        let mut d_states = vec![vec![0.0; hd]; states.len()];
        let mut dh_next = vec![0.0; hd];
        let mut prev_tokens = vec![BOS];
        prev_tokens.extend_from_slice(&ex.target[..ex.target.len().saturating_sub(1)]);
        for (t, step) in steps.iter().enumerate().rev() {
            let mut dlogits = step.probs.clone();
            dlogits[ex.target[t]] -= 1.0;
            for d in &mut dlogits {
                *d *= scale;
            }
            outer(&mut grads[l.out_w.range()], hd, &dlogits, &step.o);
            axpy(&mut grads[l.out_b.range()], 1.0, &dlogits);
            let mut d_o = vec![0.0; hd];
            matvec_t(self.slice(l.out_w), hd, &dlogits, &mut d_o);
            let du: Vec<f64> = d_o.iter().zip(&step.o).map(|(d, o)| d * (1.0 - o * o)).collect();
            let mut hc = step.h.clone();
            hc.extend_from_slice(&step.context);
            outer(&mut grads[l.comb_w.range()], 2 * hd, &du, &hc);
            axpy(&mut grads[l.comb_b.range()], 1.0, &du);
            let mut dhc = vec![0.0; 2 * hd];
            matvec_t(self.slice(l.comb_w), 2 * hd, &du, &mut dhc);
            let (dh_read, dc) = dhc.split_at(hd);
            let mut dh: Vec<f64> = dh_read.iter().zip(&dh_next).map(|(a, b)| a + b).collect();
            if !states.is_empty() {
                let da: Vec<f64> = states.iter().map(|e| e.iter().zip(dc).map(|(a, b)| a * b).sum()).collect();
                let mean: f64 = step.attn.iter().zip(&da).map(|(a, d)| a * d).sum();
                for (j, e) in states.iter().enumerate() {
                    axpy(&mut d_states[j], step.attn[j], dc);
                    let ds = step.attn[j] * (da[j] - mean);
                    if ds != 0.0 {
                        axpy(&mut dh, ds, e);
                        axpy(&mut d_states[j], ds, &step.h);
                    }
                }
            }
            let (dx, dh_prev) = self.gru_backward(l.dec, &step.gru, &dh, grads);
            axpy(&mut grads[self.embedding_row(prev_tokens[t])], 1.0, &dx);
            dh_next = dh_prev;
        }

        // The decoder's initial state is the last encoder state.
        let mut dh = dh_next;
        for (j, cache) in enc_caches.iter().enumerate().rev() {
            axpy(&mut dh, 1.0, &d_states[j]);
            let (dx, dh_prev) = self.gru_backward(l.enc, cache, &dh, grads);
            axpy(&mut grads[self.embedding_row(ex.input[j])], 1.0, &dx);
            dh = dh_prev;
        }
        loss
    }

    /// Writes a JSON checkpoint with the vocabulary and configuration.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            config: self.config,
            vocab: self.vocab.clone(),
            params: self.params.clone(),
        };
        fs::write(path, serde_json::to_string(&ck)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("{}: unknown format {:?}", path.display(), ck.format)));
        }
        let layout = Layout::new(ck.vocab.len(), ck.config.embedding_dim, ck.config.hidden_dim);
        if layout.total != ck.params.len() {
            return Err(Error::Checkpoint(format!(
                "{}: expected {} parameters, found {}",
                path.display(),
                layout.total,
                ck.params.len()
            )));
        }
        Ok(TinySeq2Seq {
            config: ck.config,
            vocab: ck.vocab,
            params: ck.params,
            layout,
        })
    }
}

/// A model bound to one encoded input, ready for step-wise decoding.
pub struct Encoded<'a> {
    model: &'a TinySeq2Seq,
    states: Vec<Vec<f64>>,
}

impl Encoded<'_> {
    /// Next-token probabilities and the new decoder state.
    pub fn probabilities(&self, state: &[f64], token: usize) -> (Vec<f64>, Vec<f64>) {
        let (h, _) = self.model.gru_forward(self.model.layout.dec, self.model.embed(token), state);
        let (_, _, _, mut logits) = self.model.readout(&h, &self.states);
        softmax(&mut logits);
        (logits, h)
    }
}

impl StepModel for Encoded<'_> {
    type State = Vec<f64>;

    fn start(&self) -> Vec<f64> {
        self.states.last().cloned().unwrap_or_else(|| vec![0.0; self.model.config.hidden_dim])
    }

    fn step(&self, state: &Vec<f64>, token: usize) -> (Vec<f64>, Vec<f64>) {
        let (h, _) = self.model.gru_forward(self.model.layout.dec, self.model.embed(token), state);
        let (_, _, _, logits) = self.model.readout(&h, &self.states);
        (log_softmax(&logits), h)
    }

    fn bos(&self) -> usize {
        BOS
    }

    fn eos(&self) -> usize {
        EOS
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Composition, LinearizationSpec};

    fn model(words: &[&str]) -> TinySeq2Seq {
        let vocab = Vocab::new(&LinearizationSpec::new(Composition::AttributeThenValue), words.iter().copied());
        TinySeq2Seq::new(
            vocab,
            ModelConfig {
                embedding_dim: 4,
                hidden_dim: 5,
                init_seed: 3,
            },
        )
    }

    #[test]
    fn output_width_is_vocab_size_and_softmax_normalized() {
        let m = model(&["a", "b", "c"]);
        let enc = m.encode(&[6, 7, 8, EOS]);
        let mut state = enc.start();
        for tok in [BOS, 6, 7, 8] {
            let (p, next) = enc.probabilities(&state, tok);
            assert_eq!(p.len(), m.vocab_size());
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            state = next;
        }
    }

    #[test]
    fn loss_agrees_with_gradient_pass() {
        let m = model(&["a", "b", "c"]);
        let ex = EncodedExample {
            input: vec![6, 7, EOS],
            target: vec![8, SEP_AV_ID, 6, EOS],
        };
        let mut grads = vec![0.0; m.num_params()];
        let l = m.accumulate_gradients(&ex, 1.0, &mut grads);
        assert!((l - m.example_loss(&ex)).abs() < 1e-12);
    }

    const SEP_AV_ID: usize = super::super::vocab::SEP_AV;

    #[test]
    fn checkpoint_round_trip() {
        let m = model(&["x", "y"]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        m.save(&path).unwrap();
        assert_eq!(TinySeq2Seq::load(&path).unwrap(), m);
    }
}

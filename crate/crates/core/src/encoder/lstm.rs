//! Symmetric LSTM sequence autoencoder over canonical obligation tokens,
//! trained by backpropagation through time with Adam.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{tokenize, Encoding, EncodingMode};
use crate::env::{obligation_from_tokens, Obligation, Token};

pub const AUTOENCODER_VERSION: u32 = 1;

const UNK: &str = "<unk>";
const BOS: &str = "<bos>";
const EOS: &str = "<eos>";
const UNK_ID: usize = 0;
const BOS_ID: usize = 1;
const EOS_ID: usize = 2;

#[derive(Debug, Error)]
pub enum AutoencoderError {
    #[error("no obligations to train on")]
    Empty,
    #[error("autoencoder checkpoint version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: u32 },
    #[error("autoencoder checkpoint has inconsistent shapes")]
    BadShape,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Token strings by id. Ids 0..3 are the unknown, begin and end markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
}

impl Vocabulary {
    pub fn build<'a>(obs: impl IntoIterator<Item = &'a Obligation>) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        for ob in obs {
            for t in tokenize(ob) {
                seen.insert(t.text().to_string());
            }
        }
        let mut tokens = vec![UNK.to_string(), BOS.to_string(), EOS.to_string()];
        tokens.extend(seen);
        Vocabulary { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, text: &str) -> usize {
        self.tokens[3..]
            .binary_search_by(|t| t.as_str().cmp(text))
            .map_or(UNK_ID, |i| i + 3)
    }

    pub fn text(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn ids(&self, ob: &Obligation) -> Vec<usize> {
        tokenize(ob).iter().map(|t| self.id(t.text())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    pub latent_dim: usize,
    pub embed_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            latent_dim: 32,
            embed_dim: 16,
            epochs: 60,
            learning_rate: 0.01,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeEpoch {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Cell {
    wx: Array2<f64>,
    wh: Array2<f64>,
    b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Params {
    embed: Array2<f64>,
    enc: Cell,
    dec: Cell,
    out_w: Array2<f64>,
    out_b: Array1<f64>,
}

impl Params {
    fn init(vocab: usize, embed: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut uniform = |rows: usize, cols: usize, k: f64| {
            Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-k..k))
        };
        let k = 1.0 / (hidden as f64).sqrt();
        let embed_m = uniform(vocab, embed, 0.5);
        let cell = |uniform: &mut dyn FnMut(usize, usize, f64) -> Array2<f64>| {
            let mut b = Array1::zeros(4 * hidden);
            b.slice_mut(ndarray::s![hidden..2 * hidden]).fill(1.0);
            Cell {
                wx: uniform(4 * hidden, embed, k),
                wh: uniform(4 * hidden, hidden, k),
                b,
            }
        };
        let enc = cell(&mut uniform);
        let dec = cell(&mut uniform);
        Params {
            embed: embed_m,
            enc,
            dec,
            out_w: uniform(vocab, hidden, k),
            out_b: Array1::zeros(vocab),
        }
    }

    fn zeros_like(&self) -> Self {
        let z2 = |a: &Array2<f64>| Array2::zeros(a.raw_dim());
        let z1 = |a: &Array1<f64>| Array1::zeros(a.raw_dim());
        let zc = |c: &Cell| Cell {
            wx: z2(&c.wx),
            wh: z2(&c.wh),
            b: z1(&c.b),
        };
        Params {
            embed: z2(&self.embed),
            enc: zc(&self.enc),
            dec: zc(&self.dec),
            out_w: z2(&self.out_w),
            out_b: z1(&self.out_b),
        }
    }

    fn tensors(&self) -> [&[f64]; 9] {
        fn s2(a: &Array2<f64>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        fn s1(a: &Array1<f64>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        [
            s2(&self.embed),
            s2(&self.enc.wx),
            s2(&self.enc.wh),
            s1(&self.enc.b),
            s2(&self.dec.wx),
            s2(&self.dec.wh),
            s1(&self.dec.b),
            s2(&self.out_w),
            s1(&self.out_b),
        ]
    }

    fn tensors_mut(&mut self) -> [&mut [f64]; 9] {
        [
            self.embed.as_slice_mut().expect("standard layout"),
            self.enc.wx.as_slice_mut().expect("standard layout"),
            self.enc.wh.as_slice_mut().expect("standard layout"),
            self.enc.b.as_slice_mut().expect("standard layout"),
            self.dec.wx.as_slice_mut().expect("standard layout"),
            self.dec.wh.as_slice_mut().expect("standard layout"),
            self.dec.b.as_slice_mut().expect("standard layout"),
            self.out_w.as_slice_mut().expect("standard layout"),
            self.out_b.as_slice_mut().expect("standard layout"),
        ]
    }

    fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    #[cfg(test)]
    fn get(&self, mut i: usize) -> f64 {
        for t in self.tensors() {
            if i < t.len() {
                return t[i];
            }
            i -= t.len();
        }
        panic!("parameter index out of range")
    }

    #[cfg(test)]
    fn set(&mut self, mut i: usize, v: f64) {
        for t in self.tensors_mut() {
            if i < t.len() {
                t[i] = v;
                return;
            }
            i -= t.len();
        }
        panic!("parameter index out of range")
    }
}

struct StepCache {
    x: Array1<f64>,
    h_prev: Array1<f64>,
    c_prev: Array1<f64>,
    i: Array1<f64>,
    f: Array1<f64>,
    g: Array1<f64>,
    o: Array1<f64>,
    tanh_c: Array1<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Cell {
    fn hidden(&self) -> usize {
        self.wh.ncols()
    }

    fn step(&self, x: Array1<f64>, h: Array1<f64>, c: Array1<f64>) -> (Array1<f64>, Array1<f64>, StepCache) {
        let n = self.hidden();
        let z = self.wx.dot(&x) + self.wh.dot(&h) + &self.b;
        let i = z.slice(ndarray::s![0..n]).mapv(sigmoid);
        let f = z.slice(ndarray::s![n..2 * n]).mapv(sigmoid);
        let g = z.slice(ndarray::s![2 * n..3 * n]).mapv(f64::tanh);
        let o = z.slice(ndarray::s![3 * n..4 * n]).mapv(sigmoid);
        let c_new = &f * &c + &i * &g;
        let tanh_c = c_new.mapv(f64::tanh);
        let h_new = &o * &tanh_c;
        let cache = StepCache {
            x,
            h_prev: h,
            c_prev: c,
            i,
            f,
            g,
            o,
            tanh_c,
        };
        (h_new, c_new, cache)
    }

    /// Returns gradients for the step's input, previous hidden and previous cell.
    fn backward(
        &self,
        s: &StepCache,
        dh: &Array1<f64>,
        dc: &Array1<f64>,
        grad: &mut Cell,
    ) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
        let n = self.hidden();
        let d_o = dh * &s.tanh_c;
        let dct = dc + &(dh * &s.o * &s.tanh_c.mapv(|t| 1.0 - t * t));
        let mut dz = Array1::zeros(4 * n);
        dz.slice_mut(ndarray::s![0..n])
            .assign(&(&dct * &s.g * &s.i.mapv(|v| v * (1.0 - v))));
        dz.slice_mut(ndarray::s![n..2 * n])
            .assign(&(&dct * &s.c_prev * &s.f.mapv(|v| v * (1.0 - v))));
        dz.slice_mut(ndarray::s![2 * n..3 * n])
            .assign(&(&dct * &s.i * &s.g.mapv(|v| 1.0 - v * v)));
        dz.slice_mut(ndarray::s![3 * n..4 * n])
            .assign(&(&d_o * &s.o.mapv(|v| v * (1.0 - v))));
        let col = dz.view().insert_axis(Axis(1));
        grad.wx += &col.dot(&s.x.view().insert_axis(Axis(0)));
        grad.wh += &col.dot(&s.h_prev.view().insert_axis(Axis(0)));
        grad.b += &dz;
        let dx = self.wx.t().dot(&dz);
        let dh_prev = self.wh.t().dot(&dz);
        let dc_prev = &dct * &s.f;
        (dx, dh_prev, dc_prev)
    }
}

/// Trained autoencoder: vocabulary plus encoder and decoder parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder {
    version: u32,
    vocab: Vocabulary,
    params: Params,
}

struct Adam {
    m: Params,
    v: Params,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, params: &mut Params, grad: &Params, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let gs = grad.tensors();
        for (((p, m), v), g) in params
            .tensors_mut()
            .into_iter()
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
            .zip(gs)
        {
            for k in 0..p.len() {
                m[k] = Self::B1 * m[k] + (1.0 - Self::B1) * g[k];
                v[k] = Self::B2 * v[k] + (1.0 - Self::B2) * g[k] * g[k];
                p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

impl Autoencoder {
    pub fn new(vocab: Vocabulary, cfg: &AutoencoderConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let params = Params::init(vocab.len(), cfg.embed_dim, cfg.latent_dim, &mut rng);
        Autoencoder {
            version: AUTOENCODER_VERSION,
            vocab,
            params,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.params.enc.hidden()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn num_params(&self) -> usize {
        self.params.num_params()
    }

    fn latent_of(&self, ids: &[usize]) -> Array1<f64> {
        let n = self.latent_dim();
        let (mut h, mut c) = (Array1::zeros(n), Array1::zeros(n));
        for &id in ids {
            let x = self.params.embed.row(id).to_owned();
            let (h2, c2, _) = self.params.enc.step(x, h, c);
            h = h2;
            c = c2;
        }
        h
    }

    pub fn encode(&self, ob: &Obligation) -> Encoding {
        Encoding {
            vector: self.latent_of(&self.vocab.ids(ob)).to_vec(),
            mode: EncodingMode::Autoencoded,
        }
    }

    /// Greedy decoding from a latent vector, stopping at the end marker or
    /// after `max_len` tokens.
    pub fn decode_ids(&self, latent: &[f64], max_len: usize) -> Vec<usize> {
        let n = self.latent_dim();
        let mut h = Array1::from_vec(latent.to_vec());
        let mut c = Array1::zeros(n);
        let mut prev = BOS_ID;
        let mut out = Vec::new();
        while out.len() < max_len {
            let x = self.params.embed.row(prev).to_owned();
            let (h2, c2, _) = self.params.dec.step(x, h, c);
            h = h2;
            c = c2;
            let next = argmax(&(self.params.out_w.dot(&h) + &self.params.out_b));
            if next == EOS_ID {
                break;
            }
            out.push(next);
            prev = next;
        }
        out
    }

    /// The obligation decoded from `ob`'s own latent vector, if it parses.
    pub fn reconstruct(&self, ob: &Obligation) -> Option<Obligation> {
        let ids = self.vocab.ids(ob);
        let latent = self.latent_of(&ids);
        let out = self.decode_ids(latent.as_slice().expect("contiguous"), 2 * ids.len() + 8);
        let tokens: Option<Vec<Token>> = out.iter().map(|&id| token_of(self.vocab.text(id))).collect();
        obligation_from_tokens(&tokens?).ok()
    }

    /// Per-position greedy reconstruction hits over the target sequence
    /// (tokens then end marker).
    fn hits(&self, ids: &[usize]) -> usize {
        let latent = self.latent_of(ids);
        let out = self.decode_ids(latent.as_slice().expect("contiguous"), ids.len() + 1);
        let mut hits = ids.iter().zip(&out).filter(|(a, b)| a == b).count();
        if out.len() == ids.len() {
            hits += 1;
        }
        hits
    }

    /// Greedy-decoding token accuracy over `obs`.
    pub fn accuracy(&self, obs: &[Obligation]) -> f64 {
        let (mut hit, mut total) = (0, 0);
        for ob in obs {
            let ids = self.vocab.ids(ob);
            hit += self.hits(&ids);
            total += ids.len() + 1;
        }
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    }

    /// Mean token cross-entropy of teacher-forced reconstruction.
    pub fn loss(&self, ob: &Obligation) -> f64 {
        self.loss_and_grad(&self.vocab.ids(ob), None)
    }

    fn loss_and_grad(&self, ids: &[usize], mut grad: Option<&mut Params>) -> f64 {
        let p = &self.params;
        let n = self.latent_dim();
        let mut enc_caches = Vec::with_capacity(ids.len());
        let (mut h, mut c) = (Array1::zeros(n), Array1::zeros(n));
        for &id in ids {
            let (h2, c2, cache) = p.enc.step(p.embed.row(id).to_owned(), h, c);
            enc_caches.push(cache);
            h = h2;
            c = c2;
        }
        let inputs: Vec<usize> = std::iter::once(BOS_ID).chain(ids.iter().copied()).collect();
        let targets: Vec<usize> = ids.iter().copied().chain(std::iter::once(EOS_ID)).collect();
        let scale = 1.0 / targets.len() as f64;
        let mut c = Array1::zeros(n);
        let mut dec_caches = Vec::with_capacity(inputs.len());
        let mut probs = Vec::with_capacity(inputs.len());
        let mut hs = Vec::with_capacity(inputs.len());
        let mut loss = 0.0;
        for (&inp, &tgt) in inputs.iter().zip(&targets) {
            let (h2, c2, cache) = p.dec.step(p.embed.row(inp).to_owned(), h, c);
            dec_caches.push(cache);
            let pr = softmax(&(p.out_w.dot(&h2) + &p.out_b));
            loss -= pr[tgt].max(1e-300).ln() * scale;
            probs.push(pr);
            hs.push(h2.clone());
            h = h2;
            c = c2;
        }
        let Some(g) = grad.as_deref_mut() else {
            return loss;
        };
        let mut dh: Array1<f64> = Array1::zeros(n);
        let mut dc: Array1<f64> = Array1::zeros(n);
        for t in (0..targets.len()).rev() {
            let mut dlogits = probs[t].clone() * scale;
            dlogits[targets[t]] -= scale;
            g.out_w += &dlogits
                .view()
                .insert_axis(Axis(1))
                .dot(&hs[t].view().insert_axis(Axis(0)));
            g.out_b += &dlogits;
            dh += &p.out_w.t().dot(&dlogits);
            let (dx, dh_prev, dc_prev) = p.dec.backward(&dec_caches[t], &dh, &dc, &mut g.dec);
            g.embed.row_mut(inputs[t]).scaled_add(1.0, &dx);
            dh = dh_prev;
            dc = dc_prev;
        }
        // The decoder starts from the latent with a zero cell.
        let mut dc: Array1<f64> = Array1::zeros(n);
        for t in (0..ids.len()).rev() {
            let (dx, dh_prev, dc_prev) = p.enc.backward(&enc_caches[t], &dh, &dc, &mut g.enc);
            g.embed.row_mut(ids[t]).scaled_add(1.0, &dx);
            dh = dh_prev;
            dc = dc_prev;
        }
        loss
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, AutoencoderError> {
        let ae: Autoencoder = serde_json::from_str(text)?;
        ae.validate()?;
        Ok(ae)
    }

    pub fn validate(&self) -> Result<(), AutoencoderError> {
        if self.version != AUTOENCODER_VERSION {
            return Err(AutoencoderError::Version {
                expected: AUTOENCODER_VERSION,
                found: self.version,
            });
        }
        let p = &self.params;
        let (v, e, h) = (self.vocab.len(), p.embed.ncols(), p.enc.wh.ncols());
        let cell_ok = |c: &Cell| {
            c.wx.dim() == (4 * h, e) && c.wh.dim() == (4 * h, h) && c.b.len() == 4 * h
        };
        let ok = v >= 3
            && p.embed.nrows() == v
            && cell_ok(&p.enc)
            && cell_ok(&p.dec)
            && p.out_w.dim() == (v, h)
            && p.out_b.len() == v
            && p.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()));
        if ok {
            Ok(())
        } else {
            Err(AutoencoderError::BadShape)
        }
    }
}

fn token_of(text: &str) -> Option<Token> {
    Some(match text {
        "(" => Token::LParen,
        ")" => Token::RParen,
        "," => Token::Comma,
        ";" => Token::Semi,
        ":" => Token::Colon,
        "|-" => Token::Turnstile,
        "=" => Token::Equals,
        UNK | BOS | EOS => return None,
        s => Token::Ident(s.to_string()),
    })
}

fn argmax(v: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn softmax(v: &Array1<f64>) -> Array1<f64> {
    let max = v.fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    let e = v.mapv(|x| (x - max).exp());
    let z = e.sum();
    e / z
}

/// Trains on `obs` one sequence at a time in a seeded shuffled order,
/// returning the model and per-epoch mean loss and greedy accuracy.
pub fn train_autoencoder(
    obs: &[Obligation],
    cfg: &AutoencoderConfig,
) -> Result<(Autoencoder, Vec<AeEpoch>), AutoencoderError> {
    if obs.is_empty() {
        return Err(AutoencoderError::Empty);
    }
    let mut ae = Autoencoder::new(Vocabulary::build(obs), cfg);
    let seqs: Vec<Vec<usize>> = obs.iter().map(|o| ae.vocab.ids(o)).collect();
    let mut adam = Adam {
        m: ae.params.zeros_like(),
        v: ae.params.zeros_like(),
        t: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &k in &order {
            let mut grad = ae.params.zeros_like();
            total += ae.loss_and_grad(&seqs[k], Some(&mut grad));
            let norm = grad.norm();
            if norm > cfg.clip_norm {
                let s = cfg.clip_norm / norm;
                for t in grad.tensors_mut() {
                    t.iter_mut().for_each(|x| *x *= s);
                }
            }
            adam.step(&mut ae.params, &grad, cfg.learning_rate);
        }
        let (mut hit, mut count) = (0, 0);
        for s in &seqs {
            hit += ae.hits(s);
            count += s.len() + 1;
        }
        curve.push(AeEpoch {
            epoch,
            loss: total / seqs.len() as f64,
            accuracy: hit as f64 / count as f64,
        });
    }
    Ok((ae, curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ob(s: &str) -> Obligation {
        s.parse().unwrap()
    }

    fn small() -> AutoencoderConfig {
        AutoencoderConfig {
            latent_dim: 12,
            embed_dim: 6,
            epochs: 0,
            ..AutoencoderConfig::default()
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(train_autoencoder(&[], &small()), Err(AutoencoderError::Empty)));
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let obs = vec![ob("|- Zero = Zero")];
        let (ae, curve) = train_autoencoder(&obs, &small()).unwrap();
        assert!(curve.is_empty());
        assert_eq!(ae, Autoencoder::new(Vocabulary::build(&obs), &small()));
    }

    #[test]
    fn memorizes_one_sequence() {
        let obs = vec![ob("forall n, |- Plus(Var(n),Zero) = Var(n)")];
        let cfg = AutoencoderConfig {
            epochs: 150,
            ..small()
        };
        let (ae, curve) = train_autoencoder(&obs, &cfg).unwrap();
        assert_eq!(curve.last().unwrap().accuracy, 1.0);
        assert_eq!(ae.reconstruct(&obs[0]), Some(obs[0].clone()));
        assert_eq!(ae.encode(&obs[0]), ae.encode(&obs[0]));
    }

    #[test]
    fn unknown_tokens_encode() {
        let ae = Autoencoder::new(Vocabulary::build(&[ob("|- Zero = Zero")]), &small());
        let e = ae.encode(&ob("forall q, |- Var(q) = Var(q)"));
        assert_eq!(e.vector.len(), 12);
        assert_eq!(ae.vocabulary().id("q"), UNK_ID);
    }

    #[test]
    fn checkpoint_round_trip() {
        let ae = Autoencoder::new(Vocabulary::build(&[ob("|- Zero = Zero")]), &small());
        let back = Autoencoder::from_json(&ae.to_json()).unwrap();
        assert_eq!(ae, back);
    }

    #[test]
    fn bptt_matches_finite_differences() {
        let obs = [ob("n |- Plus(Var(n),Succ(Zero)) = Succ(Var(n))")];
        let ae = Autoencoder::new(Vocabulary::build(&obs), &small());
        let ids = ae.vocab.ids(&obs[0]);
        let mut grad = ae.params.zeros_like();
        ae.loss_and_grad(&ids, Some(&mut grad));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let total = ae.num_params();
        let mut checked = 0;
        while checked < 60 {
            let i = rng.gen_range(0..total);
            let analytic = grad.get(i);
            let mut plus = ae.clone();
            plus.params.set(i, ae.params.get(i) + 1e-5);
            let mut minus = ae.clone();
            minus.params.set(i, ae.params.get(i) - 1e-5);
            let numeric = (plus.loss_and_grad(&ids, None) - minus.loss_and_grad(&ids, None)) / 2e-5;
            if analytic.abs().max(numeric.abs()) < 1e-9 {
                continue;
            }
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
            assert!(rel < 1e-4, "coord {i}: analytic {analytic} numeric {numeric}");
            checked += 1;
        }
    }
}

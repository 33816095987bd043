use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ObligationValue, ValueError};
use crate::encoder::Encoder;
use crate::env::Obligation;

pub const VALUE_VERSION: u32 = 1;
pub const DEFAULT_GAMMA: f64 = 0.9;
pub const DEFAULT_HIDDEN: usize = 32;

// Keeps outputs strictly inside (0, 1) where the logistic saturates.
const EDGE: f64 = 1e-12;

/// One-hidden-layer regressor: encoding -> tanh layer -> logistic output.
///
/// Parameters flatten as `w1` (row-major, hidden x dim), `b1`, `w2`, `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueModel {
    version: u32,
    gamma: f64,
    encoder: Encoder,
    hidden: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam(Adam),
}

impl Optimizer {
    pub fn adam(num_params: usize) -> Self {
        Optimizer::Adam(Adam {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        })
    }

    fn apply(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        match self {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adam(a) => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                a.t += 1;
                let c1 = 1.0 - B1.powi(a.t);
                let c2 = 1.0 - B2.powi(a.t);
                for k in 0..params.len() {
                    a.m[k] = B1 * a.m[k] + (1.0 - B1) * grad[k];
                    a.v[k] = B2 * a.v[k] + (1.0 - B2) * grad[k] * grad[k];
                    params[k] -= lr * (a.m[k] / c1) / ((a.v[k] / c2).sqrt() + 1e-8);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            epochs: 1000,
            batch_size: 32,
            learning_rate: 0.003,
            seed: 0,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl ValueModel {
    pub fn new(encoder: Encoder, gamma: f64, hidden: usize, seed: u64) -> Result<Self, ValueError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(ValueError::BadGamma(gamma));
        }
        let dim = encoder.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k1 = 1.0 / (dim as f64).sqrt();
        let k2 = 1.0 / (hidden as f64).sqrt();
        Ok(ValueModel {
            version: VALUE_VERSION,
            gamma,
            encoder,
            hidden,
            w1: (0..hidden * dim).map(|_| rng.gen_range(-k1..k1)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| rng.gen_range(-k2..k2)).collect(),
            b2: 0.0,
        })
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn dim(&self) -> usize {
        self.encoder.dim()
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.push(self.b2);
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.num_params());
        let (a, rest) = p.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.hidden);
        let (c, d) = rest.split_at(self.hidden);
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2 = d[0];
    }

    pub fn encode(&self, ob: &Obligation) -> Vec<f64> {
        self.encoder.encode(ob).vector
    }

    fn hidden_act(&self, x: &[f64]) -> Vec<f64> {
        let dim = x.len();
        (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * dim..(j + 1) * dim];
                (self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()).tanh()
            })
            .collect()
    }

    fn raw(&self, a: &[f64]) -> f64 {
        sigmoid(self.b2 + self.w2.iter().zip(a).map(|(w, v)| w * v).sum::<f64>())
    }

    /// Value of an already-encoded obligation.
    pub fn value_of_encoding(&self, x: &[f64]) -> f64 {
        self.raw(&self.hidden_act(x)).clamp(EDGE, 1.0 - EDGE)
    }

    pub fn v_value(&self, ob: &Obligation) -> f64 {
        self.value_of_encoding(&self.encode(ob))
    }

    /// Mean squared error over encoded `(x, target)` pairs.
    pub fn loss_encoded(&self, batch: &[(Vec<f64>, f64)]) -> f64 {
        batch
            .iter()
            .map(|(x, t)| (self.value_of_encoding(x) - t).powi(2))
            .sum::<f64>()
            / batch.len() as f64
    }

    /// Loss and its gradient in [`ValueModel::params`] layout.
    pub fn loss_and_gradient(&self, batch: &[(Vec<f64>, f64)]) -> (f64, Vec<f64>) {
        let dim = self.dim();
        let h = self.hidden;
        let mut grad = vec![0.0; self.num_params()];
        let (gw1, rest) = grad.split_at_mut(h * dim);
        let (gb1, rest) = rest.split_at_mut(h);
        let (gw2, gb2) = rest.split_at_mut(h);
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for (x, t) in batch {
            let a = self.hidden_act(x);
            let v = self.raw(&a);
            loss += (v.clamp(EDGE, 1.0 - EDGE) - t).powi(2) * scale;
            let ds = 2.0 * (v - t) * v * (1.0 - v) * scale;
            gb2[0] += ds;
            for j in 0..h {
                gw2[j] += ds * a[j];
                let dz = ds * self.w2[j] * (1.0 - a[j] * a[j]);
                gb1[j] += dz;
                for (g, xi) in gw1[j * dim..(j + 1) * dim].iter_mut().zip(x) {
                    *g += dz * xi;
                }
            }
        }
        (loss, grad)
    }

    /// One optimizer step on mean squared error; returns the pre-step loss.
    pub fn update_encoded(
        &mut self,
        opt: &mut Optimizer,
        batch: &[(Vec<f64>, f64)],
        learning_rate: f64,
    ) -> Result<f64, ValueError> {
        if batch.is_empty() {
            return Err(ValueError::EmptyBatch);
        }
        if let Some((_, t)) = batch.iter().find(|(_, t)| !(0.0..=1.0).contains(t)) {
            return Err(ValueError::BadTarget(*t));
        }
        let (loss, grad) = self.loss_and_gradient(batch);
        let mut p = self.params();
        opt.apply(&mut p, &grad, learning_rate);
        self.set_params(&p);
        Ok(loss)
    }

    /// One plain gradient step on `(obligation, target)` pairs.
    pub fn update_batch(&mut self, batch: &[(Obligation, f64)], learning_rate: f64) -> Result<f64, ValueError> {
        let enc: Vec<(Vec<f64>, f64)> = batch.iter().map(|(ob, t)| (self.encode(ob), *t)).collect();
        self.update_encoded(&mut Optimizer::Sgd, &enc, learning_rate)
    }

    /// Regression to `gamma^length` with Adam over shuffled minibatches.
    /// Returns the mean loss per epoch.
    pub fn pretrain(&mut self, tasks: &[(Obligation, usize)], cfg: &PretrainConfig) -> Result<Vec<f64>, ValueError> {
        if tasks.is_empty() {
            return Err(ValueError::EmptyTasks);
        }
        let data: Vec<(Vec<f64>, f64)> = tasks
            .iter()
            .map(|(ob, len)| (self.encode(ob), self.gamma.powi(*len as i32)))
            .collect();
        let mut opt = Optimizer::adam(self.num_params());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut curve = Vec::with_capacity(cfg.epochs);
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for chunk in order.chunks(cfg.batch_size.max(1)) {
                let batch: Vec<(Vec<f64>, f64)> = chunk.iter().map(|&i| data[i].clone()).collect();
                total += self.update_encoded(&mut opt, &batch, cfg.learning_rate)? * batch.len() as f64;
            }
            curve.push(total / data.len() as f64);
        }
        Ok(curve)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, ValueError> {
        let m: ValueModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ValueError> {
        if self.version != VALUE_VERSION {
            return Err(ValueError::Version {
                expected: VALUE_VERSION,
                found: self.version,
            });
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ValueError::BadGamma(self.gamma));
        }
        if let Encoder::Autoencoded { model } = &self.encoder {
            model.validate()?;
        }
        let ok = self.w1.len() == self.hidden * self.dim()
            && self.b1.len() == self.hidden
            && self.w2.len() == self.hidden
            && self.params().iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(ValueError::BadShape)
        }
    }
}

impl ObligationValue for ValueModel {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn value(&self, ob: &Obligation) -> f64 {
        self.v_value(ob)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ob(s: &str) -> Obligation {
        s.parse().unwrap()
    }

    fn model(seed: u64) -> ValueModel {
        ValueModel::new(Encoder::default(), 0.9, DEFAULT_HIDDEN, seed).unwrap()
    }

    #[test]
    fn values_are_deterministic_and_open() {
        let m = model(1);
        let a = ob("forall n, |- Plus(Var(n),Zero) = Var(n)");
        let v = m.v_value(&a);
        assert_eq!(v, m.v_value(&a));
        assert!(v > 0.0 && v < 1.0);
        let mut huge = m.clone();
        let mut p = huge.params();
        *p.last_mut().unwrap() = 1e6;
        huge.set_params(&p);
        let v = huge.v_value(&a);
        assert!(v < 1.0);
    }

    #[test]
    fn zero_learning_rate_and_exact_targets() {
        let mut m = model(2);
        let before = m.clone();
        let a = ob("|- Zero = Zero");
        m.update_batch(&[(a.clone(), 0.3)], 0.0).unwrap();
        assert_eq!(m, before);
        let exact = m.v_value(&a);
        let loss = m.update_batch(&[(a, exact)], 1.0).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(m, before);
    }

    #[test]
    fn update_errors() {
        let mut m = model(2);
        assert!(matches!(m.update_batch(&[], 0.1), Err(ValueError::EmptyBatch)));
        assert!(matches!(
            m.update_batch(&[(ob("|- Zero = Zero"), 1.5)], 0.1),
            Err(ValueError::BadTarget(_))
        ));
        assert!(matches!(ValueModel::new(Encoder::default(), 1.5, 4, 0), Err(ValueError::BadGamma(_))));
    }

    #[test]
    fn repeated_updates_converge() {
        let mut m = model(3);
        let batch = vec![
            (ob("|- Zero = Zero"), 0.9),
            (ob("|- Plus(Zero,Zero) = Zero"), 0.81),
            (ob("forall n, |- Plus(Var(n),Zero) = Var(n)"), 0.9f64.powi(7)),
        ];
        let mut loss = 1.0;
        for _ in 0..2000 {
            loss = m.update_batch(&batch, 0.5).unwrap();
        }
        assert!(loss < 1e-3, "loss {loss}");
    }

    #[test]
    fn pretrain_targets() {
        let mut m = model(4);
        let tasks = vec![(ob("|- Zero = Zero"), 1), (ob("|- Plus(Zero,Zero) = Zero"), 3)];
        let cfg = PretrainConfig {
            epochs: 400,
            batch_size: 2,
            learning_rate: 0.01,
            seed: 0,
        };
        m.pretrain(&tasks, &cfg).unwrap();
        assert!((m.v_value(&tasks[0].0) - 0.9).abs() < 0.01);
        assert!((m.v_value(&tasks[1].0) - 0.729).abs() < 0.01);
        assert!(matches!(m.pretrain(&[], &cfg), Err(ValueError::EmptyTasks)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = model(5);
        let batch: Vec<(Vec<f64>, f64)> = (0..8)
            .map(|_| {
                let x: Vec<f64> = (0..m.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (x, rng.gen_range(0.0..1.0))
            })
            .collect();
        let (_, grad) = m.loss_and_gradient(&batch);
        let base = m.params();
        for _ in 0..100 {
            let i = rng.gen_range(0..base.len());
            let mut p = base.clone();
            p[i] += 1e-5;
            let mut plus = m.clone();
            plus.set_params(&p);
            p[i] -= 2e-5;
            let mut minus = m.clone();
            minus.set_params(&p);
            let numeric = (plus.loss_encoded(&batch) - minus.loss_encoded(&batch)) / 2e-5;
            let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-4, "coord {i}: {} vs {numeric}", grad[i]);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = model(6);
        let back = ValueModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
        assert_eq!(back.to_json(), m.to_json());
    }
}

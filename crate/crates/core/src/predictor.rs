//! Supervised tactic predictor: a multinomial linear classifier over the six
//! tactic templates, with deterministic argument resolution.
//!
//! The predictor bounds the action space. Search and training only ever
//! consider its top-`n` resolved tactics at a given obligation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Obligation, Tactic, Template};

pub const FEATURE_SCHEMA_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "has_leading_binder",
    "goal_sides_equal",
    "goal_roots_both_succ",
    "goal_has_plus_zero_redex",
    "goal_has_plus_succ_redex",
    "hyp_lhs_occurs_in_goal",
    "context_var_in_goal",
    "goal_size_le_4",
    "goal_size_le_8",
    "goal_size_le_16",
    "goal_size_gt_16",
    "hyps_0",
    "hyps_1",
    "hyps_ge_2",
];

pub const NUM_FEATURES: usize = 14;
pub const NUM_TEMPLATES: usize = 6;

pub type FeatureVector = [f64; NUM_FEATURES];

pub fn featurize(ob: &Obligation) -> FeatureVector {
    let goal = ob.goal();
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let mut f = [0.0; NUM_FEATURES];
    f[0] = flag(!ob.binders().is_empty());
    f[1] = flag(goal.lhs == goal.rhs);
    f[2] = flag(matches!(
        (&goal.lhs, &goal.rhs),
        (crate::env::Term::Succ(_), crate::env::Term::Succ(_))
    ));
    f[3] = flag(goal.lhs.has_zero_redex() || goal.rhs.has_zero_redex());
    f[4] = flag(goal.lhs.has_succ_redex() || goal.rhs.has_succ_redex());
    f[5] = flag(ob.hypotheses().any(|(_, h)| goal.contains(&h.lhs)));
    f[6] = flag(ob.context_vars().any(|v| goal.mentions(v)));
    let size = goal.size();
    let bucket = match size {
        0..=4 => 7,
        5..=8 => 8,
        9..=16 => 9,
        _ => 10,
    };
    f[bucket] = 1.0;
    let hyps = ob.hypotheses().count();
    f[11 + hyps.min(2)] = 1.0;
    f
}

/// The argument the predictor attaches to `template` at `ob`, or `None`
/// when no legal argument exists.
pub fn resolve(template: Template, ob: &Obligation) -> Option<Tactic> {
    let goal = ob.goal();
    match template {
        Template::Induction => ob
            .context_vars()
            .find(|v| goal.mentions(v))
            .map(|v| Tactic::Induction(v.to_string())),
        Template::Rewrite => ob
            .hypotheses()
            .find(|(_, h)| goal.contains(&h.lhs))
            .map(|(name, _)| Tactic::Rewrite(name.to_string())),
        Template::Intros => Some(Tactic::Intros),
        Template::Simpl => Some(Tactic::Simpl),
        Template::FEqual => Some(Tactic::FEqual),
        Template::Reflexivity => Some(Tactic::Reflexivity),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TacticPrediction {
    pub tactic: Tactic,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("no training pairs")]
    EmptyTrainingSet,
    #[error("checkpoint feature schema mismatch: expected version {expected}, found {found}")]
    SchemaMismatch { expected: u32, found: u32 },
    #[error("checkpoint has malformed parameter shapes")]
    BadShape,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorTraining {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for PredictorTraining {
    fn default() -> Self {
        PredictorTraining {
            epochs: 400,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: f64,
    pub best: f64,
}

impl Predictor {
    pub fn zeros() -> Self {
        Predictor {
            weights: vec![vec![0.0; NUM_FEATURES]; NUM_TEMPLATES],
            bias: vec![0.0; NUM_TEMPLATES],
        }
    }

    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Predictor::zeros();
        for row in &mut p.weights {
            for w in row.iter_mut() {
                *w = rng.gen_range(-0.01..0.01);
            }
        }
        p
    }

    pub fn scores(&self, x: &FeatureVector) -> [f64; NUM_TEMPLATES] {
        let mut s = [0.0; NUM_TEMPLATES];
        for (k, out) in s.iter_mut().enumerate() {
            *out = self.bias[k]
                + self.weights[k]
                    .iter()
                    .zip(x.iter())
                    .map(|(w, v)| w * v)
                    .sum::<f64>();
        }
        s
    }

    pub fn probabilities_of(&self, x: &FeatureVector) -> [f64; NUM_TEMPLATES] {
        softmax(&self.scores(x))
    }

    /// Full template distribution at `ob`, indexed by [`Template::index`].
    pub fn distribution(&self, ob: &Obligation) -> [f64; NUM_TEMPLATES] {
        self.probabilities_of(&featurize(ob))
    }

    /// Templates by descending probability, ties in template order; each is
    /// resolved to a concrete tactic and unresolvable ones are skipped.
    pub fn predict_top_n(&self, ob: &Obligation, n: usize) -> Vec<TacticPrediction> {
        let probs = self.distribution(ob);
        let mut order: Vec<Template> = Template::ALL.to_vec();
        order.sort_by(|a, b| probs[b.index()].total_cmp(&probs[a.index()]));
        order
            .into_iter()
            .filter_map(|t| {
                resolve(t, ob).map(|tactic| TacticPrediction {
                    tactic,
                    probability: probs[t.index()],
                })
            })
            .take(n)
            .collect()
    }

    pub fn num_params(&self) -> usize {
        NUM_TEMPLATES * (NUM_FEATURES + 1)
    }

    /// Parameters flattened row by row, each row's bias last.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for k in 0..NUM_TEMPLATES {
            out.extend_from_slice(&self.weights[k]);
            out.push(self.bias[k]);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params());
        for (k, chunk) in params.chunks(NUM_FEATURES + 1).enumerate() {
            self.weights[k].copy_from_slice(&chunk[..NUM_FEATURES]);
            self.bias[k] = chunk[NUM_FEATURES];
        }
    }

    /// Mean cross-entropy over `(features, label)` pairs.
    pub fn loss(&self, data: &[(FeatureVector, Template)]) -> f64 {
        let total: f64 = data
            .iter()
            .map(|(x, y)| -log_softmax(&self.scores(x))[y.index()])
            .sum();
        total / data.len() as f64
    }

    /// Gradient of [`Predictor::loss`] in [`Predictor::params`] layout.
    pub fn gradient(&self, data: &[(FeatureVector, Template)]) -> Vec<f64> {
        let mut grad = vec![0.0; self.num_params()];
        let scale = 1.0 / data.len() as f64;
        for (x, y) in data {
            let p = self.probabilities_of(x);
            for k in 0..NUM_TEMPLATES {
                let delta = (p[k] - if k == y.index() { 1.0 } else { 0.0 }) * scale;
                let row = &mut grad[k * (NUM_FEATURES + 1)..(k + 1) * (NUM_FEATURES + 1)];
                for (g, v) in row.iter_mut().zip(x.iter()) {
                    *g += delta * v;
                }
                row[NUM_FEATURES] += delta;
            }
        }
        grad
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PredictorCheckpoint::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, PredictorError> {
        let ck: PredictorCheckpoint = serde_json::from_str(text)?;
        ck.into_predictor()
    }
}

/// Versioned on-disk form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorCheckpoint {
    pub version: u32,
    pub features: Vec<String>,
    pub templates: Vec<Template>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl From<&Predictor> for PredictorCheckpoint {
    fn from(p: &Predictor) -> Self {
        PredictorCheckpoint {
            version: FEATURE_SCHEMA_VERSION,
            features: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            templates: Template::ALL.to_vec(),
            weights: p.weights.clone(),
            bias: p.bias.clone(),
        }
    }
}

impl PredictorCheckpoint {
    pub fn into_predictor(self) -> Result<Predictor, PredictorError> {
        if self.version != FEATURE_SCHEMA_VERSION {
            return Err(PredictorError::SchemaMismatch {
                expected: FEATURE_SCHEMA_VERSION,
                found: self.version,
            });
        }
        let names_ok = self.features.iter().map(String::as_str).eq(FEATURE_NAMES);
        if !names_ok
            || self.templates != Template::ALL
            || self.weights.len() != NUM_TEMPLATES
            || self.weights.iter().any(|r| r.len() != NUM_FEATURES)
            || self.bias.len() != NUM_TEMPLATES
        {
            return Err(PredictorError::BadShape);
        }
        Ok(Predictor {
            weights: self.weights,
            bias: self.bias,
        })
    }
}

fn softmax(s: &[f64; NUM_TEMPLATES]) -> [f64; NUM_TEMPLATES] {
    let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut e = [0.0; NUM_TEMPLATES];
    for (o, v) in e.iter_mut().zip(s) {
        *o = (v - max).exp();
    }
    let z: f64 = e.iter().sum();
    e.map(|v| v / z)
}

fn log_softmax(s: &[f64; NUM_TEMPLATES]) -> [f64; NUM_TEMPLATES] {
    let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    s.map(|v| v - lse)
}

/// Full-batch gradient descent on mean cross-entropy.
///
/// Returns the parameters with the lowest loss seen (the initialization
/// included) and the per-epoch loss curve.
pub fn train_predictor(
    pairs: &[(Obligation, Tactic)],
    cfg: &PredictorTraining,
) -> Result<(Predictor, Vec<EpochLoss>), PredictorError> {
    if pairs.is_empty() {
        return Err(PredictorError::EmptyTrainingSet);
    }
    let data: Vec<(FeatureVector, Template)> = pairs
        .iter()
        .map(|(ob, t)| (featurize(ob), t.template()))
        .collect();
    let mut model = Predictor::random(cfg.seed);
    let mut best = model.clone();
    let mut best_loss = model.loss(&data);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let grad = model.gradient(&data);
        let mut params = model.params();
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= cfg.learning_rate * g;
        }
        model.set_params(&params);
        let loss = model.loss(&data);
        if loss < best_loss {
            best_loss = loss;
            best = model.clone();
        }
        curve.push(EpochLoss {
            epoch,
            loss,
            best: best_loss,
        });
    }
    Ok((best, curve))
}

/// Top-1 template accuracy over `(obligation, tactic)` pairs.
pub fn template_accuracy(p: &Predictor, pairs: &[(Obligation, Tactic)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let hits = pairs
        .iter()
        .filter(|(ob, t)| {
            let probs = p.distribution(ob);
            let best = Template::ALL
                .into_iter()
                .max_by(|a, b| {
                    probs[a.index()]
                        .total_cmp(&probs[b.index()])
                        .then(b.index().cmp(&a.index()))
                })
                .unwrap();
            best == t.template()
        })
        .count();
    hits as f64 / pairs.len() as f64
}

/// Central finite-difference gradient of the loss, for checking.
pub fn numeric_gradient(
    p: &Predictor,
    data: &[(FeatureVector, Template)],
    coords: &[usize],
    step: f64,
) -> Vec<f64> {
    let base = p.params();
    coords
        .iter()
        .map(|&i| {
            let mut plus = p.clone();
            let mut v = base.clone();
            v[i] += step;
            plus.set_params(&v);
            let mut minus = p.clone();
            v[i] = base[i] - step;
            minus.set_params(&v);
            (plus.loss(data) - minus.loss(data)) / (2.0 * step)
        })
        .collect()
}

/// Random `(features, label)` data for gradient checks.
pub fn random_dataset(rng: &mut impl Rng, size: usize) -> Vec<(FeatureVector, Template)> {
    (0..size)
        .map(|_| {
            let mut x = [0.0; NUM_FEATURES];
            for v in x.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            (x, Template::ALL[rng.gen_range(0..NUM_TEMPLATES)])
        })
        .collect()
}

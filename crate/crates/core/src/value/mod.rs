//! V-values over obligations, their multiplicative combination over
//! hyperstates, the reward-free Bellman target, and the experience buffers.

mod buffers;
mod model;
mod tabular;

use thiserror::Error;

use crate::env::{apply_tactic, Hyperstate, Obligation};
use crate::oracle::{ActionSource, TopN};
use crate::predictor::Predictor;

pub use buffers::{NegativeBuffer, ReplayBuffer, Transition, TrueTargetBuffer};
pub use model::{
    Adam, Optimizer, PretrainConfig, ValueModel, DEFAULT_GAMMA, DEFAULT_HIDDEN, VALUE_VERSION,
};
pub use tabular::{reachable_graph, value_iteration, ObligationGraph, TabularValue, ValueIteration};

#[derive(Debug, Error)]
pub enum ValueError {
    #[error("steps are undefined for value {0} (must be in (0, 1])")]
    UndefinedSteps(f64),
    #[error("gamma must lie strictly between 0 and 1, got {0}")]
    BadGamma(f64),
    #[error("empty batch")]
    EmptyBatch,
    #[error("no pretraining tasks")]
    EmptyTasks,
    #[error("target {0} is outside [0, 1]")]
    BadTarget(f64),
    #[error("value checkpoint version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: u32 },
    #[error("value checkpoint has inconsistent shapes")]
    BadShape,
    #[error(transparent)]
    Encoder(#[from] crate::encoder::AutoencoderError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Anything that assigns a V-value in `[0, 1]` to an obligation.
pub trait ObligationValue {
    fn gamma(&self) -> f64;
    fn value(&self, ob: &Obligation) -> f64;
}

/// Product of obligation values; 1 for the empty hyperstate.
pub fn hyperstate_value(v: &dyn ObligationValue, h: &Hyperstate) -> f64 {
    h.obligations().iter().map(|ob| v.value(ob)).product()
}

/// `log_gamma(v)`: the number of steps a value of `v` stands for.
pub fn steps_estimate(v: f64, gamma: f64) -> Result<f64, ValueError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ValueError::BadGamma(gamma));
    }
    if !(v > 0.0 && v <= 1.0) {
        return Err(ValueError::UndefinedSteps(v));
    }
    Ok(v.ln() / gamma.ln())
}

/// Sum of per-obligation step estimates.
pub fn hyperstate_steps(v: &dyn ObligationValue, h: &Hyperstate) -> Result<f64, ValueError> {
    h.obligations()
        .iter()
        .map(|ob| steps_estimate(v.value(ob), v.gamma()))
        .sum()
}

/// `max_a gamma * prod V(children)` over the actions that apply at `ob`;
/// 0 when none do.
pub fn bellman_target_with(ob: &Obligation, v: &dyn ObligationValue, actions: &dyn ActionSource) -> f64 {
    let gamma = v.gamma();
    actions
        .actions(ob)
        .iter()
        .filter_map(|t| apply_tactic(ob, t).ok())
        .map(|children| gamma * children.iter().map(|c| v.value(c)).product::<f64>())
        .fold(0.0, f64::max)
}

pub fn bellman_target(ob: &Obligation, v: &dyn ObligationValue, predictor: &Predictor, width: usize) -> f64 {
    bellman_target_with(ob, v, &TopN { predictor, width })
}

/// Fixed per-obligation values, for tests and worked examples.
pub struct ConstValue<F: Fn(&Obligation) -> f64> {
    pub gamma: f64,
    pub f: F,
}

impl<F: Fn(&Obligation) -> f64> ObligationValue for ConstValue<F> {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn value(&self, ob: &Obligation) -> f64 {
        (self.f)(ob)
    }
}

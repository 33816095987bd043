//! Reinforcement learning of the value model: sub-proof tasks, filtering,
//! demonstration curriculum, epsilon-greedy episodes, the three buffers and
//! the single-learner / many-actor training loop.

use std::collections::HashMap;
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{demonstration_pairs, CorpusEntry, CorpusSplit};
use crate::encoder::Encoder;
use crate::env::{
    extract_subproof_tasks, Hyperstate, Obligation, ProofScript, Term, Theorem,
};
use crate::oracle::reproducible_under_predictor;
use crate::predictor::{train_predictor, Predictor, PredictorCheckpoint, PredictorTraining};
use crate::search::{expand_state, greedy_search, GreedyPolicy, SearchConfig};
use crate::value::{
    bellman_target, hyperstate_value, ObligationValue, NegativeBuffer, Optimizer, PretrainConfig, ReplayBuffer,
    Transition, TrueTargetBuffer, ValueError, ValueModel,
};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no training tasks survive filtering")]
    NoTasks,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error(transparent)]
    Predictor(#[from] crate::predictor::PredictorError),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: u32 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingTask {
    pub obligation: Obligation,
    pub demo_script: ProofScript,
    pub demo_length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchMix {
    pub replay: f64,
    pub true_target: f64,
    pub negative: f64,
}

impl Default for BatchMix {
    fn default() -> Self {
        BatchMix {
            replay: 0.5,
            true_target: 0.25,
            negative: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub width: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Episodes over which epsilon decays; `None` means half of all episodes.
    pub epsilon_decay_episodes: Option<usize>,
    pub episodes_per_prefix: usize,
    pub rl_epochs: usize,
    pub episode_budget: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub batch_mix: BatchMix,
    pub updates_per_episode: usize,
    pub learning_rate: f64,
    pub sync_interval: usize,
    pub actors: usize,
    pub seed: u64,
    /// Tasks with demonstrations this short or shorter are dropped.
    pub drop_at_most: usize,
    /// Tasks with demonstrations this long or longer are dropped.
    pub drop_at_least: usize,
    /// Off: train only on whole theorems, with no length filter.
    pub obligation_training: bool,
    /// Greedy searches per epoch on a falsified variant of each training
    /// theorem; the dead ends they hit go to the negative buffer.
    pub conjecture_probes: usize,
    pub hidden: usize,
    pub encoder: Encoder,
    pub pretrain: PretrainConfig,
    pub predictor: PredictorTraining,
    pub validation_size: usize,
    pub validation_budget: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            gamma: 0.9,
            width: 5,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_decay_episodes: None,
            episodes_per_prefix: 2,
            rl_epochs: 10,
            episode_budget: 20,
            replay_capacity: 10_000,
            batch_size: 32,
            batch_mix: BatchMix::default(),
            updates_per_episode: 4,
            learning_rate: 0.003,
            sync_interval: 8,
            actors: 1,
            seed: 0,
            drop_at_most: 2,
            drop_at_least: 6,
            obligation_training: true,
            conjecture_probes: 1,
            hidden: crate::value::DEFAULT_HIDDEN,
            encoder: Encoder::default(),
            pretrain: PretrainConfig::default(),
            predictor: PredictorTraining::default(),
            validation_size: 64,
            validation_budget: 64,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie strictly between 0 and 1");
        }
        if self.width == 0 {
            return bad("width must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon must lie in [0, 1]");
        }
        let m = self.batch_mix;
        if m.replay < 0.0 || m.true_target < 0.0 || m.negative < 0.0 || m.replay + m.true_target + m.negative <= 0.0 {
            return bad("batch mix ratios must be nonnegative and not all zero");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.actors == 0 {
            return bad("actor count must be at least 1");
        }
        if self.sync_interval == 0 {
            return bad("sync interval must be at least 1");
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return bad("learning rate must be nonnegative");
        }
        if self.hidden == 0 {
            return bad("hidden width must be at least 1");
        }
        Ok(())
    }

    fn epsilon(&self, episode: usize, total: usize) -> f64 {
        let decay = self.epsilon_decay_episodes.unwrap_or(total / 2);
        if decay == 0 || episode >= decay {
            return self.epsilon_end;
        }
        let frac = episode as f64 / decay as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaskStats {
    pub extracted: usize,
    pub retained: usize,
    /// Each count includes every task failing that filter.
    pub dropped_unreproducible: usize,
    pub dropped_short: usize,
    pub dropped_long: usize,
}

/// All sub-proof tasks of `entries`, parent before children.
pub fn subproof_tasks(entries: &[CorpusEntry]) -> Vec<TrainingTask> {
    let mut out = Vec::new();
    for e in entries {
        for t in extract_subproof_tasks(&e.theorem, &e.proof).expect("corpus proofs are valid") {
            out.push(TrainingTask {
                demo_length: t.script.len(),
                obligation: t.obligation,
                demo_script: t.script,
            });
        }
    }
    out
}

/// Keeps the sub-proof tasks whose every demonstration step is among the
/// predictor's top-`width`, with length strictly between the bounds.
pub fn prepare_tasks(
    split: &CorpusSplit,
    predictor: &Predictor,
    width: usize,
    drop_at_most: usize,
    drop_at_least: usize,
) -> (Vec<TrainingTask>, TaskStats) {
    filter_tasks(subproof_tasks(&split.train), predictor, width, drop_at_most, drop_at_least)
}

pub fn filter_tasks(
    tasks: Vec<TrainingTask>,
    predictor: &Predictor,
    width: usize,
    drop_at_most: usize,
    drop_at_least: usize,
) -> (Vec<TrainingTask>, TaskStats) {
    let mut stats = TaskStats {
        extracted: tasks.len(),
        ..TaskStats::default()
    };
    let mut kept = Vec::new();
    for t in tasks {
        let sub = crate::env::SubproofTask {
            obligation: t.obligation.clone(),
            script: t.demo_script.clone(),
        };
        let reproducible = reproducible_under_predictor(&sub, predictor, width).expect("valid demo");
        let short = t.demo_length <= drop_at_most;
        let long = t.demo_length >= drop_at_least;
        stats.dropped_unreproducible += usize::from(!reproducible);
        stats.dropped_short += usize::from(short);
        stats.dropped_long += usize::from(long);
        if reproducible && !short && !long {
            kept.push(t);
        }
    }
    stats.retained = kept.len();
    (kept, stats)
}

/// `L-1, L-2, ..., 0`.
pub fn demonstration_schedule(task: &TrainingTask) -> Vec<usize> {
    (0..task.demo_length.max(1)).rev().collect()
}

/// The statement with one extra `Succ` on its right-hand side, which makes
/// any true equation false.
pub fn falsify(statement: &Obligation) -> Obligation {
    falsify_by(statement, 1, false)
}

/// Wraps one side of a true equation in `extra` more `Succ`s.
pub fn falsify_by(statement: &Obligation, extra: usize, on_left: bool) -> Obligation {
    let goal = statement.goal();
    let (lhs, rhs) = if on_left {
        (Term::succ_n(extra, goal.lhs.clone()), goal.rhs.clone())
    } else {
        (goal.lhs.clone(), Term::succ_n(extra, goal.rhs.clone()))
    };
    Obligation::new(
        statement.binders().to_vec(),
        statement.context().to_vec(),
        crate::env::Equation::new(lhs, rhs),
    )
    .expect("same variables as a well-formed obligation")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub transitions: Vec<Transition>,
    pub script: ProofScript,
    pub proved: bool,
    /// Minimum steps for every obligation the episode fully discharged.
    pub discharged: Vec<(Obligation, usize)>,
    /// Dead ends met by a training-time search.
    pub dead_ends: Vec<Obligation>,
}

/// One episode from `start`: the first `prefix` demonstration tactics are
/// replayed, then tactics are chosen epsilon-greedily among the top-`width`
/// that apply.
pub fn run_episode_from(
    start: &Obligation,
    demo: &ProofScript,
    prefix: usize,
    model: &dyn ObligationValue,
    predictor: &Predictor,
    width: usize,
    epsilon: f64,
    budget: usize,
    rng: &mut impl Rng,
) -> EpisodeOutcome {
    let mut state = Hyperstate::single(start.clone());
    let mut script = ProofScript::default();
    let mut transitions = Vec::new();
    for t in &demo.steps()[..prefix.min(demo.len())] {
        let focus = state.first().expect("demonstration is valid").clone();
        let produced = crate::env::apply_tactic(&focus, t).expect("demonstration is valid");
        let mut obs = produced.clone();
        obs.extend(state.obligations()[1..].iter().cloned());
        transitions.push(Transition::step(focus, t.clone(), produced));
        script.push(t.clone());
        state = Hyperstate::new(obs);
    }
    let mut acted = 0;
    while !state.is_empty() && acted < budget {
        let focus = state.first().expect("nonempty").clone();
        let exp = expand_state(&state, predictor, width);
        if exp.dead_end {
            transitions.push(Transition::dead_end(focus));
            break;
        }
        let values: Vec<f64> = exp.children.iter().map(|c| hyperstate_value(model, &c.hyperstate)).collect();
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = i;
            }
        }
        let pick = if exp.children.len() > 1 && rng.gen::<f64>() < epsilon {
            let k = rng.gen_range(0..exp.children.len() - 1);
            if k >= best {
                k + 1
            } else {
                k
            }
        } else {
            best
        };
        let child = &exp.children[pick];
        let produced_len = child.hyperstate.len() + 1 - state.len();
        transitions.push(Transition::step(
            focus,
            child.tactic.clone(),
            child.hyperstate.obligations()[..produced_len].to_vec(),
        ));
        script.push(child.tactic.clone());
        state = child.hyperstate.clone();
        acted += 1;
    }
    let proved = state.is_empty();
    let discharged = if proved {
        extract_subproof_tasks(&Theorem::new("episode", start.clone()), &script)
            .expect("episode script replays")
            .into_iter()
            .map(|t| (t.obligation, t.script.len()))
            .collect()
    } else {
        Vec::new()
    };
    EpisodeOutcome {
        transitions,
        script,
        proved,
        discharged,
        dead_ends: Vec::new(),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    task: &TrainingTask,
    model: &dyn ObligationValue,
    predictor: &Predictor,
    cfg: &TrainerConfig,
    prefix: usize,
    epsilon: f64,
    rng: &mut impl Rng,
) -> EpisodeOutcome {
    run_episode_from(
        &task.obligation,
        &task.demo_script,
        prefix,
        model,
        predictor,
        cfg.width,
        epsilon,
        cfg.episode_budget,
        rng,
    )
}

/// A unit of actor work.
#[derive(Debug, Clone, PartialEq, Eq)]
enum WorkItem {
    Demo { task: usize, prefix: usize },
    Conjecture { index: usize },
}

fn work_schedule(tasks: &[TrainingTask], conjectures: usize, cfg: &TrainerConfig, rng: &mut ChaCha8Rng) -> Vec<WorkItem> {
    let mut items = Vec::new();
    for _ in 0..cfg.rl_epochs {
        let mut order: Vec<usize> = (0..tasks.len()).collect();
        order.shuffle(rng);
        let mut epoch = Vec::new();
        for &t in &order {
            for prefix in demonstration_schedule(&tasks[t]) {
                for _ in 0..cfg.episodes_per_prefix {
                    epoch.push(WorkItem::Demo { task: t, prefix });
                }
            }
        }
        for index in 0..conjectures {
            for _ in 0..cfg.conjecture_probes {
                epoch.push(WorkItem::Conjecture { index });
            }
        }
        // Keep each task's curriculum order; interleave conjectures evenly.
        let (demo, conj): (Vec<WorkItem>, Vec<WorkItem>) =
            epoch.into_iter().partition(|w| matches!(w, WorkItem::Demo { .. }));
        items.extend(interleave(demo, conj));
    }
    items
}

fn interleave(a: Vec<WorkItem>, b: Vec<WorkItem>) -> Vec<WorkItem> {
    if b.is_empty() {
        return a;
    }
    let total = a.len() + b.len();
    let mut out = Vec::with_capacity(total);
    let (mut ia, mut ib) = (a.into_iter(), b.into_iter());
    let (na, nb) = (ia.len(), ib.len());
    let (mut ta, mut tb) = (0usize, 0usize);
    for _ in 0..total {
        // Take from whichever stream is further behind its share.
        if tb * na < ta * nb || ta == na {
            if let Some(x) = ib.next() {
                out.push(x);
                tb += 1;
                continue;
            }
        }
        if let Some(x) = ia.next() {
            out.push(x);
            ta += 1;
        } else if let Some(x) = ib.next() {
            out.push(x);
            tb += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferStats {
    pub replay: usize,
    pub true_target: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub epoch: usize,
    pub greedy_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub actors: usize,
    pub tasks: TaskStats,
    pub pretrain_tasks: usize,
    pub pretrain_loss: Vec<f64>,
    /// Mean update loss per RL epoch.
    pub loss_curve: Vec<f64>,
    pub episodes: usize,
    pub episodes_proved: usize,
    pub true_target_improvements: usize,
    pub buffers: BufferStats,
    pub validation: Vec<ValidationPoint>,
    pub snapshots_published: usize,
    pub actor_failures: usize,
}

/// The learner: sole owner of the parameters and all three buffers.
pub struct Learner {
    pub model: ValueModel,
    optimizer: Optimizer,
    pub replay: ReplayBuffer,
    pub true_targets: TrueTargetBuffer,
    pub negatives: NegativeBuffer,
    rng: ChaCha8Rng,
    encodings: HashMap<Obligation, Vec<f64>>,
    pub updates: usize,
    pub improvements: usize,
    epoch_losses: Vec<f64>,
}

impl Learner {
    pub fn new(model: ValueModel, cfg: &TrainerConfig) -> Self {
        let n = model.num_params();
        Learner {
            model,
            optimizer: Optimizer::adam(n),
            replay: ReplayBuffer::new(cfg.replay_capacity),
            true_targets: TrueTargetBuffer::new(),
            negatives: NegativeBuffer::new(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x1ea7_e5),
            encodings: HashMap::new(),
            updates: 0,
            improvements: 0,
            epoch_losses: Vec::new(),
        }
    }

    /// Every transition goes to the replay buffer; dead ends also mark
    /// their source negative, as do dead ends met by probes; fully
    /// discharged obligations update the true-target buffer by the min rule.
    pub fn ingest(&mut self, outcome: &EpisodeOutcome) {
        for t in &outcome.transitions {
            if t.dead_end {
                self.negatives.insert(t.source.clone());
            }
            self.replay.push(t.clone());
        }
        for ob in &outcome.dead_ends {
            self.negatives.insert(ob.clone());
        }
        for (ob, len) in &outcome.discharged {
            if self.true_targets.update(ob, *len) {
                self.improvements += 1;
            }
        }
    }

    fn encode(&mut self, ob: &Obligation) -> Vec<f64> {
        if let Some(x) = self.encodings.get(ob) {
            return x.clone();
        }
        let x = self.model.encode(ob);
        self.encodings.insert(ob.clone(), x.clone());
        x
    }

    /// Batch shares by the configured mix; shares of empty buffers go to
    /// the others in proportion.
    fn shares(&self, cfg: &TrainerConfig) -> [usize; 3] {
        let m = cfg.batch_mix;
        let avail = [!self.replay.is_empty(), !self.true_targets.is_empty(), !self.negatives.is_empty()];
        let w = [m.replay, m.true_target, m.negative];
        let total: f64 = (0..3).filter(|&i| avail[i]).map(|i| w[i]).sum();
        if total <= 0.0 {
            return [0; 3];
        }
        let mut out = [0usize; 3];
        let mut assigned = 0;
        for i in 0..3 {
            if avail[i] {
                out[i] = (cfg.batch_size as f64 * w[i] / total).floor() as usize;
                assigned += out[i];
            }
        }
        // Remainder to the first available buffer with weight.
        if let Some(i) = (0..3).find(|&i| avail[i] && w[i] > 0.0) {
            out[i] += cfg.batch_size - assigned;
        }
        out
    }

    /// One learner step. Returns the pre-step loss, or `None` when all
    /// buffers are empty.
    pub fn update(&mut self, predictor: &Predictor, cfg: &TrainerConfig) -> Option<f64> {
        let [nr, nt, nn] = self.shares(cfg);
        let mut targets: Vec<(Obligation, f64)> = Vec::with_capacity(cfg.batch_size);
        let replay: Vec<Obligation> = self.replay.sample(&mut self.rng, nr).into_iter().map(|t| t.source.clone()).collect();
        for ob in replay {
            let t = bellman_target(&ob, &self.model, predictor, cfg.width);
            targets.push((ob, t));
        }
        let gamma = cfg.gamma;
        for (ob, len) in self.true_targets.sample(&mut self.rng, nt) {
            targets.push((ob.clone(), gamma.powi(*len as i32)));
        }
        for ob in self.negatives.sample(&mut self.rng, nn) {
            targets.push((ob.clone(), 0.0));
        }
        if targets.is_empty() {
            return None;
        }
        let batch: Vec<(Vec<f64>, f64)> = targets.iter().map(|(ob, t)| (self.encode(ob), *t)).collect();
        let loss = self
            .model
            .update_encoded(&mut self.optimizer, &batch, cfg.learning_rate)
            .expect("nonempty batch with targets in [0, 1]");
        self.updates += 1;
        self.epoch_losses.push(loss);
        Some(loss)
    }

    fn close_epoch(&mut self) -> f64 {
        let n = self.epoch_losses.len();
        let mean = if n == 0 { 0.0 } else { self.epoch_losses.iter().sum::<f64>() / n as f64 };
        self.epoch_losses.clear();
        mean
    }

    fn buffer_stats(&self) -> BufferStats {
        BufferStats {
            replay: self.replay.len(),
            true_target: self.true_targets.len(),
            negative: self.negatives.len(),
        }
    }
}

/// Greedy value-search success over single obligations.
pub fn greedy_success(model: &ValueModel, predictor: &Predictor, obs: &[Obligation], width: usize, budget: usize) -> f64 {
    if obs.is_empty() {
        return 0.0;
    }
    let cfg = SearchConfig {
        width,
        budget,
        ..SearchConfig::default()
    };
    let proved = obs
        .iter()
        .filter(|ob| greedy_search(&Theorem::new("v", (*ob).clone()), GreedyPolicy::Value(model), predictor, &cfg).proved())
        .count();
    proved as f64 / obs.len() as f64
}

struct Prepared {
    tasks: Vec<TrainingTask>,
    stats: TaskStats,
    all_tasks: Vec<TrainingTask>,
    conjectures: Vec<Obligation>,
    validation: Vec<Obligation>,
}

fn prepare(split: &CorpusSplit, predictor: &Predictor, cfg: &TrainerConfig) -> Result<Prepared, TrainError> {
    cfg.validate()?;
    let all_tasks = subproof_tasks(&split.train);
    let (tasks, stats) = if cfg.obligation_training {
        filter_tasks(all_tasks.clone(), predictor, cfg.width, cfg.drop_at_most, cfg.drop_at_least)
    } else {
        let whole: Vec<TrainingTask> = split
            .train
            .iter()
            .map(|e| TrainingTask {
                obligation: e.theorem.statement.clone(),
                demo_script: e.proof.clone(),
                demo_length: e.proof_length,
            })
            .collect();
        filter_tasks(whole, predictor, cfg.width, 0, usize::MAX)
    };
    if tasks.is_empty() {
        return Err(TrainError::NoTasks);
    }
    let conjectures = if cfg.conjecture_probes > 0 {
        split
            .train
            .iter()
            .enumerate()
            .map(|(i, e)| falsify_by(&e.theorem.statement, 1 + i % 2, (i / 2) % 2 == 1))
            .collect()
    } else {
        Vec::new()
    };
    let mut validation: Vec<Obligation> = all_tasks.iter().map(|t| t.obligation.clone()).collect();
    validation.dedup();
    validation.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa11d));
    validation.truncate(cfg.validation_size);
    Ok(Prepared {
        tasks,
        stats,
        all_tasks,
        conjectures,
        validation,
    })
}

fn pretrained_model(p: &Prepared, cfg: &TrainerConfig) -> Result<(ValueModel, Vec<f64>), TrainError> {
    let mut model = ValueModel::new(cfg.encoder.clone(), cfg.gamma, cfg.hidden, cfg.seed)?;
    let pretrain_tasks: Vec<(Obligation, usize)> = if cfg.obligation_training {
        p.all_tasks.iter().map(|t| (t.obligation.clone(), t.demo_length)).collect()
    } else {
        p.tasks.iter().map(|t| (t.obligation.clone(), t.demo_length)).collect()
    };
    let pcfg = PretrainConfig {
        seed: cfg.seed,
        ..cfg.pretrain
    };
    let curve = model.pretrain(&pretrain_tasks, &pcfg)?;
    Ok((model, curve))
}

fn seed_true_targets(learner: &mut Learner, p: &Prepared, cfg: &TrainerConfig) {
    let source = if cfg.obligation_training { &p.all_tasks } else { &p.tasks };
    for t in source {
        learner.true_targets.update(&t.obligation, t.demo_length);
    }
}

fn item_episode(
    item: &WorkItem,
    p: &Prepared,
    model: &ValueModel,
    predictor: &Predictor,
    cfg: &TrainerConfig,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> EpisodeOutcome {
    match *item {
        WorkItem::Demo { task, prefix } => run_episode(&p.tasks[task], model, predictor, cfg, prefix, epsilon, rng),
        WorkItem::Conjecture { index } => {
            let search = SearchConfig {
                width: cfg.width,
                budget: cfg.episode_budget,
                ..SearchConfig::default()
            };
            let thm = Theorem::new("conjecture", p.conjectures[index].clone());
            let r = greedy_search(&thm, GreedyPolicy::Value(model), predictor, &search);
            EpisodeOutcome {
                transitions: Vec::new(),
                script: r.script.clone().unwrap_or_default(),
                proved: false,
                discharged: Vec::new(),
                dead_ends: r.dead_ends,
            }
        }
    }
}

/// Single-actor training. Bit-reproducible for a fixed configuration.
pub fn train(
    split: &CorpusSplit,
    predictor: &Predictor,
    cfg: &TrainerConfig,
) -> Result<(ValueModel, TrainingReport), TrainError> {
    if cfg.actors > 1 {
        return distributed_run(split, predictor, cfg, &DistributedOptions::default());
    }
    let p = prepare(split, predictor, cfg)?;
    let (model, pretrain_loss) = pretrained_model(&p, cfg)?;
    let mut learner = Learner::new(model, cfg);
    seed_true_targets(&mut learner, &p, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let per_epoch = work_schedule(&p.tasks, p.conjectures.len(), &TrainerConfig { rl_epochs: 1, ..cfg.clone() }, &mut rng.clone()).len();
    let items = work_schedule(&p.tasks, p.conjectures.len(), cfg, &mut rng);
    let total = items.len();
    let mut report = empty_report(cfg, &p, pretrain_loss);
    for (k, item) in items.iter().enumerate() {
        let eps = cfg.epsilon(k, total);
        let outcome = item_episode(item, &p, &learner.model, predictor, cfg, eps, &mut rng);
        report.episodes += 1;
        report.episodes_proved += usize::from(outcome.proved);
        learner.ingest(&outcome);
        for _ in 0..cfg.updates_per_episode {
            learner.update(predictor, cfg);
        }
        if per_epoch > 0 && (k + 1) % per_epoch == 0 {
            close_epoch(&mut learner, &mut report, &p, predictor, cfg);
        }
    }
    finish_report(&mut report, &learner);
    Ok((learner.model, report))
}

fn empty_report(cfg: &TrainerConfig, p: &Prepared, pretrain_loss: Vec<f64>) -> TrainingReport {
    TrainingReport {
        actors: cfg.actors,
        tasks: p.stats,
        pretrain_tasks: if cfg.obligation_training { p.all_tasks.len() } else { p.tasks.len() },
        pretrain_loss,
        loss_curve: Vec::new(),
        episodes: 0,
        episodes_proved: 0,
        true_target_improvements: 0,
        buffers: BufferStats {
            replay: 0,
            true_target: 0,
            negative: 0,
        },
        validation: Vec::new(),
        snapshots_published: 0,
        actor_failures: 0,
    }
}

fn close_epoch(learner: &mut Learner, report: &mut TrainingReport, p: &Prepared, predictor: &Predictor, cfg: &TrainerConfig) {
    let loss = learner.close_epoch();
    report.loss_curve.push(loss);
    let success = greedy_success(&learner.model, predictor, &p.validation, cfg.width, cfg.validation_budget);
    report.validation.push(ValidationPoint {
        epoch: report.validation.len(),
        greedy_success: success,
    });
}

fn finish_report(report: &mut TrainingReport, learner: &Learner) {
    report.buffers = learner.buffer_stats();
    report.true_target_improvements = learner.improvements;
}

/// Test hooks for the distributed loop.
#[derive(Debug, Clone, Default)]
pub struct DistributedOptions {
    /// `(actor, after_episodes)`: that actor panics once after finishing
    /// the given number of episodes.
    pub fail_actor: Option<(usize, usize)>,
}

enum ActorMsg {
    Episode(Box<EpisodeOutcome>),
    Done { actor: usize },
    Failed { actor: usize, remaining: Vec<usize> },
}

/// One learner thread (the caller) and `cfg.actors` actor threads. Actors
/// run episodes on disjoint partitions of the work against immutable
/// parameter snapshots and stream outcomes back over a channel; the
/// learner publishes a fresh snapshot every `sync_interval` updates.
pub fn distributed_run(
    split: &CorpusSplit,
    predictor: &Predictor,
    cfg: &TrainerConfig,
    opts: &DistributedOptions,
) -> Result<(ValueModel, TrainingReport), TrainError> {
    if cfg.actors < 2 {
        return Err(TrainError::Config("distributed training needs at least 2 actors".into()));
    }
    let p = Arc::new(prepare(split, predictor, cfg)?);
    let (model, pretrain_loss) = pretrained_model(&p, cfg)?;
    let mut learner = Learner::new(model, cfg);
    seed_true_targets(&mut learner, &p, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let items = Arc::new(work_schedule(&p.tasks, p.conjectures.len(), cfg, &mut rng));
    let total = items.len();
    let per_epoch = total / cfg.rl_epochs.max(1);
    let mut report = empty_report(cfg, &p, pretrain_loss);
    let predictor = Arc::new(predictor.clone());
    let cfg_arc = Arc::new(cfg.clone());

    let (to_learner, from_actors) = mpsc::channel::<ActorMsg>();
    let mut snapshot_txs: Vec<Option<mpsc::Sender<Arc<ValueModel>>>> = Vec::new();
    let mut handles = Vec::new();
    let snapshot = Arc::new(learner.model.clone());
    let spawn = |id: usize,
                 work: Vec<usize>,
                 fail_after: Option<usize>,
                 snapshot: Arc<ValueModel>,
                 handles: &mut Vec<thread::JoinHandle<()>>|
     -> mpsc::Sender<Arc<ValueModel>> {
        let (tx, rx) = mpsc::channel::<Arc<ValueModel>>();
        let out = to_learner.clone();
        let (p, items, predictor, cfg) = (Arc::clone(&p), Arc::clone(&items), Arc::clone(&predictor), Arc::clone(&cfg_arc));
        handles.push(thread::spawn(move || {
            actor_loop(id, work, fail_after, snapshot, rx, out, &p, &items, &predictor, &cfg);
        }));
        tx
    };
    let mut live = 0;
    for a in 0..cfg.actors {
        let work: Vec<usize> = (a..total).step_by(cfg.actors).collect();
        let fail_after = opts.fail_actor.and_then(|(id, n)| (id == a).then_some(n));
        snapshot_txs.push(Some(spawn(a, work, fail_after, Arc::clone(&snapshot), &mut handles)));
        live += 1;
    }
    let mut done_items = 0;
    while live > 0 {
        let msg = from_actors.recv().expect("actors hold a sender while live");
        match msg {
            ActorMsg::Episode(outcome) => {
                report.episodes += 1;
                report.episodes_proved += usize::from(outcome.proved);
                learner.ingest(&outcome);
                for _ in 0..cfg.updates_per_episode {
                    if learner.update(&predictor, cfg).is_some() && learner.updates % cfg.sync_interval == 0 {
                        let snap = Arc::new(learner.model.clone());
                        for tx in snapshot_txs.iter().flatten() {
                            let _ = tx.send(Arc::clone(&snap));
                        }
                        report.snapshots_published += 1;
                    }
                }
                done_items += 1;
                if per_epoch > 0 && done_items % per_epoch == 0 {
                    close_epoch(&mut learner, &mut report, &p, &predictor, cfg);
                }
            }
            ActorMsg::Done { actor } => {
                snapshot_txs[actor] = None;
                live -= 1;
            }
            ActorMsg::Failed { actor, remaining } => {
                log::warn!("actor {actor} failed; redistributing {} work items", remaining.len());
                report.actor_failures += 1;
                snapshot_txs[actor] = None;
                let id = snapshot_txs.len();
                let snap = Arc::new(learner.model.clone());
                snapshot_txs.push(Some(spawn(id, remaining, None, snap, &mut handles)));
            }
        }
    }
    drop(snapshot_txs);
    for h in handles {
        let _ = h.join();
    }
    if report.loss_curve.len() < cfg.rl_epochs && total > 0 {
        close_epoch(&mut learner, &mut report, &p, &predictor, cfg);
    }
    finish_report(&mut report, &learner);
    Ok((learner.model, report))
}

#[allow(clippy::too_many_arguments)]
fn actor_loop(
    id: usize,
    work: Vec<usize>,
    fail_after: Option<usize>,
    mut snapshot: Arc<ValueModel>,
    snapshots: mpsc::Receiver<Arc<ValueModel>>,
    out: mpsc::Sender<ActorMsg>,
    p: &Prepared,
    items: &[WorkItem],
    predictor: &Predictor,
    cfg: &TrainerConfig,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(id as u64 + 1)));
    let total = items.len();
    let run = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        for (done, &k) in work.iter().enumerate() {
            while let Ok(s) = snapshots.try_recv() {
                snapshot = s;
            }
            if fail_after == Some(done) {
                panic!("injected failure in actor {id}");
            }
            let eps = cfg.epsilon(k, total);
            let outcome = item_episode(&items[k], p, &snapshot, predictor, cfg, eps, &mut rng);
            let _ = out.send(ActorMsg::Episode(Box::new(outcome)));
        }
    }));
    match run {
        Ok(()) => {
            let _ = out.send(ActorMsg::Done { actor: id });
        }
        Err(_) => {
            let done = fail_after.unwrap_or(work.len()).min(work.len());
            let _ = out.send(ActorMsg::Failed {
                actor: id,
                remaining: work[done..].to_vec(),
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub seed: u64,
    pub test_ratio: f64,
}

/// Everything `prove` and `eval` need, with the configuration that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: TrainerConfig,
    /// How the training corpus was split, when known.
    #[serde(default)]
    pub split: Option<SplitParams>,
    pub predictor: PredictorCheckpoint,
    pub value: ValueModel,
}

impl Checkpoint {
    pub fn new(config: TrainerConfig, predictor: &Predictor, value: ValueModel) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config,
            split: None,
            predictor: PredictorCheckpoint::from(predictor),
            value,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(TrainError::Version {
                expected: CHECKPOINT_VERSION,
                found: ck.version,
            });
        }
        ck.predictor.clone().into_predictor()?;
        ck.value.validate()?;
        Ok(ck)
    }

    pub fn predictor(&self) -> Predictor {
        self.predictor.clone().into_predictor().expect("validated on load")
    }
}

/// Predictor training on the split's demonstrations.
pub fn fit_predictor(split: &CorpusSplit, cfg: &TrainerConfig) -> Result<Predictor, TrainError> {
    let pairs = demonstration_pairs(&split.train);
    let pcfg = PredictorTraining {
        seed: cfg.seed,
        ..cfg.predictor
    };
    Ok(train_predictor(&pairs, &pcfg)?.0)
}

/// Predictor, pretraining and RL in one go.
pub fn train_system(split: &CorpusSplit, cfg: &TrainerConfig) -> Result<(Checkpoint, TrainingReport), TrainError> {
    cfg.validate()?;
    let predictor = fit_predictor(split, cfg)?;
    let (value, report) = train(split, &predictor, cfg)?;
    Ok((Checkpoint::new(cfg.clone(), &predictor, value), report))
}

/// Predictor and pretraining only.
pub fn pretrain_system(split: &CorpusSplit, cfg: &TrainerConfig) -> Result<(Checkpoint, TrainingReport), TrainError> {
    train_system(
        split,
        &TrainerConfig {
            rl_epochs: 0,
            actors: 1,
            ..cfg.clone()
        },
    )
}

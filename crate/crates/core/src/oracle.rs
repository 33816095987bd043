//! Brute-force ground truth: breadth-first shortest proofs over hyperstates.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::env::{
    apply_tactic, candidate_tactics, replay_from, Hyperstate, InvalidScript, Obligation,
    ProofScript, SubproofTask, Tactic,
};
use crate::predictor::Predictor;
use crate::value::ObligationValue;

pub const DEFAULT_CORPUS_DEPTH: usize = 10;
pub const DEFAULT_VALUE_DEPTH: usize = 8;

/// Which tactics a search may try at an obligation.
pub trait ActionSource {
    fn actions(&self, ob: &Obligation) -> Vec<Tactic>;
}

/// Every template with every legal argument.
#[derive(Debug, Clone, Copy, Default)]
pub struct AllTactics;

impl ActionSource for AllTactics {
    fn actions(&self, ob: &Obligation) -> Vec<Tactic> {
        candidate_tactics(ob)
    }
}

/// The predictor's top-`width` resolved tactics.
#[derive(Debug, Clone, Copy)]
pub struct TopN<'a> {
    pub predictor: &'a Predictor,
    pub width: usize,
}

impl ActionSource for TopN<'_> {
    fn actions(&self, ob: &Obligation) -> Vec<Tactic> {
        self.predictor
            .predict_top_n(ob, self.width)
            .into_iter()
            .map(|p| p.tactic)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub provable: bool,
    pub shortest_script: Option<ProofScript>,
    pub shortest_length: Option<usize>,
    /// Set when the search stopped at `max_depth` with states left unexplored.
    pub depth_limited: bool,
    pub states_visited: usize,
}

pub fn shortest_proof(start: &Hyperstate, max_depth: usize) -> OracleResult {
    shortest_proof_with(start, max_depth, &AllTactics)
}

/// Breadth-first search over hyperstates, deduplicated by multiset key.
pub fn shortest_proof_with(
    start: &Hyperstate,
    max_depth: usize,
    actions: &dyn ActionSource,
) -> OracleResult {
    if start.is_empty() {
        return OracleResult {
            provable: true,
            shortest_script: Some(ProofScript::default()),
            shortest_length: Some(0),
            depth_limited: false,
            states_visited: 1,
        };
    }
    // (state, parent index, tactic that produced it)
    let mut nodes: Vec<(Hyperstate, usize, Option<Tactic>)> = vec![(start.clone(), 0, None)];
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(start.key());
    let mut frontier: VecDeque<usize> = VecDeque::from([0]);
    for _depth in 0..max_depth {
        let mut next = VecDeque::new();
        while let Some(idx) = frontier.pop_front() {
            let state = nodes[idx].0.clone();
            let first = state.first().expect("only nonempty states are queued");
            for t in actions.actions(first) {
                let Ok(produced) = apply_tactic(first, &t) else {
                    continue;
                };
                let child = splice(&state, produced);
                if child.is_empty() {
                    let mut steps = vec![t];
                    let mut cur = idx;
                    while let Some(t) = &nodes[cur].2 {
                        steps.push(t.clone());
                        cur = nodes[cur].1;
                    }
                    steps.reverse();
                    let len = steps.len();
                    return OracleResult {
                        provable: true,
                        shortest_script: Some(ProofScript::new(steps)),
                        shortest_length: Some(len),
                        depth_limited: false,
                        states_visited: seen.len(),
                    };
                }
                if seen.insert(child.key()) {
                    nodes.push((child, idx, Some(t)));
                    next.push_back(nodes.len() - 1);
                }
            }
        }
        if next.is_empty() {
            return not_provable(false, seen.len());
        }
        frontier = next;
    }
    not_provable(true, seen.len())
}

fn splice(state: &Hyperstate, produced: Vec<Obligation>) -> Hyperstate {
    let mut obs = produced;
    obs.extend(state.obligations().iter().skip(1).cloned());
    Hyperstate::new(obs)
}

fn not_provable(depth_limited: bool, states_visited: usize) -> OracleResult {
    OracleResult {
        provable: false,
        shortest_script: None,
        shortest_length: None,
        depth_limited,
        states_visited,
    }
}

/// `gamma^shortest` for a provable obligation, else 0.
pub fn optimal_value(ob: &Obligation, gamma: f64, max_depth: usize) -> f64 {
    value_from(
        &shortest_proof(&Hyperstate::single(ob.clone()), max_depth),
        gamma,
    )
}

fn value_from(r: &OracleResult, gamma: f64) -> f64 {
    r.shortest_length.map_or(0.0, |l| gamma.powi(l as i32))
}

/// Optimal values under a fixed action source, memoized per obligation.
pub struct OracleValue<'a> {
    actions: &'a dyn ActionSource,
    gamma: f64,
    max_depth: usize,
    memo: RefCell<HashMap<Obligation, Option<usize>>>,
}

impl<'a> OracleValue<'a> {
    pub fn new(actions: &'a dyn ActionSource, gamma: f64, max_depth: usize) -> Self {
        OracleValue {
            actions,
            gamma,
            max_depth,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn shortest_length(&self, ob: &Obligation) -> Option<usize> {
        if let Some(hit) = self.memo.borrow().get(ob) {
            return *hit;
        }
        let r = shortest_proof_with(&Hyperstate::single(ob.clone()), self.max_depth, self.actions);
        self.memo
            .borrow_mut()
            .insert(ob.clone(), r.shortest_length);
        r.shortest_length
    }
}

impl ObligationValue for OracleValue<'_> {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn value(&self, ob: &Obligation) -> f64 {
        self.shortest_length(ob)
            .map_or(0.0, |l| self.gamma.powi(l as i32))
    }
}

/// Whether every demonstration step is among the predictor's top-`width`
/// tactics at the state where it is played.
pub fn reproducible_under_predictor(
    task: &SubproofTask,
    predictor: &Predictor,
    width: usize,
) -> Result<bool, InvalidScript> {
    let trace = replay_from(&Hyperstate::single(task.obligation.clone()), &task.script)?;
    if !trace.is_valid() {
        return Err(InvalidScript::Unfinished(trace.final_state().len()));
    }
    Ok(trace.steps.iter().all(|s| {
        let focus = s.before.first().expect("replayed step has a focus");
        predictor
            .predict_top_n(focus, width)
            .iter()
            .any(|p| p.tactic == s.tactic)
    }))
}

//! Proof search over hyperstates: A*, best-first, weighted depth-first and
//! greedy, all restricted to the predictor's top-`width` tactics.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{apply_tactic, Hyperstate, Obligation, ProofScript, Tactic, TacticError, Theorem};
use crate::predictor::Predictor;
use crate::value::{hyperstate_value, steps_estimate, ObligationValue};

pub const DEFAULT_BUDGET: usize = 512;
pub const DEFAULT_WIDTH: usize = 5;
pub const DEFAULT_DFS_DEPTH: usize = 10;
pub const SAFETY_DEPTH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Proved,
    Exhausted,
    BudgetExceeded,
}

impl std::fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SearchStatus::Proved => "proved",
            SearchStatus::Exhausted => "exhausted",
            SearchStatus::BudgetExceeded => "budget_exceeded",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub status: SearchStatus,
    #[serde(rename = "proof")]
    pub script: Option<ProofScript>,
    pub proof_length: Option<usize>,
    pub nodes_expanded: usize,
    pub tactic_executions: usize,
    pub wall_ms: f64,
    /// Obligations where every top-n tactic errored.
    #[serde(skip)]
    pub dead_ends: Vec<Obligation>,
}

impl SearchResult {
    pub fn proved(&self) -> bool {
        self.status == SearchStatus::Proved
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub width: usize,
    pub budget: usize,
    pub depth_limit: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            width: DEFAULT_WIDTH,
            budget: DEFAULT_BUDGET,
            depth_limit: SAFETY_DEPTH,
        }
    }
}

impl SearchConfig {
    pub fn dfs() -> Self {
        SearchConfig {
            depth_limit: DEFAULT_DFS_DEPTH,
            ..Self::default()
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("the probability-product scorer has no steps interpretation and cannot drive A*")]
    NotStepsConvertible,
}

/// How frontier nodes are scored.
#[derive(Clone, Copy)]
pub enum Scorer<'a> {
    ValueModel(&'a dyn ObligationValue),
    ProbabilityProduct,
}

impl std::fmt::Debug for Scorer<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scorer::ValueModel(_) => f.write_str("ValueModel"),
            Scorer::ProbabilityProduct => f.write_str("ProbabilityProduct"),
        }
    }
}

/// A partial proof.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub hyperstate: Hyperstate,
    pub script: ProofScript,
    pub g: usize,
    pub h: f64,
    pub f: f64,
    /// Product of chosen tactic probabilities along the path.
    pub path_probability: f64,
    pub seq: u64,
}

#[derive(Debug, Clone)]
pub struct Child {
    pub tactic: Tactic,
    pub probability: f64,
    pub hyperstate: Hyperstate,
}

#[derive(Debug, Clone)]
pub struct Expansion {
    /// Successful tactics in descending predictor probability.
    pub children: Vec<Child>,
    pub errored: Vec<(Tactic, TacticError)>,
    pub dead_end: bool,
}

/// Tries each of the top-`width` tactics on the first obligation.
pub fn expand_state(h: &Hyperstate, predictor: &Predictor, width: usize) -> Expansion {
    let first = h.first().expect("expand needs an open obligation");
    let mut children = Vec::new();
    let mut errored = Vec::new();
    for p in predictor.predict_top_n(first, width) {
        match apply_tactic(first, &p.tactic) {
            Ok(produced) => {
                let mut obs = produced;
                obs.extend(h.obligations()[1..].iter().cloned());
                children.push(Child {
                    tactic: p.tactic,
                    probability: p.probability,
                    hyperstate: Hyperstate::new(obs),
                });
            }
            Err(e) => errored.push((p.tactic, e)),
        }
    }
    let dead_end = children.is_empty();
    Expansion {
        children,
        errored,
        dead_end,
    }
}

/// `sum log_gamma V(ob)`; infinite when some obligation is valued 0.
pub fn steps_remaining(v: &dyn ObligationValue, h: &Hyperstate) -> f64 {
    h.obligations()
        .iter()
        .map(|ob| steps_estimate(v.value(ob), v.gamma()).unwrap_or(f64::INFINITY))
        .sum()
}

/// Child of `node` through `c`, scored for A*.
pub fn astar_child(node: &SearchNode, c: &Child, v: &dyn ObligationValue, seq: u64) -> SearchNode {
    let g = node.g + 1;
    let h = steps_remaining(v, &c.hyperstate);
    SearchNode {
        hyperstate: c.hyperstate.clone(),
        script: node.script.extended(c.tactic.clone()),
        g,
        h,
        f: g as f64 + h,
        path_probability: node.path_probability * c.probability,
        seq,
    }
}

struct Queued {
    key: f64,
    seq: u64,
    node: SearchNode,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // Max-heap on key, then earliest insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Counters {
    start: Instant,
    expanded: usize,
    executions: usize,
    dead_ends: Vec<Obligation>,
}

impl Counters {
    fn new() -> Self {
        Counters {
            start: Instant::now(),
            expanded: 0,
            executions: 0,
            dead_ends: Vec::new(),
        }
    }

    fn expand(&mut self, h: &Hyperstate, predictor: &Predictor, width: usize) -> Expansion {
        self.expanded += 1;
        let e = expand_state(h, predictor, width);
        self.executions += e.children.len() + e.errored.len();
        if e.dead_end {
            self.dead_ends.push(h.first().expect("nonempty").clone());
        }
        e
    }

    fn finish(self, status: SearchStatus, script: Option<ProofScript>) -> SearchResult {
        SearchResult {
            status,
            proof_length: script.as_ref().map(ProofScript::len),
            script,
            nodes_expanded: self.expanded,
            tactic_executions: self.executions,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
            dead_ends: self.dead_ends,
        }
    }
}

fn root(thm: &Theorem) -> SearchNode {
    SearchNode {
        hyperstate: thm.initial(),
        script: ProofScript::default(),
        g: 0,
        h: 0.0,
        f: 0.0,
        path_probability: 1.0,
        seq: 0,
    }
}

/// Min-f search with `h = sum log_gamma V`. A hyperstate is expanded at
/// most once; it is queued again only when reached by a strictly shorter
/// path.
pub fn astar_search(
    thm: &Theorem,
    scorer: Scorer<'_>,
    predictor: &Predictor,
    cfg: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let Scorer::ValueModel(v) = scorer else {
        return Err(SearchError::NotStepsConvertible);
    };
    let mut c = Counters::new();
    let mut start = root(thm);
    start.h = steps_remaining(v, &start.hyperstate);
    start.f = start.h;
    let mut heap = BinaryHeap::new();
    let mut best_g: HashMap<String, usize> = HashMap::new();
    let mut closed: HashSet<String> = HashSet::new();
    best_g.insert(start.hyperstate.key(), 0);
    heap.push(Queued {
        key: -start.f,
        seq: 0,
        node: start,
    });
    let mut seq = 0;
    while let Some(Queued { node, .. }) = heap.pop() {
        if node.hyperstate.is_empty() {
            return Ok(c.finish(SearchStatus::Proved, Some(node.script)));
        }
        let key = node.hyperstate.key();
        if closed.contains(&key) || best_g.get(&key).is_some_and(|&g| g < node.g) {
            continue;
        }
        if c.expanded >= cfg.budget {
            return Ok(c.finish(SearchStatus::BudgetExceeded, None));
        }
        closed.insert(key);
        if node.g >= cfg.depth_limit {
            continue;
        }
        for child in c.expand(&node.hyperstate, predictor, cfg.width).children {
            let ck = child.hyperstate.key();
            if closed.contains(&ck) || best_g.get(&ck).is_some_and(|&g| g <= node.g + 1) {
                continue;
            }
            seq += 1;
            let n = astar_child(&node, &child, v, seq);
            best_g.insert(ck, n.g);
            heap.push(Queued { key: -n.f, seq, node: n });
        }
    }
    Ok(c.finish(SearchStatus::Exhausted, None))
}

/// Max-score search; each hyperstate is queued at most once.
pub fn best_first_search(
    thm: &Theorem,
    scorer: Scorer<'_>,
    predictor: &Predictor,
    cfg: &SearchConfig,
) -> SearchResult {
    let score = |n: &SearchNode| match scorer {
        Scorer::ValueModel(v) => hyperstate_value(v, &n.hyperstate),
        Scorer::ProbabilityProduct => n.path_probability,
    };
    let mut c = Counters::new();
    let start = root(thm);
    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(start.hyperstate.key());
    heap.push(Queued {
        key: score(&start),
        seq: 0,
        node: start,
    });
    let mut seq = 0;
    while let Some(Queued { node, .. }) = heap.pop() {
        if node.hyperstate.is_empty() {
            return c.finish(SearchStatus::Proved, Some(node.script));
        }
        if c.expanded >= cfg.budget {
            return c.finish(SearchStatus::BudgetExceeded, None);
        }
        if node.g >= cfg.depth_limit {
            continue;
        }
        for child in c.expand(&node.hyperstate, predictor, cfg.width).children {
            if !seen.insert(child.hyperstate.key()) {
                continue;
            }
            seq += 1;
            let n = SearchNode {
                script: node.script.extended(child.tactic.clone()),
                g: node.g + 1,
                h: 0.0,
                f: 0.0,
                path_probability: node.path_probability * child.probability,
                seq,
                hyperstate: child.hyperstate,
            };
            heap.push(Queued {
                key: score(&n),
                seq,
                node: n,
            });
        }
    }
    c.finish(SearchStatus::Exhausted, None)
}

/// Depth-first search taking children in descending predictor probability.
pub fn dfs_search(thm: &Theorem, predictor: &Predictor, cfg: &SearchConfig) -> SearchResult {
    let mut c = Counters::new();
    let mut stack = vec![root(thm)];
    let mut visited: HashSet<String> = HashSet::new();
    while let Some(node) = stack.pop() {
        if node.hyperstate.is_empty() {
            return c.finish(SearchStatus::Proved, Some(node.script));
        }
        if node.g >= cfg.depth_limit || !visited.insert(node.hyperstate.key()) {
            continue;
        }
        if c.expanded >= cfg.budget {
            return c.finish(SearchStatus::BudgetExceeded, None);
        }
        let children = c.expand(&node.hyperstate, predictor, cfg.width).children;
        for child in children.into_iter().rev() {
            stack.push(SearchNode {
                script: node.script.extended(child.tactic),
                g: node.g + 1,
                h: 0.0,
                f: 0.0,
                path_probability: node.path_probability * child.probability,
                seq: 0,
                hyperstate: child.hyperstate,
            });
        }
    }
    c.finish(SearchStatus::Exhausted, None)
}

#[derive(Clone, Copy)]
pub enum GreedyPolicy<'a> {
    /// Child with the highest hyperstate value.
    Value(&'a dyn ObligationValue),
    /// Highest-probability tactic that does not error.
    Probability,
}

/// No backtracking: commits to one child per step.
pub fn greedy_search(thm: &Theorem, policy: GreedyPolicy<'_>, predictor: &Predictor, cfg: &SearchConfig) -> SearchResult {
    let mut c = Counters::new();
    let mut state = thm.initial();
    let mut script = ProofScript::default();
    loop {
        if state.is_empty() {
            return c.finish(SearchStatus::Proved, Some(script));
        }
        if c.expanded >= cfg.budget {
            return c.finish(SearchStatus::BudgetExceeded, None);
        }
        let children = c.expand(&state, predictor, cfg.width).children;
        let pick = match policy {
            GreedyPolicy::Probability => children.into_iter().next(),
            GreedyPolicy::Value(v) => {
                let mut best: Option<(f64, Child)> = None;
                for ch in children {
                    let val = hyperstate_value(v, &ch.hyperstate);
                    if best.as_ref().is_none_or(|(b, _)| val > *b) {
                        best = Some((val, ch));
                    }
                }
                best.map(|(_, ch)| ch)
            }
        };
        let Some(child) = pick else {
            return c.finish(SearchStatus::Exhausted, None);
        };
        script.push(child.tactic);
        state = child.hyperstate;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Astar,
    Bestfirst,
    BestfirstProb,
    Dfs,
    Greedy,
    GreedyProb,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Astar,
        Strategy::Bestfirst,
        Strategy::BestfirstProb,
        Strategy::Dfs,
        Strategy::Greedy,
        Strategy::GreedyProb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Astar => "astar",
            Strategy::Bestfirst => "bestfirst",
            Strategy::BestfirstProb => "bestfirst_prob",
            Strategy::Dfs => "dfs",
            Strategy::Greedy => "greedy",
            Strategy::GreedyProb => "greedy_prob",
        }
    }

    /// Runs with the given evaluator. `budget`, `width` come from `cfg`;
    /// DFS uses its own depth limit.
    pub fn run(
        self,
        thm: &Theorem,
        v: &dyn ObligationValue,
        predictor: &Predictor,
        cfg: &SearchConfig,
        dfs_depth: usize,
    ) -> SearchResult {
        match self {
            Strategy::Astar => astar_search(thm, Scorer::ValueModel(v), predictor, cfg).expect("value scorer"),
            Strategy::Bestfirst => best_first_search(thm, Scorer::ValueModel(v), predictor, cfg),
            Strategy::BestfirstProb => best_first_search(thm, Scorer::ProbabilityProduct, predictor, cfg),
            Strategy::Dfs => dfs_search(
                thm,
                predictor,
                &SearchConfig {
                    depth_limit: dfs_depth,
                    ..*cfg
                },
            ),
            Strategy::Greedy => greedy_search(thm, GreedyPolicy::Value(v), predictor, cfg),
            Strategy::GreedyProb => greedy_search(thm, GreedyPolicy::Probability, predictor, cfg),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Strategy::ALL.iter().map(|x| x.name()).collect();
                format!("unknown strategy `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::replay_script;
    use crate::oracle::{OracleValue, TopN};
    use crate::value::ConstValue;

    fn thm(s: &str) -> Theorem {
        Theorem::new("t", s.parse().unwrap())
    }

    fn half() -> ConstValue<fn(&Obligation) -> f64> {
        ConstValue {
            gamma: 0.9,
            f: |_| 0.5,
        }
    }

    #[test]
    fn f_score_example() {
        let v = ConstValue {
            gamma: 0.9,
            f: |_: &Obligation| 0.9f64.powf(2.9),
        };
        let node = SearchNode {
            hyperstate: thm("|- Zero = Zero").initial(),
            script: ProofScript::default(),
            g: 2,
            h: 0.0,
            f: 0.0,
            path_probability: 1.0,
            seq: 0,
        };
        let child = Child {
            tactic: Tactic::Simpl,
            probability: 1.0,
            hyperstate: thm("|- Zero = Zero").initial(),
        };
        let n = astar_child(&node, &child, &v, 1);
        assert_eq!(n.g, 3);
        assert!((n.h - 2.9).abs() < 1e-12);
        assert!((n.f - 5.9).abs() < 1e-12);
    }

    #[test]
    fn one_step_theorem_everywhere() {
        let t = thm("|- Zero = Zero");
        let p = Predictor::zeros();
        let v = half();
        let cfg = SearchConfig::default();
        for s in Strategy::ALL {
            let r = s.run(&t, &v, &p, &cfg, DEFAULT_DFS_DEPTH);
            assert!(r.proved(), "{s}");
            assert_eq!(r.proof_length, Some(1));
            assert_eq!(r.nodes_expanded, 1, "{s}");
        }
    }

    #[test]
    fn zero_budget() {
        let t = thm("|- Zero = Zero");
        let p = Predictor::zeros();
        let cfg = SearchConfig {
            budget: 0,
            ..SearchConfig::default()
        };
        let r = astar_search(&t, Scorer::ValueModel(&half()), &p, &cfg).unwrap();
        assert_eq!(r.status, SearchStatus::BudgetExceeded);
        assert!(r.script.is_none());
        assert_eq!(r.nodes_expanded, 0);
    }

    #[test]
    fn probability_scorer_rejected_by_astar() {
        let t = thm("|- Zero = Zero");
        let r = astar_search(&t, Scorer::ProbabilityProduct, &Predictor::zeros(), &SearchConfig::default());
        assert_eq!(r.unwrap_err(), SearchError::NotStepsConvertible);
    }

    #[test]
    fn dead_end_root() {
        let t = thm("|- Zero = Succ(Zero)");
        let p = Predictor::zeros();
        let r = greedy_search(&t, GreedyPolicy::Value(&half()), &p, &SearchConfig::default());
        assert_eq!(r.status, SearchStatus::Exhausted);
        assert_eq!(r.nodes_expanded, 1);
        assert_eq!(r.dead_ends.len(), 1);
        let r = best_first_search(&t, Scorer::ValueModel(&half()), &p, &SearchConfig::default());
        assert_eq!(r.status, SearchStatus::Exhausted);
    }

    #[test]
    fn dfs_depth_limit() {
        let t = thm("|- Plus(Zero,Zero) = Zero");
        let p = Predictor::zeros();
        let cfg = SearchConfig {
            depth_limit: 1,
            ..SearchConfig::default()
        };
        assert_eq!(dfs_search(&t, &p, &cfg).status, SearchStatus::Exhausted);
        let cfg = SearchConfig {
            depth_limit: 2,
            ..SearchConfig::default()
        };
        assert_eq!(dfs_search(&t, &p, &cfg).proof_length, Some(2));
    }

    #[test]
    fn astar_with_oracle_values_is_optimal() {
        let t = thm("forall n, |- Plus(Var(n),Zero) = Var(n)");
        let p = Predictor::zeros();
        let actions = TopN {
            predictor: &p,
            width: 6,
        };
        let v = OracleValue::new(&actions, 0.9, 8);
        let r = astar_search(&t, Scorer::ValueModel(&v), &p, &SearchConfig {
            width: 6,
            ..SearchConfig::default()
        })
        .unwrap();
        assert_eq!(r.proof_length, Some(7));
        assert!(replay_script(&t, r.script.as_ref().unwrap()).unwrap().is_valid());
    }
}

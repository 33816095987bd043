use std::collections::{HashMap, VecDeque};

use super::{bellman_target_with, ObligationValue};
use crate::env::{apply_tactic, Obligation};
use crate::oracle::ActionSource;

/// Obligations reachable from some roots through an action source, each
/// with its distance from the nearest root. Nodes at `max_depth` are kept
/// but not expanded.
#[derive(Debug, Clone)]
pub struct ObligationGraph {
    pub nodes: Vec<Obligation>,
    pub depth: Vec<usize>,
    pub max_depth: usize,
}

pub fn reachable_graph(roots: &[Obligation], actions: &dyn ActionSource, max_depth: usize) -> ObligationGraph {
    let mut index: HashMap<Obligation, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut depth = Vec::new();
    let mut queue = VecDeque::new();
    for r in roots {
        if !index.contains_key(r) {
            index.insert(r.clone(), nodes.len());
            queue.push_back(nodes.len());
            nodes.push(r.clone());
            depth.push(0);
        }
    }
    while let Some(i) = queue.pop_front() {
        if depth[i] >= max_depth {
            continue;
        }
        let ob = nodes[i].clone();
        for t in actions.actions(&ob) {
            let Ok(children) = apply_tactic(&ob, &t) else {
                continue;
            };
            for c in children {
                if !index.contains_key(&c) {
                    index.insert(c.clone(), nodes.len());
                    queue.push_back(nodes.len());
                    nodes.push(c);
                    depth.push(depth[i] + 1);
                }
            }
        }
    }
    ObligationGraph {
        nodes,
        depth,
        max_depth,
    }
}

/// Lookup-table V-values; unknown obligations are worth 0.
#[derive(Debug, Clone)]
pub struct TabularValue {
    gamma: f64,
    table: HashMap<Obligation, f64>,
}

impl TabularValue {
    pub fn new(gamma: f64) -> Self {
        TabularValue {
            gamma,
            table: HashMap::new(),
        }
    }

    pub fn get(&self, ob: &Obligation) -> f64 {
        self.table.get(ob).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, ob: Obligation, v: f64) {
        self.table.insert(ob, v);
    }
}

impl ObligationValue for TabularValue {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn value(&self, ob: &Obligation) -> f64 {
        self.get(ob)
    }
}

#[derive(Debug, Clone)]
pub struct ValueIteration {
    pub values: TabularValue,
    pub sweeps: usize,
    pub converged: bool,
    pub last_change: f64,
}

/// Synchronous sweeps of the Bellman target over every graph node, starting
/// from zero, until the largest change is at most `tol`.
pub fn value_iteration(
    graph: &ObligationGraph,
    actions: &dyn ActionSource,
    gamma: f64,
    tol: f64,
    max_sweeps: usize,
) -> ValueIteration {
    let mut values = TabularValue::new(gamma);
    for ob in &graph.nodes {
        values.set(ob.clone(), 0.0);
    }
    let mut last_change = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        let next: Vec<f64> = graph
            .nodes
            .iter()
            .map(|ob| bellman_target_with(ob, &values, actions))
            .collect();
        last_change = 0.0;
        for (ob, v) in graph.nodes.iter().zip(next) {
            last_change = f64::max(last_change, (v - values.get(ob)).abs());
            values.set(ob.clone(), v);
        }
        if last_change <= tol {
            return ValueIteration {
                values,
                sweeps: sweep,
                converged: true,
                last_change,
            };
        }
    }
    ValueIteration {
        values,
        sweeps: max_sweeps,
        converged: false,
        last_change,
    }
}

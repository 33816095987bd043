//! Running strategies over theorem sets and aggregating the results.

use std::collections::{BTreeSet, HashMap};
use std::thread;

use serde::{Deserialize, Serialize};

use crate::env::Theorem;
use crate::predictor::Predictor;
use crate::search::{SearchConfig, SearchResult, SearchStatus, Strategy};
use crate::value::ObligationValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub theorem_id: String,
    pub strategy: Strategy,
    pub status: SearchStatus,
    pub proof: Option<String>,
    pub proof_length: Option<usize>,
    pub nodes_expanded: usize,
    pub tactic_executions: usize,
    /// Omitted unless timing was requested, so reports stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<f64>,
}

impl EvalRow {
    pub fn from_result(theorem_id: &str, strategy: Strategy, r: &SearchResult, timing: bool) -> Self {
        EvalRow {
            theorem_id: theorem_id.to_string(),
            strategy,
            status: r.status,
            proof: r.script.as_ref().map(|s| s.to_string()),
            proof_length: r.proof_length,
            nodes_expanded: r.nodes_expanded,
            tactic_executions: r.tactic_executions,
            wall_ms: timing.then_some(r.wall_ms),
        }
    }

    pub fn proved(&self) -> bool {
        self.status == SearchStatus::Proved
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyAggregate {
    pub strategy: Strategy,
    pub theorems: usize,
    pub proved: usize,
    pub proved_pct: f64,
    /// Over proved theorems; `None` when nothing was proved.
    pub mean_proof_length: Option<f64>,
    pub mean_nodes_expanded: Option<f64>,
}

/// Comparison of `a` against `b` on theorems both proved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub a: Strategy,
    pub b: Strategy,
    pub both_proved: usize,
    pub a_mean_length: Option<f64>,
    pub b_mean_length: Option<f64>,
    pub a_mean_nodes: Option<f64>,
    pub b_mean_nodes: Option<f64>,
    /// Counts of `a`'s proof being shorter than, as long as, or longer than `b`'s.
    pub shorter: usize,
    pub equal: usize,
    pub longer: usize,
    pub fewer_nodes: usize,
    pub equal_nodes: usize,
    pub more_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub budget: usize,
    pub width: usize,
    pub strategies: Vec<Strategy>,
    pub rows: Vec<EvalRow>,
    pub aggregates: Vec<StrategyAggregate>,
    pub matched: Vec<MatchedPair>,
    /// Theorems proved by at least one strategy.
    pub union_proved: usize,
}

fn mean(xs: impl Iterator<Item = usize>) -> Option<f64> {
    let (sum, n) = xs.fold((0usize, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum as f64 / n as f64)
}

impl EvalReport {
    /// Aggregates recomputed from `rows`.
    pub fn from_rows(rows: Vec<EvalRow>, strategies: &[Strategy], budget: usize, width: usize) -> Self {
        let aggregates = strategies
            .iter()
            .map(|&s| {
                let mine: Vec<&EvalRow> = rows.iter().filter(|r| r.strategy == s).collect();
                let proved: Vec<&&EvalRow> = mine.iter().filter(|r| r.proved()).collect();
                StrategyAggregate {
                    strategy: s,
                    theorems: mine.len(),
                    proved: proved.len(),
                    proved_pct: if mine.is_empty() { 0.0 } else { 100.0 * proved.len() as f64 / mine.len() as f64 },
                    mean_proof_length: mean(proved.iter().map(|r| r.proof_length.unwrap_or(0))),
                    mean_nodes_expanded: mean(proved.iter().map(|r| r.nodes_expanded)),
                }
            })
            .collect();
        let mut matched = Vec::new();
        for (i, &a) in strategies.iter().enumerate() {
            for &b in &strategies[i + 1..] {
                matched.push(matched_pair(&rows, a, b));
            }
        }
        let union_proved = rows
            .iter()
            .filter(|r| r.proved())
            .map(|r| r.theorem_id.as_str())
            .collect::<BTreeSet<_>>()
            .len();
        EvalReport {
            budget,
            width,
            strategies: strategies.to_vec(),
            rows,
            aggregates,
            matched,
            union_proved,
        }
    }

    pub fn aggregate(&self, s: Strategy) -> Option<&StrategyAggregate> {
        self.aggregates.iter().find(|a| a.strategy == s)
    }

    pub fn pair(&self, a: Strategy, b: Strategy) -> Option<&MatchedPair> {
        self.matched.iter().find(|p| p.a == a && p.b == b)
    }

    pub fn proved_ids(&self, s: Strategy) -> BTreeSet<&str> {
        self.rows
            .iter()
            .filter(|r| r.strategy == s && r.proved())
            .map(|r| r.theorem_id.as_str())
            .collect()
    }
}

pub fn matched_pair(rows: &[EvalRow], a: Strategy, b: Strategy) -> MatchedPair {
    let b_rows: HashMap<&str, &EvalRow> = rows
        .iter()
        .filter(|r| r.strategy == b && r.proved())
        .map(|r| (r.theorem_id.as_str(), r))
        .collect();
    let pairs: Vec<(&EvalRow, &EvalRow)> = rows
        .iter()
        .filter(|r| r.strategy == a && r.proved())
        .filter_map(|ra| b_rows.get(ra.theorem_id.as_str()).map(|rb| (ra, *rb)))
        .collect();
    let len = |r: &EvalRow| r.proof_length.unwrap_or(0);
    let cmp_count = |f: &dyn Fn(&EvalRow) -> usize, o: std::cmp::Ordering| {
        pairs.iter().filter(|(x, y)| f(x).cmp(&f(y)) == o).count()
    };
    let nodes = |r: &EvalRow| r.nodes_expanded;
    use std::cmp::Ordering::*;
    MatchedPair {
        a,
        b,
        both_proved: pairs.len(),
        a_mean_length: mean(pairs.iter().map(|(x, _)| len(x))),
        b_mean_length: mean(pairs.iter().map(|(_, y)| len(y))),
        a_mean_nodes: mean(pairs.iter().map(|(x, _)| x.nodes_expanded)),
        b_mean_nodes: mean(pairs.iter().map(|(_, y)| y.nodes_expanded)),
        shorter: cmp_count(&len, Less),
        equal: cmp_count(&len, Equal),
        longer: cmp_count(&len, Greater),
        fewer_nodes: cmp_count(&nodes, Less),
        equal_nodes: cmp_count(&nodes, Equal),
        more_nodes: cmp_count(&nodes, Greater),
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub search: SearchConfig,
    pub dfs_depth: usize,
    pub timing: bool,
    pub threads: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            search: SearchConfig::default(),
            dfs_depth: crate::search::DEFAULT_DFS_DEPTH,
            timing: false,
            threads: thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// Every strategy on every theorem. Rows are ordered by theorem, then
/// strategy, whatever the thread count.
pub fn evaluate<V: ObligationValue + Sync>(
    theorems: &[Theorem],
    strategies: &[Strategy],
    v: &V,
    predictor: &Predictor,
    cfg: &EvalConfig,
) -> EvalReport {
    let run = |thm: &Theorem| -> Vec<EvalRow> {
        strategies
            .iter()
            .map(|&s| {
                let r = s.run(thm, v, predictor, &cfg.search, cfg.dfs_depth);
                EvalRow::from_result(&thm.id, s, &r, cfg.timing)
            })
            .collect()
    };
    let threads = cfg.threads.clamp(1, theorems.len().max(1));
    let chunk = theorems.len().div_ceil(threads).max(1);
    let rows: Vec<EvalRow> = thread::scope(|scope| {
        let handles: Vec<_> = theorems
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().flat_map(run).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("eval worker")).collect()
    });
    EvalReport::from_rows(rows, strategies, cfg.search.budget, cfg.search.width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::ConstValue;

    fn thm(id: &str, s: &str) -> Theorem {
        Theorem::new(id, s.parse().unwrap())
    }

    fn row(id: &str, s: Strategy, len: Option<usize>, nodes: usize) -> EvalRow {
        EvalRow {
            theorem_id: id.into(),
            strategy: s,
            status: if len.is_some() { SearchStatus::Proved } else { SearchStatus::Exhausted },
            proof: None,
            proof_length: len,
            nodes_expanded: nodes,
            tactic_executions: nodes,
            wall_ms: None,
        }
    }

    #[test]
    fn empty_theorem_set() {
        let v = ConstValue { gamma: 0.9, f: |_: &crate::env::Obligation| 0.5 };
        let r = evaluate(&[], &[Strategy::Astar], &v, &Predictor::zeros(), &EvalConfig::default());
        assert!(r.rows.is_empty());
        assert_eq!(r.aggregates[0].proved, 0);
        assert_eq!(r.aggregates[0].mean_proof_length, None);
        assert!(r.matched.is_empty());
    }

    #[test]
    fn matched_pairs_use_the_intersection() {
        use Strategy::*;
        let rows = vec![
            row("a", Astar, Some(3), 3),
            row("a", Dfs, Some(5), 9),
            row("b", Astar, Some(4), 4),
            row("b", Dfs, None, 512),
            row("c", Astar, Some(2), 2),
            row("c", Dfs, Some(2), 2),
            row("d", Astar, None, 7),
            row("d", Dfs, Some(6), 6),
        ];
        let r = EvalReport::from_rows(rows, &[Astar, Dfs], 512, 5);
        let p = r.pair(Astar, Dfs).unwrap();
        assert_eq!(p.both_proved, 2);
        assert_eq!((p.shorter, p.equal, p.longer), (1, 1, 0));
        assert_eq!((p.fewer_nodes, p.equal_nodes, p.more_nodes), (1, 1, 0));
        assert_eq!(p.a_mean_length, Some(2.5));
        assert_eq!(p.b_mean_length, Some(3.5));
        assert_eq!(r.union_proved, 4);
        let a = r.aggregate(Astar).unwrap();
        assert_eq!(a.proved, 3);
        assert_eq!(a.mean_proof_length, Some(3.0));
        assert_eq!(a.proved_pct, 75.0);
    }

    #[test]
    fn row_order_ignores_thread_count() {
        let v = ConstValue { gamma: 0.9, f: |_: &crate::env::Obligation| 0.8 };
        let ts = vec![
            thm("one", "|- Zero = Zero"),
            thm("two", "|- Plus(Zero,Zero) = Zero"),
            thm("three", "|- Succ(Zero) = Succ(Zero)"),
        ];
        let p = Predictor::zeros();
        let one = evaluate(&ts, &Strategy::ALL, &v, &p, &EvalConfig { threads: 1, ..EvalConfig::default() });
        let many = evaluate(&ts, &Strategy::ALL, &v, &p, &EvalConfig { threads: 3, ..EvalConfig::default() });
        assert_eq!(one, many);
        assert_eq!(one.rows.len(), 3 * Strategy::ALL.len());
        assert_eq!(one.rows[0].theorem_id, "one");
        assert!(one.rows.iter().all(|r| r.wall_ms.is_none()));
        assert_eq!(one.matched.len(), Strategy::ALL.len() * (Strategy::ALL.len() - 1) / 2);
    }
}

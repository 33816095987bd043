//! Synthetic theorem families with oracle-found ground-truth proofs.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{replay_script, Obligation, ProofScript, Tactic, Term, Theorem};
use crate::oracle::{shortest_proof, DEFAULT_CORPUS_DEPTH};

pub const MAX_NUMERAL: usize = 6;
const MAX_DRESSING: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub theorem: Theorem,
    pub proof: ProofScript,
    pub proof_length: usize,
}

impl CorpusEntry {
    pub fn id(&self) -> &str {
        &self.theorem.id
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<CorpusEntry>,
    pub test: Vec<CorpusEntry>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FamilyCounts {
    pub ground: usize,
    pub shifted: usize,
    pub schema: usize,
}

impl std::str::FromStr for FamilyCounts {
    type Err = String;

    /// `"a,b,c"` for the ground, shifted and schema families.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("expected three comma-separated counts, got `{s}`"));
        };
        let num = |x: &str| x.parse::<usize>().map_err(|e| format!("bad count `{x}`: {e}"));
        Ok(FamilyCounts {
            ground: num(a)?,
            shifted: num(b)?,
            schema: num(c)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: String,
    pub requested: usize,
    pub available: usize,
    pub produced: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub seed: u64,
    pub families: Vec<FamilyReport>,
}

impl GenerationSummary {
    pub fn under_filled(&self) -> impl Iterator<Item = &FamilyReport> {
        self.families.iter().filter(|f| f.produced < f.requested)
    }
}

fn var(n: &str) -> Term {
    Term::var(n)
}

/// `Plus(a, b) = a + b` over numerals up to [`MAX_NUMERAL`].
fn ground_pool() -> Vec<Obligation> {
    let mut out = Vec::new();
    for a in 0..=MAX_NUMERAL {
        for b in 0..=MAX_NUMERAL {
            let lhs = Term::plus(Term::numeral(a), Term::numeral(b));
            out.push(Obligation::statement(&[], lhs, Term::numeral(a + b)).expect("closed"));
        }
    }
    out
}

/// `forall n, S^j(Plus(n, S^k 0)) = S^(j+k) n` and
/// `forall n, S^j(Plus(S^k 0, n)) = S^(j+k) n`.
fn shifted_pool() -> Vec<Obligation> {
    let mut out = Vec::new();
    for j in 0..=MAX_DRESSING {
        for k in 1..=MAX_NUMERAL {
            let lhs = Term::succ_n(j, Term::plus(var("n"), Term::numeral(k)));
            out.push(Obligation::statement(&["n"], lhs, Term::succ_n(j + k, var("n"))).expect("bound"));
        }
        for k in 0..=MAX_NUMERAL {
            let lhs = Term::succ_n(j, Term::plus(Term::numeral(k), var("n")));
            out.push(Obligation::statement(&["n"], lhs, Term::succ_n(j + k, var("n"))).expect("bound"));
        }
    }
    out
}

/// `forall n, S^j(Plus(n, 0)) = S^j n` and
/// `forall n m, S^j(Plus(n, S^k m)) = S^j(S^k(Plus(n, m)))`.
fn schema_pool() -> Vec<Obligation> {
    let mut out = Vec::new();
    for j in 0..=MAX_DRESSING {
        let lhs = Term::succ_n(j, Term::plus(var("n"), Term::Zero));
        out.push(Obligation::statement(&["n"], lhs, Term::succ_n(j, var("n"))).expect("bound"));
        for k in 1..=4 {
            let lhs = Term::succ_n(j, Term::plus(var("n"), Term::succ_n(k, var("m"))));
            let rhs = Term::succ_n(j + k, Term::plus(var("n"), var("m")));
            out.push(Obligation::statement(&["n", "m"], lhs, rhs).expect("bound"));
        }
    }
    out
}

/// Draws distinct statements from each family in a seeded order and
/// attaches oracle-shortest proofs. Families with too few distinct
/// statements, or whose statements exceed the oracle depth, come up short;
/// the summary says by how much.
pub fn generate_corpus(seed: u64, counts: &FamilyCounts) -> (Vec<CorpusEntry>, GenerationSummary) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    let mut summary = GenerationSummary {
        seed,
        families: Vec::new(),
    };
    let families = [
        ("ground", counts.ground, ground_pool()),
        ("shifted", counts.shifted, shifted_pool()),
        ("schema", counts.schema, schema_pool()),
    ];
    for (name, requested, mut pool) in families {
        pool.shuffle(&mut rng);
        let available = pool.len();
        let mut produced = 0;
        let mut discarded = 0;
        for statement in pool {
            if produced == requested {
                break;
            }
            let thm = Theorem::new(format!("{name}_{produced:03}"), statement);
            let r = shortest_proof(&thm.initial(), DEFAULT_CORPUS_DEPTH);
            let Some(proof) = r.shortest_script else {
                discarded += 1;
                continue;
            };
            entries.push(CorpusEntry {
                proof_length: proof.len(),
                theorem: thm,
                proof,
            });
            produced += 1;
        }
        summary.families.push(FamilyReport {
            family: name.to_string(),
            requested,
            available,
            produced,
            discarded,
        });
    }
    (entries, summary)
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Schema { line: usize, msg: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    statement: Obligation,
    proof: ProofScript,
    proof_length: usize,
}

pub fn entry_to_line(e: &CorpusEntry) -> String {
    serde_json::to_string(&Record {
        id: e.theorem.id.clone(),
        statement: e.theorem.statement.clone(),
        proof: e.proof.clone(),
        proof_length: e.proof_length,
    })
    .expect("serializable")
}

pub fn write_corpus(entries: &[CorpusEntry], mut out: impl Write) -> io::Result<()> {
    for e in entries {
        writeln!(out, "{}", entry_to_line(e))?;
    }
    Ok(())
}

pub fn save_corpus(entries: &[CorpusEntry], path: &Path) -> Result<(), CorpusError> {
    let mut buf = Vec::new();
    write_corpus(entries, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Parses line-delimited records, validating every proof by replay.
pub fn read_corpus(input: impl BufRead) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut entries: Vec<CorpusEntry> = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |msg: String| CorpusError::Schema { line: line_no, msg };
        let r: Record = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if !r.statement.context().is_empty() {
            return Err(schema("statement must have an empty context".into()));
        }
        if r.proof_length != r.proof.len() {
            return Err(schema(format!(
                "proof_length {} disagrees with {} proof steps",
                r.proof_length,
                r.proof.len()
            )));
        }
        if !ids.insert(r.id.clone()) {
            return Err(schema(format!("duplicate id `{}`", r.id)));
        }
        let theorem = Theorem::new(r.id, r.statement);
        match replay_script(&theorem, &r.proof) {
            Ok(t) if t.is_valid() => {}
            Ok(_) => return Err(schema("proof leaves obligations open".into())),
            Err(e) => return Err(schema(format!("invalid proof: {e}"))),
        }
        entries.push(CorpusEntry {
            theorem,
            proof: r.proof,
            proof_length: r.proof_length,
        });
    }
    Ok(entries)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let f = fs::File::open(path)?;
    read_corpus(io::BufReader::new(f))
}

/// Seeded shuffle; the first `round(ratio * n)` go to test. Each side keeps
/// corpus order.
pub fn split_corpus(entries: &[CorpusEntry], seed: u64, test_ratio: f64) -> CorpusSplit {
    assert!((0.0..=1.0).contains(&test_ratio), "test ratio must be in [0, 1]");
    let mut idx: Vec<usize> = (0..entries.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (test_ratio * entries.len() as f64).round() as usize;
    let mut is_test = vec![false; entries.len()];
    for &i in &idx[..n_test] {
        is_test[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (e, t) in entries.iter().zip(is_test) {
        if t {
            test.push(e.clone());
        } else {
            train.push(e.clone());
        }
    }
    CorpusSplit { train, test, seed }
}

/// `(focused obligation, tactic)` at every step of every proof.
pub fn demonstration_pairs(entries: &[CorpusEntry]) -> Vec<(Obligation, Tactic)> {
    let mut out = Vec::new();
    for e in entries {
        let trace = replay_script(&e.theorem, &e.proof).expect("corpus proofs are valid");
        for s in trace.steps {
            out.push((s.before.first().expect("nonempty").clone(), s.tactic));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_example() {
        let (entries, _) = generate_corpus(0, &FamilyCounts { ground: 49, shifted: 0, schema: 0 });
        let e = entries
            .iter()
            .find(|e| e.theorem.statement.to_string() == "|- Plus(Succ(Succ(Zero)),Succ(Zero)) = Succ(Succ(Succ(Zero)))")
            .unwrap();
        assert_eq!(e.proof.to_string(), "simpl; reflexivity");
        assert_eq!(e.proof_length, 2);
    }

    #[test]
    fn base_schema_has_seven_steps() {
        let (entries, _) = generate_corpus(1, &FamilyCounts { ground: 0, shifted: 0, schema: 20 });
        let e = entries
            .iter()
            .find(|e| e.theorem.statement.to_string() == "forall n, |- Plus(Var(n),Zero) = Var(n)")
            .unwrap();
        assert_eq!(e.proof_length, 7);
    }

    #[test]
    fn zero_counts_and_under_fill() {
        let (entries, summary) = generate_corpus(3, &FamilyCounts::default());
        assert!(entries.is_empty());
        assert_eq!(summary.under_filled().count(), 0);
        let (entries, summary) = generate_corpus(3, &FamilyCounts { ground: 100, shifted: 0, schema: 0 });
        assert_eq!(entries.len(), 49);
        assert_eq!(summary.under_filled().count(), 1);
    }

    #[test]
    fn round_trip_and_errors() {
        let (entries, _) = generate_corpus(2, &FamilyCounts { ground: 2, shifted: 2, schema: 2 });
        let mut buf = Vec::new();
        write_corpus(&entries, &mut buf).unwrap();
        assert_eq!(read_corpus(&buf[..]).unwrap(), entries);
        assert!(read_corpus(&b""[..]).unwrap().is_empty());
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[2] = "{\"id\": 3}";
        let bad = lines.join("\n");
        match read_corpus(bad.as_bytes()) {
            Err(CorpusError::Schema { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_is_seeded() {
        let (entries, _) = generate_corpus(0, &FamilyCounts { ground: 10, shifted: 0, schema: 0 });
        let a = split_corpus(&entries, 5, 0.3);
        let b = split_corpus(&entries, 5, 0.3);
        assert_eq!(a.test.len(), 3);
        assert_eq!(a, b);
        assert!(split_corpus(&entries, 5, 0.0).test.is_empty());
        assert!(split_corpus(&entries, 5, 1.0).train.is_empty());
    }
}

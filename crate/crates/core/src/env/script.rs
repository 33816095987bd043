use std::fmt;

use thiserror::Error;

use super::{apply_tactic, Hyperstate, Obligation, Tactic, TacticError, Theorem};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ProofScript {
    steps: Vec<Tactic>,
}

impl ProofScript {
    pub fn new(steps: Vec<Tactic>) -> Self {
        ProofScript { steps }
    }

    pub fn steps(&self) -> &[Tactic] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, t: Tactic) {
        self.steps.push(t);
    }

    pub fn extended(&self, t: Tactic) -> ProofScript {
        let mut steps = self.steps.clone();
        steps.push(t);
        ProofScript { steps }
    }
}

impl From<Vec<Tactic>> for ProofScript {
    fn from(steps: Vec<Tactic>) -> Self {
        ProofScript { steps }
    }
}

impl fmt::Display for ProofScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ProofScript {
    type Err = super::SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        super::parse_script(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("no open obligations")]
    Empty,
    #[error(transparent)]
    Tactic(#[from] TacticError),
}

/// Applies `t` to the first obligation and splices the results in its place.
pub fn step_hyperstate(h: &Hyperstate, t: &Tactic) -> Result<Hyperstate, StepError> {
    let first = h.first().ok_or(StepError::Empty)?;
    let produced = apply_tactic(first, t)?;
    Ok(h.splice_first(produced))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub before: Hyperstate,
    pub tactic: Tactic,
    pub after: Hyperstate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub initial: Hyperstate,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn final_state(&self) -> &Hyperstate {
        self.steps.last().map_or(&self.initial, |s| &s.after)
    }

    pub fn is_valid(&self) -> bool {
        self.final_state().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {index} (`{tactic}`): {source}")]
pub struct ReplayError {
    pub index: usize,
    pub tactic: Tactic,
    #[source]
    pub source: StepError,
}

pub fn replay_from(start: &Hyperstate, script: &ProofScript) -> Result<Trace, ReplayError> {
    let mut steps = Vec::with_capacity(script.len());
    let mut cur = start.clone();
    for (index, t) in script.steps().iter().enumerate() {
        let next = step_hyperstate(&cur, t).map_err(|source| ReplayError {
            index,
            tactic: t.clone(),
            source,
        })?;
        steps.push(TraceStep {
            before: cur,
            tactic: t.clone(),
            after: next.clone(),
        });
        cur = next;
    }
    Ok(Trace {
        initial: start.clone(),
        steps,
    })
}

pub fn replay_script(thm: &Theorem, script: &ProofScript) -> Result<Trace, ReplayError> {
    replay_from(&thm.initial(), script)
}

/// Whether `script` fully discharges `ob`.
pub fn proves(ob: &Obligation, script: &ProofScript) -> bool {
    replay_from(&Hyperstate::single(ob.clone()), script).is_ok_and(|t| t.is_valid())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidScript {
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("script ends with {0} open obligation(s)")]
    Unfinished(usize),
}

/// An obligation paired with the contiguous script slice that discharges it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubproofTask {
    pub obligation: Obligation,
    pub script: ProofScript,
}

/// One task per obligation the script focuses, parent before children.
///
/// Focusing the first obligation and splicing in place means each
/// obligation's sub-proof is a contiguous run: its own tactic followed by
/// the sub-proofs of its children in order.
pub fn extract_subproof_tasks(
    thm: &Theorem,
    script: &ProofScript,
) -> Result<Vec<SubproofTask>, InvalidScript> {
    let trace = replay_script(thm, script)?;
    if !trace.is_valid() {
        return Err(InvalidScript::Unfinished(trace.final_state().len()));
    }
    let steps = script.steps();
    let mut spans: Vec<(Obligation, usize, usize)> = Vec::with_capacity(steps.len());
    let end = consume(thm.statement.clone(), steps, 0, &mut spans);
    debug_assert_eq!(end, steps.len());
    Ok(spans
        .into_iter()
        .map(|(obligation, start, end)| SubproofTask {
            obligation,
            script: ProofScript::new(steps[start..end].to_vec()),
        })
        .collect())
}

fn consume(
    ob: Obligation,
    steps: &[Tactic],
    start: usize,
    spans: &mut Vec<(Obligation, usize, usize)>,
) -> usize {
    let children = apply_tactic(&ob, &steps[start]).expect("validated by replay");
    let slot = spans.len();
    spans.push((ob, start, start + 1));
    let mut next = start + 1;
    for c in children {
        next = consume(c, steps, next, spans);
    }
    spans[slot].2 = next;
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn add_zero() -> Theorem {
        Theorem::new(
            "add_0_r",
            "forall n, |- Plus(Var(n),Zero) = Var(n)".parse().unwrap(),
        )
    }

    const ADD_ZERO_PROOF: &str =
        "intros; induction n; simpl; reflexivity; simpl; rewrite IH_n; reflexivity";

    #[test]
    fn step_examples() {
        let z: Obligation = "|- Zero = Zero".parse().unwrap();
        let one: Obligation = "|- Succ(Zero) = Succ(Zero)".parse().unwrap();
        let h = Hyperstate::single(z.clone());
        assert!(step_hyperstate(&h, &Tactic::Reflexivity).unwrap().is_empty());
        let h2 = Hyperstate::new(vec![z.clone(), one.clone()]);
        let after = step_hyperstate(&h2, &Tactic::Reflexivity).unwrap();
        assert_eq!(after.obligations(), &[one]);
        assert_eq!(
            step_hyperstate(&Hyperstate::default(), &Tactic::Reflexivity),
            Err(StepError::Empty)
        );
    }

    #[test]
    fn add_zero_replays() {
        let trace = replay_script(&add_zero(), &ADD_ZERO_PROOF.parse().unwrap()).unwrap();
        assert!(trace.is_valid());
        assert_eq!(trace.steps.len(), 7);
        assert_eq!(trace.steps[1].after.len(), 2);
        for s in &trace.steps {
            assert_eq!(step_hyperstate(&s.before, &s.tactic).unwrap().obligations(), s.after.obligations());
        }
    }

    #[test]
    fn empty_script_is_not_valid() {
        let trace = replay_script(&add_zero(), &ProofScript::default()).unwrap();
        assert!(!trace.is_valid());
        assert_eq!(trace.final_state(), &add_zero().initial());
    }

    #[test]
    fn first_step_error_is_indexed() {
        let e = replay_script(&add_zero(), &"reflexivity".parse().unwrap()).unwrap_err();
        assert_eq!(e.index, 0);
        let e = replay_script(&add_zero(), &"intros; simpl".parse().unwrap()).unwrap_err();
        assert_eq!(e.index, 1);
    }

    #[test]
    fn subproof_tasks_of_add_zero() {
        let tasks = extract_subproof_tasks(&add_zero(), &ADD_ZERO_PROOF.parse().unwrap()).unwrap();
        let lens: Vec<usize> = tasks.iter().map(|t| t.script.len()).collect();
        assert_eq!(lens, [7, 6, 2, 1, 3, 2, 1]);
        assert_eq!(tasks[2].obligation.to_string(), "|- Plus(Zero,Zero) = Zero");
        assert_eq!(tasks[2].script.to_string(), "simpl; reflexivity");
        assert_eq!(tasks[4].script.to_string(), "simpl; rewrite IH_n; reflexivity");
        for t in &tasks {
            assert!(proves(&t.obligation, &t.script));
        }
    }

    #[test]
    fn single_step_theorem() {
        let thm = Theorem::new("z", "|- Zero = Zero".parse().unwrap());
        let tasks = extract_subproof_tasks(&thm, &"reflexivity".parse().unwrap()).unwrap();
        assert_eq!(tasks.len(), 1);
        assert_eq!(tasks[0].script.len(), 1);
    }

    #[test]
    fn invalid_scripts_rejected() {
        assert!(matches!(
            extract_subproof_tasks(&add_zero(), &"intros".parse().unwrap()),
            Err(InvalidScript::Unfinished(1))
        ));
        assert!(matches!(
            extract_subproof_tasks(&add_zero(), &"simpl".parse().unwrap()),
            Err(InvalidScript::Replay(_))
        ));
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Entry, Equation, Obligation, Term};

/// Tactic names, in the fixed tie-break order used by the predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    Intros,
    Induction,
    Simpl,
    Rewrite,
    FEqual,
    Reflexivity,
}

impl Template {
    pub const ALL: [Template; 6] = [
        Template::Intros,
        Template::Induction,
        Template::Simpl,
        Template::Rewrite,
        Template::FEqual,
        Template::Reflexivity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Template::Intros => "intros",
            Template::Induction => "induction",
            Template::Simpl => "simpl",
            Template::Rewrite => "rewrite",
            Template::FEqual => "f_equal",
            Template::Reflexivity => "reflexivity",
        }
    }

    pub fn takes_argument(self) -> bool {
        matches!(self, Template::Induction | Template::Rewrite)
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tactic {
    Intros,
    Induction(String),
    Simpl,
    Rewrite(String),
    FEqual,
    Reflexivity,
}

impl Tactic {
    pub fn template(&self) -> Template {
        match self {
            Tactic::Intros => Template::Intros,
            Tactic::Induction(_) => Template::Induction,
            Tactic::Simpl => Template::Simpl,
            Tactic::Rewrite(_) => Template::Rewrite,
            Tactic::FEqual => Template::FEqual,
            Tactic::Reflexivity => Template::Reflexivity,
        }
    }

    pub fn argument(&self) -> Option<&str> {
        match self {
            Tactic::Induction(a) | Tactic::Rewrite(a) => Some(a),
            _ => None,
        }
    }

    pub fn with_argument(template: Template, arg: Option<String>) -> Result<Tactic, String> {
        match (template, arg) {
            (Template::Intros, None) => Ok(Tactic::Intros),
            (Template::Simpl, None) => Ok(Tactic::Simpl),
            (Template::FEqual, None) => Ok(Tactic::FEqual),
            (Template::Reflexivity, None) => Ok(Tactic::Reflexivity),
            (Template::Induction, Some(a)) => Ok(Tactic::Induction(a)),
            (Template::Rewrite, Some(a)) => Ok(Tactic::Rewrite(a)),
            (t, Some(_)) => Err(format!("`{t}` takes no argument")),
            (t, None) => Err(format!("`{t}` requires an argument")),
        }
    }

    pub(crate) fn from_parts(name: &str, arg: Option<String>) -> Result<Tactic, String> {
        let template = Template::ALL
            .into_iter()
            .find(|t| t.name() == name)
            .ok_or_else(|| format!("unknown tactic `{name}`"))?;
        Tactic::with_argument(template, arg)
    }
}

impl fmt::Display for Tactic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.argument() {
            Some(a) => write!(f, "{} {a}", self.template()),
            None => write!(f, "{}", self.template()),
        }
    }
}

impl std::str::FromStr for Tactic {
    type Err = super::SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        super::parse_tactic(s)
    }
}

/// Why a tactic does not apply. Each variant names the violated precondition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TacticError {
    #[error("intros: no binders to introduce")]
    NoBinders,
    #[error("induction: binders must be introduced first")]
    BindersPresent,
    #[error("induction: `{0}` is not a context variable")]
    NotAContextVariable(String),
    #[error("induction: `{0}` does not occur in the goal")]
    VariableNotInGoal(String),
    #[error("simpl: goal is already in normal form")]
    NoProgress,
    #[error("rewrite: no hypothesis named `{0}`")]
    NoSuchHypothesis(String),
    #[error("rewrite: left side of `{0}` does not occur in the goal")]
    PatternNotFound(String),
    #[error("f_equal: goal is not of the form Succ(a) = Succ(b)")]
    NotSuccEquation,
    #[error("reflexivity: sides differ")]
    NotReflexive,
}

/// Applies `tactic` to `ob`. Pure and deterministic.
pub fn apply_tactic(ob: &Obligation, tactic: &Tactic) -> Result<Vec<Obligation>, TacticError> {
    let goal = ob.goal();
    match tactic {
        Tactic::Intros => {
            if ob.binders().is_empty() {
                return Err(TacticError::NoBinders);
            }
            let mut context = ob.context().to_vec();
            context.extend(ob.binders().iter().map(|b| (b.clone(), Entry::Var)));
            Ok(vec![Obligation::from_parts_unchecked(
                Vec::new(),
                context,
                goal.clone(),
            )])
        }
        Tactic::Induction(v) => induction(ob, v),
        Tactic::Simpl => {
            let next = Equation::new(goal.lhs.normalize(), goal.rhs.normalize());
            if &next == goal {
                return Err(TacticError::NoProgress);
            }
            Ok(vec![with_goal(ob, next)])
        }
        Tactic::Rewrite(h) => {
            let eq = ob
                .hypothesis(h)
                .ok_or_else(|| TacticError::NoSuchHypothesis(h.clone()))?;
            let next = if let Some(l) = goal.lhs.replace_innermost(&eq.lhs, &eq.rhs) {
                Equation::new(l, goal.rhs.clone())
            } else if let Some(r) = goal.rhs.replace_innermost(&eq.lhs, &eq.rhs) {
                Equation::new(goal.lhs.clone(), r)
            } else {
                return Err(TacticError::PatternNotFound(h.clone()));
            };
            Ok(vec![with_goal(ob, next)])
        }
        Tactic::FEqual => match (&goal.lhs, &goal.rhs) {
            (Term::Succ(a), Term::Succ(b)) => Ok(vec![with_goal(
                ob,
                Equation::new((**a).clone(), (**b).clone()),
            )]),
            _ => Err(TacticError::NotSuccEquation),
        },
        Tactic::Reflexivity => {
            if goal.lhs == goal.rhs {
                Ok(Vec::new())
            } else {
                Err(TacticError::NotReflexive)
            }
        }
    }
}

fn with_goal(ob: &Obligation, goal: Equation) -> Obligation {
    Obligation::from_parts_unchecked(ob.binders().to_vec(), ob.context().to_vec(), goal)
}

// Hypotheses mentioning the induction variable are cleared in both cases:
// the step hypothesis is the unconditional goal[v:=v'], which is only
// sound when nothing else in scope depends on v.
fn induction(ob: &Obligation, v: &str) -> Result<Vec<Obligation>, TacticError> {
    if !ob.binders().is_empty() {
        return Err(TacticError::BindersPresent);
    }
    if !ob.context_vars().any(|c| c == v) {
        return Err(TacticError::NotAContextVariable(v.to_string()));
    }
    let goal = ob.goal();
    if !goal.mentions(v) {
        return Err(TacticError::VariableNotInGoal(v.to_string()));
    }
    let keep = |entry: &Entry| match entry {
        Entry::Var => true,
        Entry::Hyp(eq) => !eq.mentions(v),
    };

    let base_ctx: Vec<(String, Entry)> = ob
        .context()
        .iter()
        .filter(|(n, e)| n != v && keep(e))
        .cloned()
        .collect();
    let base = Obligation::from_parts_unchecked(Vec::new(), base_ctx, goal.subst(v, &Term::Zero));

    let fresh = ob.fresh_name(v);
    let ih_name = ob.fresh_name(&format!("IH_{v}"));
    let fresh_var = Term::Var(fresh.clone());
    let mut step_ctx: Vec<(String, Entry)> = ob
        .context()
        .iter()
        .filter(|(_, e)| keep(e))
        .map(|(n, e)| {
            if n == v {
                (fresh.clone(), Entry::Var)
            } else {
                (n.clone(), e.clone())
            }
        })
        .collect();
    step_ctx.push((ih_name, Entry::Hyp(goal.subst(v, &fresh_var))));
    let step = Obligation::from_parts_unchecked(
        Vec::new(),
        step_ctx,
        goal.subst(v, &Term::succ(fresh_var)),
    );
    Ok(vec![base, step])
}

/// Every template with every legal argument drawn from the context, in
/// template order then context order.
pub fn candidate_tactics(ob: &Obligation) -> Vec<Tactic> {
    let mut out = vec![Tactic::Intros];
    out.extend(ob.context_vars().map(|v| Tactic::Induction(v.to_string())));
    out.push(Tactic::Simpl);
    out.extend(ob.hypotheses().map(|(h, _)| Tactic::Rewrite(h.to_string())));
    out.push(Tactic::FEqual);
    out.push(Tactic::Reflexivity);
    out
}

/// All tactics that apply without error, with their results.
pub fn enumerate_applicable(ob: &Obligation) -> Vec<(Tactic, Vec<Obligation>)> {
    candidate_tactics(ob)
        .into_iter()
        .filter_map(|t| apply_tactic(ob, &t).ok().map(|r| (t, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ob(s: &str) -> Obligation {
        s.parse().unwrap()
    }

    #[test]
    fn simpl_example() {
        let r = apply_tactic(&ob("|- Plus(Zero,Zero) = Zero"), &Tactic::Simpl).unwrap();
        assert_eq!(r, vec![ob("|- Zero = Zero")]);
        assert_eq!(
            apply_tactic(&ob("|- Zero = Zero"), &Tactic::Simpl),
            Err(TacticError::NoProgress)
        );
    }

    #[test]
    fn reflexivity_example() {
        assert!(apply_tactic(&ob("|- Zero = Zero"), &Tactic::Reflexivity)
            .unwrap()
            .is_empty());
        assert_eq!(
            apply_tactic(&ob("|- Zero = Succ(Zero)"), &Tactic::Reflexivity),
            Err(TacticError::NotReflexive)
        );
    }

    #[test]
    fn induction_example() {
        let r = apply_tactic(
            &ob("n |- Plus(Var(n),Zero) = Var(n)"),
            &Tactic::Induction("n".into()),
        )
        .unwrap();
        assert_eq!(
            r,
            vec![
                ob("|- Plus(Zero,Zero) = Zero"),
                ob("n'; IH_n: Plus(Var(n'),Zero) = Var(n') |- Plus(Succ(Var(n')),Zero) = Succ(Var(n'))"),
            ]
        );
    }

    #[test]
    fn induction_preconditions() {
        let with_binder = ob("forall n, |- Plus(Var(n),Zero) = Var(n)");
        assert_eq!(
            apply_tactic(&with_binder, &Tactic::Induction("n".into())),
            Err(TacticError::BindersPresent)
        );
        let o = ob("n; m |- Plus(Var(n),Zero) = Var(n)");
        assert_eq!(
            apply_tactic(&o, &Tactic::Induction("m".into())),
            Err(TacticError::VariableNotInGoal("m".into()))
        );
        assert_eq!(
            apply_tactic(&o, &Tactic::Induction("k".into())),
            Err(TacticError::NotAContextVariable("k".into()))
        );
    }

    #[test]
    fn induction_clears_dependent_hypotheses() {
        let o = ob("n'; IH_n: Plus(Var(n'),Zero) = Var(n') |- Plus(Succ(Var(n')),Zero) = Succ(Var(n'))");
        let r = apply_tactic(&o, &Tactic::Induction("n'".into())).unwrap();
        assert_eq!(r[0], ob("|- Plus(Succ(Zero),Zero) = Succ(Zero)"));
        assert_eq!(
            r[1],
            ob("n''; IH_n': Plus(Succ(Var(n'')),Zero) = Succ(Var(n'')) |- Plus(Succ(Succ(Var(n''))),Zero) = Succ(Succ(Var(n'')))")
        );
    }

    #[test]
    fn rewrite_scans_lhs_then_rhs() {
        let o = ob("n; H: Var(n) = Zero |- Succ(Zero) = Succ(Var(n))");
        let r = apply_tactic(&o, &Tactic::Rewrite("H".into())).unwrap();
        assert_eq!(r[0].goal().to_string(), "Succ(Zero) = Succ(Zero)");
        assert_eq!(
            apply_tactic(&o, &Tactic::Rewrite("G".into())),
            Err(TacticError::NoSuchHypothesis("G".into()))
        );
        let o2 = ob("n; H: Plus(Var(n),Zero) = Var(n) |- Zero = Zero");
        assert_eq!(
            apply_tactic(&o2, &Tactic::Rewrite("H".into())),
            Err(TacticError::PatternNotFound("H".into()))
        );
    }

    #[test]
    fn intros_and_f_equal() {
        let r = apply_tactic(&ob("forall n m, |- Var(n) = Var(m)"), &Tactic::Intros).unwrap();
        assert_eq!(r, vec![ob("n; m |- Var(n) = Var(m)")]);
        assert_eq!(
            apply_tactic(&ob("|- Zero = Zero"), &Tactic::Intros),
            Err(TacticError::NoBinders)
        );
        let r = apply_tactic(&ob("|- Succ(Zero) = Succ(Plus(Zero,Zero))"), &Tactic::FEqual).unwrap();
        assert_eq!(r, vec![ob("|- Zero = Plus(Zero,Zero)")]);
        assert_eq!(
            apply_tactic(&ob("|- Zero = Succ(Zero)"), &Tactic::FEqual),
            Err(TacticError::NotSuccEquation)
        );
    }

    #[test]
    fn enumerate_covers_arguments() {
        let o = ob("n; m; H: Var(n) = Var(m) |- Plus(Var(n),Var(m)) = Plus(Var(m),Var(n))");
        let names: Vec<String> = enumerate_applicable(&o)
            .into_iter()
            .map(|(t, _)| t.to_string())
            .collect();
        assert_eq!(names, ["induction n", "induction m", "rewrite H"]);
    }
}

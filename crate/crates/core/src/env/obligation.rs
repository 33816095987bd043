use std::fmt;

use thiserror::Error;

use super::Term;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Equation { lhs, rhs }
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.lhs.contains(t) || self.rhs.contains(t)
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.lhs.mentions(name) || self.rhs.mentions(name)
    }

    pub fn subst(&self, name: &str, with: &Term) -> Equation {
        Equation::new(self.lhs.subst(name, with), self.rhs.subst(name, with))
    }

    pub fn size(&self) -> usize {
        self.lhs.size() + self.rhs.size()
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// A named context entry: an introduced variable or a hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entry {
    Var,
    Hyp(Equation),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormedError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("`{0}` is not a valid identifier")]
    BadName(String),
}

/// One open goal: binders not yet introduced, a context, and the equation
/// to prove. Equality is structural, which coincides with equality of
/// canonical text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Obligation {
    binders: Vec<String>,
    context: Vec<(String, Entry)>,
    goal: Equation,
}

impl Obligation {
    pub fn new(
        binders: Vec<String>,
        context: Vec<(String, Entry)>,
        goal: Equation,
    ) -> Result<Self, WellFormedError> {
        let mut seen: Vec<&str> = Vec::new();
        for name in binders.iter().chain(context.iter().map(|(n, _)| n)) {
            if !super::syntax::is_identifier(name)
                || super::syntax::RESERVED.contains(&name.as_str())
            {
                return Err(WellFormedError::BadName(name.clone()));
            }
            if seen.contains(&name.as_str()) {
                return Err(WellFormedError::DuplicateName(name.clone()));
            }
            seen.push(name);
        }
        let is_var = |v: &str| {
            binders.iter().any(|b| b == v)
                || context
                    .iter()
                    .any(|(n, e)| n == v && matches!(e, Entry::Var))
        };
        let mut vars = Vec::new();
        for (_, e) in &context {
            if let Entry::Hyp(eq) = e {
                eq.lhs.collect_vars(&mut vars);
                eq.rhs.collect_vars(&mut vars);
            }
        }
        goal.lhs.collect_vars(&mut vars);
        goal.rhs.collect_vars(&mut vars);
        if let Some(v) = vars.into_iter().find(|v| !is_var(v)) {
            return Err(WellFormedError::Unbound(v.to_string()));
        }
        Ok(Obligation {
            binders,
            context,
            goal,
        })
    }

    /// Closed statement `forall binders, |- lhs = rhs`.
    pub fn statement(binders: &[&str], lhs: Term, rhs: Term) -> Result<Self, WellFormedError> {
        Obligation::new(
            binders.iter().map(|s| s.to_string()).collect(),
            Vec::new(),
            Equation::new(lhs, rhs),
        )
    }

    pub(crate) fn from_parts_unchecked(
        binders: Vec<String>,
        context: Vec<(String, Entry)>,
        goal: Equation,
    ) -> Self {
        debug_assert!(Obligation::new(binders.clone(), context.clone(), goal.clone()).is_ok());
        Obligation {
            binders,
            context,
            goal,
        }
    }

    pub fn binders(&self) -> &[String] {
        &self.binders
    }

    pub fn context(&self) -> &[(String, Entry)] {
        &self.context
    }

    pub fn goal(&self) -> &Equation {
        &self.goal
    }

    pub fn context_vars(&self) -> impl Iterator<Item = &str> {
        self.context
            .iter()
            .filter(|(_, e)| matches!(e, Entry::Var))
            .map(|(n, _)| n.as_str())
    }

    pub fn hypotheses(&self) -> impl Iterator<Item = (&str, &Equation)> {
        self.context.iter().filter_map(|(n, e)| match e {
            Entry::Hyp(eq) => Some((n.as_str(), eq)),
            Entry::Var => None,
        })
    }

    pub fn hypothesis(&self, name: &str) -> Option<&Equation> {
        self.hypotheses().find(|(n, _)| *n == name).map(|(_, eq)| eq)
    }

    pub fn name_in_use(&self, name: &str) -> bool {
        self.binders.iter().any(|b| b == name) || self.context.iter().any(|(n, _)| n == name)
    }

    /// `base` with apostrophes appended until unused.
    pub fn fresh_name(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.name_in_use(&name) {
            name.push('\'');
        }
        name
    }

    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.binders.is_empty() {
            write!(f, "forall {}, ", self.binders.join(" "))?;
        }
        for (i, (name, entry)) in self.context.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match entry {
                Entry::Var => f.write_str(name)?,
                Entry::Hyp(eq) => write!(f, "{name}: {eq}")?,
            }
        }
        if !self.context.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "|- {}", self.goal)
    }
}

impl std::str::FromStr for Obligation {
    type Err = super::SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        super::parse_obligation(s)
    }
}

/// The ordered list of open obligations. Tactics focus the first one.
///
/// Equality and hashing treat the list as a multiset of canonical forms,
/// which is the identity search uses for deduplication.
#[derive(Debug, Clone, Default)]
pub struct Hyperstate {
    obligations: Vec<Obligation>,
}

impl Hyperstate {
    pub fn new(obligations: Vec<Obligation>) -> Self {
        Hyperstate { obligations }
    }

    pub fn single(ob: Obligation) -> Self {
        Hyperstate {
            obligations: vec![ob],
        }
    }

    pub fn obligations(&self) -> &[Obligation] {
        &self.obligations
    }

    pub fn first(&self) -> Option<&Obligation> {
        self.obligations.first()
    }

    pub fn is_empty(&self) -> bool {
        self.obligations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.obligations.len()
    }

    /// Sorted canonical forms joined by newlines; equal iff multiset-equal.
    pub fn key(&self) -> String {
        let mut forms: Vec<String> = self.obligations.iter().map(|o| o.to_string()).collect();
        forms.sort();
        forms.join("\n")
    }

    /// Replaces the first obligation by `replacement`, in order.
    pub(crate) fn splice_first(&self, replacement: Vec<Obligation>) -> Hyperstate {
        let mut obligations = replacement;
        obligations.extend(self.obligations.iter().skip(1).cloned());
        Hyperstate { obligations }
    }
}

impl PartialEq for Hyperstate {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.key() == other.key()
    }
}

impl Eq for Hyperstate {}

impl std::hash::Hash for Hyperstate {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl fmt::Display for Hyperstate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, ob) in self.obligations.iter().enumerate() {
            if i > 0 {
                f.write_str(" ;; ")?;
            }
            write!(f, "{ob}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Theorem {
    pub id: String,
    pub statement: Obligation,
}

impl Theorem {
    pub fn new(id: impl Into<String>, statement: Obligation) -> Self {
        Theorem {
            id: id.into(),
            statement,
        }
    }

    pub fn initial(&self) -> Hyperstate {
        Hyperstate::single(self.statement.clone())
    }
}

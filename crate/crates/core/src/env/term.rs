use std::fmt;

/// Peano terms over `Zero`, `Succ`, `Plus` and named variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Zero,
    Succ(Box<Term>),
    Plus(Box<Term>, Box<Term>),
    Var(String),
}

impl Term {
    pub fn succ(t: Term) -> Term {
        Term::Succ(Box::new(t))
    }

    pub fn plus(l: Term, r: Term) -> Term {
        Term::Plus(Box::new(l), Box::new(r))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    /// `Succ` applied `k` times to `Zero`.
    pub fn numeral(k: usize) -> Term {
        Term::succ_n(k, Term::Zero)
    }

    pub fn succ_n(k: usize, t: Term) -> Term {
        (0..k).fold(t, |acc, _| Term::succ(acc))
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            Term::Zero | Term::Var(_) => 1,
            Term::Succ(t) => 1 + t.size(),
            Term::Plus(l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn contains(&self, needle: &Term) -> bool {
        if self == needle {
            return true;
        }
        match self {
            Term::Zero | Term::Var(_) => false,
            Term::Succ(t) => t.contains(needle),
            Term::Plus(l, r) => l.contains(needle) || r.contains(needle),
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Term::Zero => false,
            Term::Var(v) => v == name,
            Term::Succ(t) => t.mentions(name),
            Term::Plus(l, r) => l.mentions(name) || r.mentions(name),
        }
    }

    pub fn subst(&self, name: &str, with: &Term) -> Term {
        match self {
            Term::Zero => Term::Zero,
            Term::Var(v) if v == name => with.clone(),
            Term::Var(_) => self.clone(),
            Term::Succ(t) => Term::succ(t.subst(name, with)),
            Term::Plus(l, r) => Term::plus(l.subst(name, with), r.subst(name, with)),
        }
    }

    pub fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Zero => {}
            Term::Var(v) => out.push(v),
            Term::Succ(t) => t.collect_vars(out),
            Term::Plus(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn is_redex(&self) -> bool {
        matches!(self, Term::Plus(l, _) if matches!(**l, Term::Zero | Term::Succ(_)))
    }

    pub fn has_zero_redex(&self) -> bool {
        match self {
            Term::Plus(l, r) => **l == Term::Zero || l.has_zero_redex() || r.has_zero_redex(),
            Term::Succ(t) => t.has_zero_redex(),
            _ => false,
        }
    }

    pub fn has_succ_redex(&self) -> bool {
        match self {
            Term::Plus(l, r) => {
                matches!(**l, Term::Succ(_)) || l.has_succ_redex() || r.has_succ_redex()
            }
            Term::Succ(t) => t.has_succ_redex(),
            _ => false,
        }
    }

    /// One leftmost-outermost rewrite under
    /// `Plus(Zero,n) -> n` and `Plus(Succ(m),n) -> Succ(Plus(m,n))`.
    pub fn simpl_step(&self) -> Option<Term> {
        match self {
            Term::Plus(l, r) => match &**l {
                Term::Zero => Some((**r).clone()),
                Term::Succ(m) => Some(Term::succ(Term::Plus(m.clone(), r.clone()))),
                _ => {
                    if let Some(l2) = l.simpl_step() {
                        Some(Term::Plus(Box::new(l2), r.clone()))
                    } else {
                        r.simpl_step().map(|r2| Term::Plus(l.clone(), Box::new(r2)))
                    }
                }
            },
            Term::Succ(t) => t.simpl_step().map(Term::succ),
            Term::Zero | Term::Var(_) => None,
        }
    }

    /// Normal form. Terminates: every step shrinks the total size of
    /// left `Plus` arguments.
    pub fn normalize(&self) -> Term {
        let mut cur = self.clone();
        while let Some(next) = cur.simpl_step() {
            cur = next;
        }
        cur
    }

    /// Replaces the first occurrence of `from` in post-order (children
    /// left to right before the node itself) by `to`.
    pub fn replace_innermost(&self, from: &Term, to: &Term) -> Option<Term> {
        let inner = match self {
            Term::Zero | Term::Var(_) => None,
            Term::Succ(t) => t.replace_innermost(from, to).map(Term::succ),
            Term::Plus(l, r) => match l.replace_innermost(from, to) {
                Some(l2) => Some(Term::Plus(Box::new(l2), r.clone())),
                None => r
                    .replace_innermost(from, to)
                    .map(|r2| Term::Plus(l.clone(), Box::new(r2))),
            },
        };
        inner.or_else(|| (self == from).then(|| to.clone()))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Zero => f.write_str("Zero"),
            Term::Succ(t) => write!(f, "Succ({t})"),
            Term::Plus(l, r) => write!(f, "Plus({l},{r})"),
            Term::Var(v) => write!(f, "Var({v})"),
        }
    }
}

//! Deterministic Peano equational proving environment.
//!
//! Terms are built from `Zero`, `Succ`, `Plus` and variables. An
//! [`Obligation`] is one open goal; a [`Hyperstate`] is the ordered list
//! of open goals in a proof attempt. Tactics always act on the first
//! obligation.

mod obligation;
mod script;
mod syntax;
mod tactic;
mod term;

pub use obligation::{Entry, Equation, Hyperstate, Obligation, Theorem, WellFormedError};
pub use script::{
    extract_subproof_tasks, proves, replay_from, replay_script, step_hyperstate, InvalidScript,
    ProofScript, ReplayError, StepError, SubproofTask, Trace, TraceStep,
};
pub use syntax::{
    lex, obligation_from_tokens, parse_obligation, parse_script, parse_tactic, parse_term,
    SyntaxError, Token,
};
pub use tactic::{
    apply_tactic, candidate_tactics, enumerate_applicable, Tactic, TacticError, Template,
};
pub use term::Term;

// Canonical text is the serialized form everywhere.
macro_rules! serde_via_text {
    ($($ty:ty),*) => {$(
        impl serde::Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> serde::Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = <std::borrow::Cow<'de, str>>::deserialize(d)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    )*};
}

serde_via_text!(Obligation, Tactic, ProofScript);

//! Value-guided proof search for a toy Peano equational prover.
//!
//! A value model estimates `gamma^steps` for each open obligation; values of
//! a proof state multiply across its obligations, so discharging a goal needs
//! no explicit reward. The model is trained from proof demonstrations and
//! exploration and then drives A*, best-first and greedy search.

pub mod corpus;
pub mod encoder;
pub mod env;
pub mod eval;
pub mod oracle;
pub mod predictor;
pub mod search;
pub mod trainer;
pub mod value;

//! Henkin function synthesis for dependency quantified Boolean formulas.
//!
//! Candidate functions are learned as decision trees from models of the
//! matrix, checked with a SAT-based error formula, and repaired from
//! counterexamples using MaxSAT and unsat cores.

pub mod engine;
pub mod formula;
pub mod gen;
pub mod learner;
pub mod oracle;
pub mod repair;
pub mod sampler;
pub mod sat;
pub mod verifier;

pub use engine::{
    substitute, synthesize, synthesize_from_candidates, synthesize_with_samples, OutcomeKind,
    SynthesisConfig, SynthesisOutcome, SynthesisStats,
};
pub use formula::{
    parse_dqdimacs, read_henkin_vector, write_henkin_vector, Assignment, BoolExpr, DqbfInstance,
    HenkinVector, Lit, Var,
};

//! Candidate learning: one decision tree per existential, trained on the
//! sample table with features restricted by the Henkin sets and by the
//! dependencies recorded so far.

mod candidate;
mod deps;
mod tree;

pub use candidate::{candidate_hkf, learn_candidates, learn_with_features, Candidate};
pub use deps::{CycleError, DepState, Order};
pub use tree::{default_max_depth, learn_tree, learn_tree_rows, tree_to_expr, DecisionTree};

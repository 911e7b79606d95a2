use std::collections::{BTreeMap, BTreeSet};

use super::deps::DepState;
use super::tree::{default_max_depth, learn_tree, DecisionTree};
use crate::formula::{BoolExpr, DqbfInstance, HenkinVector, Var};
use crate::sampler::SampleTable;

/// A learned candidate function together with the tree it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub expr: BoolExpr,
    pub tree: DecisionTree,
    pub features: BTreeSet<Var>,
}

/// Learns `y`'s candidate from `table` over `features` and records every
/// existential the result reads in `dep`.
pub fn learn_with_features(
    instance: &DqbfInstance,
    table: &SampleTable,
    y: Var,
    features: BTreeSet<Var>,
    dep: &mut DepState,
) -> Candidate {
    let tree = learn_tree(&features, table, y, default_max_depth(features.len()));
    let expr = tree.to_expr();
    for used in expr.vars() {
        debug_assert!(features.contains(&used));
        if instance.is_existential(used) {
            dep.record_usage(y, used);
        }
    }
    Candidate {
        expr,
        tree,
        features,
    }
}

pub fn candidate_hkf(
    instance: &DqbfInstance,
    table: &SampleTable,
    y: Var,
    dep: &mut DepState,
) -> Candidate {
    let features = dep.feature_set(instance, y);
    learn_with_features(instance, table, y, features, dep)
}

/// Candidates for every existential in ascending id order.
pub fn learn_candidates(
    instance: &DqbfInstance,
    table: &SampleTable,
    dep: &mut DepState,
) -> (HenkinVector, BTreeMap<Var, Candidate>) {
    let mut vector = HenkinVector::new();
    let mut learned = BTreeMap::new();
    for &y in instance.existentials() {
        let c = candidate_hkf(instance, table, y, dep);
        vector.set(y, c.expr.clone());
        learned.insert(y, c);
    }
    (vector, learned)
}

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use thiserror::Error;

use crate::formula::{DqbfInstance, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dependency relation has a cycle through {0:?}")]
pub struct CycleError(pub Vec<Var>);

/// For each existential `y`, the set `d(y)` of existentials that depend on
/// `y` (and therefore must not be used by `y`'s function).
///
/// The relation is kept transitively closed, so a pair `(y, y)` is the only
/// possible witness of a cycle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DepState {
    d: BTreeMap<Var, BTreeSet<Var>>,
}

impl DepState {
    pub fn empty<'a, I: IntoIterator<Item = &'a Var>>(existentials: I) -> Self {
        DepState {
            d: existentials.into_iter().map(|&y| (y, BTreeSet::new())).collect(),
        }
    }

    /// Whenever `H_j ⊊ H_i`, `y_i` is added to `d(y_j)`: `y_i` may read
    /// `y_j`, so `y_j` must never read `y_i`.
    pub fn init_dependencies(instance: &DqbfInstance) -> Self {
        let mut dep = DepState::empty(instance.existentials());
        let sets = instance.henkin_sets();
        for (&yi, hi) in sets {
            for (&yj, hj) in sets {
                if hj.len() < hi.len() && hj.is_subset(hi) {
                    dep.d.get_mut(&yj).unwrap().insert(yi);
                }
            }
        }
        dep
    }

    pub fn dependents(&self, y: Var) -> &BTreeSet<Var> {
        &self.d[&y]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &BTreeSet<Var>)> {
        self.d.iter().map(|(&y, s)| (y, s))
    }

    pub fn may_use(&self, user: Var, used: Var) -> bool {
        user != used && !self.d[&user].contains(&used)
    }

    /// `H_i` together with every existential `y_j ≠ y_i` with `H_j ⊆ H_i`
    /// that does not depend on `y_i`.
    pub fn feature_set(&self, instance: &DqbfInstance, yi: Var) -> BTreeSet<Var> {
        let hi = instance.henkin(yi);
        let mut feats = hi.clone();
        for (&yj, hj) in instance.henkin_sets() {
            if hj.is_subset(hi) && self.may_use(yi, yj) {
                feats.insert(yj);
            }
        }
        feats
    }

    /// Records that the function of `user` reads `used`. Everything that
    /// depends on `user` now depends on `used` and on whatever `used`
    /// depends on.
    pub fn record_usage(&mut self, user: Var, used: Var) {
        assert!(
            self.may_use(user, used),
            "{user:?} may not read {used:?}: it would close a dependency cycle"
        );
        let mut added = self.d[&user].clone();
        added.insert(user);
        let targets: Vec<Var> = std::iter::once(used)
            .chain(self.d.iter().filter(|(_, s)| s.contains(&used)).map(|(&a, _)| a))
            .collect();
        for t in targets {
            self.d.get_mut(&t).unwrap().extend(added.iter().copied());
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.find_order().is_ok()
    }

    /// Linear extension in which every variable comes before the variables
    /// it may read: `y_i ∈ d(y_j)` puts `y_j` at a higher index than `y_i`.
    /// Ties go to the smallest id.
    pub fn find_order(&self) -> Result<Order, CycleError> {
        // Edge yi -> yj for yi ∈ d(yj): yi must precede yj.
        let mut indegree: BTreeMap<Var, usize> =
            self.d.iter().map(|(&yj, set)| (yj, set.len())).collect();
        let mut ready: BinaryHeap<Reverse<Var>> = indegree
            .iter()
            .filter(|(_, &n)| n == 0)
            .map(|(&y, _)| Reverse(y))
            .collect();
        let mut seq = Vec::with_capacity(self.d.len());
        while let Some(Reverse(yi)) = ready.pop() {
            seq.push(yi);
            for (&yj, set) in &self.d {
                if set.contains(&yi) {
                    let n = indegree.get_mut(&yj).unwrap();
                    *n -= 1;
                    if *n == 0 {
                        ready.push(Reverse(yj));
                    }
                }
            }
        }
        if seq.len() != self.d.len() {
            let stuck = indegree
                .into_iter()
                .filter(|(y, _)| !seq.contains(y))
                .map(|(y, _)| y)
                .collect();
            return Err(CycleError(stuck));
        }
        Ok(Order::new(seq))
    }
}

/// A total order over the existentials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Order {
    seq: Vec<Var>,
    index: BTreeMap<Var, usize>,
}

impl Order {
    pub fn new(seq: Vec<Var>) -> Self {
        let index = seq.iter().enumerate().map(|(i, &y)| (y, i)).collect();
        Order { seq, index }
    }

    pub fn index(&self, y: Var) -> usize {
        self.index[&y]
    }

    pub fn as_slice(&self) -> &[Var] {
        &self.seq
    }

    pub fn is_linear_extension(&self, dep: &DepState) -> bool {
        dep.iter()
            .all(|(yj, set)| set.iter().all(|&yi| self.index(yi) < self.index(yj)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Cnf, DqbfInstance};

    fn v(i: u32) -> Var {
        Var::new(i)
    }

    fn instance(henkin: &[(u32, &[u32])], nx: u32) -> DqbfInstance {
        let xs = (1..=nx).map(Var::new).collect();
        let h = henkin
            .iter()
            .map(|(y, hs)| (v(*y), hs.iter().map(|&x| v(x)).collect()))
            .collect();
        DqbfInstance::new(xs, h, Cnf::new(0), false).unwrap()
    }

    fn example() -> DqbfInstance {
        instance(&[(4, &[1]), (5, &[1, 2]), (6, &[2, 3])], 3)
    }

    #[test]
    fn init_on_example() {
        let dep = DepState::init_dependencies(&example());
        assert_eq!(dep.dependents(v(4)), &BTreeSet::from([v(5)]));
        assert!(dep.dependents(v(5)).is_empty());
        assert!(dep.dependents(v(6)).is_empty());
    }

    #[test]
    fn init_equal_sets_and_chains() {
        let eq = instance(&[(3, &[1]), (4, &[1])], 2);
        let dep = DepState::init_dependencies(&eq);
        assert!(dep.iter().all(|(_, s)| s.is_empty()));

        let chain = instance(&[(4, &[1]), (5, &[1, 2]), (6, &[1, 2, 3])], 3);
        let dep = DepState::init_dependencies(&chain);
        assert_eq!(dep.dependents(v(4)), &BTreeSet::from([v(5), v(6)]));
        assert_eq!(dep.dependents(v(5)), &BTreeSet::from([v(6)]));
    }

    #[test]
    fn feature_sets_on_example() {
        let i = example();
        let dep = DepState::init_dependencies(&i);
        assert_eq!(dep.feature_set(&i, v(4)), BTreeSet::from([v(1)]));
        assert_eq!(dep.feature_set(&i, v(5)), BTreeSet::from([v(1), v(2), v(4)]));
        assert_eq!(dep.feature_set(&i, v(6)), BTreeSet::from([v(2), v(3)]));
    }

    #[test]
    fn feature_sets_with_equal_henkin_sets() {
        let i = instance(&[(3, &[1]), (4, &[1])], 2);
        let mut dep = DepState::init_dependencies(&i);
        assert!(dep.feature_set(&i, v(3)).contains(&v(4)));
        dep.record_usage(v(3), v(4));
        assert!(!dep.feature_set(&i, v(4)).contains(&v(3)));
    }

    #[test]
    fn usage_closure_prevents_cycles() {
        let i = instance(&[(2, &[1]), (3, &[1]), (4, &[1])], 1);
        let mut dep = DepState::init_dependencies(&i);
        dep.record_usage(v(2), v(4));
        dep.record_usage(v(3), v(2));
        // y4 now transitively feeds y3, so y4 must not read y3.
        assert!(!dep.may_use(v(4), v(3)));
        assert!(dep.is_acyclic());
    }

    #[test]
    fn order_examples() {
        let dep = DepState::init_dependencies(&example());
        let order = dep.find_order().unwrap();
        assert!(order.index(v(5)) < order.index(v(4)));
        assert!(order.is_linear_extension(&dep));

        let empty = DepState::empty(&[v(3), v(1), v(2)]);
        assert_eq!(empty.find_order().unwrap().as_slice(), &[v(1), v(2), v(3)]);

        let mut chain = DepState::empty(&[v(1), v(2), v(3)]);
        chain.d.get_mut(&v(1)).unwrap().insert(v(2));
        chain.d.get_mut(&v(2)).unwrap().insert(v(3));
        assert_eq!(chain.find_order().unwrap().as_slice(), &[v(3), v(2), v(1)]);
    }

    #[test]
    fn order_detects_cycle() {
        let mut dep = DepState::empty(&[v(1), v(2)]);
        dep.d.get_mut(&v(1)).unwrap().insert(v(2));
        dep.d.get_mut(&v(2)).unwrap().insert(v(1));
        assert!(dep.find_order().is_err());
    }
}

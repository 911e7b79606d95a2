use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write;

use crate::formula::{BoolExpr, Var};
use crate::sampler::SampleTable;

/// Binary decision tree over Boolean features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecisionTree {
    Leaf(bool),
    Node {
        feature: Var,
        low: Box<DecisionTree>,
        high: Box<DecisionTree>,
    },
}

/// Unbounded for small feature sets, 8 otherwise.
pub fn default_max_depth(num_features: usize) -> Option<usize> {
    if num_features <= 16 {
        None
    } else {
        Some(8)
    }
}

/// `p·q/n` of one side of a split, kept as an exact fraction.
#[derive(Clone, Copy)]
struct Impurity {
    num: u128,
    den: u128,
}

impl Impurity {
    /// Weighted Gini of a split, up to the constant factor `2/n`:
    /// `p0·q0/n0 + p1·q1/n1`.
    fn of_split(p0: u64, n0: u64, p1: u64, n1: u64) -> Self {
        let (p0, n0, p1, n1) = (p0 as u128, n0 as u128, p1 as u128, n1 as u128);
        Impurity {
            num: p0 * (n0 - p0) * n1 + p1 * (n1 - p1) * n0,
            den: n0 * n1,
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Learner<'a> {
    features: &'a [Var],
    rows: &'a [Vec<bool>],
    labels: &'a [bool],
    max_depth: Option<usize>,
}

impl Learner<'_> {
    fn majority(&self, idx: &[usize]) -> bool {
        let ones = idx.iter().filter(|&&r| self.labels[r]).count();
        2 * ones > idx.len()
    }

    fn grow(&self, idx: &[usize], available: &mut Vec<usize>, depth: usize) -> DecisionTree {
        let ones = idx.iter().filter(|&&r| self.labels[r]).count();
        if ones == 0 || ones == idx.len() {
            return DecisionTree::Leaf(ones > 0);
        }
        if available.is_empty() || self.max_depth.is_some_and(|m| depth >= m) {
            return DecisionTree::Leaf(self.majority(idx));
        }

        let mut best: Option<(usize, Impurity)> = None;
        for (slot, &f) in available.iter().enumerate() {
            let (mut n1, mut p1, mut p0) = (0u64, 0u64, 0u64);
            for &r in idx {
                match (self.rows[r][f], self.labels[r]) {
                    (true, l) => {
                        n1 += 1;
                        p1 += l as u64;
                    }
                    (false, l) => p0 += l as u64,
                }
            }
            let n0 = idx.len() as u64 - n1;
            if n0 == 0 || n1 == 0 {
                continue;
            }
            let imp = Impurity::of_split(p0, n0, p1, n1);
            // Ties go to the feature with the highest variable id.
            let better = match &best {
                None => true,
                Some((bslot, bimp)) => match imp.cmp(bimp) {
                    Ordering::Less => true,
                    Ordering::Equal => self.features[f] > self.features[available[*bslot]],
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((slot, imp));
            }
        }
        let Some((slot, _)) = best else {
            return DecisionTree::Leaf(self.majority(idx));
        };

        let f = available.remove(slot);
        let (hi, lo): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&r| self.rows[r][f]);
        let low = self.grow(&lo, available, depth + 1);
        let high = self.grow(&hi, available, depth + 1);
        available.insert(slot, f);
        DecisionTree::Node {
            feature: self.features[f],
            low: Box::new(low),
            high: Box::new(high),
        }
    }
}

/// Greedy top-down induction minimizing weighted Gini impurity. A node
/// becomes a leaf when it is pure, no feature is left, the depth cap is hit,
/// or no remaining feature separates its rows. Leaves take the majority
/// label, ties going to 0.
pub fn learn_tree_rows(
    features: &[Var],
    rows: &[Vec<bool>],
    labels: &[bool],
    max_depth: Option<usize>,
) -> DecisionTree {
    assert_eq!(rows.len(), labels.len());
    if rows.is_empty() {
        return DecisionTree::Leaf(false);
    }
    let learner = Learner {
        features,
        rows,
        labels,
        max_depth,
    };
    let idx: Vec<usize> = (0..rows.len()).collect();
    let mut available: Vec<usize> = (0..features.len()).collect();
    learner.grow(&idx, &mut available, 0)
}

pub fn learn_tree(
    features: &BTreeSet<Var>,
    table: &SampleTable,
    label: Var,
    max_depth: Option<usize>,
) -> DecisionTree {
    assert!(!features.contains(&label), "label {label:?} used as a feature");
    let feats: Vec<Var> = features.iter().copied().collect();
    let (rows, labels) = table.project(&feats, label);
    learn_tree_rows(&feats, &rows, &labels, max_depth)
}

impl DecisionTree {
    pub fn classify(&self, value: &dyn Fn(Var) -> bool) -> bool {
        let mut node = self;
        loop {
            match node {
                DecisionTree::Leaf(b) => return *b,
                DecisionTree::Node { feature, low, high } => {
                    node = if value(*feature) { high } else { low };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Node { low, high, .. } => 1 + low.depth().max(high.depth()),
        }
    }

    pub fn features(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_features(&mut out);
        out
    }

    fn collect_features(&self, out: &mut BTreeSet<Var>) {
        if let DecisionTree::Node { feature, low, high } = self {
            out.insert(*feature);
            low.collect_features(out);
            high.collect_features(out);
        }
    }

    /// Disjunction over root-to-leaf paths ending in a 1-leaf, each path
    /// being the conjunction of its tests. The 1-branch is visited first.
    pub fn to_expr(&self) -> BoolExpr {
        let mut paths = Vec::new();
        let mut path = Vec::new();
        self.collect_paths(&mut path, &mut paths);
        BoolExpr::or(paths.into_iter().map(BoolExpr::and))
    }

    fn collect_paths(&self, path: &mut Vec<BoolExpr>, out: &mut Vec<Vec<BoolExpr>>) {
        match self {
            DecisionTree::Leaf(true) => out.push(path.clone()),
            DecisionTree::Leaf(false) => {}
            DecisionTree::Node { feature, low, high } => {
                path.push(BoolExpr::var(*feature));
                high.collect_paths(path, out);
                path.pop();
                path.push(BoolExpr::var(*feature).negate());
                low.collect_paths(path, out);
                path.pop();
            }
        }
    }

    /// Indented listing, one node per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        self.dump_into(&mut s, 0, "");
        s
    }

    fn dump_into(&self, s: &mut String, indent: usize, edge: &str) {
        let pad = "  ".repeat(indent);
        match self {
            DecisionTree::Leaf(b) => {
                let _ = writeln!(s, "{pad}{edge}leaf {}", *b as u8);
            }
            DecisionTree::Node { feature, low, high } => {
                let _ = writeln!(s, "{pad}{edge}split {feature}");
                low.dump_into(s, indent + 1, "0: ");
                high.dump_into(s, indent + 1, "1: ");
            }
        }
    }
}

pub fn tree_to_expr(tree: &DecisionTree) -> BoolExpr {
    tree.to_expr()
}

use std::collections::{BTreeMap, BTreeSet};

use super::types::{Assignment, Cnf, Var};

/// `∀X ∃^{H_1} y_1 … ∃^{H_m} y_m. φ(X, Y)` with a CNF matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DqbfInstance {
    universals: BTreeSet<Var>,
    existentials: BTreeSet<Var>,
    henkin: BTreeMap<Var, BTreeSet<Var>>,
    matrix: Cnf,
    trivially_false: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("variable {0} is quantified twice")]
    DuplicateQuantifier(Var),
    #[error("Henkin set member {member} of {existential} is not universal")]
    NonUniversalDependency { existential: Var, member: Var },
    #[error("variable {0} occurs in the matrix but is not quantified")]
    FreeVariable(Var),
}

impl DqbfInstance {
    /// Builds an instance after checking the quantifier structure.
    ///
    /// `henkin` must have one entry per existential; the matrix is taken
    /// as-is (see [`DqbfInstance::normalized`]).
    pub fn new(
        universals: BTreeSet<Var>,
        henkin: BTreeMap<Var, BTreeSet<Var>>,
        matrix: Cnf,
        trivially_false: bool,
    ) -> Result<Self, InstanceError> {
        let existentials: BTreeSet<Var> = henkin.keys().copied().collect();
        if let Some(&v) = universals.intersection(&existentials).next() {
            return Err(InstanceError::DuplicateQuantifier(v));
        }
        for (&y, deps) in &henkin {
            if let Some(&m) = deps.iter().find(|m| !universals.contains(m)) {
                return Err(InstanceError::NonUniversalDependency {
                    existential: y,
                    member: m,
                });
            }
        }
        for clause in &matrix.clauses {
            for lit in clause.lits() {
                let v = lit.var();
                if !universals.contains(&v) && !existentials.contains(&v) {
                    return Err(InstanceError::FreeVariable(v));
                }
            }
        }
        let mut matrix = matrix;
        let max_quantified = universals
            .iter()
            .chain(existentials.iter())
            .map(|v| v.id())
            .max()
            .unwrap_or(0);
        matrix.num_vars = matrix.num_vars.max(max_quantified);
        Ok(DqbfInstance {
            universals,
            existentials,
            henkin,
            matrix,
            trivially_false,
        })
    }

    /// Drops tautological clauses and merges duplicate literals. An empty
    /// clause sets the trivially-false flag instead of being kept.
    pub fn normalized(mut self) -> Self {
        let mut clauses = Vec::with_capacity(self.matrix.clauses.len());
        for c in &self.matrix.clauses {
            match c.normalized() {
                None => {}
                Some(n) if n.is_empty() => self.trivially_false = true,
                Some(n) => clauses.push(n),
            }
        }
        self.matrix.clauses = clauses;
        self
    }

    pub fn universals(&self) -> &BTreeSet<Var> {
        &self.universals
    }

    pub fn existentials(&self) -> &BTreeSet<Var> {
        &self.existentials
    }

    /// # Panics
    ///
    /// Panics if `y` is not existential.
    pub fn henkin(&self, y: Var) -> &BTreeSet<Var> {
        &self.henkin[&y]
    }

    pub fn henkin_sets(&self) -> &BTreeMap<Var, BTreeSet<Var>> {
        &self.henkin
    }

    pub fn matrix(&self) -> &Cnf {
        &self.matrix
    }

    pub fn num_vars(&self) -> u32 {
        self.matrix.num_vars
    }

    /// The matrix contained an empty clause.
    pub fn is_trivially_false(&self) -> bool {
        self.trivially_false
    }

    pub fn is_universal(&self, v: Var) -> bool {
        self.universals.contains(&v)
    }

    pub fn is_existential(&self, v: Var) -> bool {
        self.existentials.contains(&v)
    }

    /// Universals followed by existentials, each ascending.
    pub fn variables(&self) -> Vec<Var> {
        self.universals
            .iter()
            .chain(self.existentials.iter())
            .copied()
            .collect()
    }

    /// φ evaluated under a total assignment of X ∪ Y.
    pub fn matrix_holds(&self, assignment: &Assignment) -> bool {
        !self.trivially_false && self.matrix.satisfied_by(assignment)
    }
}

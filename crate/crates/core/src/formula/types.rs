use std::collections::BTreeSet;
use std::fmt;
use std::ops::Not;

/// A propositional variable, numbered from 1 as in DIMACS.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    /// # Panics
    ///
    /// Panics if `id` is zero.
    pub fn new(id: u32) -> Self {
        assert!(id >= 1, "variable ids start at 1");
        Var(id)
    }

    pub fn id(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, false)
    }

    pub fn neg(self) -> Lit {
        Lit::new(self, true)
    }

    /// The literal asserting this variable takes `value`.
    pub fn lit(self, value: bool) -> Lit {
        Lit::new(self, !value)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A literal packed as `var << 1 | negated`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, negated: bool) -> Self {
        Lit(var.0 << 1 | negated as u32)
    }

    /// Returns `None` for 0, which is the DIMACS clause terminator.
    pub fn from_dimacs(value: i64) -> Option<Self> {
        if value == 0 {
            return None;
        }
        let id = u32::try_from(value.unsigned_abs()).ok()?;
        Some(Lit::new(Var::new(id), value < 0))
    }

    pub fn to_dimacs(self) -> i64 {
        let id = self.var().id() as i64;
        if self.is_negated() {
            -id
        } else {
            id
        }
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// The value the variable must take for this literal to be true.
    pub fn polarity(self) -> bool {
        !self.is_negated()
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    pub fn new(lits: Vec<Lit>) -> Self {
        Clause { lits }
    }

    pub fn unit(lit: Lit) -> Self {
        Clause { lits: vec![lit] }
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    /// Merges duplicate literals, keeping first-occurrence order. Returns
    /// `None` if the clause contains a complementary pair.
    pub fn normalized(&self) -> Option<Clause> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(self.lits.len());
        for &lit in &self.lits {
            if seen.contains(&!lit) {
                return None;
            }
            if seen.insert(lit) {
                out.push(lit);
            }
        }
        Some(Clause { lits: out })
    }

    /// Evaluates under a partial assignment; `None` if undetermined.
    pub fn eval(&self, assignment: &Assignment) -> Option<bool> {
        let mut undetermined = false;
        for &lit in &self.lits {
            match assignment.lit_value(lit) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => undetermined = true,
            }
        }
        if undetermined {
            None
        } else {
            Some(false)
        }
    }

    pub fn max_var(&self) -> u32 {
        self.lits.iter().map(|l| l.var().id()).max().unwrap_or(0)
    }
}

impl From<Vec<Lit>> for Clause {
    fn from(lits: Vec<Lit>) -> Self {
        Clause::new(lits)
    }
}

impl FromIterator<Lit> for Clause {
    fn from_iter<I: IntoIterator<Item = Lit>>(iter: I) -> Self {
        Clause::new(iter.into_iter().collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Clause>,
}

impl Cnf {
    pub fn new(num_vars: u32) -> Self {
        Cnf {
            num_vars,
            clauses: Vec::new(),
        }
    }

    pub fn push(&mut self, clause: Clause) {
        self.num_vars = self.num_vars.max(clause.max_var());
        self.clauses.push(clause);
    }

    pub fn extend<I: IntoIterator<Item = Clause>>(&mut self, clauses: I) {
        for c in clauses {
            self.push(c);
        }
    }

    /// `true` iff every clause is satisfied; unassigned literals count as false.
    pub fn satisfied_by(&self, assignment: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.eval(assignment) == Some(true))
    }
}

/// A partial assignment indexed by variable id.
#[derive(Clone, Default)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl PartialEq for Assignment {
    fn eq(&self, other: &Self) -> bool {
        self.iter().eq(other.iter())
    }
}

impl Eq for Assignment {}

impl std::hash::Hash for Assignment {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        for (v, b) in self.iter() {
            (v.id(), b).hash(state);
        }
    }
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(num_vars: u32) -> Self {
        Assignment {
            values: vec![None; num_vars as usize + 1],
        }
    }

    pub fn from_pairs<I: IntoIterator<Item = (Var, bool)>>(pairs: I) -> Self {
        let mut a = Assignment::new();
        for (v, b) in pairs {
            a.set(v, b);
        }
        a
    }

    pub fn set(&mut self, var: Var, value: bool) {
        if self.values.len() <= var.index() {
            self.values.resize(var.index() + 1, None);
        }
        self.values[var.index()] = Some(value);
    }

    pub fn unset(&mut self, var: Var) {
        if let Some(slot) = self.values.get_mut(var.index()) {
            *slot = None;
        }
    }

    pub fn get(&self, var: Var) -> Option<bool> {
        self.values.get(var.index()).copied().flatten()
    }

    pub fn lit_value(&self, lit: Lit) -> Option<bool> {
        self.get(lit.var()).map(|b| b == lit.polarity())
    }

    /// Assigned variables in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|b| (Var(i as u32), b)))
    }

    pub fn restricted<'a, I: IntoIterator<Item = &'a Var>>(&self, vars: I) -> Assignment {
        let mut out = Assignment::new();
        for &v in vars {
            if let Some(b) = self.get(v) {
                out.set(v, b);
            }
        }
        out
    }

    /// The literals that make this assignment true, in ascending variable order.
    pub fn literals(&self) -> Vec<Lit> {
        self.iter().map(|(v, b)| v.lit(b)).collect()
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.iter().map(|(v, b)| (v.id(), b as u8)))
            .finish()
    }
}

/// Hands out variables above a fixed floor.
#[derive(Clone, Debug)]
pub struct VarAllocator {
    next: u32,
}

impl VarAllocator {
    /// The first fresh variable will be `above + 1`.
    pub fn above(above: u32) -> Self {
        VarAllocator { next: above + 1 }
    }

    pub fn fresh(&mut self) -> Var {
        let v = Var::new(self.next);
        self.next += 1;
        v
    }

    /// Highest variable id handed out so far (or the floor).
    pub fn max_var(&self) -> u32 {
        self.next - 1
    }
}

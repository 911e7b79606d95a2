//! Candidate verification through the error formula
//! `E(X, Y') = ¬φ(X, Y') ∧ (Y' ↔ f)`, which is UNSAT exactly when the
//! candidate vector makes the matrix a tautology.

use std::collections::BTreeMap;

use crate::formula::{Assignment, Clause, DqbfInstance, HenkinVector, Lit, Tseitin, Var, VarAllocator};
use crate::sat::{Limits, OracleError, SatOracle, SatResult};

/// The error formula in CNF; `y_prime[y]` is the copy of `y` that carries
/// the candidate output.
#[derive(Debug, Clone)]
pub struct ErrorFormula {
    pub clauses: Vec<Clause>,
    pub y_prime: BTreeMap<Var, Var>,
}

/// Clauses forcing the matrix false over the renamed variables: one
/// selector per clause, each selector falsifying every literal of its
/// clause, and at least one selector true.
pub fn negated_matrix(
    instance: &DqbfInstance,
    rename: &dyn Fn(Var) -> Lit,
    fresh: &mut VarAllocator,
) -> Vec<Clause> {
    let mut out = Vec::new();
    let mut selectors = Vec::with_capacity(instance.matrix().clauses.len());
    for clause in &instance.matrix().clauses {
        let t = fresh.fresh();
        for &l in clause.lits() {
            let r = rename(l.var());
            let l2 = if l.is_negated() { !r } else { r };
            out.push(Clause::new(vec![t.neg(), !l2]));
        }
        selectors.push(t.pos());
    }
    out.push(Clause::new(selectors));
    out
}

pub fn build_error_formula(
    instance: &DqbfInstance,
    vector: &HenkinVector,
    fresh: &mut VarAllocator,
) -> ErrorFormula {
    let y_prime: BTreeMap<Var, Var> = instance
        .existentials()
        .iter()
        .map(|&y| (y, fresh.fresh()))
        .collect();
    let rename = |v: Var| y_prime.get(&v).copied().unwrap_or(v).pos();
    let mut clauses = negated_matrix(instance, &rename, fresh);
    let mut enc = Tseitin::new(fresh, &rename);
    for (&y, &yp) in &y_prime {
        let f = vector
            .get(y)
            .unwrap_or_else(|| panic!("no candidate for existential {y:?}"));
        enc.define(f, yp.pos());
    }
    clauses.extend(enc.into_clauses());
    ErrorFormula { clauses, y_prime }
}

/// `σ = π[X] + π[Y] + δ[Y']`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    /// Universal values.
    pub x: Assignment,
    /// A genuine extension of `x` satisfying the matrix.
    pub y: Assignment,
    /// Candidate outputs on `x`, keyed by the original existential.
    pub y_prime: Assignment,
}

impl Counterexample {
    /// `x` together with the candidate outputs.
    pub fn candidate_assignment(&self) -> Assignment {
        let mut a = self.x.clone();
        for (v, b) in self.y_prime.iter() {
            a.set(v, b);
        }
        a
    }

    pub fn extension_assignment(&self) -> Assignment {
        let mut a = self.x.clone();
        for (v, b) in self.y.iter() {
            a.set(v, b);
        }
        a
    }

    /// The three defining properties: the extension satisfies the matrix,
    /// the candidate outputs are what `vector` computes on `x`, and those
    /// outputs falsify the matrix.
    pub fn check(&self, instance: &DqbfInstance, vector: &HenkinVector) -> Result<(), String> {
        if !instance.matrix_holds(&self.extension_assignment()) {
            return Err("extension does not satisfy the matrix".into());
        }
        let outputs = vector
            .outputs(&self.x)
            .ok_or("candidate vector cannot be evaluated")?;
        for &y in instance.existentials() {
            if outputs.get(y) != self.y_prime.get(y) {
                return Err(format!("candidate output of {y:?} disagrees"));
            }
        }
        if instance.matrix_holds(&self.candidate_assignment()) {
            return Err("candidate outputs satisfy the matrix".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    CexFound(Counterexample),
    /// An X-assignment with no satisfying extension.
    InstanceFalse(Assignment),
    /// The error formula is UNSAT only because of the blocked
    /// X-assignments; nothing is proven.
    Blocked,
}

/// Owns the incremental extension oracle over the matrix; the error formula
/// is rebuilt for every candidate vector.
pub struct Verifier<'a> {
    instance: &'a DqbfInstance,
    limits: Limits,
    extension: SatOracle,
}

impl<'a> Verifier<'a> {
    pub fn new(instance: &'a DqbfInstance, limits: &Limits) -> Self {
        let mut extension = SatOracle::with_clauses(limits, &instance.matrix().clauses);
        extension.reserve_vars(instance.num_vars());
        Verifier {
            instance,
            limits: limits.clone(),
            extension,
        }
    }

    /// A model of `φ ∧ (X ↔ x)`, if any.
    pub fn extend(&mut self, x: &Assignment) -> Result<Option<Assignment>, OracleError> {
        let assumptions: Vec<Lit> = self
            .instance
            .universals()
            .iter()
            .map(|&v| v.lit(x.get(v).unwrap_or(false)))
            .collect();
        Ok(match self.extension.solve(&assumptions)? {
            SatResult::Sat(m) => Some(m),
            SatResult::Unsat(_) => None,
        })
    }

    /// Checks `vector`. X-assignments in `blocked` are excluded from the
    /// counterexample search.
    pub fn verify(&mut self, vector: &HenkinVector, blocked: &[Assignment]) -> Result<Verdict, OracleError> {
        let inst = self.instance;
        let mut fresh = VarAllocator::above(inst.num_vars());
        let e = build_error_formula(inst, vector, &mut fresh);
        let mut oracle = SatOracle::with_clauses(&self.limits, &e.clauses);
        let mut assumptions = Vec::new();
        if !blocked.is_empty() {
            let act = fresh.fresh();
            for x in blocked {
                let mut lits: Vec<Lit> = inst
                    .universals()
                    .iter()
                    .map(|&v| v.lit(!x.get(v).unwrap_or(false)))
                    .collect();
                lits.push(act.neg());
                oracle.add_clause(&Clause::new(lits));
            }
            assumptions.push(act.pos());
        }
        oracle.reserve_vars(fresh.max_var());

        let delta = match oracle.solve(&assumptions)? {
            SatResult::Sat(m) => m,
            SatResult::Unsat(failed) => {
                if failed.is_empty() {
                    return Ok(Verdict::Verified);
                }
                return match oracle.solve(&[])? {
                    SatResult::Unsat(_) => Ok(Verdict::Verified),
                    SatResult::Sat(_) => Ok(Verdict::Blocked),
                };
            }
        };

        let x = delta.restricted(inst.universals());
        let y_prime = Assignment::from_pairs(
            e.y_prime
                .iter()
                .map(|(&y, &yp)| (y, delta.get(yp).unwrap_or(false))),
        );
        let Some(pi) = self.extend(&x)? else {
            return Ok(Verdict::InstanceFalse(x));
        };
        let y = pi.restricted(inst.existentials());
        let cex = Counterexample { x, y, y_prime };
        if let Err(msg) = cex.check(inst, vector) {
            panic!("malformed counterexample: {msg}");
        }
        Ok(Verdict::CexFound(cex))
    }
}

/// Tries to prove the instance false using only the X-assignments in `xs`.
///
/// Each existential gets one variable per distinct value of its Henkin set
/// among `xs` (one entry of its function table), and the matrix is
/// instantiated for every assignment in `xs`. If no choice of table entries
/// satisfies all instances, no Henkin vector exists. On success returns the
/// subset of `xs` that the failed-assumption core needed.
pub fn refute_on(
    instance: &DqbfInstance,
    xs: &[Assignment],
    limits: &Limits,
) -> Result<Option<Vec<Assignment>>, OracleError> {
    let mut fresh = VarAllocator::above(0);
    let mut entries: BTreeMap<(Var, Vec<bool>), Var> = BTreeMap::new();
    let mut oracle = SatOracle::new(limits);
    let mut selectors = Vec::with_capacity(xs.len());
    for x in xs {
        let act = fresh.fresh();
        selectors.push(act.pos());
        for clause in &instance.matrix().clauses {
            let mut lits = vec![act.neg()];
            let mut satisfied = false;
            for &l in clause.lits() {
                let v = l.var();
                if instance.is_universal(v) {
                    if x.lit_value(l) == Some(true) {
                        satisfied = true;
                        break;
                    }
                } else {
                    let key: Vec<bool> = instance
                        .henkin(v)
                        .iter()
                        .map(|&u| x.get(u).unwrap_or(false))
                        .collect();
                    let t = *entries.entry((v, key)).or_insert_with(|| fresh.fresh());
                    lits.push(Lit::new(t, l.is_negated()));
                }
            }
            if !satisfied {
                oracle.add_clause(&Clause::new(lits));
            }
        }
    }
    oracle.reserve_vars(fresh.max_var());
    match oracle.solve(&selectors)? {
        SatResult::Sat(_) => Ok(None),
        SatResult::Unsat(_) => {
            let core = oracle.failed_core(&selectors, true)?;
            Ok(Some(
                selectors
                    .iter()
                    .zip(xs)
                    .filter(|(s, _)| core.contains(s))
                    .map(|(_, x)| x.clone())
                    .collect(),
            ))
        }
    }
}

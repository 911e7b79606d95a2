//! Unweighted partial MaxSAT by linear SAT-UNSAT search.
//!
//! Each soft clause `c` becomes `c ∨ r` with a fresh relaxation variable `r`.
//! A sequential counter over the `r`s exposes outputs `s_j` ("at least j
//! relaxations are true"); the bound is tightened by assuming `¬s_k` until
//! the solver reports UNSAT, at which point the last model is optimal.

use std::collections::BTreeSet;
use std::io::{self, Write};

use thiserror::Error;

use super::oracle::{Limits, OracleError, SatOracle, SatResult};
use crate::formula::{Assignment, Clause, Lit, VarAllocator};

#[derive(Clone, Debug, Default)]
pub struct MaxSatQuery<T> {
    pub hard: Vec<Clause>,
    pub soft: Vec<(Clause, T)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxSatSolution<T> {
    /// Model over the variables of the query (relaxation and counter
    /// variables removed).
    pub model: Assignment,
    pub falsified: Vec<T>,
}

impl<T> MaxSatSolution<T> {
    pub fn cost(&self) -> usize {
        self.falsified.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaxSatError {
    #[error("hard clauses are unsatisfiable")]
    HardUnsat,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl<T> MaxSatQuery<T> {
    pub fn new() -> Self {
        MaxSatQuery {
            hard: Vec::new(),
            soft: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.hard
            .iter()
            .chain(self.soft.iter().map(|(c, _)| c))
            .map(Clause::max_var)
            .max()
            .unwrap_or(0)
    }

    /// WCNF (2022 format: `h` for hard, weight 1 for soft).
    pub fn write_wcnf<W: Write>(&self, mut out: W) -> io::Result<()> {
        for c in &self.hard {
            write!(out, "h")?;
            for l in c.lits() {
                write!(out, " {l}")?;
            }
            writeln!(out, " 0")?;
        }
        for (c, _) in &self.soft {
            write!(out, "1")?;
            for l in c.lits() {
                write!(out, " {l}")?;
            }
            writeln!(out, " 0")?;
        }
        Ok(())
    }
}

/// Sequential counter: `outputs[j]` is implied by "at least j+1 inputs true".
fn sequential_counter(inputs: &[Lit], fresh: &mut VarAllocator, clauses: &mut Vec<Clause>) -> Vec<Lit> {
    let n = inputs.len();
    let mut prev: Vec<Lit> = Vec::new();
    for (i, &x) in inputs.iter().enumerate() {
        let cur: Vec<Lit> = (0..=i).map(|_| fresh.fresh().pos()).collect();
        // x -> cur[0]
        clauses.push(Clause::new(vec![!x, cur[0]]));
        for j in 0..i {
            // prev[j] -> cur[j]
            clauses.push(Clause::new(vec![!prev[j], cur[j]]));
            // prev[j] ∧ x -> cur[j+1]
            clauses.push(Clause::new(vec![!prev[j], !x, cur[j + 1]]));
        }
        prev = cur;
    }
    debug_assert_eq!(prev.len(), n);
    prev
}

pub fn solve_maxsat<T: Clone>(
    query: &MaxSatQuery<T>,
    limits: &Limits,
) -> Result<MaxSatSolution<T>, MaxSatError> {
    let num_vars = query.num_vars();
    let mut fresh = VarAllocator::above(num_vars);
    let mut oracle = SatOracle::with_clauses(limits, &query.hard);
    oracle.reserve_vars(num_vars);

    let mut relax = Vec::with_capacity(query.soft.len());
    for (c, _) in &query.soft {
        let r = fresh.fresh().pos();
        let mut lits = c.lits().to_vec();
        lits.push(r);
        oracle.add_clause(&Clause::new(lits));
        relax.push(r);
    }
    let mut counter_clauses = Vec::new();
    let at_least = sequential_counter(&relax, &mut fresh, &mut counter_clauses);
    oracle.add_clauses(&counter_clauses);

    let cost_of = |model: &Assignment| -> Vec<usize> {
        query
            .soft
            .iter()
            .enumerate()
            .filter(|(_, (c, _))| c.eval(model) != Some(true))
            .map(|(i, _)| i)
            .collect()
    };

    let mut best = match oracle.solve(&[])? {
        SatResult::Unsat(_) => return Err(MaxSatError::HardUnsat),
        SatResult::Sat(m) => m,
    };
    let mut best_falsified = cost_of(&best);
    while !best_falsified.is_empty() {
        // at most cost-1 relaxations: forbid "at least cost".
        let bound = !at_least[best_falsified.len() - 1];
        match oracle.solve(&[bound])? {
            SatResult::Unsat(_) => break,
            SatResult::Sat(m) => {
                let f = cost_of(&m);
                debug_assert!(f.len() < best_falsified.len());
                best = m;
                best_falsified = f;
            }
        }
    }

    let model = Assignment::from_pairs(best.iter().filter(|(v, _)| v.id() <= num_vars));
    let falsified = best_falsified
        .into_iter()
        .map(|i| query.soft[i].1.clone())
        .collect();
    Ok(MaxSatSolution { model, falsified })
}

/// Convenience: the set of falsified tags of an optimum.
pub fn falsified_tags<T: Clone + Ord>(sol: &MaxSatSolution<T>) -> BTreeSet<T> {
    sol.falsified.iter().cloned().collect()
}

use std::io::{self, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use super::solver::{Solver, SolverConfig, Status};
use crate::formula::{Assignment, Clause, Lit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    /// The deadline or conflict budget ran out. Never means UNSAT.
    #[error("solver resource limit exceeded")]
    Timeout,
    #[error("query is satisfiable; no core exists")]
    NotUnsat,
}

/// Resource limits and call accounting shared by every oracle of one run.
#[derive(Clone, Debug, Default)]
pub struct Limits {
    pub deadline: Option<Instant>,
    /// Per-call conflict budget.
    pub conflict_limit: Option<u64>,
    pub seed: u64,
    calls: Arc<AtomicU64>,
}

impl Limits {
    pub fn new(seed: u64, deadline: Option<Instant>) -> Self {
        Limits {
            deadline,
            seed,
            ..Limits::default()
        }
    }

    pub fn solver_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn record_call(&self) {
        self.calls.fetch_add(1, Ordering::Relaxed);
    }

    pub fn expired(&self) -> bool {
        matches!(self.deadline, Some(d) if Instant::now() >= d)
    }

    pub(crate) fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            seed: self.seed,
            conflict_limit: self.conflict_limit,
            deadline: self.deadline,
            ..SolverConfig::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SatQuery {
    pub clauses: Vec<Clause>,
    pub assumptions: Vec<Lit>,
}

impl SatQuery {
    pub fn new(clauses: Vec<Clause>, assumptions: Vec<Lit>) -> Self {
        SatQuery {
            clauses,
            assumptions,
        }
    }

    pub fn num_vars(&self) -> u32 {
        let c = self.clauses.iter().map(Clause::max_var).max().unwrap_or(0);
        let a = self.assumptions.iter().map(|l| l.var().id()).max().unwrap_or(0);
        c.max(a)
    }

    /// DIMACS dump with the assumptions appended as unit clauses.
    pub fn write_dimacs<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "c assumptions: {}", self.assumptions.len())?;
        writeln!(
            out,
            "p cnf {} {}",
            self.num_vars(),
            self.clauses.len() + self.assumptions.len()
        )?;
        for c in &self.clauses {
            for l in c.lits() {
                write!(out, "{l} ")?;
            }
            writeln!(out, "0")?;
        }
        for a in &self.assumptions {
            writeln!(out, "{a} 0")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    /// Carries the failed assumptions, possibly non-minimal.
    Unsat(Vec<Lit>),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// An incremental oracle: clauses accumulate, assumptions are per call.
pub struct SatOracle {
    solver: Solver,
    limits: Limits,
}

impl SatOracle {
    pub fn new(limits: &Limits) -> Self {
        SatOracle {
            solver: Solver::new(limits.solver_config()),
            limits: limits.clone(),
        }
    }

    pub fn with_clauses<'a, I: IntoIterator<Item = &'a Clause>>(limits: &Limits, clauses: I) -> Self {
        let mut o = Self::new(limits);
        o.add_clauses(clauses);
        o
    }

    pub fn add_clause(&mut self, clause: &Clause) {
        self.solver.add_clause(clause.lits());
    }

    pub fn add_clauses<'a, I: IntoIterator<Item = &'a Clause>>(&mut self, clauses: I) {
        for c in clauses {
            self.add_clause(c);
        }
    }

    pub fn reserve_vars(&mut self, n: u32) {
        self.solver.reserve_vars(n);
    }

    pub fn solver_mut(&mut self) -> &mut Solver {
        &mut self.solver
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> Result<SatResult, OracleError> {
        self.limits.record_call();
        match self.solver.solve(assumptions) {
            Status::Sat => Ok(SatResult::Sat(self.solver.model())),
            Status::Unsat => Ok(SatResult::Unsat(self.solver.failed().to_vec())),
            Status::Interrupted => Err(OracleError::Timeout),
        }
    }

    /// Failed assumptions of an UNSAT call, optionally shrunk by one pass of
    /// deletion: each literal is dropped if the rest stays UNSAT.
    pub fn failed_core(&mut self, assumptions: &[Lit], shrink: bool) -> Result<Vec<Lit>, OracleError> {
        let mut core = match self.solve(assumptions)? {
            SatResult::Sat(_) => return Err(OracleError::NotUnsat),
            SatResult::Unsat(core) => core,
        };
        // Keep the caller's assumption order.
        core.sort_by_key(|l| assumptions.iter().position(|a| a == l));
        core.dedup();
        if !shrink {
            return Ok(core);
        }
        let mut i = 0;
        while i < core.len() {
            let trial: Vec<Lit> = core
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &l)| l)
                .collect();
            match self.solve(&trial)? {
                SatResult::Sat(_) => i += 1,
                SatResult::Unsat(smaller) => {
                    core = trial
                        .into_iter()
                        .filter(|l| smaller.contains(l))
                        .collect();
                }
            }
        }
        Ok(core)
    }
}

pub fn check_sat(query: &SatQuery, limits: &Limits) -> Result<SatResult, OracleError> {
    let mut oracle = SatOracle::with_clauses(limits, &query.clauses);
    oracle.reserve_vars(query.num_vars());
    oracle.solve(&query.assumptions)
}

/// Errors with [`OracleError::NotUnsat`] when the query is satisfiable.
pub fn failed_core(query: &SatQuery, limits: &Limits, shrink: bool) -> Result<Vec<Lit>, OracleError> {
    let mut oracle = SatOracle::with_clauses(limits, &query.clauses);
    oracle.failed_core(&query.assumptions, shrink)
}

//! Training data: distinct models of the matrix, drawn by randomized-phase
//! enumeration with blocking clauses.
//!
//! The draw is not uniform. It only has to be varied enough for the learner;
//! the repair loop corrects whatever the trees get wrong.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{Assignment, Clause, DqbfInstance, Var};
use crate::sat::{Limits, OracleError, SatOracle, SatResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("row has {got} values for {expected} variables")]
    Width { expected: usize, got: usize },
    #[error("row {0} does not satisfy the matrix")]
    NotAModel(usize),
}

/// Rows of 0/1 values over a fixed list of variables; every row is a model
/// of the matrix of the instance it was built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleTable {
    variables: Vec<Var>,
    column: HashMap<Var, usize>,
    rows: Vec<Vec<bool>>,
    seen: HashSet<Vec<bool>>,
}

impl SampleTable {
    pub fn new(variables: Vec<Var>) -> Self {
        let column = variables.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        SampleTable {
            variables,
            column,
            rows: Vec::new(),
            seen: HashSet::new(),
        }
    }

    /// A table over `instance.variables()` from explicit rows (X columns
    /// first, then Y, each ascending). Duplicates are dropped.
    pub fn from_rows(instance: &DqbfInstance, rows: &[Vec<bool>]) -> Result<Self, SampleError> {
        let mut table = SampleTable::new(instance.variables());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != table.variables.len() {
                return Err(SampleError::Width {
                    expected: table.variables.len(),
                    got: row.len(),
                });
            }
            if !instance.matrix_holds(&table.row_assignment(row)) {
                return Err(SampleError::NotAModel(i));
            }
            table.push_unchecked(row.clone());
        }
        Ok(table)
    }

    /// Inserts the projection of `model` onto the table's variables after
    /// checking it against the matrix. Returns `false` for a duplicate.
    pub fn insert(&mut self, instance: &DqbfInstance, model: &Assignment) -> bool {
        let row: Vec<bool> = self
            .variables
            .iter()
            .map(|&v| model.get(v).unwrap_or(false))
            .collect();
        assert!(
            instance.matrix_holds(&self.row_assignment(&row)),
            "sample row is not a model of the matrix"
        );
        self.push_unchecked(row)
    }

    fn push_unchecked(&mut self, row: Vec<bool>) -> bool {
        if !self.seen.insert(row.clone()) {
            return false;
        }
        self.rows.push(row);
        true
    }

    fn row_assignment(&self, row: &[bool]) -> Assignment {
        Assignment::from_pairs(self.variables.iter().copied().zip(row.iter().copied()))
    }

    pub fn variables(&self) -> &[Var] {
        &self.variables
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, var: Var) -> Option<usize> {
        self.column.get(&var).copied()
    }

    pub fn value(&self, row: usize, var: Var) -> Option<bool> {
        self.column(var).map(|c| self.rows[row][c])
    }

    pub fn assignment(&self, row: usize) -> Assignment {
        self.row_assignment(&self.rows[row])
    }

    /// Rows restricted to `features` (in the given order) paired with the
    /// label column.
    pub fn project(&self, features: &[Var], label: Var) -> (Vec<Vec<bool>>, Vec<bool>) {
        let cols: Vec<usize> = features
            .iter()
            .map(|&f| self.column(f).expect("feature is not a table column"))
            .collect();
        let lc = self.column(label).expect("label is not a table column");
        let xs = self
            .rows
            .iter()
            .map(|r| cols.iter().map(|&c| r[c]).collect())
            .collect();
        let ys = self.rows.iter().map(|r| r[lc]).collect();
        (xs, ys)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SamplerOptions {
    /// Prefer, with probability 0.9, the value an existential took in the
    /// previous sample.
    pub bias_previous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleOutcome {
    Table(SampleTable),
    /// The matrix has no model.
    Unsat,
}

pub fn default_sample_target(instance: &DqbfInstance) -> usize {
    let n = instance.universals().len() + instance.existentials().len();
    (50 * n).clamp(1, 10_000)
}

/// Draws up to `target` distinct models of the matrix. Deterministic for a
/// fixed `seed`.
pub fn get_samples(
    instance: &DqbfInstance,
    target: usize,
    seed: u64,
    limits: &Limits,
    options: &SamplerOptions,
) -> Result<SampleOutcome, OracleError> {
    let vars = instance.variables();
    let mut table = SampleTable::new(vars.clone());
    if instance.is_trivially_false() {
        return Ok(SampleOutcome::Unsat);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle = SatOracle::with_clauses(limits, &instance.matrix().clauses);
    oracle.reserve_vars(instance.num_vars());
    let mut previous: Option<Assignment> = None;

    while table.len() < target.max(1) {
        let solver = oracle.solver_mut();
        for &v in &vars {
            let phase = match &previous {
                Some(prev) if options.bias_previous && instance.is_existential(v) && rng.gen_bool(0.9) => {
                    prev.get(v).unwrap_or(false)
                }
                _ => rng.gen_bool(0.5),
            };
            solver.set_phase(v, phase);
            solver.bump_activity(v, rng.gen::<f64>());
        }
        let model = match oracle.solve(&[])? {
            SatResult::Unsat(_) => break,
            SatResult::Sat(m) => m,
        };
        table.insert(instance, &model);
        let block: Clause = vars
            .iter()
            .map(|&v| v.lit(!model.get(v).unwrap_or(false)))
            .collect();
        if block.is_empty() {
            break;
        }
        oracle.add_clause(&block);
        previous = Some(model);
    }
    log::debug!("sampler drew {} rows (target {target})", table.len());
    if table.is_empty() {
        Ok(SampleOutcome::Unsat)
    } else {
        Ok(SampleOutcome::Table(table))
    }
}

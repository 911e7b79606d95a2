//! Exhaustive ground truth for small instances, independent of the SAT
//! solver: certificate checking by enumerating X, truth by searching over
//! function tables, and MaxSAT optima by enumerating assignments.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{Assignment, BoolExpr, Clause, DqbfInstance, HenkinVector, Lit, Var};

pub const MAX_CHECK_UNIVERSALS: usize = 20;
pub const MAX_DECIDE_UNIVERSALS: usize = 16;
pub const MAX_TABLE_BITS: usize = 24;
pub const MAX_ENUM_VARS: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{what} is {value}, above the enumeration cap {cap}")]
pub struct CapExceeded {
    pub what: &'static str,
    pub value: usize,
    pub cap: usize,
}

fn cap(what: &'static str, value: usize, cap: usize) -> Result<(), CapExceeded> {
    if value > cap {
        Err(CapExceeded { what, value, cap })
    } else {
        Ok(())
    }
}

/// All assignments to `vars`, the first variable being the most
/// significant bit.
pub fn assignments(vars: &[Var]) -> impl Iterator<Item = Assignment> + '_ {
    let n = vars.len();
    (0u64..1 << n).map(move |bits| {
        Assignment::from_pairs(
            vars.iter()
                .enumerate()
                .map(|(j, &v)| (v, bits >> (n - 1 - j) & 1 == 1)),
        )
    })
}

/// True iff substituting `vector` makes the matrix true for every X.
/// Functions may reference other existentials as long as the references
/// are acyclic.
pub fn check_vector(instance: &DqbfInstance, vector: &HenkinVector) -> Result<bool, CapExceeded> {
    let xs: Vec<Var> = instance.universals().iter().copied().collect();
    cap("number of universals", xs.len(), MAX_CHECK_UNIVERSALS)?;
    if instance.is_trivially_false() {
        return Ok(false);
    }
    for x in assignments(&xs) {
        match vector.outputs(&x) {
            Some(full) if instance.matrix_holds(&full) => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Truth table of one function over its (ascending) inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionTable {
    pub inputs: Vec<Var>,
    pub bits: Vec<bool>,
}

impl FunctionTable {
    pub fn new(inputs: Vec<Var>, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), 1 << inputs.len(), "table length must be 2^inputs");
        FunctionTable { inputs, bits }
    }

    pub fn index(&self, a: &Assignment) -> usize {
        self.inputs
            .iter()
            .fold(0, |acc, &v| acc << 1 | a.get(v).unwrap_or(false) as usize)
    }

    pub fn eval(&self, a: &Assignment) -> bool {
        self.bits[self.index(a)]
    }

    /// Disjunction of the minterms mapped to 1.
    pub fn to_expr(&self) -> BoolExpr {
        let n = self.inputs.len();
        BoolExpr::or(self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| {
            BoolExpr::and(
                self.inputs
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| BoolExpr::lit(v.lit(i >> (n - 1 - j) & 1 == 1))),
            )
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Truth {
    True(BTreeMap<Var, FunctionTable>),
    False,
}

impl Truth {
    pub fn is_true(&self) -> bool {
        matches!(self, Truth::True(_))
    }
}

struct Search<'a> {
    instance: &'a DqbfInstance,
    ys: Vec<Var>,
    xs: Vec<Assignment>,
    /// Per existential: its inputs and partially filled table.
    inputs: Vec<Vec<Var>>,
    tables: Vec<Vec<Option<bool>>>,
}

impl Search<'_> {
    fn entry(&self, i: usize, x: &Assignment) -> usize {
        self.inputs[i]
            .iter()
            .fold(0, |acc, &v| acc << 1 | x.get(v).unwrap_or(false) as usize)
    }

    /// Extends the tables so every X from `k` on has a satisfying output.
    fn solve(&mut self, k: usize) -> bool {
        if k == self.xs.len() {
            return true;
        }
        let x = self.xs[k].clone();
        let entries: Vec<usize> = (0..self.ys.len()).map(|i| self.entry(i, &x)).collect();
        let free: Vec<usize> = (0..self.ys.len())
            .filter(|&i| self.tables[i][entries[i]].is_none())
            .collect();
        for bits in 0u64..1 << free.len() {
            for (j, &i) in free.iter().enumerate() {
                self.tables[i][entries[i]] = Some(bits >> j & 1 == 1);
            }
            let mut full = x.clone();
            for (i, &y) in self.ys.iter().enumerate() {
                full.set(y, self.tables[i][entries[i]].unwrap());
            }
            if self.instance.matrix_holds(&full) && self.solve(k + 1) {
                return true;
            }
        }
        for &i in &free {
            self.tables[i][entries[i]] = None;
        }
        false
    }
}

/// Decides the instance by searching over function tables: X-assignments
/// are visited in order and each fixes the table entries it reads, with
/// backtracking over those entries.
pub fn decide_truth(instance: &DqbfInstance) -> Result<Truth, CapExceeded> {
    let xs: Vec<Var> = instance.universals().iter().copied().collect();
    cap("number of universals", xs.len(), MAX_DECIDE_UNIVERSALS)?;
    let bits: usize = instance
        .henkin_sets()
        .values()
        .map(|h| 1usize.checked_shl(h.len() as u32).unwrap_or(usize::MAX))
        .fold(0, usize::saturating_add);
    cap("total function-table bits", bits, MAX_TABLE_BITS)?;
    if instance.is_trivially_false() {
        return Ok(Truth::False);
    }
    let ys: Vec<Var> = instance.existentials().iter().copied().collect();
    let inputs: Vec<Vec<Var>> = ys
        .iter()
        .map(|&y| instance.henkin(y).iter().copied().collect())
        .collect();
    let tables = inputs.iter().map(|h| vec![None; 1 << h.len()]).collect();
    let mut search = Search {
        instance,
        ys,
        xs: assignments(&xs).collect(),
        inputs,
        tables,
    };
    if !search.solve(0) {
        return Ok(Truth::False);
    }
    let tables = search
        .ys
        .iter()
        .zip(search.inputs)
        .zip(search.tables)
        .map(|((&y, inputs), t)| {
            let bits = t.into_iter().map(|b| b.unwrap_or(false)).collect();
            (y, FunctionTable::new(inputs, bits))
        })
        .collect();
    Ok(Truth::True(tables))
}

pub fn tables_to_vector(tables: &BTreeMap<Var, FunctionTable>) -> HenkinVector {
    HenkinVector::from_functions(tables.iter().map(|(&y, t)| (y, t.to_expr())))
}

fn vars_of(clauses: &[Clause], extra: &[Lit]) -> Vec<Var> {
    let mut vs: Vec<Var> = clauses
        .iter()
        .flat_map(|c| c.lits().iter().map(|l| l.var()))
        .chain(extra.iter().map(|l| l.var()))
        .collect();
    vs.sort();
    vs.dedup();
    vs
}

fn all_true(clauses: &[Clause], a: &Assignment) -> bool {
    clauses.iter().all(|c| c.eval(a) == Some(true))
}

/// Satisfiability of `clauses` under `assumptions` by enumeration.
pub fn brute_sat(clauses: &[Clause], assumptions: &[Lit]) -> Result<bool, CapExceeded> {
    let vs = vars_of(clauses, assumptions);
    cap("number of variables", vs.len(), MAX_ENUM_VARS)?;
    let found = assignments(&vs).any(|a| {
        assumptions.iter().all(|&l| a.lit_value(l) == Some(true)) && all_true(clauses, &a)
    });
    Ok(found)
}

/// Minimum number of falsified soft clauses over models of `hard`, or
/// `None` when `hard` is unsatisfiable.
pub fn maxsat_optimum(hard: &[Clause], soft: &[Clause]) -> Result<Option<usize>, CapExceeded> {
    let all: Vec<Clause> = hard.iter().chain(soft).cloned().collect();
    let vs = vars_of(&all, &[]);
    cap("number of variables", vs.len(), MAX_ENUM_VARS)?;
    let best = assignments(&vs)
        .filter(|a| all_true(hard, a))
        .map(|a| soft.iter().filter(|c| c.eval(&a) != Some(true)).count())
        .min();
    Ok(best)
}

/// Whether some Y-assignment extends `x` to a model of the matrix.
pub fn has_extension(instance: &DqbfInstance, x: &Assignment) -> Result<bool, CapExceeded> {
    Ok(min_flips(instance, x, &Assignment::new())?.is_some())
}

/// Fewest existentials that must differ from `target` in a model extending
/// `x`; existentials missing from `target` are free.
pub fn min_flips(instance: &DqbfInstance, x: &Assignment, target: &Assignment) -> Result<Option<usize>, CapExceeded> {
    let ys: Vec<Var> = instance.existentials().iter().copied().collect();
    cap("number of existentials", ys.len(), MAX_ENUM_VARS)?;
    let best = assignments(&ys)
        .filter_map(|y| {
            let mut full = x.clone();
            for (v, b) in y.iter() {
                full.set(v, b);
            }
            instance.matrix_holds(&full).then(|| {
                ys.iter()
                    .filter(|&&v| matches!(target.get(v), Some(t) if t != y.get(v).unwrap()))
                    .count()
            })
        })
        .min();
    Ok(best)
}

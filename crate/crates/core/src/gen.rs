//! Random small instances, vectors and tables for property tests,
//! benchmarks and the bundled instance suite.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::{Clause, Cnf, DqbfInstance, HenkinVector, Lit, Var};
use crate::oracle::FunctionTable;

#[derive(Debug, Clone)]
pub struct GenParams {
    pub max_universals: usize,
    pub max_existentials: usize,
    pub max_henkin: usize,
    pub max_clauses: usize,
    pub max_clause_len: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_universals: 4,
            max_existentials: 3,
            max_henkin: 3,
            max_clauses: 8,
            max_clause_len: 3,
        }
    }
}

pub fn random_clause<R: Rng>(rng: &mut R, vars: &[Var], max_len: usize) -> Clause {
    let len = rng.gen_range(1..=max_len.min(vars.len()).max(1));
    let picked: Vec<Var> = vars.choose_multiple(rng, len).copied().collect();
    picked.into_iter().map(|v| Lit::new(v, rng.gen_bool(0.5))).collect()
}

/// Universals are `1..=nx`, existentials follow.
pub fn random_instance<R: Rng>(rng: &mut R, params: &GenParams) -> DqbfInstance {
    let nx = rng.gen_range(1..=params.max_universals.max(1));
    let ny = rng.gen_range(1..=params.max_existentials.max(1));
    let xs: Vec<Var> = (1..=nx as u32).map(Var::new).collect();
    let ys: Vec<Var> = (nx as u32 + 1..=(nx + ny) as u32).map(Var::new).collect();
    let mut henkin = BTreeMap::new();
    for &y in &ys {
        let k = rng.gen_range(0..=params.max_henkin.min(nx));
        let h: BTreeSet<Var> = xs.choose_multiple(rng, k).copied().collect();
        henkin.insert(y, h);
    }
    let all: Vec<Var> = xs.iter().chain(&ys).copied().collect();
    let mut matrix = Cnf::new((nx + ny) as u32);
    // Every clause gets an existential literal; clauses over X alone make
    // the instance false outright.
    for _ in 0..rng.gen_range(1..=params.max_clauses.max(1)) {
        let y = *ys.choose(rng).unwrap();
        let rest: Vec<Var> = all.iter().copied().filter(|&v| v != y).collect();
        let mut lits = vec![Lit::new(y, rng.gen_bool(0.5))];
        if params.max_clause_len > 1 && !rest.is_empty() {
            lits.extend(random_clause(rng, &rest, params.max_clause_len - 1).lits().iter().copied());
        }
        matrix.push(Clause::new(lits));
    }
    DqbfInstance::new(xs.into_iter().collect(), henkin, matrix, false)
        .expect("generated instance is well formed")
        .normalized()
}

pub fn random_table<R: Rng>(rng: &mut R, inputs: Vec<Var>) -> FunctionTable {
    let bits = (0..1usize << inputs.len()).map(|_| rng.gen_bool(0.5)).collect();
    FunctionTable::new(inputs, bits)
}

/// A resolved vector with a uniformly random function over each `H_i`.
pub fn random_resolved_vector<R: Rng>(rng: &mut R, instance: &DqbfInstance) -> HenkinVector {
    HenkinVector::from_functions(instance.existentials().iter().map(|&y| {
        let inputs: Vec<Var> = instance.henkin(y).iter().copied().collect();
        (y, random_table(rng, inputs).to_expr())
    }))
}

/// `rows` random distinct-or-repeated rows over `n` features with labels
/// drawn from a random function of the features, so the features always
/// determine the label.
pub fn random_labelled_rows<R: Rng>(rng: &mut R, n: usize, rows: usize) -> (Vec<Vec<bool>>, Vec<bool>) {
    let f: Vec<bool> = (0..1usize << n).map(|_| rng.gen_bool(0.5)).collect();
    let mut xs = Vec::with_capacity(rows);
    let mut ys = Vec::with_capacity(rows);
    for _ in 0..rows {
        let r: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let idx = r.iter().fold(0, |acc, &b| acc << 1 | b as usize);
        ys.push(f[idx]);
        xs.push(r);
    }
    (xs, ys)
}

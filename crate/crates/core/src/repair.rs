//! Counterexample-driven repair of candidate functions.
//!
//! MaxSAT picks the fewest existentials whose candidate outputs must change
//! to extend the counterexample's X-values into a model. For each of them a
//! probe `G_k = φ ∧ (H_k ↔ σ) ∧ (Ŷ ↔ σ[Ŷ']) ∧ (y_k ↔ σ[y'_k])` is solved;
//! an UNSAT core over the assumed literals gives the region `β` on which
//! `f_k` is wrong, and a SAT answer pushes the blame to other variables.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::formula::{BoolExpr, Clause, DqbfInstance, HenkinVector, Lit, Var};
use crate::learner::{DepState, Order};
use crate::sat::{solve_maxsat, Limits, MaxSatError, MaxSatQuery, OracleError, SatOracle, SatResult};
use crate::verifier::Counterexample;

/// The minimum set of existentials whose candidate output disagrees with
/// some model extending `σ.x`, ascending.
pub fn find_candidates(
    instance: &DqbfInstance,
    cex: &Counterexample,
    limits: &Limits,
) -> Result<Vec<Var>, OracleError> {
    let mut query = MaxSatQuery::new();
    query.hard.extend(instance.matrix().clauses.iter().cloned());
    for &x in instance.universals() {
        query.hard.push(Clause::unit(x.lit(cex.x.get(x).unwrap_or(false))));
    }
    for &y in instance.existentials() {
        let want = cex.y_prime.get(y).expect("counterexample misses a candidate output");
        query.soft.push((Clause::unit(y.lit(want)), y));
    }
    match solve_maxsat(&query, limits) {
        Ok(sol) => {
            let mut vars = sol.falsified;
            vars.sort();
            Ok(vars)
        }
        Err(MaxSatError::Oracle(e)) => Err(e),
        Err(MaxSatError::HardUnsat) => {
            panic!("counterexample X-values have no extension; the verifier should have reported falsity")
        }
    }
}

/// Existentials `y_j` with `H_j ⊆ H_k` placed after `y_k` in `order`.
pub fn compute_hat_y(instance: &DqbfInstance, order: &Order, yk: Var) -> BTreeSet<Var> {
    let hk = instance.henkin(yk);
    let idx = order.index(yk);
    instance
        .henkin_sets()
        .iter()
        .filter(|(&yj, hj)| hj.is_subset(hk) && order.index(yj) > idx)
        .map(|(&yj, _)| yj)
        .collect()
}

/// Assumptions of `G_k`: `H_k` and `Ŷ` at their counterexample values and
/// `y_k` at its candidate output; the clause part is the matrix.
pub fn build_gk(instance: &DqbfInstance, cex: &Counterexample, yk: Var, hat_y: &BTreeSet<Var>) -> Vec<Lit> {
    let mut lits: Vec<Lit> = instance
        .henkin(yk)
        .iter()
        .map(|&x| x.lit(cex.x.get(x).unwrap_or(false)))
        .collect();
    lits.extend(hat_y.iter().map(|&y| y.lit(cex.y_prime.get(y).unwrap_or(false))));
    lits.push(yk.lit(cex.y_prime.get(yk).unwrap_or(false)));
    lits
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("core for {0:?} contains only its own output literal")]
pub struct EmptyBeta(pub Var);

/// `f_k ∧ ¬β` when the candidate output was 1, `f_k ∨ β` otherwise, where
/// `β` is the conjunction of the core literals other than `y_k`'s.
pub fn repair_candidate(fk: &BoolExpr, core: &[Lit], yk: Var, output: bool) -> Result<BoolExpr, EmptyBeta> {
    let beta_lits: Vec<BoolExpr> = core
        .iter()
        .filter(|l| l.var() != yk)
        .map(|&l| BoolExpr::lit(l))
        .collect();
    if beta_lits.is_empty() {
        return Err(EmptyBeta(yk));
    }
    let beta = BoolExpr::and(beta_lits);
    Ok(if output {
        BoolExpr::and([fk.clone(), beta.negate()])
    } else {
        BoolExpr::or([fk.clone(), beta])
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome {
    Repaired { core: Vec<Lit>, beta: Vec<Lit> },
    EmptyBeta,
    /// The probe was satisfiable; `appended` were added to the work list.
    Sat { appended: Vec<Var> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeRecord {
    pub variable: Var,
    pub assumptions: Vec<Lit>,
    pub outcome: ProbeOutcome,
}

fn lits_text(lits: &[Lit]) -> String {
    lits.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for ProbeRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "probe y={} assume=[{}] ", self.variable, lits_text(&self.assumptions))?;
        match &self.outcome {
            ProbeOutcome::Repaired { core, beta } => {
                write!(f, "unsat core=[{}] beta=[{}]", lits_text(core), lits_text(beta))
            }
            ProbeOutcome::EmptyBeta => write!(f, "unsat core=[] beta=[]"),
            ProbeOutcome::Sat { appended } => {
                let a: Vec<String> = appended.iter().map(|v| v.to_string()).collect();
                write!(f, "sat appended=[{}]", a.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairOutcome {
    Progress,
    Stuck,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairReport {
    pub outcome: RepairOutcome,
    pub candidates: Vec<Var>,
    pub repaired: Vec<Var>,
    pub probes: Vec<ProbeRecord>,
    pub budget_exhausted: bool,
}

impl RepairReport {
    /// Variables probed without being repaired.
    pub fn unrepaired(&self) -> BTreeSet<Var> {
        self.probes
            .iter()
            .map(|p| p.variable)
            .filter(|v| !self.repaired.contains(v))
            .collect()
    }
}

/// Runs repair passes against one instance; keeps an incremental oracle
/// over the matrix for the probes.
pub struct Repairer<'a> {
    instance: &'a DqbfInstance,
    limits: Limits,
    oracle: SatOracle,
    pub shrink_cores: bool,
}

impl<'a> Repairer<'a> {
    pub fn new(instance: &'a DqbfInstance, limits: &Limits) -> Self {
        let mut oracle = SatOracle::with_clauses(limits, &instance.matrix().clauses);
        oracle.reserve_vars(instance.num_vars());
        Repairer {
            instance,
            limits: limits.clone(),
            oracle,
            shrink_cores: true,
        }
    }

    /// At most `4·|Y|` probes per call.
    pub fn budget(&self) -> usize {
        4 * self.instance.existentials().len()
    }

    /// One repair pass over `σ`. Every existential read by a repair is
    /// recorded in `dep`; `order` stays a linear extension of it.
    pub fn repair_hkf(
        &mut self,
        vector: &mut HenkinVector,
        cex: &Counterexample,
        order: &Order,
        dep: &mut DepState,
    ) -> Result<RepairReport, OracleError> {
        let candidates = find_candidates(self.instance, cex, &self.limits)?;
        self.repair_from(vector, cex, order, dep, candidates)
    }

    /// Repair pass with an explicit initial work list.
    pub fn repair_from(
        &mut self,
        vector: &mut HenkinVector,
        cex: &Counterexample,
        order: &Order,
        dep: &mut DepState,
        candidates: Vec<Var>,
    ) -> Result<RepairReport, OracleError> {
        let inst = self.instance;
        let mut sigma = cex.clone();
        let mut queue = candidates.clone();
        let mut repaired = Vec::new();
        let mut probes = Vec::new();
        let mut head = 0;
        let budget = self.budget();

        while head < queue.len() && probes.len() < budget {
            let yk = queue[head];
            head += 1;
            if repaired.contains(&yk) {
                continue;
            }
            let hat_y = compute_hat_y(inst, order, yk);
            let assumptions = build_gk(inst, &sigma, yk, &hat_y);
            let output = sigma.y_prime.get(yk).unwrap_or(false);
            let outcome = match self.oracle.solve(&assumptions)? {
                SatResult::Unsat(_) => {
                    let core = self.oracle.failed_core(&assumptions, self.shrink_cores)?;
                    let fk = vector.get(yk).expect("missing candidate").clone();
                    match repair_candidate(&fk, &core, yk, output) {
                        Ok(new_fk) => {
                            let beta: Vec<Lit> = core.iter().copied().filter(|l| l.var() != yk).collect();
                            for l in &beta {
                                if inst.is_existential(l.var()) {
                                    dep.record_usage(yk, l.var());
                                }
                            }
                            vector.set(yk, new_fk);
                            repaired.push(yk);
                            ProbeOutcome::Repaired { core, beta }
                        }
                        Err(EmptyBeta(_)) => ProbeOutcome::EmptyBeta,
                    }
                }
                SatResult::Sat(rho) => {
                    let mut appended = Vec::new();
                    for &yt in inst.existentials() {
                        if hat_y.contains(&yt) || yt == yk {
                            continue;
                        }
                        let differs = rho.get(yt) != sigma.y_prime.get(yt);
                        let pending = queue[head..].contains(&yt);
                        if differs && !pending && !repaired.contains(&yt) {
                            queue.push(yt);
                            appended.push(yt);
                        }
                    }
                    sigma.y.set(yk, output);
                    ProbeOutcome::Sat { appended }
                }
            };
            probes.push(ProbeRecord {
                variable: yk,
                assumptions,
                outcome,
            });
        }

        let budget_exhausted = head < queue.len();
        let outcome = if repaired.is_empty() {
            RepairOutcome::Stuck
        } else {
            RepairOutcome::Progress
        };
        Ok(RepairReport {
            outcome,
            candidates,
            repaired,
            probes,
            budget_exhausted,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_dqdimacs;

    fn v(i: u32) -> Var {
        Var::new(i)
    }

    fn x(i: u32) -> BoolExpr {
        BoolExpr::var(v(i))
    }

    #[test]
    fn weaken_and_strengthen() {
        let f = x(4);
        let core = [v(2).neg(), v(5).neg()];
        let weakened = repair_candidate(&f, &core, v(5), false).unwrap();
        assert_eq!(weakened, BoolExpr::or([x(4), x(2).negate()]));
        let strengthened = repair_candidate(&f, &[v(1).pos()], v(5), true).unwrap();
        assert_eq!(strengthened, BoolExpr::and([x(4), x(1).negate()]));
        assert_eq!(repair_candidate(&f, &[v(5).neg()], v(5), false), Err(EmptyBeta(v(5))));
    }

    #[test]
    fn hat_y_respects_order_and_henkin_sets() {
        let i = parse_dqdimacs(b"p cnf 6 0\na 1 2 3 0\nd 4 1 0\nd 5 1 2 0\nd 6 2 3 0\n").unwrap();
        let order = Order::new(vec![v(6), v(5), v(4)]);
        assert_eq!(compute_hat_y(&i, &order, v(5)), BTreeSet::from([v(4)]));
        assert!(compute_hat_y(&i, &order, v(4)).is_empty());
        assert!(compute_hat_y(&i, &order, v(6)).is_empty());
    }

    #[test]
    fn probe_record_text() {
        let r = ProbeRecord {
            variable: v(5),
            assumptions: vec![v(1).pos(), v(2).neg()],
            outcome: ProbeOutcome::Repaired {
                core: vec![v(2).neg()],
                beta: vec![v(2).neg()],
            },
        };
        assert_eq!(r.to_string(), "probe y=5 assume=[1 -2] unsat core=[-2] beta=[-2]");
    }
}

//! The synthesis loop: sample, learn candidates, then alternate
//! verification and repair until the vector is verified, the instance is
//! shown false, or repair gives up.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::formula::{Assignment, BoolExpr, DqbfInstance, HenkinVector, Var};
use crate::learner::{learn_candidates, learn_with_features, DecisionTree, DepState, Order};
use crate::repair::{ProbeRecord, RepairOutcome, RepairReport, Repairer};
use crate::sampler::{default_sample_target, get_samples, SampleOutcome, SampleTable, SamplerOptions};
use crate::sat::{Limits, OracleError};
use crate::verifier::{refute_on, Counterexample, Verdict, Verifier};

#[derive(Debug, Clone)]
pub struct SynthesisConfig {
    pub seed: u64,
    /// Sample target; `None` picks a size from the instance.
    pub samples: Option<usize>,
    pub timeout: Option<Duration>,
    /// Verify/repair rounds before giving up.
    pub max_iterations: usize,
    /// Disables resampling, keeping a single learning phase.
    pub strict_paper: bool,
    pub sampler: SamplerOptions,
    /// Consecutive stuck repair passes before returning `Unknown`.
    pub stuck_limit: usize,
    /// Counterexamples between two resampling rounds.
    pub resample_after: usize,
    pub collect_artifacts: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            seed: 1,
            samples: None,
            timeout: None,
            max_iterations: 1000,
            strict_paper: false,
            sampler: SamplerOptions::default(),
            stuck_limit: 3,
            resample_after: 32,
            collect_artifacts: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutcomeKind {
    /// A resolved, verified vector.
    Synthesized(HenkinVector),
    /// X-assignments on which no choice of function values satisfies the
    /// matrix. A single assignment has no satisfying extension at all.
    False(Vec<Assignment>),
    Unknown(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynthesisStats {
    pub samples: usize,
    pub iterations: usize,
    pub repairs: usize,
    pub probes: usize,
    pub stuck_passes: usize,
    pub resamples: usize,
    pub solver_calls: u64,
    pub elapsed: Duration,
}

/// Intermediate results kept when `collect_artifacts` is set.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub table: Option<SampleTable>,
    pub trees: BTreeMap<Var, DecisionTree>,
    pub initial: Option<HenkinVector>,
    pub order: Option<Order>,
    pub repairs: Vec<(Counterexample, RepairReport)>,
    /// Candidate vector before substitution.
    pub unresolved: Option<HenkinVector>,
}

impl Artifacts {
    pub fn probes(&self) -> impl Iterator<Item = &ProbeRecord> {
        self.repairs.iter().flat_map(|(_, r)| r.probes.iter())
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisOutcome {
    pub kind: OutcomeKind,
    pub stats: SynthesisStats,
    pub artifacts: Artifacts,
}

impl SynthesisOutcome {
    pub fn label(&self) -> &'static str {
        match self.kind {
            OutcomeKind::Synthesized(_) => "synthesized",
            OutcomeKind::False(_) => "false",
            OutcomeKind::Unknown(_) => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstituteError {
    #[error("function references form a cycle through {0:?}")]
    Cycle(Var),
}

/// Expands references to existentials until every function reads only
/// universals. References are resolved depth first, so any acyclic vector
/// works regardless of order.
pub fn substitute(instance: &DqbfInstance, vector: &HenkinVector) -> Result<HenkinVector, SubstituteError> {
    fn resolve(
        y: Var,
        instance: &DqbfInstance,
        vector: &HenkinVector,
        done: &mut BTreeMap<Var, BoolExpr>,
        active: &mut BTreeSet<Var>,
    ) -> Result<BoolExpr, SubstituteError> {
        if let Some(e) = done.get(&y) {
            return Ok(e.clone());
        }
        if !active.insert(y) {
            return Err(SubstituteError::Cycle(y));
        }
        let f = vector.get(y).expect("missing candidate").clone();
        let mut map = BTreeMap::new();
        for v in f.vars() {
            if instance.is_existential(v) {
                map.insert(v, resolve(v, instance, vector, done, active)?);
            }
        }
        let out = f.substitute(&|v| map.get(&v).cloned());
        active.remove(&y);
        done.insert(y, out.clone());
        Ok(out)
    }
    let mut done = BTreeMap::new();
    let mut active = BTreeSet::new();
    for (y, _) in vector.iter() {
        resolve(y, instance, vector, &mut done, &mut active)?;
    }
    Ok(HenkinVector::from_functions(done))
}

struct Run<'a> {
    instance: &'a DqbfInstance,
    config: &'a SynthesisConfig,
    limits: Limits,
    start: Instant,
    stats: SynthesisStats,
    artifacts: Artifacts,
}

impl<'a> Run<'a> {
    fn new(instance: &'a DqbfInstance, config: &'a SynthesisConfig) -> Self {
        let start = Instant::now();
        let deadline = config.timeout.map(|t| start + t);
        Run {
            instance,
            config,
            limits: Limits::new(config.seed, deadline),
            start,
            stats: SynthesisStats::default(),
            artifacts: Artifacts::default(),
        }
    }

    fn finish(mut self, kind: OutcomeKind) -> SynthesisOutcome {
        self.stats.solver_calls = self.limits.solver_calls();
        self.stats.elapsed = self.start.elapsed();
        log::info!(
            "outcome {:?} after {} iterations, {} solver calls",
            std::mem::discriminant(&kind),
            self.stats.iterations,
            self.stats.solver_calls
        );
        SynthesisOutcome {
            kind,
            stats: self.stats,
            artifacts: self.artifacts,
        }
    }

    fn universal_zero(&self) -> Assignment {
        Assignment::from_pairs(self.instance.universals().iter().map(|&x| (x, false)))
    }

    /// Re-checks a falsity witness from scratch before it is reported.
    fn confirm_false(&self, xs: Vec<Assignment>) -> Result<OutcomeKind, OracleError> {
        Ok(match refute_on(self.instance, &xs, &self.limits)? {
            Some(core) => OutcomeKind::False(core),
            None => OutcomeKind::Unknown("falsity witness did not re-check".into()),
        })
    }

    /// Before giving up, tries to refute the instance on every X-assignment
    /// seen so far.
    fn give_up(&self, reason: String, observed: &[Assignment]) -> Result<OutcomeKind, OracleError> {
        match refute_on(self.instance, observed, &self.limits)? {
            Some(core) => {
                log::info!("refuted on {} of {} observed X-assignments", core.len(), observed.len());
                self.confirm_false(core)
            }
            None => Ok(OutcomeKind::Unknown(reason)),
        }
    }

    fn sample(&mut self, seed: u64) -> Result<SampleOutcome, OracleError> {
        let target = self
            .config
            .samples
            .unwrap_or_else(|| default_sample_target(self.instance));
        get_samples(self.instance, target, seed, &self.limits, &self.config.sampler)
    }

    fn learn(&mut self, table: SampleTable) -> Result<OutcomeKind, OracleError> {
        self.stats.samples = table.len();
        let mut dep = DepState::init_dependencies(self.instance);
        let (vector, learned) = learn_candidates(self.instance, &table, &mut dep);
        if self.config.collect_artifacts {
            self.artifacts.trees = learned.into_iter().map(|(y, c)| (y, c.tree)).collect();
            self.artifacts.table = Some(table.clone());
            self.artifacts.initial = Some(vector.clone());
        }
        self.repair_loop(vector, dep, Some(table))
    }

    fn repair_loop(
        &mut self,
        mut vector: HenkinVector,
        mut dep: DepState,
        table: Option<SampleTable>,
    ) -> Result<OutcomeKind, OracleError> {
        let inst = self.instance;
        let order = dep
            .find_order()
            .expect("learner produced a cyclic dependency relation");
        if self.config.collect_artifacts {
            self.artifacts.order = Some(order.clone());
        }
        let mut verifier = Verifier::new(inst, &self.limits);
        let mut repairer = Repairer::new(inst, &self.limits);
        let mut blocked: Vec<Assignment> = Vec::new();
        let mut stuck_vars: BTreeSet<Var> = BTreeSet::new();
        let mut stuck = 0;
        let mut since_resample = 0;
        let mut repair_counts: BTreeMap<Var, usize> = BTreeMap::new();
        let mut observed: Vec<Assignment> = Vec::new();
        let mut seen: HashSet<Assignment> = HashSet::new();
        if let Some(t) = &table {
            for r in 0..t.len() {
                let x = t.assignment(r).restricted(inst.universals());
                if seen.insert(x.clone()) {
                    observed.push(x);
                }
            }
        }

        while self.stats.iterations < self.config.max_iterations {
            if self.limits.expired() {
                return Err(OracleError::Timeout);
            }
            self.stats.iterations += 1;
            let cex = match verifier.verify(&vector, &blocked)? {
                Verdict::Verified => return self.emit(vector),
                Verdict::InstanceFalse(x) => return self.confirm_false(vec![x]),
                Verdict::Blocked => return self.give_up(stuck_reason(&stuck_vars), &observed),
                Verdict::CexFound(cex) => cex,
            };
            if seen.insert(cex.x.clone()) {
                observed.push(cex.x.clone());
            }
            let report = repairer.repair_hkf(&mut vector, &cex, &order, &mut dep)?;
            self.stats.probes += report.probes.len();
            self.stats.repairs += report.repaired.len();
            debug_assert!(order.is_linear_extension(&dep));
            match report.outcome {
                RepairOutcome::Progress => {
                    stuck = 0;
                    blocked.clear();
                    stuck_vars.clear();
                    for &y in &report.repaired {
                        *repair_counts.entry(y).or_default() += 1;
                    }
                }
                RepairOutcome::Stuck => {
                    stuck += 1;
                    self.stats.stuck_passes += 1;
                    stuck_vars.extend(report.unrepaired());
                    stuck_vars.extend(report.candidates.iter().copied());
                    blocked.push(cex.x.clone());
                }
            }
            if self.config.collect_artifacts {
                self.artifacts.repairs.push((cex, report));
            }
            if stuck >= self.config.stuck_limit {
                return self.give_up(stuck_reason(&stuck_vars), &observed);
            }

            since_resample += 1;
            if !self.config.strict_paper && since_resample >= self.config.resample_after {
                since_resample = 0;
                if let Some(table) = &table {
                    self.relearn(&mut vector, &mut dep, &order, table, &repair_counts)?;
                    repair_counts.clear();
                    blocked.clear();
                    stuck = 0;
                }
            }
        }
        let reason = format!("iteration budget of {} exhausted", self.config.max_iterations);
        self.give_up(reason, &observed)
    }

    /// Relearns the most often repaired quarter of the existentials on a
    /// fresh sample batch. Features are limited to universals in `H_i` and
    /// existentials later in `order`, so `order` stays valid.
    fn relearn(
        &mut self,
        vector: &mut HenkinVector,
        dep: &mut DepState,
        order: &Order,
        old: &SampleTable,
        counts: &BTreeMap<Var, usize>,
    ) -> Result<(), OracleError> {
        self.stats.resamples += 1;
        let seed = self.config.seed.wrapping_add(0x9e37_79b9 * self.stats.resamples as u64);
        let table = match self.sample(seed)? {
            SampleOutcome::Table(t) => t,
            SampleOutcome::Unsat => old.clone(),
        };
        let mut ranked: Vec<(Var, usize)> = counts.iter().map(|(&y, &n)| (y, n)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let take = ranked.len().div_ceil(4);
        for &(y, n) in ranked.iter().take(take) {
            let inst = self.instance;
            let hy = inst.henkin(y);
            let mut features = hy.clone();
            features.extend(
                inst.henkin_sets()
                    .iter()
                    .filter(|(&yj, hj)| hj.is_subset(hy) && order.index(yj) > order.index(y))
                    .map(|(&yj, _)| yj),
            );
            let c = learn_with_features(inst, &table, y, features, dep);
            log::debug!("relearned {y:?} after {n} repairs");
            vector.set(y, c.expr);
        }
        Ok(())
    }

    fn emit(&mut self, vector: HenkinVector) -> Result<OutcomeKind, OracleError> {
        let inst = self.instance;
        let resolved = substitute(inst, &vector).expect("verified vector has cyclic references");
        let violations = resolved.henkin_violations(inst);
        assert!(violations.is_empty(), "resolved vector reads outside its Henkin sets: {violations:?}");
        assert!(resolved.is_resolved(inst));
        if self.config.collect_artifacts {
            self.artifacts.unresolved = Some(vector);
        }
        let mut fresh = Verifier::new(inst, &self.limits);
        match fresh.verify(&resolved, &[])? {
            Verdict::Verified => Ok(OutcomeKind::Synthesized(resolved)),
            other => {
                log::error!("final re-verification failed: {other:?}");
                Ok(OutcomeKind::Unknown("final re-verification failed".into()))
            }
        }
    }
}

fn stuck_reason(vars: &BTreeSet<Var>) -> String {
    let names: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
    format!("repair stuck on existentials {}", names.join(" "))
}

fn settle(run: Run<'_>, result: Result<OutcomeKind, OracleError>) -> SynthesisOutcome {
    let kind = match result {
        Ok(k) => k,
        Err(OracleError::Timeout) => OutcomeKind::Unknown("timeout".into()),
        Err(e) => OutcomeKind::Unknown(e.to_string()),
    };
    run.finish(kind)
}

pub fn synthesize(instance: &DqbfInstance, config: &SynthesisConfig) -> SynthesisOutcome {
    let mut run = Run::new(instance, config);
    if instance.is_trivially_false() {
        let x = run.universal_zero();
        return run.finish(OutcomeKind::False(vec![x]));
    }
    let result = match run.sample(config.seed) {
        Ok(SampleOutcome::Table(table)) => run.learn(table),
        Ok(SampleOutcome::Unsat) => {
            let x = run.universal_zero();
            run.confirm_false(vec![x])
        }
        Err(e) => Err(e),
    };
    settle(run, result)
}

/// Runs the loop on a given sample table instead of drawing one.
pub fn synthesize_with_samples(
    instance: &DqbfInstance,
    table: SampleTable,
    config: &SynthesisConfig,
) -> SynthesisOutcome {
    let mut run = Run::new(instance, config);
    let result = run.learn(table);
    settle(run, result)
}

/// Runs the loop from given candidates, skipping sampling and learning.
/// Existentials read by a candidate are recorded as dependencies.
pub fn synthesize_from_candidates(
    instance: &DqbfInstance,
    vector: HenkinVector,
    config: &SynthesisConfig,
) -> SynthesisOutcome {
    let mut run = Run::new(instance, config);
    let mut dep = DepState::init_dependencies(instance);
    for (y, f) in vector.iter() {
        for v in f.vars() {
            if instance.is_existential(v) {
                dep.record_usage(y, v);
            }
        }
    }
    if config.collect_artifacts {
        run.artifacts.initial = Some(vector.clone());
    }
    let result = run.repair_loop(vector, dep, None);
    settle(run, result)
}

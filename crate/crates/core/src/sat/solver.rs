//! A small CDCL solver: two watched literals, VSIDS with phase saving,
//! first-UIP learning, Luby restarts, LBD-based clause deletion and
//! MiniSat-style assumptions with failed-assumption extraction.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Assignment, Lit, Var};

type ClauseRef = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
    Interrupted,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub seed: u64,
    /// Probability of a random decision variable.
    pub random_var_freq: f64,
    /// Pick the polarity of every decision at random instead of the saved phase.
    pub random_polarity: bool,
    pub restart_base: u64,
    pub conflict_limit: Option<u64>,
    pub deadline: Option<Instant>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 1,
            random_var_freq: 0.0,
            random_polarity: false,
            restart_base: 100,
            conflict_limit: None,
            deadline: None,
        }
    }
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: ClauseRef,
    blocker: Lit,
}

struct ClauseData {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
    lbd: u32,
}

fn value_of(assigns: &[Option<bool>], lit: Lit) -> Option<bool> {
    assigns[lit.var().index()].map(|b| b == lit.polarity())
}

/// Max-heap of variables keyed by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        if self.pos.len() < n {
            self.pos.resize(n, None);
        }
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = Some(i);
        self.sift_up(i, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.pos[self.heap[0] as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn increased(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.sift_up(i, act);
        }
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if act[p as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let c = self.heap[child];
            if act[c as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = c;
            self.pos[c as usize] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

pub struct Solver {
    config: SolverConfig,
    rng: ChaCha8Rng,
    ok: bool,
    num_vars: u32,
    clauses: Vec<ClauseData>,
    num_learnts: usize,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Option<ClauseRef>>,
    phase: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    seen: Vec<bool>,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    model: Vec<bool>,
    failed: Vec<Lit>,
    max_learnts: f64,
    conflicts: u64,
    solve_conflicts: u64,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new(SolverConfig::default())
    }
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Solver {
            config,
            rng,
            ok: true,
            num_vars: 0,
            clauses: Vec::new(),
            num_learnts: 0,
            watches: vec![Vec::new(), Vec::new()],
            assigns: vec![None],
            level: vec![0],
            reason: vec![None],
            phase: vec![false],
            activity: vec![0.0],
            var_inc: 1.0,
            cla_inc: 1.0,
            seen: vec![false],
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            model: Vec::new(),
            failed: Vec::new(),
            max_learnts: 2000.0,
            conflicts: 0,
            solve_conflicts: 0,
        }
    }

    pub fn config_mut(&mut self) -> &mut SolverConfig {
        &mut self.config
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    /// Makes variables `1..=n` known to the solver.
    pub fn reserve_vars(&mut self, n: u32) {
        if n <= self.num_vars {
            return;
        }
        let size = n as usize + 1;
        self.assigns.resize(size, None);
        self.level.resize(size, 0);
        self.reason.resize(size, None);
        self.phase.resize(size, false);
        self.activity.resize(size, 0.0);
        self.seen.resize(size, false);
        self.watches.resize(2 * size, Vec::new());
        self.heap.grow(size);
        for v in self.num_vars + 1..=n {
            self.heap.insert(v, &self.activity);
        }
        self.num_vars = n;
    }

    /// Preferred value for the next decision on `var`.
    pub fn set_phase(&mut self, var: Var, value: bool) {
        self.reserve_vars(var.id());
        self.phase[var.index()] = value;
    }

    pub fn bump_activity(&mut self, var: Var, amount: f64) {
        self.reserve_vars(var.id());
        self.activity[var.index()] += amount * self.var_inc;
        if self.activity[var.index()] > 1e100 {
            self.rescale_activity();
        }
        self.heap.increased(var.id(), &self.activity);
    }

    fn value(&self, lit: Lit) -> Option<bool> {
        value_of(&self.assigns, lit)
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a clause at the root level. Returns `false` once the clause set
    /// is known to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        self.cancel_until(0);
        if !self.ok {
            return false;
        }
        let max = lits.iter().map(|l| l.var().id()).max().unwrap_or(0);
        self.reserve_vars(max);

        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == !l {
                return true;
            }
            match self.value(l) {
                Some(true) => return true,
                Some(false) => {}
                None => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
            }
            1 => {
                self.enqueue(out[0], None);
                self.ok = self.propagate().is_none();
            }
            _ => {
                let cref = self.push_clause(out, false, 0);
                self.attach(cref);
            }
        }
        self.ok
    }

    fn push_clause(&mut self, lits: Vec<Lit>, learnt: bool, lbd: u32) -> ClauseRef {
        self.clauses.push(ClauseData {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
            lbd,
        });
        if learnt {
            self.num_learnts += 1;
        }
        self.clauses.len() - 1
    }

    fn attach(&mut self, cref: ClauseRef) {
        let c = &self.clauses[cref].lits;
        let (a, b) = (c[0], c[1]);
        self.watches[a.code()].push(Watcher { cref, blocker: b });
        self.watches[b.code()].push(Watcher { cref, blocker: a });
    }

    fn enqueue(&mut self, lit: Lit, reason: Option<ClauseRef>) {
        let v = lit.var().index();
        debug_assert!(self.assigns[v].is_none());
        self.assigns[v] = Some(lit.polarity());
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    fn propagate(&mut self) -> Option<ClauseRef> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.clauses[w.cref].deleted {
                    continue;
                }
                if value_of(&self.assigns, w.blocker) == Some(true) {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let lits = &mut self.clauses[w.cref].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                let kept = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && value_of(&self.assigns, first) == Some(true) {
                    ws[j] = kept;
                    j += 1;
                    continue;
                }
                let mut moved = None;
                for k in 2..lits.len() {
                    if value_of(&self.assigns, lits[k]) != Some(false) {
                        lits.swap(1, k);
                        moved = Some(lits[1]);
                        break;
                    }
                }
                if let Some(new_watch) = moved {
                    self.watches[new_watch.code()].push(kept);
                    continue;
                }
                ws[j] = kept;
                j += 1;
                if value_of(&self.assigns, first) == Some(false) {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                    self.qhead = self.trail.len();
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level];
        for idx in (lim..self.trail.len()).rev() {
            let lit = self.trail[idx];
            let v = lit.var().index();
            self.phase[v] = lit.polarity();
            self.assigns[v] = None;
            self.reason[v] = None;
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level);
        self.qhead = lim;
    }

    fn rescale_activity(&mut self) {
        for a in self.activity.iter_mut() {
            *a *= 1e-100;
        }
        self.var_inc *= 1e-100;
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            self.rescale_activity();
        }
        self.heap.increased(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: ClauseRef) {
        let c = &mut self.clauses[cref];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, confl: ClauseRef) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit::new(Var::new(1), false)];
        let mut path_count = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let mut confl = confl;
        let current = self.decision_level() as u32;

        loop {
            if self.clauses[confl].learnt {
                self.bump_clause(confl);
            }
            let start = usize::from(p.is_some());
            for k in start..self.clauses[confl].lits.len() {
                let q = self.clauses[confl].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path_count += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            self.seen[pl.var().index()] = false;
            path_count -= 1;
            if path_count == 0 {
                break;
            }
            confl = self.reason[pl.var().index()].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();

        // Drop literals implied by the rest of the clause (local minimization).
        let before = learnt.clone();
        let mut kept = vec![learnt[0]];
        for &l in &learnt[1..] {
            let redundant = match self.reason[l.var().index()] {
                None => false,
                Some(r) => self.clauses[r].lits[1..].iter().all(|q| {
                    let v = q.var().index();
                    self.seen[v] || self.level[v] == 0
                }),
            };
            if !redundant {
                kept.push(l);
            }
        }
        for l in &before {
            self.seen[l.var().index()] = false;
        }
        let mut learnt = kept;

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var().index()] as usize
        };
        (learnt, bt)
    }

    /// Collects the assumptions responsible for `p` being false.
    fn analyze_final(&mut self, p: Lit) -> Vec<Lit> {
        let mut out = vec![!p];
        if self.decision_level() == 0 {
            return out;
        }
        self.seen[p.var().index()] = true;
        for idx in (self.trail_lim[0]..self.trail.len()).rev() {
            let lit = self.trail[idx];
            let v = lit.var().index();
            if !self.seen[v] {
                continue;
            }
            match self.reason[v] {
                None => out.push(lit),
                Some(r) => {
                    for k in 1..self.clauses[r].lits.len() {
                        let q = self.clauses[r].lits[k].var().index();
                        if self.level[q] > 0 {
                            self.seen[q] = true;
                        }
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[p.var().index()] = false;
        out
    }

    fn lbd(&mut self, lits: &[Lit]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var().index()]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn reduce_db(&mut self) {
        let mut candidates: Vec<ClauseRef> = (0..self.clauses.len())
            .filter(|&c| {
                let cd = &self.clauses[c];
                cd.learnt && !cd.deleted && cd.lbd > 2 && !self.locked(c)
            })
            .collect();
        candidates.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a], &self.clauses[b]);
            cb.lbd
                .cmp(&ca.lbd)
                .then(ca.activity.partial_cmp(&cb.activity).unwrap())
        });
        for &c in candidates.iter().take(candidates.len() / 2) {
            self.clauses[c].deleted = true;
            self.clauses[c].lits = Vec::new();
            self.num_learnts -= 1;
        }
    }

    fn locked(&self, cref: ClauseRef) -> bool {
        let first = self.clauses[cref].lits[0];
        self.reason[first.var().index()] == Some(cref) && self.value(first) == Some(true)
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        let mut next: Option<u32> = None;
        if self.config.random_var_freq > 0.0
            && !self.heap.heap.is_empty()
            && self.rng.gen_bool(self.config.random_var_freq.min(1.0))
        {
            let v = self.heap.heap[self.rng.gen_range(0..self.heap.heap.len())];
            if self.assigns[v as usize].is_none() {
                next = Some(v);
            }
        }
        while next.is_none() {
            let v = self.heap.pop(&self.activity)?;
            if self.assigns[v as usize].is_none() {
                next = Some(v);
            }
        }
        let v = Var::new(next.unwrap());
        let value = if self.config.random_polarity {
            self.rng.gen_bool(0.5)
        } else {
            self.phase[v.index()]
        };
        Some(v.lit(value))
    }

    fn out_of_budget(&self) -> bool {
        if let Some(limit) = self.config.conflict_limit {
            if self.solve_conflicts >= limit {
                return true;
            }
        }
        matches!(self.config.deadline, Some(d) if Instant::now() >= d)
    }

    fn search(&mut self, max_conflicts: u64, assumptions: &[Lit]) -> Option<Status> {
        let mut local = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                self.solve_conflicts += 1;
                local += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(Status::Unsat);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let lbd = self.lbd(&learnt);
                    let first = learnt[0];
                    let cref = self.push_clause(learnt, true, lbd);
                    self.attach(cref);
                    self.bump_clause(cref);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                if self.solve_conflicts.is_multiple_of(64) && self.out_of_budget() {
                    return Some(Status::Interrupted);
                }
            } else {
                if local >= max_conflicts {
                    self.cancel_until(0);
                    return None;
                }
                if self.num_learnts as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                    self.max_learnts *= 1.1;
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let a = assumptions[self.decision_level()];
                    match self.value(a) {
                        Some(true) => self.trail_lim.push(self.trail.len()),
                        Some(false) => {
                            self.failed = self.analyze_final(!a);
                            return Some(Status::Unsat);
                        }
                        None => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(l) => l,
                    None => match self.pick_branch() {
                        Some(l) => l,
                        None => return Some(Status::Sat),
                    },
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, None);
            }
        }
    }

    /// Solves under `assumptions`. After `Unsat`, [`Solver::failed`]
    /// holds a subset of the assumptions that is jointly inconsistent with
    /// the clauses (empty if the clauses alone are unsatisfiable).
    pub fn solve(&mut self, assumptions: &[Lit]) -> Status {
        self.model.clear();
        self.failed.clear();
        self.solve_conflicts = 0;
        if let Some(max) = assumptions.iter().map(|l| l.var().id()).max() {
            self.reserve_vars(max);
        }
        if !self.ok {
            return Status::Unsat;
        }
        if self.out_of_budget() {
            return Status::Interrupted;
        }
        let mut restarts = 0u64;
        let status = loop {
            let budget = (luby(2.0, restarts) * self.config.restart_base as f64) as u64;
            if let Some(s) = self.search(budget, assumptions) {
                break s;
            }
            restarts += 1;
            if self.out_of_budget() {
                break Status::Interrupted;
            }
        };
        if status == Status::Sat {
            self.model = self.assigns.iter().map(|v| v.unwrap_or(false)).collect();
            #[cfg(debug_assertions)]
            self.check_model(assumptions);
        }
        self.cancel_until(0);
        status
    }

    #[cfg(debug_assertions)]
    fn check_model(&self, assumptions: &[Lit]) {
        let holds = |l: &Lit| self.model[l.var().index()] == l.polarity();
        for c in self.clauses.iter().filter(|c| !c.learnt && !c.deleted) {
            assert!(c.lits.iter().any(holds), "model falsifies {:?}", c.lits);
        }
        assert!(assumptions.iter().all(holds), "model violates an assumption");
    }

    pub fn model_value(&self, var: Var) -> Option<bool> {
        self.model.get(var.index()).copied()
    }

    pub fn model(&self) -> Assignment {
        Assignment::from_pairs(
            (1..self.model.len()).map(|i| (Var::new(i as u32), self.model[i])),
        )
    }

    pub fn failed(&self) -> &[Lit] {
        &self.failed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(xs: &[i64]) -> Vec<Lit> {
        xs.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect()
    }

    #[test]
    fn trivial_sat_and_unsat() {
        let mut s = Solver::default();
        s.add_clause(&lits(&[1, 2]));
        assert_eq!(s.solve(&[]), Status::Sat);
        let m = s.model();
        assert!(m.get(Var::new(1)).unwrap() || m.get(Var::new(2)).unwrap());
        s.add_clause(&lits(&[-1]));
        s.add_clause(&lits(&[-2]));
        assert_eq!(s.solve(&[]), Status::Unsat);
    }

    #[test]
    fn failed_assumptions() {
        let mut s = Solver::default();
        s.add_clause(&lits(&[1]));
        assert_eq!(s.solve(&lits(&[-1])), Status::Unsat);
        assert_eq!(s.failed(), &lits(&[-1])[..]);
        // The solver stays usable after a failed assumption.
        assert_eq!(s.solve(&lits(&[2])), Status::Sat);
    }

    #[test]
    fn failed_assumptions_through_implications() {
        // 1 -> 3, 2 -> -3; assuming 5, 1, 2 fails on {1, 2}.
        let mut s = Solver::default();
        s.add_clause(&lits(&[-1, 3]));
        s.add_clause(&lits(&[-2, -3]));
        assert_eq!(s.solve(&lits(&[5, 1, 2])), Status::Unsat);
        let mut f = s.failed().to_vec();
        f.sort();
        assert_eq!(f, lits(&[1, 2]));
    }

    #[test]
    fn pigeonhole_3_into_2_is_unsat() {
        let mut s = Solver::default();
        let p = |i: i64, j: i64| i * 2 + j + 1;
        for i in 0..3 {
            s.add_clause(&lits(&[p(i, 0), p(i, 1)]));
        }
        for j in 0..2 {
            for a in 0..3 {
                for b in a + 1..3 {
                    s.add_clause(&lits(&[-p(a, j), -p(b, j)]));
                }
            }
        }
        assert_eq!(s.solve(&[]), Status::Unsat);
    }

    #[test]
    fn conflict_limit_interrupts() {
        let mut s = Solver::new(SolverConfig {
            conflict_limit: Some(0),
            ..SolverConfig::default()
        });
        s.add_clause(&lits(&[1, 2]));
        assert_eq!(s.solve(&[]), Status::Interrupted);
    }

    #[test]
    fn luby_sequence() {
        let seq: Vec<u64> = (0..7).map(|i| luby(2.0, i) as u64).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4]);
    }
}

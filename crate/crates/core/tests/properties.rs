use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hensynth::formula::{parse_dqdimacs, to_dqdimacs_string, Assignment, BoolExpr, Clause, Lit, Var};
use hensynth::gen::{random_clause, random_instance, random_labelled_rows, random_resolved_vector, GenParams};
use hensynth::learner::{candidate_hkf, learn_candidates, learn_tree_rows, DepState};
use hensynth::oracle::{assignments, brute_sat, check_vector, decide_truth, maxsat_optimum};
use hensynth::repair::repair_candidate;
use hensynth::sampler::{get_samples, SampleOutcome, SamplerOptions};
use hensynth::sat::{check_sat, failed_core, solve_maxsat, Limits, MaxSatQuery, SatQuery, SatResult};
use hensynth::{substitute, synthesize, OutcomeKind, SynthesisConfig};

fn vars(n: u32) -> Vec<Var> {
    (1..=n).map(Var::new).collect()
}

fn clauses(rng: &mut ChaCha8Rng, n: u32, m: usize) -> Vec<Clause> {
    let vs = vars(n);
    (0..m).map(|_| random_clause(rng, &vs, 3)).collect()
}

fn random_expr(rng: &mut ChaCha8Rng, vs: &[Var], depth: usize) -> BoolExpr {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..6) {
            0 => BoolExpr::constant(rng.gen_bool(0.5)),
            _ => BoolExpr::lit(Lit::new(vs[rng.gen_range(0..vs.len())], rng.gen_bool(0.5))),
        };
    }
    let kids: Vec<BoolExpr> = (0..rng.gen_range(1..=3)).map(|_| random_expr(rng, vs, depth - 1)).collect();
    match rng.gen_range(0..3) {
        0 => BoolExpr::and(kids),
        1 => BoolExpr::or(kids),
        _ => kids[0].negate(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sat_agrees_with_enumeration(seed in any::<u64>(), n in 1u32..9, m in 0usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cs = clauses(&mut rng, n, m);
        let mut assumptions = Vec::new();
        for v in vars(n) {
            if rng.gen_bool(0.3) {
                assumptions.push(Lit::new(v, rng.gen_bool(0.5)));
            }
        }
        let res = check_sat(&SatQuery::new(cs.clone(), assumptions.clone()), &Limits::new(seed, None)).unwrap();
        prop_assert_eq!(res.is_sat(), brute_sat(&cs, &assumptions).unwrap());
        if let SatResult::Sat(model) = res {
            prop_assert!(cs.iter().all(|c| c.eval(&model) == Some(true)));
            prop_assert!(assumptions.iter().all(|&l| model.lit_value(l) == Some(true)));
        }
    }

    #[test]
    fn cores_are_unsat_subsets(seed in any::<u64>(), n in 2u32..9, m in 1usize..20, shrink in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cs = clauses(&mut rng, n, m);
        let assumptions: Vec<Lit> = vars(n).into_iter().map(|v| Lit::new(v, rng.gen_bool(0.5))).collect();
        prop_assume!(!brute_sat(&cs, &assumptions).unwrap());
        let core = failed_core(&SatQuery::new(cs.clone(), assumptions.clone()), &Limits::new(seed, None), shrink).unwrap();
        prop_assert!(core.iter().all(|l| assumptions.contains(l)));
        prop_assert!(!brute_sat(&cs, &core).unwrap());
        if shrink {
            // Dropping any single literal of a shrunk core makes it satisfiable.
            for i in 0..core.len() {
                let mut fewer = core.clone();
                fewer.remove(i);
                prop_assert!(brute_sat(&cs, &fewer).unwrap());
            }
        }
    }

    #[test]
    fn maxsat_is_optimal(seed in any::<u64>(), n in 1u32..8, h in 0usize..5, s in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hard = clauses(&mut rng, n, h);
        let soft = clauses(&mut rng, n, s);
        let q = MaxSatQuery { hard: hard.clone(), soft: soft.iter().cloned().map(|c| (c, ())).collect() };
        match (solve_maxsat(&q, &Limits::new(seed, None)), maxsat_optimum(&hard, &soft).unwrap()) {
            (Ok(sol), Some(best)) => {
                prop_assert_eq!(sol.cost(), best);
                let missed = soft.iter().filter(|c| c.eval(&sol.model) != Some(true)).count();
                prop_assert_eq!(missed, best);
            }
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
        }
    }

    #[test]
    fn learned_candidates_respect_dependencies(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, &GenParams::default());
        let limits = Limits::new(seed, None);
        let SampleOutcome::Table(table) = get_samples(&inst, 40, seed, &limits, &SamplerOptions::default()).unwrap() else {
            return Ok(());
        };
        for r in 0..table.len() {
            prop_assert!(inst.matrix_holds(&table.assignment(r)));
        }
        let mut dep = DepState::init_dependencies(&inst);
        for &y in inst.existentials() {
            let allowed = dep.feature_set(&inst, y);
            let c = candidate_hkf(&inst, &table, y, &mut dep);
            prop_assert!(c.expr.vars().is_subset(&allowed));
            prop_assert!(dep.is_acyclic());
        }
        let order = dep.find_order().unwrap();
        prop_assert!(order.is_linear_extension(&dep));

        let mut dep = DepState::init_dependencies(&inst);
        let (vector, _) = learn_candidates(&inst, &table, &mut dep);
        let resolved = substitute(&inst, &vector).unwrap();
        prop_assert!(resolved.is_resolved(&inst));
        prop_assert!(resolved.henkin_violations(&inst).is_empty());
    }

    #[test]
    fn tree_matches_its_expression(seed in any::<u64>(), n in 1usize..7, rows in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (table, labels) = random_labelled_rows(&mut rng, n, rows);
        let features = vars(n as u32);
        let tree = learn_tree_rows(&features, &table, &labels, None);
        let expr = tree.to_expr();
        for a in assignments(&features) {
            let by_tree = tree.classify(&|v| a.get(v).unwrap());
            prop_assert_eq!(expr.eval(&a).unwrap(), by_tree);
        }
        for (row, &label) in table.iter().zip(&labels) {
            prop_assert_eq!(tree.classify(&|v| row[v.index() - 1]), label);
        }
    }

    #[test]
    fn repair_fixes_only_the_cube(seed in any::<u64>(), output in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = vars(4);
        let yk = Var::new(5);
        let f = random_expr(&mut rng, &xs, 3);
        let mut core = vec![yk.pos()];
        for &v in &xs {
            if rng.gen_bool(0.5) {
                core.push(Lit::new(v, rng.gen_bool(0.5)));
            }
        }
        let fixed = repair_candidate(&f, &core, yk, output);
        if core.len() == 1 {
            prop_assert!(fixed.is_err());
            return Ok(());
        }
        let fixed = fixed.unwrap();
        for a in assignments(&xs) {
            let in_cube = core.iter().filter(|l| l.var() != yk).all(|&l| a.lit_value(l) == Some(true));
            let (old, new) = (f.eval(&a).unwrap(), fixed.eval(&a).unwrap());
            if in_cube {
                prop_assert_eq!(new, !output);
            } else {
                prop_assert_eq!(new, old);
            }
            // Strengthening never adds ones; weakening never removes them.
            if output { prop_assert!(!new || old) } else { prop_assert!(!old || new) }
        }
    }

    #[test]
    fn engine_agrees_with_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, &GenParams::default());
        let out = synthesize(&inst, &SynthesisConfig { seed, ..SynthesisConfig::default() });
        match out.kind {
            OutcomeKind::Synthesized(f) => {
                prop_assert!(check_vector(&inst, &f).unwrap());
                prop_assert!(f.henkin_violations(&inst).is_empty());
            }
            OutcomeKind::False(_) => prop_assert!(!decide_truth(&inst).unwrap().is_true()),
            OutcomeKind::Unknown(_) => {}
        }
    }

    #[test]
    fn dqdimacs_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, &GenParams::default());
        let text = to_dqdimacs_string(&inst);
        prop_assert_eq!(parse_dqdimacs(text.as_bytes()).unwrap(), inst);
    }

    #[test]
    fn random_vectors_are_resolved(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, &GenParams::default());
        let f = random_resolved_vector(&mut rng, &inst);
        prop_assert!(f.is_resolved(&inst));
        prop_assert_eq!(substitute(&inst, &f).unwrap(), f.clone());
        for x in assignments(&inst.universals().iter().copied().collect::<Vec<_>>()) {
            let out: Assignment = f.outputs(&x).unwrap();
            prop_assert!(inst.existentials().iter().all(|&y| out.get(y).is_some()));
        }
    }
}

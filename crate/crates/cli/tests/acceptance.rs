//! Acceptance suite: one pass/fail line per criterion. Run with
//! `cargo test -p hensynth-cli --test acceptance`.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hensynth::formula::{
    parse_dqdimacs, to_dqdimacs_string, write_henkin_vector, BoolExpr, Clause, DqbfInstance, HenkinVector, Lit, Var,
};
use hensynth::gen::{random_clause, random_instance, random_labelled_rows, random_resolved_vector, GenParams};
use hensynth::learner::{learn_tree_rows, tree_to_expr};
use hensynth::oracle::{brute_sat, check_vector, decide_truth, maxsat_optimum, tables_to_vector, Truth};
use hensynth::repair::RepairOutcome;
use hensynth::sampler::SampleTable;
use hensynth::sat::{check_sat, failed_core, solve_maxsat, Limits, MaxSatError, MaxSatQuery, SatQuery, SatResult};
use hensynth::verifier::{Verdict, Verifier};
use hensynth::{synthesize, synthesize_from_candidates, synthesize_with_samples, OutcomeKind, SynthesisConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORKED_LIMIT: Duration = Duration::from_secs(1);
const LIMITATION_LIMIT: Duration = Duration::from_secs(1);
const SWEEP_LIMIT: Duration = Duration::from_secs(120);
const MAXSAT_LIMIT: Duration = Duration::from_secs(30);
const SWEEP_INSTANCES: usize = 500;
const UNKNOWN_RATE_TARGET: f64 = 0.20;

const RUNNING_EXAMPLE: &str = "\
p cnf 6 7
a 1 2 3 0
d 4 1 0
d 5 1 2 0
d 6 2 3 0
1 4 0
-5 4 -2 0
5 -4 0
5 2 0
-6 2 3 0
6 -2 0
6 -3 0
";
const RUNNING_SAMPLES: [&str; 3] = ["000110", "001111", "110001"];
const XNOR_SPLIT: &str = "p cnf 5 2\na 1 2 3 0\nd 4 1 2 0\nd 5 2 3 0\n4 -5 0\n-4 5 0\n";

type Check = Result<String, String>;

macro_rules! require {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn v(i: u32) -> Var {
    Var::new(i)
}

fn parse(text: &str) -> DqbfInstance {
    parse_dqdimacs(text.as_bytes()).expect("instance parses")
}

fn within(start: Instant, limit: Duration) -> Check {
    let t = start.elapsed();
    require!(t < limit, "took {:.2}s, limit {:.0}s", t.as_secs_f64(), limit.as_secs_f64());
    Ok(format!("{:.3}s", t.as_secs_f64()))
}

fn compliant(inst: &DqbfInstance, f: &HenkinVector) -> Result<(), String> {
    let violations = f.henkin_violations(inst);
    require!(violations.is_empty(), "Henkin violations {violations:?}");
    require!(f.is_resolved(inst), "vector is not resolved");
    Ok(())
}

/// Synthesized vectors from criteria 1 to 3, for the compliance check.
#[derive(Default)]
struct Collected {
    synthesized: Vec<(DqbfInstance, HenkinVector)>,
    sweep: Vec<(DqbfInstance, u64, &'static str)>,
}

fn worked_example(out: &mut Collected) -> Check {
    let start = Instant::now();
    let inst = parse(RUNNING_EXAMPLE);
    let rows: Vec<Vec<bool>> = RUNNING_SAMPLES
        .iter()
        .map(|r| r.chars().map(|c| c == '1').collect())
        .collect();
    let table = SampleTable::from_rows(&inst, &rows).map_err(|e| e.to_string())?;
    let config = SynthesisConfig {
        strict_paper: true,
        collect_artifacts: true,
        ..SynthesisConfig::default()
    };
    let res = synthesize_with_samples(&inst, table, &config);
    let a = &res.artifacts;
    let init = a.initial.as_ref().ok_or("no initial candidates")?;
    let (x1, x2, x3) = (BoolExpr::var(v(1)), BoolExpr::var(v(2)), BoolExpr::var(v(3)));
    require!(init.get(v(4)) == Some(&x1.negate()), "f1 = {:?}", init.get(v(4)));
    require!(init.get(v(5)) == Some(&BoolExpr::var(v(4))), "f2 = {:?}", init.get(v(5)));
    let f3 = BoolExpr::or([x3.clone(), BoolExpr::and([x3.negate(), x2])]);
    require!(init.get(v(6)) == Some(&f3), "f3 = {:?}", init.get(v(6)));
    let (cex, report) = a.repairs.first().ok_or("no counterexample")?;
    let x = [cex.x.get(v(1)), cex.x.get(v(2)), cex.x.get(v(3))];
    require!(x == [Some(true), Some(false), Some(false)], "counterexample x = {x:?}");
    require!(report.candidates.len() == 1, "candidate set {:?} is not a singleton", report.candidates);
    let OutcomeKind::Synthesized(f) = &res.kind else {
        return Err(format!("outcome {:?}", res.kind));
    };
    require!(check_vector(&inst, f).map_err(|e| e.to_string())?, "oracle rejects the vector");
    out.synthesized.push((inst.clone(), f.clone()));
    let t = within(start, WORKED_LIMIT)?;
    Ok(format!("cex x=100, candidates {:?}, {t}", report.candidates))
}

fn limitation() -> Check {
    let start = Instant::now();
    let inst = parse(XNOR_SPLIT);
    let seeded = HenkinVector::from_functions([(v(4), BoolExpr::var(v(2))), (v(5), BoolExpr::var(v(2)).negate())]);
    let config = SynthesisConfig {
        strict_paper: true,
        collect_artifacts: true,
        ..SynthesisConfig::default()
    };
    let res = synthesize_from_candidates(&inst, seeded, &config);
    let repairs = &res.artifacts.repairs;
    require!(!repairs.is_empty(), "no repair pass ran");
    require!(
        repairs.iter().all(|(_, r)| r.outcome == RepairOutcome::Stuck),
        "a repair pass made progress"
    );
    let OutcomeKind::Unknown(reason) = &res.kind else {
        return Err(format!("outcome {:?}", res.kind));
    };
    require!(decide_truth(&inst).map_err(|e| e.to_string())?.is_true(), "oracle says false");
    let t = within(start, LIMITATION_LIMIT)?;
    Ok(format!("unknown ({reason}), oracle true, {t}"))
}

fn sweep(out: &mut Collected) -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = GenParams::default();
    let (mut synthesized, mut falses, mut unknown, mut contradictions) = (0, 0, 0, Vec::new());
    for i in 0..SWEEP_INSTANCES {
        let inst = random_instance(&mut rng, &params);
        let seed = i as u64 + 1;
        let config = SynthesisConfig {
            seed,
            ..SynthesisConfig::default()
        };
        let res = synthesize(&inst, &config);
        match &res.kind {
            OutcomeKind::Synthesized(f) => {
                synthesized += 1;
                if !check_vector(&inst, f).map_err(|e| e.to_string())? {
                    contradictions.push(i);
                }
                out.synthesized.push((inst.clone(), f.clone()));
            }
            OutcomeKind::False(_) => {
                falses += 1;
                if decide_truth(&inst).map_err(|e| e.to_string())?.is_true() {
                    contradictions.push(i);
                }
            }
            OutcomeKind::Unknown(_) => unknown += 1,
        }
        out.sweep.push((inst, seed, res.label()));
    }
    require!(contradictions.is_empty(), "contradictions on instances {contradictions:?}");
    let rate = unknown as f64 / SWEEP_INSTANCES as f64;
    let note = if rate < UNKNOWN_RATE_TARGET { "within" } else { "above" };
    let t = within(start, SWEEP_LIMIT)?;
    Ok(format!(
        "{synthesized} synthesized, {falses} false, {unknown} unknown ({:.1}%, {note} the {:.0}% target), 0 contradictions, {t}",
        100.0 * rate,
        100.0 * UNKNOWN_RATE_TARGET
    ))
}

fn henkin_compliance(out: &Collected) -> Check {
    for (inst, f) in &out.synthesized {
        compliant(inst, f)?;
    }
    Ok(format!("{} synthesized vectors, 0 violations", out.synthesized.len()))
}

fn random_clauses(rng: &mut ChaCha8Rng, vars: &[Var], n: usize, max_len: usize) -> Vec<Clause> {
    (0..n).map(|_| random_clause(rng, vars, max_len)).collect()
}

fn maxsat_exactness() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let limits = Limits::new(5, None);
    let mut hard_unsat = 0;
    for i in 0..200 {
        let nv = rng.gen_range(1..=8u32);
        let vars: Vec<Var> = (1..=nv).map(Var::new).collect();
        let nh = rng.gen_range(0..=6);
        let ns = rng.gen_range(1..=6);
        let hard = random_clauses(&mut rng, &vars, nh, 3);
        let soft = random_clauses(&mut rng, &vars, ns, 3);
        let query = MaxSatQuery {
            hard: hard.clone(),
            soft: soft.iter().cloned().enumerate().map(|(j, c)| (c, j)).collect(),
        };
        let expected = maxsat_optimum(&hard, &soft).map_err(|e| e.to_string())?;
        match (solve_maxsat(&query, &limits), expected) {
            (Ok(sol), Some(best)) => {
                require!(sol.cost() == best, "instance {i}: cost {} but optimum {best}", sol.cost());
                require!(
                    hard.iter().all(|c| c.eval(&sol.model) == Some(true)),
                    "instance {i}: model violates a hard clause"
                );
            }
            (Err(MaxSatError::HardUnsat), None) => hard_unsat += 1,
            (got, want) => return Err(format!("instance {i}: got {got:?}, optimum {want:?}")),
        }
    }
    let t = within(start, MAXSAT_LIMIT)?;
    Ok(format!("200 instances ({hard_unsat} with unsatisfiable hard part), 0 deviations, {t}"))
}

fn core_validity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let limits = Limits::new(6, None);
    let (mut found, mut attempts, mut total_core, mut total_assumed) = (0, 0, 0, 0);
    while found < 200 {
        attempts += 1;
        require!(attempts < 100_000, "could not generate enough unsatisfiable queries");
        let nv = rng.gen_range(2..=10u32);
        let vars: Vec<Var> = (1..=nv).map(Var::new).collect();
        let nc = rng.gen_range(1..=3 * nv as usize);
        let clauses = random_clauses(&mut rng, &vars, nc, 3);
        let k = rng.gen_range(1..=nv as usize);
        let mut assumptions: Vec<Lit> = vars[..k].iter().map(|&x| Lit::new(x, rng.gen_bool(0.5))).collect();
        assumptions.reverse();
        // Only queries that the assumptions make unsatisfiable.
        if !brute_sat(&clauses, &[]).map_err(|e| e.to_string())?
            || brute_sat(&clauses, &assumptions).map_err(|e| e.to_string())?
        {
            continue;
        }
        found += 1;
        let query = SatQuery::new(clauses.clone(), assumptions.clone());
        let core = failed_core(&query, &limits, true).map_err(|e| e.to_string())?;
        require!(core.iter().all(|l| assumptions.contains(l)), "core {core:?} leaves the assumptions");
        let again = check_sat(&SatQuery::new(clauses.clone(), core.clone()), &limits).map_err(|e| e.to_string())?;
        require!(matches!(again, SatResult::Unsat(_)), "core {core:?} re-solves SAT");
        require!(!brute_sat(&clauses, &core).map_err(|e| e.to_string())?, "brute force finds a model for core {core:?}");
        total_core += core.len();
        total_assumed += assumptions.len();
    }
    Ok(format!(
        "200 queries, 0 violations, mean core {:.2} of {:.2} assumptions",
        total_core as f64 / 200.0,
        total_assumed as f64 / 200.0
    ))
}

fn learner_consistency() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..100 {
        let n = rng.gen_range(1..=6);
        let rows = rng.gen_range(1..=48);
        let (table, labels) = random_labelled_rows(&mut rng, n, rows);
        let features: Vec<Var> = (1..=n as u32).map(Var::new).collect();
        let tree = learn_tree_rows(&features, &table, &labels, None);
        let expr = tree_to_expr(&tree);
        for (r, (row, &label)) in table.iter().zip(&labels).enumerate() {
            let got = expr
                .eval_with(&|x| Some(row[x.index() - 1]))
                .map_err(|e| e.to_string())?;
            require!(got == label, "table {i}, row {r}: expression gives {got}, label {label}");
        }
    }
    Ok("100 tables, every row agrees".into())
}

fn verifier_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let limits = Limits::new(8, None);
    let params = GenParams::default();
    let mut valid = 0;
    for i in 0..200 {
        let inst = random_instance(&mut rng, &params);
        // Half the pairs use an oracle-found solution when one exists, so
        // both sides of the equivalence are exercised.
        let vector = match decide_truth(&inst).map_err(|e| e.to_string())? {
            Truth::True(tables) if i % 2 == 0 => tables_to_vector(&tables),
            _ => random_resolved_vector(&mut rng, &inst),
        };
        let expected = check_vector(&inst, &vector).map_err(|e| e.to_string())?;
        let verdict = Verifier::new(&inst, &limits)
            .verify(&vector, &[])
            .map_err(|e| e.to_string())?;
        let verified = verdict == Verdict::Verified;
        require!(verified == expected, "pair {i}: verifier {verdict:?}, oracle {expected}");
        valid += expected as usize;
    }
    Ok(format!("200 pairs ({valid} valid), 0 disagreements"))
}

fn cli_contract(out: &Collected) -> Check {
    let bin = env!("CARGO_BIN_EXE_hensynth");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let code = |args: &[&str]| -> Result<Option<i32>, String> {
        Command::new(bin)
            .args(args)
            .output()
            .map(|o| o.status.code())
            .map_err(|e| e.to_string())
    };
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    fs::write(path("bad.dqdimacs"), "p cnf nope\n").map_err(|e| e.to_string())?;
    require!(code(&["synthesize", &path("bad.dqdimacs")])? == Some(1), "parse error does not exit 1");
    require!(code(&["synthesize"])? == Some(1), "usage error does not exit 1");

    let mut round_trips = 0;
    for (i, (inst, seed, label)) in out.sweep.iter().enumerate() {
        let input = path(&format!("{i}.dqdimacs"));
        let cert = path(&format!("{i}.hfn"));
        fs::write(&input, to_dqdimacs_string(inst)).map_err(|e| e.to_string())?;
        let got = code(&["synthesize", &input, "--seed", &seed.to_string(), "-o", &cert])?;
        let want = match *label {
            "synthesized" => 10,
            "false" => 20,
            _ => 0,
        };
        require!(got == Some(want), "instance {i}: exit {got:?}, library outcome {label}");
        if want == 10 {
            require!(code(&["verify", &input, &cert])? == Some(0), "instance {i}: certificate rejected");
            round_trips += 1;
        }
    }

    // The library's own certificates go through the checker as well.
    let (inst, f) = out.synthesized.first().ok_or("nothing synthesized")?;
    let mut text = Vec::new();
    write_henkin_vector(inst, f, &mut text).map_err(|e| e.to_string())?;
    fs::write(path("lib.hfn"), text).map_err(|e| e.to_string())?;
    fs::write(path("lib.dqdimacs"), to_dqdimacs_string(inst)).map_err(|e| e.to_string())?;
    require!(
        code(&["verify", &path("lib.dqdimacs"), &path("lib.hfn")])? == Some(0),
        "library certificate rejected"
    );
    Ok(format!(
        "exit codes match on {} runs, {round_trips} certificates verified",
        out.sweep.len()
    ))
}

fn main() -> ExitCode {
    let mut collected = Collected::default();
    let results: Vec<(&str, Check)> = vec![
        ("worked example", worked_example(&mut collected)),
        ("limitation", limitation()),
        ("soundness sweep", sweep(&mut collected)),
        ("Henkin compliance", henkin_compliance(&collected)),
        ("MaxSAT exactness", maxsat_exactness()),
        ("core validity", core_validity()),
        ("learner consistency", learner_consistency()),
        ("verifier equivalence", verifier_equivalence()),
        ("CLI contract", cli_contract(&collected)),
    ];
    let mut failed = 0;
    for (n, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("[PASS] criterion {} {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {} {name}: {why}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

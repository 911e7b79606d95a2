use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use hensynth::formula::{parse_dqdimacs, write_henkin_vector, Assignment, DqbfInstance};
use hensynth::{synthesize as run_engine, OutcomeKind, SynthesisOutcome};

use crate::SynthesizeArgs;

pub const EXIT_SYNTHESIZED: u8 = 10;
pub const EXIT_FALSE: u8 = 20;
pub const EXIT_UNKNOWN: u8 = 0;

pub fn load_instance(path: &Path) -> Result<DqbfInstance> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_dqdimacs(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn witness_line(inst: &DqbfInstance, x: &Assignment) -> String {
    let lits: Vec<String> = inst
        .universals()
        .iter()
        .map(|&v| v.lit(x.get(v).unwrap_or(false)).to_string())
        .collect();
    lits.join(" ")
}

pub fn synthesize(args: &SynthesizeArgs) -> Result<u8> {
    let inst = load_instance(&args.input)?;
    let seed = args.engine.effective_seed();
    let mut config = args.engine.config(seed, args.timeout);
    config.collect_artifacts =
        args.dump_samples.is_some() || args.dump_trees.is_some() || args.trace_repairs.is_some();
    let out = run_engine(&inst, &config);
    write_dumps(args, &out)?;

    let s = &out.stats;
    eprintln!(
        "c seed {seed} samples {} iterations {} repairs {} probes {} solver_calls {} seconds {:.3}",
        s.samples,
        s.iterations,
        s.repairs,
        s.probes,
        s.solver_calls,
        s.elapsed.as_secs_f64()
    );
    let stdout = io::stdout();
    let mut stdout = stdout.lock();
    match &out.kind {
        OutcomeKind::Synthesized(vector) => {
            writeln!(stdout, "RESULT: SYNTHESIZED")?;
            match &args.output {
                Some(path) => {
                    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                    let mut w = BufWriter::new(file);
                    write_henkin_vector(&inst, vector, &mut w)?;
                    w.flush()?;
                }
                None => write_henkin_vector(&inst, vector, &mut stdout)?,
            }
            Ok(EXIT_SYNTHESIZED)
        }
        OutcomeKind::False(witness) => {
            writeln!(stdout, "RESULT: FALSE")?;
            for x in witness {
                writeln!(stdout, "witness {}", witness_line(&inst, x))?;
            }
            Ok(EXIT_FALSE)
        }
        OutcomeKind::Unknown(reason) => {
            writeln!(stdout, "RESULT: UNKNOWN")?;
            writeln!(stdout, "reason: {reason}")?;
            Ok(EXIT_UNKNOWN)
        }
    }
}

fn write_dumps(args: &SynthesizeArgs, out: &SynthesisOutcome) -> Result<()> {
    let a = &out.artifacts;
    if let (Some(path), Some(table)) = (&args.dump_samples, &a.table) {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(table.variables().iter().map(|v| v.to_string()))?;
        for row in table.rows() {
            w.write_record(row.iter().map(|&b| if b { "1" } else { "0" }))?;
        }
        w.flush()?;
    }
    if let Some(dir) = &args.dump_trees {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (y, tree) in &a.trees {
            fs::write(dir.join(format!("y{y}.tree")), tree.dump())?;
        }
    }
    if let Some(path) = &args.trace_repairs {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        for p in a.probes() {
            writeln!(w, "{p}")?;
        }
        w.flush()?;
    }
    Ok(())
}

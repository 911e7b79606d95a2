use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{Context, Result};
use hensynth::formula::parse_dqdimacs;
use hensynth::{synthesize, SynthesisConfig};
use serde::Serialize;

use crate::BenchArgs;

/// One CSV row.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub outcome: String,
    pub seconds: f64,
    pub iterations: usize,
    pub solver_calls: u64,
    pub seed: u64,
}

fn list_instances(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn run_one(path: &Path, config: &SynthesisConfig) -> RunRecord {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let start = Instant::now();
    let parsed = fs::read(path)
        .map_err(|e| e.to_string())
        .and_then(|b| parse_dqdimacs(&b).map_err(|e| e.to_string()));
    match parsed {
        Err(e) => {
            log::warn!("{name}: {e}");
            RunRecord {
                instance: name,
                outcome: "parse_error".into(),
                seconds: start.elapsed().as_secs_f64(),
                iterations: 0,
                solver_calls: 0,
                seed: config.seed,
            }
        }
        Ok(inst) => {
            let out = synthesize(&inst, config);
            RunRecord {
                instance: name,
                outcome: out.label().into(),
                seconds: out.stats.elapsed.as_secs_f64(),
                iterations: out.stats.iterations,
                solver_calls: out.stats.solver_calls,
                seed: config.seed,
            }
        }
    }
}

/// Runs `files` on `jobs` worker threads; records come back in file order.
pub fn run_all(files: &[PathBuf], config: &SynthesisConfig, jobs: usize) -> Vec<RunRecord> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; files.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, files.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= files.len() {
                    break;
                }
                let rec = run_one(&files[i], config);
                slots.lock().unwrap()[i] = Some(rec);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.unwrap()).collect()
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    })
}

pub fn bench(args: &BenchArgs) -> Result<u8> {
    let files = list_instances(&args.dir)?;
    let seed = args.engine.effective_seed();
    let config = args.engine.config(seed, Some(args.timeout));
    let records = run_all(&files, &config, args.jobs);

    let sink: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout()),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(["instance", "outcome", "seconds", "iterations", "solver_calls", "seed"])?;
    for r in &records {
        w.serialize(r)?;
    }
    w.flush()?;

    let count = |o: &str| records.iter().filter(|r| r.outcome == o).count();
    let times: Vec<f64> = records.iter().map(|r| r.seconds).collect();
    eprintln!(
        "c instances {} synthesized {} false {} unknown {} parse_error {} min {:.3}s median {:.3}s",
        records.len(),
        count("synthesized"),
        count("false"),
        count("unknown"),
        count("parse_error"),
        times.iter().copied().reduce(f64::min).unwrap_or(0.0),
        median(times).unwrap_or(0.0),
    );

    if let Some(path) = &args.cactus {
        let mut solved: Vec<f64> = records
            .iter()
            .filter(|r| r.outcome == "synthesized" || r.outcome == "false")
            .map(|r| r.seconds)
            .collect();
        solved.sort_by(f64::total_cmp);
        let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(out, "solved,cumulative_seconds")?;
        let mut total = 0.0;
        for (i, t) in solved.iter().enumerate() {
            total += t;
            writeln!(out, "{},{:.6}", i + 1, total)?;
        }
        out.flush()?;
    }
    Ok(0)
}

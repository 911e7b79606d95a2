//! DQDIMACS reader and writer.
//!
//! Accepted lines, in order: `c` comments anywhere, one `p cnf <vars> <clauses>`
//! header, quantifier lines (`a … 0`, `e … 0`, `d y x1 … xk 0`), then clauses.
//! An `e` variable depends on every universal declared before its line.
//! Clauses may span several lines; each ends with `0`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use thiserror::Error;

use super::instance::{DqbfInstance, InstanceError};
use super::types::{Clause, Cnf, Lit, Var};

#[derive(Debug, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error)]
pub enum ParseErrorKind {
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("duplicate `p` header")]
    DuplicateHeader,
    #[error("malformed header")]
    BadHeader,
    #[error("invalid token `{0}`")]
    BadToken(String),
    #[error("quantifier line after the first clause")]
    LateQuantifier,
    #[error("quantifier line must end with 0")]
    Unterminated,
    #[error("`d` line names no existential")]
    EmptyDependencyLine,
    #[error("variable {0} exceeds the declared variable count")]
    VarOutOfRange(Var),
    #[error("Henkin set member is not universal: {member} in the set of {existential}")]
    NonUniversal { existential: Var, member: Var },
    #[error("variable {0} is quantified twice")]
    DuplicateQuantifier(Var),
    #[error("variable {0} occurs in the matrix but in no quantifier block")]
    FreeVariable(Var),
    #[error("last clause is missing its terminating 0")]
    UnterminatedClause,
    #[error("input is not valid UTF-8")]
    Utf8,
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn parse_ints(line_no: usize, tokens: &[&str]) -> Result<Vec<i64>, ParseError> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| err(line_no, ParseErrorKind::BadToken(t.to_string())))
        })
        .collect()
}

fn quantified_vars(line_no: usize, nums: &[i64], num_vars: u32) -> Result<Vec<Var>, ParseError> {
    match nums.split_last() {
        Some((0, body)) => body
            .iter()
            .map(|&n| {
                if n <= 0 || n > num_vars as i64 {
                    if n > 0 {
                        Err(err(line_no, ParseErrorKind::VarOutOfRange(Var::new(n as u32))))
                    } else {
                        Err(err(line_no, ParseErrorKind::BadToken(n.to_string())))
                    }
                } else {
                    Ok(Var::new(n as u32))
                }
            })
            .collect(),
        _ => Err(err(line_no, ParseErrorKind::Unterminated)),
    }
}

/// Parses a DQDIMACS document and normalizes its matrix.
pub fn parse_dqdimacs(input: &[u8]) -> Result<DqbfInstance, ParseError> {
    let text = std::str::from_utf8(input).map_err(|_| err(0, ParseErrorKind::Utf8))?;

    let mut header: Option<u32> = None;
    let mut universals: BTreeSet<Var> = BTreeSet::new();
    let mut universals_so_far: BTreeSet<Var> = BTreeSet::new();
    let mut henkin: BTreeMap<Var, BTreeSet<Var>> = BTreeMap::new();
    let mut matrix = Cnf::default();
    let mut current: Vec<Lit> = Vec::new();
    let mut in_clauses = false;
    let mut first_use: BTreeMap<Var, usize> = BTreeMap::new();

    let mut declare = |v: Var,
                       line_no: usize,
                       universals: &BTreeSet<Var>,
                       henkin: &BTreeMap<Var, BTreeSet<Var>>|
     -> Result<(), ParseError> {
        if universals.contains(&v) || henkin.contains_key(&v) {
            return Err(err(line_no, ParseErrorKind::DuplicateQuantifier(v)));
        }
        first_use.entry(v).or_insert(line_no);
        Ok(())
    };

    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "p" => {
                if header.is_some() {
                    return Err(err(line_no, ParseErrorKind::DuplicateHeader));
                }
                if tokens.len() != 4 || tokens[1] != "cnf" {
                    return Err(err(line_no, ParseErrorKind::BadHeader));
                }
                let nv = tokens[2]
                    .parse::<u32>()
                    .map_err(|_| err(line_no, ParseErrorKind::BadHeader))?;
                tokens[3]
                    .parse::<usize>()
                    .map_err(|_| err(line_no, ParseErrorKind::BadHeader))?;
                header = Some(nv);
                matrix.num_vars = nv;
            }
            q @ ("a" | "e" | "d") => {
                let nv = header.ok_or_else(|| err(line_no, ParseErrorKind::MissingHeader))?;
                if in_clauses {
                    return Err(err(line_no, ParseErrorKind::LateQuantifier));
                }
                let nums = parse_ints(line_no, &tokens[1..])?;
                let vars = quantified_vars(line_no, &nums, nv)?;
                match q {
                    "a" => {
                        for v in vars {
                            declare(v, line_no, &universals, &henkin)?;
                            universals.insert(v);
                            universals_so_far.insert(v);
                        }
                    }
                    "e" => {
                        for v in vars {
                            declare(v, line_no, &universals, &henkin)?;
                            henkin.insert(v, universals_so_far.clone());
                        }
                    }
                    _ => {
                        let (&y, deps) = vars
                            .split_first()
                            .ok_or_else(|| err(line_no, ParseErrorKind::EmptyDependencyLine))?;
                        declare(y, line_no, &universals, &henkin)?;
                        let mut set = BTreeSet::new();
                        for &m in deps {
                            if !universals.contains(&m) {
                                return Err(err(
                                    line_no,
                                    ParseErrorKind::NonUniversal {
                                        existential: y,
                                        member: m,
                                    },
                                ));
                            }
                            set.insert(m);
                        }
                        henkin.insert(y, set);
                    }
                }
            }
            _ => {
                let nv = header.ok_or_else(|| err(line_no, ParseErrorKind::MissingHeader))?;
                in_clauses = true;
                for n in parse_ints(line_no, &tokens)? {
                    match Lit::from_dimacs(n) {
                        None => matrix.clauses.push(Clause::new(std::mem::take(&mut current))),
                        Some(l) => {
                            if l.var().id() > nv {
                                return Err(err(line_no, ParseErrorKind::VarOutOfRange(l.var())));
                            }
                            if !universals.contains(&l.var()) && !henkin.contains_key(&l.var()) {
                                return Err(err(line_no, ParseErrorKind::FreeVariable(l.var())));
                            }
                            current.push(l);
                        }
                    }
                }
            }
        }
    }
    if header.is_none() {
        return Err(err(last_line, ParseErrorKind::MissingHeader));
    }
    if !current.is_empty() {
        return Err(err(last_line, ParseErrorKind::UnterminatedClause));
    }

    let instance = DqbfInstance::new(universals, henkin, matrix, false).map_err(|e| {
        let (v, kind) = match e {
            InstanceError::DuplicateQuantifier(v) => (v, ParseErrorKind::DuplicateQuantifier(v)),
            InstanceError::FreeVariable(v) => (v, ParseErrorKind::FreeVariable(v)),
            InstanceError::NonUniversalDependency {
                existential,
                member,
            } => (
                existential,
                ParseErrorKind::NonUniversal {
                    existential,
                    member,
                },
            ),
        };
        err(first_use.get(&v).copied().unwrap_or(0), kind)
    })?;
    Ok(instance.normalized())
}

/// Writes the instance using `a` for all universals and one `d` line per existential.
pub fn write_dqdimacs<W: Write>(instance: &DqbfInstance, mut out: W) -> io::Result<()> {
    let m = instance.matrix();
    let empty = usize::from(instance.is_trivially_false());
    writeln!(out, "p cnf {} {}", instance.num_vars(), m.clauses.len() + empty)?;
    if !instance.universals().is_empty() {
        write!(out, "a")?;
        for x in instance.universals() {
            write!(out, " {x}")?;
        }
        writeln!(out, " 0")?;
    }
    for y in instance.existentials() {
        write!(out, "d {y}")?;
        for x in instance.henkin(*y) {
            write!(out, " {x}")?;
        }
        writeln!(out, " 0")?;
    }
    for c in &m.clauses {
        for l in c.lits() {
            write!(out, "{l} ")?;
        }
        writeln!(out, "0")?;
    }
    if instance.is_trivially_false() {
        writeln!(out, "0")?;
    }
    Ok(())
}

pub fn to_dqdimacs_string(instance: &DqbfInstance) -> String {
    let mut buf = Vec::new();
    write_dqdimacs(instance, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("output is ASCII")
}

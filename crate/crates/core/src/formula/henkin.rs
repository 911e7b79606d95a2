//! Henkin function vectors and the `henkin-fn v1` certificate format:
//!
//! ```text
//! hfn 1 <numVars> <numExistentials>
//! def <y-id> <sexpr>        one per existential, ascending id
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use thiserror::Error;

use super::expr::{BoolExpr, SexprError};
use super::instance::DqbfInstance;
use super::types::{Assignment, Var};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HenkinVector {
    functions: BTreeMap<Var, BoolExpr>,
}

impl HenkinVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_functions<I: IntoIterator<Item = (Var, BoolExpr)>>(funcs: I) -> Self {
        HenkinVector {
            functions: funcs.into_iter().collect(),
        }
    }

    pub fn set(&mut self, y: Var, f: BoolExpr) {
        self.functions.insert(y, f);
    }

    pub fn get(&self, y: Var) -> Option<&BoolExpr> {
        self.functions.get(&y)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &BoolExpr)> {
        self.functions.iter().map(|(&v, f)| (v, f))
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Every existential has a function and each `f_i` reads only `H_i`.
    pub fn is_resolved(&self, instance: &DqbfInstance) -> bool {
        self.henkin_violations(instance).is_empty()
            && instance
                .existentials()
                .iter()
                .all(|y| self.functions.contains_key(y))
    }

    /// Pairs `(y_i, v)` where `f_i` mentions `v ∉ H_i`.
    pub fn henkin_violations(&self, instance: &DqbfInstance) -> Vec<(Var, Var)> {
        let mut out = Vec::new();
        for (&y, f) in &self.functions {
            let allowed = instance.henkin(y);
            out.extend(f.vars().into_iter().filter(|v| !allowed.contains(v)).map(|v| (y, v)));
        }
        out
    }

    /// For a vector whose functions may mention other existentials,
    /// checks that the "f_i mentions y_j" relation is acyclic and every
    /// other mentioned variable lies in `H_i`.
    pub fn is_well_formed_candidate(&self, instance: &DqbfInstance) -> bool {
        let mut edges: BTreeMap<Var, BTreeSet<Var>> = BTreeMap::new();
        for (&y, f) in &self.functions {
            for v in f.vars() {
                if instance.is_existential(v) && v != y {
                    edges.entry(y).or_default().insert(v);
                } else if !instance.henkin(y).contains(&v) {
                    return false;
                }
            }
        }
        !has_cycle(&edges)
    }

    /// Evaluates all functions on an X-assignment, resolving references to
    /// other existentials on demand. Returns `None` on a cycle or a missing
    /// input.
    pub fn outputs(&self, x: &Assignment) -> Option<Assignment> {
        let mut out = x.clone();
        let mut pending: Vec<Var> = self.functions.keys().copied().collect();
        while !pending.is_empty() {
            let before = pending.len();
            pending.retain(|&y| match self.functions[&y].eval(&out) {
                Ok(b) => {
                    out.set(y, b);
                    false
                }
                Err(_) => true,
            });
            if pending.len() == before {
                return None;
            }
        }
        Some(out)
    }
}

fn has_cycle(edges: &BTreeMap<Var, BTreeSet<Var>>) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        v: Var,
        edges: &BTreeMap<Var, BTreeSet<Var>>,
        marks: &mut BTreeMap<Var, Mark>,
    ) -> bool {
        match marks.get(&v) {
            Some(Mark::Active) => return true,
            Some(Mark::Done) => return false,
            None => {}
        }
        marks.insert(v, Mark::Active);
        if let Some(next) = edges.get(&v) {
            for &w in next {
                if visit(w, edges, marks) {
                    return true;
                }
            }
        }
        marks.insert(v, Mark::Done);
        false
    }
    let mut marks = BTreeMap::new();
    edges.keys().any(|&v| visit(v, edges, &mut marks))
}

#[derive(Debug, Error)]
pub enum HenkinIoError {
    #[error("vector is not resolved: f_{existential} mentions {var}")]
    Unresolved { existential: Var, var: Var },
    #[error("vector has no function for existential {0}")]
    Missing(Var),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Expr {
        line: usize,
        #[source]
        source: SexprError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_henkin_vector<W: Write>(
    instance: &DqbfInstance,
    vector: &HenkinVector,
    mut out: W,
) -> Result<(), HenkinIoError> {
    if let Some(&(existential, var)) = vector.henkin_violations(instance).first() {
        return Err(HenkinIoError::Unresolved { existential, var });
    }
    for &y in instance.existentials() {
        if vector.get(y).is_none() {
            return Err(HenkinIoError::Missing(y));
        }
    }
    writeln!(
        out,
        "hfn 1 {} {}",
        instance.num_vars(),
        instance.existentials().len()
    )?;
    for &y in instance.existentials() {
        writeln!(out, "def {} {}", y, vector.get(y).unwrap().to_sexpr())?;
    }
    Ok(())
}

/// Parsed certificate; the header counts are returned for cross-checking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HenkinCertificate {
    pub num_vars: u32,
    pub num_existentials: usize,
    pub vector: HenkinVector,
}

pub fn read_henkin_vector(text: &str) -> Result<HenkinCertificate, HenkinIoError> {
    let syntax = |line: usize, msg: &str| HenkinIoError::Syntax {
        line,
        msg: msg.to_string(),
    };
    let mut header = None;
    let mut vector = HenkinVector::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let mut parts = trimmed.splitn(3, char::is_whitespace);
        match parts.next() {
            Some("hfn") => {
                if header.is_some() {
                    return Err(syntax(line, "duplicate header"));
                }
                let rest: Vec<&str> = trimmed.split_whitespace().skip(1).collect();
                let [version, nv, ne] = rest[..] else {
                    return Err(syntax(line, "header must be `hfn 1 <numVars> <numExistentials>`"));
                };
                if version != "1" {
                    return Err(syntax(line, "unsupported version"));
                }
                let nv = nv.parse().map_err(|_| syntax(line, "bad variable count"))?;
                let ne = ne.parse().map_err(|_| syntax(line, "bad existential count"))?;
                header = Some((nv, ne));
            }
            Some("def") => {
                if header.is_none() {
                    return Err(syntax(line, "`def` before header"));
                }
                let id: u32 = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .filter(|&id| id > 0)
                    .ok_or_else(|| syntax(line, "bad variable id"))?;
                let body = parts.next().ok_or_else(|| syntax(line, "missing expression"))?;
                let expr = BoolExpr::parse_sexpr(body)
                    .map_err(|source| HenkinIoError::Expr { line, source })?;
                let y = Var::new(id);
                if vector.get(y).is_some() {
                    return Err(syntax(line, "duplicate definition"));
                }
                vector.set(y, expr);
            }
            _ => return Err(syntax(line, "expected `hfn` or `def`")),
        }
    }
    let (num_vars, num_existentials) = header.ok_or_else(|| syntax(0, "missing header"))?;
    Ok(HenkinCertificate {
        num_vars,
        num_existentials,
        vector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_dqdimacs;

    fn v(i: u32) -> Var {
        Var::new(i)
    }

    #[test]
    fn writes_defs_in_ascending_order() {
        let inst = parse_dqdimacs(b"p cnf 3 1\na 1 0\nd 3 1 0\nd 2 0\n1 2 3 0\n").unwrap();
        let vec = HenkinVector::from_functions([
            (v(3), BoolExpr::var(v(1)).negate()),
            (v(2), BoolExpr::fls()),
        ]);
        let mut buf = Vec::new();
        write_henkin_vector(&inst, &vec, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "hfn 1 3 2\ndef 2 false\ndef 3 (not 1)\n"
        );
    }

    #[test]
    fn empty_existentials_write_header_only() {
        let inst = parse_dqdimacs(b"p cnf 1 1\na 1 0\n1 -1 0\n").unwrap();
        let mut buf = Vec::new();
        write_henkin_vector(&inst, &HenkinVector::new(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "hfn 1 1 0\n");
    }

    #[test]
    fn unresolved_vectors_are_refused() {
        let inst = parse_dqdimacs(b"p cnf 3 1\na 1 0\nd 2 0\nd 3 1 0\n1 2 3 0\n").unwrap();
        let vec = HenkinVector::from_functions([
            (v(2), BoolExpr::var(v(3))),
            (v(3), BoolExpr::var(v(1))),
        ]);
        assert!(matches!(
            write_henkin_vector(&inst, &vec, Vec::new()),
            Err(HenkinIoError::Unresolved { .. })
        ));
    }

    #[test]
    fn read_back() {
        let cert = read_henkin_vector("hfn 1 6 1\ndef 4 (or (not 1) (not 2))\n").unwrap();
        assert_eq!(cert.num_vars, 6);
        assert_eq!(cert.vector.get(v(4)).unwrap().to_sexpr(), "(or (not 1) (not 2))");
        assert!(read_henkin_vector("def 4 1\n").is_err());
        assert!(read_henkin_vector("hfn 1 2 1\ndef 2 (and 1\n").is_err());
    }

    #[test]
    fn candidate_cycles_detected() {
        let inst = parse_dqdimacs(b"p cnf 3 1\na 1 0\nd 2 1 0\nd 3 1 0\n1 2 3 0\n").unwrap();
        let ok = HenkinVector::from_functions([
            (v(2), BoolExpr::var(v(3))),
            (v(3), BoolExpr::var(v(1))),
        ]);
        assert!(ok.is_well_formed_candidate(&inst));
        assert!(!ok.is_resolved(&inst));
        let outputs = ok.outputs(&Assignment::from_pairs([(v(1), true)])).unwrap();
        assert_eq!(outputs.get(v(2)), Some(true));
        let cyclic = HenkinVector::from_functions([
            (v(2), BoolExpr::var(v(3))),
            (v(3), BoolExpr::var(v(2))),
        ]);
        assert!(!cyclic.is_well_formed_candidate(&inst));
    }
}

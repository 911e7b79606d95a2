//! Boolean function AST used for candidate and repair functions.
//!
//! Nodes are reference counted so that substitution can share subterms;
//! semantics are always those of the unfolded tree. The constructors fold
//! constants and flatten nested `And`/`Or` of the same kind, so a built
//! expression never contains a constant below the root.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::types::{Assignment, Clause, Lit, Var, VarAllocator};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolExpr(Arc<Node>);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    Var(Var),
    Not(BoolExpr),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("variable {0} is unassigned")]
pub struct UnassignedVar(pub Var);

impl BoolExpr {
    fn from_node(node: Node) -> Self {
        BoolExpr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(value: bool) -> Self {
        Self::from_node(if value { Node::True } else { Node::False })
    }

    pub fn tru() -> Self {
        Self::constant(true)
    }

    pub fn fls() -> Self {
        Self::constant(false)
    }

    pub fn var(v: Var) -> Self {
        Self::from_node(Node::Var(v))
    }

    pub fn lit(l: Lit) -> Self {
        let e = Self::var(l.var());
        if l.is_negated() {
            e.negate()
        } else {
            e
        }
    }

    pub fn as_const(&self) -> Option<bool> {
        match *self.0 {
            Node::True => Some(true),
            Node::False => Some(false),
            _ => None,
        }
    }

    pub fn negate(&self) -> Self {
        match self.node() {
            Node::True => Self::fls(),
            Node::False => Self::tru(),
            Node::Not(inner) => inner.clone(),
            _ => Self::from_node(Node::Not(self.clone())),
        }
    }

    pub fn and<I: IntoIterator<Item = BoolExpr>>(children: I) -> Self {
        Self::nary(children, true)
    }

    pub fn or<I: IntoIterator<Item = BoolExpr>>(children: I) -> Self {
        Self::nary(children, false)
    }

    // is_and: identity is True and absorbing element is False; dual for Or.
    fn nary<I: IntoIterator<Item = BoolExpr>>(children: I, is_and: bool) -> Self {
        let mut out = Vec::new();
        for child in children {
            match (child.node(), is_and) {
                (Node::True, true) | (Node::False, false) => {}
                (Node::False, true) | (Node::True, false) => return Self::constant(!is_and),
                (Node::And(grand), true) | (Node::Or(grand), false) => {
                    out.extend(grand.iter().cloned())
                }
                _ => out.push(child),
            }
        }
        match out.len() {
            0 => Self::constant(is_and),
            1 => out.pop().unwrap(),
            _ if is_and => Self::from_node(Node::And(out)),
            _ => Self::from_node(Node::Or(out)),
        }
    }

    /// Variables mentioned anywhere in the expression.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        let mut visited = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if !visited.insert(Arc::as_ptr(&e.0) as usize) {
                continue;
            }
            match e.node() {
                Node::True | Node::False => {}
                Node::Var(v) => {
                    out.insert(*v);
                }
                Node::Not(c) => stack.push(c),
                Node::And(cs) | Node::Or(cs) => stack.extend(cs.iter()),
            }
        }
        out
    }

    pub fn mentions(&self, var: Var) -> bool {
        self.vars().contains(&var)
    }

    pub fn eval(&self, assignment: &Assignment) -> Result<bool, UnassignedVar> {
        self.eval_with(&|v| assignment.get(v))
    }

    pub fn eval_with(&self, lookup: &dyn Fn(Var) -> Option<bool>) -> Result<bool, UnassignedVar> {
        Ok(match self.node() {
            Node::True => true,
            Node::False => false,
            Node::Var(v) => lookup(*v).ok_or(UnassignedVar(*v))?,
            Node::Not(c) => !c.eval_with(lookup)?,
            Node::And(cs) => {
                for c in cs {
                    if !c.eval_with(lookup)? {
                        return Ok(false);
                    }
                }
                true
            }
            Node::Or(cs) => {
                for c in cs {
                    if c.eval_with(lookup)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    /// Replaces every `Var(v)` with `map(v)` when it returns `Some`,
    /// rebuilding through the folding constructors.
    pub fn substitute(&self, map: &dyn Fn(Var) -> Option<BoolExpr>) -> BoolExpr {
        let mut memo = HashMap::new();
        self.substitute_memo(map, &mut memo)
    }

    fn substitute_memo(
        &self,
        map: &dyn Fn(Var) -> Option<BoolExpr>,
        memo: &mut HashMap<usize, BoolExpr>,
    ) -> BoolExpr {
        let key = Arc::as_ptr(&self.0) as usize;
        if let Some(done) = memo.get(&key) {
            return done.clone();
        }
        let out = match self.node() {
            Node::True | Node::False => self.clone(),
            Node::Var(v) => map(*v).unwrap_or_else(|| self.clone()),
            Node::Not(c) => c.substitute_memo(map, memo).negate(),
            Node::And(cs) => {
                let kids: Vec<_> = cs.iter().map(|c| c.substitute_memo(map, memo)).collect();
                BoolExpr::and(kids)
            }
            Node::Or(cs) => {
                let kids: Vec<_> = cs.iter().map(|c| c.substitute_memo(map, memo)).collect();
                BoolExpr::or(kids)
            }
        };
        memo.insert(key, out.clone());
        out
    }

    /// Number of nodes in the tree view.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::True | Node::False | Node::Var(_) => 1,
            Node::Not(c) => 1 + c.size(),
            Node::And(cs) | Node::Or(cs) => 1 + cs.iter().map(BoolExpr::size).sum::<usize>(),
        }
    }

    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        self.write_sexpr(&mut s);
        s
    }

    fn write_sexpr(&self, out: &mut String) {
        use std::fmt::Write;
        match self.node() {
            Node::True => out.push_str("true"),
            Node::False => out.push_str("false"),
            Node::Var(v) => {
                let _ = write!(out, "{}", v.id());
            }
            Node::Not(c) => {
                out.push_str("(not ");
                c.write_sexpr(out);
                out.push(')');
            }
            Node::And(cs) | Node::Or(cs) => {
                out.push_str(if matches!(self.node(), Node::And(_)) {
                    "(and"
                } else {
                    "(or"
                });
                for c in cs {
                    out.push(' ');
                    c.write_sexpr(out);
                }
                out.push(')');
            }
        }
    }

    pub fn parse_sexpr(text: &str) -> Result<BoolExpr, SexprError> {
        let tokens = tokenize(text);
        let mut pos = 0;
        let expr = parse_tokens(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(SexprError::Trailing(tokens[pos].to_string()));
        }
        Ok(expr)
    }
}

impl fmt::Debug for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr())
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SexprError {
    #[error("unexpected end of expression")]
    Eof,
    #[error("unexpected token `{0}`")]
    Unexpected(String),
    #[error("trailing input starting at `{0}`")]
    Trailing(String),
    #[error("`{0}` needs at least one operand")]
    NoOperands(&'static str),
}

fn tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(&text[s..i]);
            }
            if !ch.is_whitespace() {
                tokens.push(&text[i..i + 1]);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(&text[s..]);
    }
    tokens
}

fn parse_tokens(tokens: &[&str], pos: &mut usize) -> Result<BoolExpr, SexprError> {
    let tok = *tokens.get(*pos).ok_or(SexprError::Eof)?;
    *pos += 1;
    match tok {
        "true" => Ok(BoolExpr::tru()),
        "false" => Ok(BoolExpr::fls()),
        "(" => {
            let op = *tokens.get(*pos).ok_or(SexprError::Eof)?;
            *pos += 1;
            let mut args = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(SexprError::Eof),
                    Some(&")") => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => args.push(parse_tokens(tokens, pos)?),
                }
            }
            match op {
                "not" if args.len() == 1 => Ok(args[0].negate()),
                "and" if args.is_empty() => Err(SexprError::NoOperands("and")),
                "or" if args.is_empty() => Err(SexprError::NoOperands("or")),
                "and" => Ok(BoolExpr::and(args)),
                "or" => Ok(BoolExpr::or(args)),
                other => Err(SexprError::Unexpected(other.to_string())),
            }
        }
        other => match other.parse::<u32>() {
            Ok(id) if id > 0 => Ok(BoolExpr::var(Var::new(id))),
            _ => Err(SexprError::Unexpected(other.to_string())),
        },
    }
}

/// Tseitin encoder. Variables inside expressions are mapped through
/// `rename` before being used as literals, which lets one expression be
/// embedded over a renamed copy of its variables.
pub struct Tseitin<'a> {
    fresh: &'a mut VarAllocator,
    rename: &'a dyn Fn(Var) -> Lit,
    memo: HashMap<usize, Lit>,
    clauses: Vec<Clause>,
}

impl<'a> Tseitin<'a> {
    pub fn new(fresh: &'a mut VarAllocator, rename: &'a dyn Fn(Var) -> Lit) -> Self {
        Tseitin {
            fresh,
            rename,
            memo: HashMap::new(),
            clauses: Vec::new(),
        }
    }

    /// Adds clauses forcing `output ↔ expr` in every model.
    pub fn define(&mut self, expr: &BoolExpr, output: Lit) {
        match expr.node() {
            Node::True => self.clauses.push(Clause::unit(output)),
            Node::False => self.clauses.push(Clause::unit(!output)),
            Node::And(cs) => {
                let lits: Vec<Lit> = cs.iter().map(|c| self.encode(c)).collect();
                self.gate(output, &lits, true);
            }
            Node::Or(cs) => {
                let lits: Vec<Lit> = cs.iter().map(|c| self.encode(c)).collect();
                self.gate(output, &lits, false);
            }
            Node::Var(_) | Node::Not(_) => {
                let l = self.encode(expr);
                self.clauses.push(Clause::new(vec![!output, l]));
                self.clauses.push(Clause::new(vec![output, !l]));
            }
        }
    }

    /// Returns a literal equivalent to `expr`, allocating gate variables as needed.
    pub fn encode(&mut self, expr: &BoolExpr) -> Lit {
        let key = Arc::as_ptr(&expr.0) as usize;
        if let Some(&l) = self.memo.get(&key) {
            return l;
        }
        let lit = match expr.node() {
            Node::Var(v) => (self.rename)(*v),
            Node::Not(c) => !self.encode(c),
            Node::True | Node::False | Node::And(_) | Node::Or(_) => {
                let out = self.fresh.fresh().pos();
                self.define(expr, out);
                out
            }
        };
        self.memo.insert(key, lit);
        lit
    }

    fn gate(&mut self, out: Lit, inputs: &[Lit], is_and: bool) {
        // For Or, encode as the dual of And over negated inputs and output.
        let (o, ins): (Lit, Vec<Lit>) = if is_and {
            (out, inputs.to_vec())
        } else {
            (!out, inputs.iter().map(|&l| !l).collect())
        };
        for &i in &ins {
            self.clauses.push(Clause::new(vec![!o, i]));
        }
        let mut big: Vec<Lit> = ins.iter().map(|&l| !l).collect();
        big.push(o);
        self.clauses.push(Clause::new(big));
    }

    pub fn into_clauses(self) -> Vec<Clause> {
        self.clauses
    }
}

/// Definitional clauses for `output ↔ expr`; fresh gate variables come from `fresh`.
pub fn to_cnf_defs(expr: &BoolExpr, output: Var, fresh: &mut VarAllocator) -> Vec<Clause> {
    let rename = |v: Var| v.pos();
    let mut enc = Tseitin::new(fresh, &rename);
    enc.define(expr, output.pos());
    enc.into_clauses()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> Var {
        Var::new(i)
    }
    fn x(i: u32) -> BoolExpr {
        BoolExpr::var(v(i))
    }

    #[test]
    fn eval_examples() {
        let empty = Assignment::new();
        assert_eq!(BoolExpr::tru().eval(&empty), Ok(true));
        // Or with a single negated child under x1 = 1.
        let e = BoolExpr::or([x(1).negate()]);
        assert_eq!(e.eval(&Assignment::from_pairs([(v(1), true)])), Ok(false));
        // f2 = y1 ∨ ¬x2 with y1 = 4, x2 = 2.
        let f2 = BoolExpr::or([x(4), x(2).negate()]);
        let a = Assignment::from_pairs([(v(4), true), (v(2), false)]);
        assert_eq!(f2.eval(&a), Ok(true));
    }

    #[test]
    fn eval_reports_unassigned() {
        assert_eq!(x(3).eval(&Assignment::new()), Err(UnassignedVar(v(3))));
    }

    #[test]
    fn constructors_fold_constants() {
        assert_eq!(BoolExpr::and([x(1), BoolExpr::fls()]), BoolExpr::fls());
        assert_eq!(BoolExpr::or([x(1), BoolExpr::fls()]), x(1));
        assert_eq!(BoolExpr::and(Vec::new()), BoolExpr::tru());
        assert_eq!(x(1).negate().negate(), x(1));
        let nested = BoolExpr::or([BoolExpr::or([x(1), x(2)]), x(3)]);
        assert_eq!(nested.to_sexpr(), "(or 1 2 3)");
    }

    #[test]
    fn sexpr_round_trip() {
        let e = BoolExpr::or([x(3), BoolExpr::and([x(3).negate(), x(2)])]);
        assert_eq!(e.to_sexpr(), "(or 3 (and (not 3) 2))");
        assert_eq!(BoolExpr::parse_sexpr(&e.to_sexpr()).unwrap(), e);
        assert_eq!(BoolExpr::parse_sexpr("false").unwrap(), BoolExpr::fls());
        assert!(BoolExpr::parse_sexpr("(and)").is_err());
        assert!(BoolExpr::parse_sexpr("(xor 1 2)").is_err());
        assert!(BoolExpr::parse_sexpr("1 2").is_err());
    }

    #[test]
    fn cnf_defs_for_constants_and_literals() {
        let mut alloc = VarAllocator::above(10);
        assert_eq!(
            to_cnf_defs(&BoolExpr::tru(), v(11), &mut alloc),
            vec![Clause::unit(v(11).pos())]
        );
        let defs = to_cnf_defs(&x(1), v(11), &mut alloc);
        assert_eq!(
            defs,
            vec![
                Clause::new(vec![v(11).neg(), v(1).pos()]),
                Clause::new(vec![v(11).pos(), v(1).neg()]),
            ]
        );
    }

    #[test]
    fn and_gate_is_equivalent_by_enumeration() {
        let mut alloc = VarAllocator::above(3);
        let defs = to_cnf_defs(&BoolExpr::and([x(1), x(2)]), v(3), &mut alloc);
        assert_eq!(defs.len(), 3);
        assert_eq!(alloc.max_var(), 3, "top-level gate reuses the output");
        for bits in 0..8u32 {
            let a = Assignment::from_pairs((1..=3).map(|i| (v(i), bits >> (i - 1) & 1 == 1)));
            let sat = defs.iter().all(|c| c.eval(&a) == Some(true));
            let expected = a.get(v(3)) == Some(a.get(v(1)).unwrap() && a.get(v(2)).unwrap());
            assert_eq!(sat, expected, "bits {bits:03b}");
        }
    }

    #[test]
    fn vars_visits_shared_nodes_once() {
        let shared = BoolExpr::and([x(1), x(2)]);
        let e = BoolExpr::or([shared.clone(), shared.negate(), x(5)]);
        assert_eq!(e.vars().into_iter().collect::<Vec<_>>(), vec![v(1), v(2), v(5)]);
    }
}

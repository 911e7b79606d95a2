#![allow(dead_code)]

use hensynth::formula::{parse_dqdimacs, DqbfInstance, Var};

/// x1..x3 = 1..3, y1..y3 = 4..6.
/// φ = (x1 ∨ y1) ∧ (y2 ↔ (y1 ∨ ¬x2)) ∧ (y3 ↔ (x2 ∨ x3)),
/// H1 = {x1}, H2 = {x1, x2}, H3 = {x2, x3}.
pub const RUNNING_EXAMPLE: &str = "\
c running example
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

/// Three models of the running example, columns x1 x2 x3 y1 y2 y3.
pub const RUNNING_SAMPLES: [&str; 3] = ["000110", "001111", "110001"];

/// y1 ↔ y2 with H1 = {x1, x2}, H2 = {x2, x3}; true via y1 = y2 = x2.
pub const XNOR_SPLIT: &str = "\
p cnf 5 2
a 1 2 3 0
d 4 1 2 0
d 5 2 3 0
4 -5 0
-4 5 0
";

/// y ↔ x with y independent of x: false although every x has an extension.
pub const CONSTANT_COPY: &str = "p cnf 2 2\na 1 0\nd 2 0\n-1 2 0\n1 -2 0\n";

pub fn instance(text: &str) -> DqbfInstance {
    parse_dqdimacs(text.as_bytes()).expect("test instance parses")
}

pub fn rows(bits: &[&str]) -> Vec<Vec<bool>> {
    bits.iter().map(|r| r.chars().map(|c| c == '1').collect()).collect()
}

pub fn v(i: u32) -> Var {
    Var::new(i)
}

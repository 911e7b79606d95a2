//! Variables, clauses, DQBF instances, Boolean expressions and the text
//! formats used to read instances and write certificates.

mod dqdimacs;
mod expr;
mod henkin;
mod instance;
mod types;

pub use dqdimacs::{parse_dqdimacs, to_dqdimacs_string, write_dqdimacs, ParseError, ParseErrorKind};
pub use expr::{to_cnf_defs, BoolExpr, Node, SexprError, Tseitin, UnassignedVar};
pub use henkin::{
    read_henkin_vector, write_henkin_vector, HenkinCertificate, HenkinIoError, HenkinVector,
};
pub use instance::{DqbfInstance, InstanceError};
pub use types::{Assignment, Clause, Cnf, Lit, Var, VarAllocator};

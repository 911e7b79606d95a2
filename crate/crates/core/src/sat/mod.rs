//! SAT and partial MaxSAT oracles.

mod maxsat;
mod oracle;
mod solver;

pub use maxsat::{falsified_tags, solve_maxsat, MaxSatError, MaxSatQuery, MaxSatSolution};
pub use oracle::{check_sat, failed_core, Limits, OracleError, SatOracle, SatQuery, SatResult};
pub use solver::{Solver, SolverConfig, Status};

//! Independent oracles for the solvers and the measure computations.
//!
//! Nothing here calls into the modulus solver: paths are enumerated
//! exhaustively and the convex program is solved densely.

mod brute;
mod corpus;

use serde::Serialize;
use thiserror::Error;

pub use brute::{brute_force_modulus, enumerate_paths, BruteForceResult, MAX_PATHS};
pub use corpus::{default_corpus_dir, load_corpus, TinyGraphCase, MAX_VERTICES};

use crate::modulus::{solve_modulus, SolverOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid case {0}")]
    InvalidCase(String),
    #[error("case {0} has too many simple paths")]
    TooManyPaths(String),
    #[error("numerical failure in {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

/// Area of a Euclidean disk of radius `r`.
pub fn flat_patch_oracle(r: f64) -> f64 {
    std::f64::consts::PI * r * r
}

/// Area of `{0 <= t <= r, 0 <= y <= t³/3}` and its double: `r⁴/6`.
pub fn cusp_area_oracle(r: f64) -> f64 {
    r.powi(4) / 6.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    pub case: String,
    pub p: f64,
    pub oracle: f64,
    pub oracle_lower: f64,
    pub solver: f64,
    pub expected: Option<f64>,
    pub relative_error: f64,
}

/// Runs the solver and the brute-force oracle on one case.
pub fn compare_case(case: &TinyGraphCase, tol: f64) -> Result<OracleComparison, OracleError> {
    let oracle = brute_force_modulus(case, case.p)?;
    let solved = solve_modulus(&case.network(), &case.e, &case.f, &SolverOptions::new(case.p, tol))
        .map_err(|e| OracleError::Numerical(format!("{}: {e}", case.name)))?;
    let scale = oracle.value.abs().max(1e-300);
    Ok(OracleComparison {
        case: case.name.clone(),
        p: case.p,
        oracle: oracle.value,
        oracle_lower: oracle.lower_bound,
        solver: solved.value,
        expected: case.expected,
        relative_error: (solved.value - oracle.value).abs() / scale,
    })
}

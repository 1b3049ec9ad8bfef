//! Discrete p-modulus of curve families and of separating cut families.

mod analytic;
mod barrier;
mod capacity;
mod cuts;
mod paths;
mod program;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

pub use analytic::{
    analytic_density, analytic_energy_bound, c1_set, c2_set, f_set, AnalyticPieces, CurveFamilySpec, ResolvedFamily,
};
pub use cuts::{solve_cut_modulus, CutFamilyResult};
pub use paths::{min_path_length, solve_modulus, Method, ModulusResult, SolverOptions, AUTO_PATH_LIMIT};
pub use report::{
    conjugate_exponent, duality_report, growth_factors, quotient_invariance_check, DualityReport, QuotientReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulusError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid family: {0}")]
    Family(String),
    #[error("path step {0} -> {1} is not an edge")]
    NotAPath(usize, usize),
}

/// Nonnegative density on the vertices of a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub values: Vec<f64>,
}

impl Density {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect() }
    }
}

/// `ρ`-length of a vertex path: each step contributes its length times the
/// mean of the endpoint densities.
pub fn path_length(rho: &Density, graph: &Graph, path: &[usize]) -> Result<f64, ModulusError> {
    let mut total = 0.0;
    for w in path.windows(2) {
        let e = graph.find_edge(w[0], w[1]).ok_or(ModulusError::NotAPath(w[0], w[1]))?;
        total += graph.edge(e).len * 0.5 * (rho.values[w[0]] + rho.values[w[1]]);
    }
    Ok(total)
}

/// `Σ_v ρ(v)^p μ(v)`.
pub fn numeric_energy(measure: &[f64], rho: &Density, p: f64) -> f64 {
    rho.values.iter().zip(measure).map(|(r, m)| r.powf(p) * m).sum()
}

/// Compact JSON-friendly summary of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusRecord {
    pub family: String,
    pub p: f64,
    pub value: f64,
    pub iterations: usize,
    pub gap: f64,
    pub certified: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> Graph {
        Graph::from_edges(n + 1, (0..n as u32).map(|i| (i, i + 1, 1.0)))
    }

    #[test]
    fn zero_density_has_zero_length() {
        let g = path_graph(4);
        assert_eq!(path_length(&Density::zeros(5), &g, &[0, 1, 2, 3, 4]).unwrap(), 0.0);
    }

    #[test]
    fn constant_density_scales_length() {
        let g = path_graph(4);
        assert_eq!(path_length(&Density::constant(5, 0.5), &g, &[0, 1, 2, 3, 4]).unwrap(), 2.0);
        assert!(path_length(&Density::zeros(5), &g, &[0, 2]).is_err());
    }

    #[test]
    fn energy_of_constants() {
        let mu = [0.5, 0.25, 0.25];
        assert_eq!(numeric_energy(&mu, &Density::zeros(3), 3.0), 0.0);
        assert_eq!(numeric_energy(&mu, &Density::constant(3, 1.0), 3.0), 1.0);
    }
}

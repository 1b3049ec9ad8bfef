//! Numerical laboratory for a singular metric space in which a nondegenerate
//! continuum has zero conformal capacity.
//!
//! The crate builds a discretized cusp surface `Y` with attached
//! pillowcases, the product `X = Y × (-2, 2)` and the continuum
//! `E = {cusp} × [-1, 1]`, then measures Ahlfors regularity, linear local
//! connectivity and discrete curve / cut moduli on those meshes.

pub mod experiments;
pub mod geometry;
pub mod graph;
pub mod metric;
pub mod modulus;
pub mod network;
pub mod oracles;

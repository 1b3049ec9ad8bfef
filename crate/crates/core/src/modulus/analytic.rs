use serde::{Deserialize, Serialize};

use super::{Density, ModulusError};
use crate::geometry::{extract_continuum_e, ProductMesh};

/// A curve family on a product mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurveFamilySpec {
    /// Paths joining two explicit vertex sets.
    Connect { e: Vec<usize>, f: Vec<usize> },
    /// Paths from the continuum `E` to `F(δ₀, ε₀)`, the closure of the
    /// complement of `B_Y(cusp, δ₀) × [-1-ε₀, 1+ε₀]`.
    MeetETruncated { delta0: f64, eps0: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedFamily {
    pub e: Vec<usize>,
    pub f: Vec<usize>,
}

impl CurveFamilySpec {
    pub fn resolve(&self, x: &ProductMesh) -> Result<ResolvedFamily, ModulusError> {
        let (e, f) = match self {
            CurveFamilySpec::Connect { e, f } => (e.clone(), f.clone()),
            CurveFamilySpec::MeetETruncated { delta0, eps0 } => {
                let e = extract_continuum_e(x).map_err(|err| ModulusError::Family(err.to_string()))?.members;
                (e, f_set(x, *delta0, *eps0)?)
            }
        };
        if e.is_empty() || f.is_empty() {
            return Err(ModulusError::Family("E and F must be nonempty".into()));
        }
        let n = x.vertex_count();
        let mut in_e = vec![false; n];
        for &v in &e {
            in_e[v] = true;
        }
        if let Some(&v) = f.iter().find(|&&v| v >= n || in_e[v]) {
            return Err(ModulusError::Family(format!("vertex {v} lies in E or outside the mesh")));
        }
        Ok(ResolvedFamily { e, f })
    }

    pub fn name(&self) -> String {
        match self {
            CurveFamilySpec::Connect { .. } => "connect".into(),
            CurveFamilySpec::MeetETruncated { delta0, eps0 } => format!("meet_e(delta0={delta0},eps0={eps0})"),
        }
    }
}

fn check_positive(delta: f64, eps: f64) -> Result<(), ModulusError> {
    if !(delta > 0.0 && eps > 0.0 && delta.is_finite() && eps.is_finite()) {
        return Err(ModulusError::Parameter(format!("δ={delta}, ε={eps} must be positive")));
    }
    Ok(())
}

/// Vertices of `F(δ, ε)`: `d_Y(cusp) >= δ` or `|z| >= 1 + ε`.
pub fn f_set(x: &ProductMesh, delta: f64, eps: f64) -> Result<Vec<usize>, ModulusError> {
    check_positive(delta, eps)?;
    let dy = x.base_distances(x.base.cusp);
    Ok((0..x.vertex_count())
        .filter(|&v| {
            let (b, _) = x.split(v);
            dy[b] >= delta || x.z(v).abs() >= 1.0 + eps
        })
        .collect())
}

fn in_c(x: &ProductMesh, dy: &[f64], v: usize, delta: f64, eps: f64) -> bool {
    let (b, _) = x.split(v);
    dy[b] < delta && x.z(v).abs() <= 1.0 + eps
}

/// Base-chart part of `C(δ, ε)`.
pub fn c1_set(x: &ProductMesh, delta: f64, eps: f64) -> Result<Vec<usize>, ModulusError> {
    check_positive(delta, eps)?;
    let dy = x.base_distances(x.base.cusp);
    Ok((0..x.vertex_count())
        .filter(|&v| in_c(x, &dy, v, delta, eps) && x.base.vertices[x.split(v).0].chart.is_base())
        .collect())
}

/// Pillowcase part of `C(δ, ε)`.
pub fn c2_set(x: &ProductMesh, delta: f64, eps: f64) -> Result<Vec<usize>, ModulusError> {
    check_positive(delta, eps)?;
    let dy = x.base_distances(x.base.cusp);
    Ok((0..x.vertex_count())
        .filter(|&v| in_c(x, &dy, v, delta, eps) && !x.base.vertices[x.split(v).0].chart.is_base())
        .collect())
}

/// The two pieces of the analytic density.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticPieces {
    pub c1: Vec<usize>,
    pub c2: Vec<usize>,
    pub c1_measure: f64,
    pub c2_measure: f64,
}

/// `ρ = 1/δ` on `C₁(δ, ε)`, `1/ε` on `C₂(δ, ε)`, zero elsewhere.
pub fn analytic_density(x: &ProductMesh, delta: f64, eps: f64) -> Result<(Density, AnalyticPieces), ModulusError> {
    check_positive(delta, eps)?;
    if delta >= eps {
        return Err(ModulusError::Parameter(format!("δ={delta} must be smaller than ε={eps}")));
    }
    let c1 = c1_set(x, delta, eps)?;
    let c2 = c2_set(x, delta, eps)?;
    let mut rho = Density::zeros(x.vertex_count());
    for &v in &c1 {
        rho.values[v] = 1.0 / delta;
    }
    for &v in &c2 {
        rho.values[v] = 1.0 / eps;
    }
    let mu = &x.network.measure;
    let c1_measure = c1.iter().fold(0.0, |s, &v| s + mu[v]);
    let c2_measure = c2.iter().fold(0.0, |s, &v| s + mu[v]);
    Ok((rho, AnalyticPieces { c1, c2, c1_measure, c2_measure }))
}

/// `4(1+ε)δ + C δ²(1+ε)/ε³`.
pub fn analytic_energy_bound(delta: f64, eps: f64, c_reg: f64) -> f64 {
    4.0 * (1.0 + eps) * delta + c_reg * delta * delta * (1.0 + eps) / eps.powi(3)
}

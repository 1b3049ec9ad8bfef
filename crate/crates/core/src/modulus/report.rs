use serde::Serialize;

use super::cuts::CutFamilyResult;
use super::paths::{solve_modulus, ModulusResult, SolverOptions};
use super::ModulusError;
use crate::geometry::QuotientSpace;
use crate::metric::DualityConstants;
use crate::network::Network;

/// `p/(p-1)`.
pub fn conjugate_exponent(p: f64) -> Result<f64, ModulusError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(ModulusError::Parameter(format!("exponent p={p} must exceed 1")));
    }
    Ok(p / (p - 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub mod_gamma: f64,
    pub mod_sigma: f64,
    /// `Mod_p Γ^{1/p} · Mod_q Σ^{1/q}`.
    pub product: f64,
    /// Continuum lower bound `2 v_n / v_{n-1}`.
    pub bound: f64,
}

/// Side-by-side comparison of a path and a cut modulus with the continuum
/// constant. Nothing is asserted here about the product itself.
pub fn duality_report(gamma: &ModulusResult, sigma: &CutFamilyResult, n: u32) -> Result<DualityReport, ModulusError> {
    let q = conjugate_exponent(gamma.p)?;
    if (1.0 / gamma.p + 1.0 / sigma.q - 1.0).abs() > 1e-12 {
        return Err(ModulusError::Parameter(format!("exponents p={} and q={} are not conjugate", gamma.p, sigma.q)));
    }
    let c = DualityConstants::new(n).map_err(|e| ModulusError::Parameter(e.to_string()))?;
    Ok(DualityReport {
        n,
        p: gamma.p,
        q,
        mod_gamma: gamma.value,
        mod_sigma: sigma.value,
        product: gamma.value.powf(1.0 / gamma.p) * sigma.value.powf(1.0 / q),
        bound: c.bound,
    })
}

/// Ratios of consecutive values.
pub fn growth_factors(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] / w[0]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuotientReport {
    pub value_x: f64,
    pub value_quotient: f64,
    pub difference: f64,
    /// Both solves ran on the same support subnetwork.
    pub same_support: bool,
    pub identical: bool,
}

/// Solves the family `(e, f)` (ids in `X`) on `X` and on the quotient.
///
/// `e` and `f` are mapped through the quotient's class map; a set meeting
/// the collapsed continuum becomes a set containing `[E]`.
pub fn quotient_invariance_check(
    x: &Network,
    quotient: &QuotientSpace,
    e: &[usize],
    f: &[usize],
    opts: &SolverOptions,
) -> Result<QuotientReport, ModulusError> {
    let on_x = solve_modulus(x, e, f, opts)?;
    let lift = |set: &[usize]| {
        let mut out: Vec<usize> = set.iter().map(|&v| quotient.class_of[v] as usize).collect();
        out.sort_unstable();
        out.dedup();
        out
    };
    let on_q = solve_modulus(&quotient.network, &lift(e), &lift(f), opts)?;
    let touches = |r: &ModulusResult| r.active_paths.iter().flatten().any(|&v| v == quotient.collapsed);
    let same_support =
        !touches(&on_q) && !e.iter().chain(f).any(|&v| quotient.class_of[v] as usize == quotient.collapsed);
    Ok(QuotientReport {
        value_x: on_x.value,
        value_quotient: on_q.value,
        difference: on_q.value - on_x.value,
        same_support,
        identical: on_x.value.to_bits() == on_q.value.to_bits(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugates() {
        assert_eq!(conjugate_exponent(3.0).unwrap(), 1.5);
        assert_eq!(conjugate_exponent(2.0).unwrap(), 2.0);
        assert!(conjugate_exponent(1.0).is_err());
    }

    #[test]
    fn growth() {
        assert_eq!(growth_factors(&[1.0, 2.0, 3.0]), vec![2.0, 1.5]);
        assert!(growth_factors(&[1.0]).is_empty());
    }
}

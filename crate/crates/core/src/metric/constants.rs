use serde::Serialize;
use statrs::function::gamma::gamma;

use super::MetricError;

/// Unit-ball volumes and the duality bound `2 v_n / v_{n-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualityConstants {
    pub n: u32,
    pub v_n: f64,
    pub v_n_minus_1: f64,
    pub bound: f64,
}

impl DualityConstants {
    /// Volume of the unit ball in `R^k`.
    pub fn unit_ball_volume(k: u32) -> f64 {
        let h = k as f64 / 2.0;
        std::f64::consts::PI.powf(h) / gamma(h + 1.0)
    }

    pub fn new(n: u32) -> Result<Self, MetricError> {
        if n < 2 {
            return Err(MetricError::Parameter(format!("dimension {n} must be at least 2")));
        }
        let v_n = Self::unit_ball_volume(n);
        let v_n_minus_1 = Self::unit_ball_volume(n - 1);
        Ok(Self { n, v_n, v_n_minus_1, bound: 2.0 * v_n / v_n_minus_1 })
    }
}

/// Partial sum `sum_{n=m}^{m+terms-1} (2^{n+1} r + 1) * 2 / 4^n`: the area of
/// pillowcases of level `>= m` that a radius-`r` ball can meet.
pub fn pillowcase_series_partial(r: f64, m: u32, terms: u32) -> f64 {
    (m..m + terms)
        .map(|n| {
            let n = n as i32;
            (2f64.powi(n + 1) * r + 1.0) * 2.0 / 4f64.powi(n)
        })
        .sum()
}

/// Limit of [`pillowcase_series_partial`]: `8 r 2^{-m} + (8/3) 4^{-m}`.
pub fn pillowcase_series_closed_form(r: f64, m: u32) -> f64 {
    let m = m as i32;
    8.0 * r * 2f64.powi(-m) + 8.0 / 3.0 * 4f64.powi(-m)
}

/// The closed form as typeset in the source argument, `8 r 2^{-m} + 8·4^m/3`.
/// Kept only to document that it disagrees with the series.
pub fn pillowcase_series_printed(r: f64, m: u32) -> f64 {
    let m = m as i32;
    8.0 * r * 2f64.powi(-m) + 8.0 * 4f64.powi(m) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_volumes() {
        assert!((DualityConstants::unit_ball_volume(1) - 2.0).abs() < 1e-13);
        assert!((DualityConstants::unit_ball_volume(2) - PI).abs() < 1e-13);
        assert!((DualityConstants::unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn duality_bounds() {
        assert!((DualityConstants::new(3).unwrap().bound - 8.0 / 3.0).abs() < 1e-13);
        assert!((DualityConstants::new(2).unwrap().bound - PI).abs() < 1e-13);
        assert!(DualityConstants::new(1).is_err());
    }

    #[test]
    fn series_converges_to_corrected_closed_form() {
        for m in 0..8 {
            for r in [0.01, 0.1, 0.7] {
                let partial = pillowcase_series_partial(r, m, 80);
                let closed = pillowcase_series_closed_form(r, m);
                assert!((partial - closed).abs() <= 1e-14 * closed.max(1.0), "m={m} r={r}");
            }
        }
        // the typeset form grows with m and is not the limit
        assert!(pillowcase_series_printed(0.1, 3) > 100.0 * pillowcase_series_closed_form(0.1, 3));
    }

    #[test]
    fn series_bound_eleven_r_squared() {
        // r/2 < 2^{-m} <= r
        for m in 0..12 {
            let s = 2f64.powi(-(m as i32));
            for k in 0..=20 {
                let r = s * (1.0 + k as f64 / 20.0 * (1.0 - 1e-9));
                assert!(pillowcase_series_partial(r, m, 80) <= 11.0 * r * r);
            }
        }
    }
}

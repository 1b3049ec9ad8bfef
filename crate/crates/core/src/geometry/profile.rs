use serde::{Deserialize, Serialize};

use super::GeometryError;

/// The cusp profile `f(t) = t³/3` bounding the base region from above.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CuspProfile;

impl CuspProfile {
    /// Height of the region at abscissa `t`, for `t ∈ [0, 1)`.
    pub fn height(&self, t: f64) -> Result<f64, GeometryError> {
        if !(0.0..1.0).contains(&t) {
            return Err(GeometryError::Domain { t });
        }
        Ok(self.eval(t))
    }

    pub fn slope(&self, t: f64) -> f64 {
        t * t
    }

    /// Unchecked evaluation, also used on the closed mesh truncation.
    pub(crate) fn eval(&self, t: f64) -> f64 {
        t * t * t / 3.0
    }
}

pub fn cusp_profile(t: f64) -> Result<f64, GeometryError> {
    CuspProfile.height(t)
}

/// Slit `I_i^m` at the dyadic abscissa `i / 2^m` (with `i` odd).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicSlit {
    pub level: u32,
    pub numerator: u64,
}

impl DyadicSlit {
    pub fn new(level: u32, numerator: u64) -> Result<Self, GeometryError> {
        if level == 0 || level > 52 || numerator % 2 == 0 || numerator >= 1u64 << level {
            return Err(GeometryError::Config(format!("invalid dyadic slit (m={level}, i={numerator})")));
        }
        Ok(Self { level, numerator })
    }

    /// Side length `2^{-m}` of the attached pillowcase.
    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Abscissa `i / 2^m`; exact in binary64.
    pub fn abscissa(&self) -> f64 {
        self.numerator as f64 * self.side()
    }

    /// Slit length `min{2^{-m}, f(i/2^m)}`.
    pub fn length(&self) -> f64 {
        self.side().min(CuspProfile.eval(self.abscissa()))
    }

    /// True when the slit runs the full height of the region at its abscissa.
    pub fn is_full_height(&self) -> bool {
        CuspProfile.eval(self.abscissa()) <= self.side()
    }

    /// Area of the attached pillowcase (two squares of side `2^{-m}`).
    pub fn pillowcase_area(&self) -> f64 {
        2.0 * self.side() * self.side()
    }
}

/// All slits of level at most `depth`, sorted by `(m, i)`.
pub fn enumerate_slits(depth: u32) -> Vec<DyadicSlit> {
    (1..=depth).flat_map(|m| (1..1u64 << m).step_by(2).map(move |i| DyadicSlit { level: m, numerator: i })).collect()
}

/// Area of all pillowcases of level `>= m`: `Σ_{n≥m} 2^{n-1}·2·4^{-n} = 2^{1-m}`.
pub fn pillowcase_tail_area(m: u32) -> f64 {
    (1.0 - m as f64).exp2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        assert_eq!(cusp_profile(0.0).unwrap(), 0.0);
        assert!((cusp_profile(0.5).unwrap() - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(cusp_profile(0.75).unwrap(), 0.140625);
    }

    #[test]
    fn profile_domain() {
        assert!(matches!(cusp_profile(1.0), Err(GeometryError::Domain { .. })));
        assert!(cusp_profile(-0.1).is_err());
        assert!(cusp_profile(f64::NAN).is_err());
    }

    #[test]
    fn profile_is_increasing_with_slope_at_most_one() {
        let f = CuspProfile;
        let mut prev = 0.0;
        for k in 1..1000 {
            let t = k as f64 / 1000.0;
            let v = f.height(t).unwrap();
            assert!(v > prev);
            assert!(f.slope(t) <= 1.0);
            prev = v;
        }
    }

    #[test]
    fn slits_at_depth_one_and_two() {
        let s1 = enumerate_slits(1);
        assert_eq!(s1.len(), 1);
        assert_eq!(s1[0].abscissa(), 0.5);
        assert!((s1[0].length() - 1.0 / 24.0).abs() < 1e-16);

        let s2 = enumerate_slits(2);
        assert_eq!(s2.len(), 3);
        assert_eq!((s2[1].level, s2[1].numerator), (2, 1));
        assert_eq!(s2[1].abscissa(), 0.25);
        assert!((s2[1].length() - 1.0 / 192.0).abs() < 1e-17);
        assert_eq!((s2[2].level, s2[2].numerator), (2, 3));
        assert_eq!(s2[2].length(), 0.140625);
    }

    #[test]
    fn level_counts_and_invariants() {
        let slits = enumerate_slits(8);
        for m in 1..=8 {
            assert_eq!(slits.iter().filter(|s| s.level == m).count(), 1 << (m - 1));
        }
        for s in &slits {
            let t = s.abscissa();
            assert!(t > 0.0 && t < 1.0);
            assert!(s.length() > 0.0 && s.length() <= s.side());
            assert_eq!(s.length(), s.side().min(t * t * t / 3.0));
        }
        assert!(slits.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tail_area_matches_geometric_series() {
        for m in 1..10u32 {
            let brute: f64 = (m..m + 60).map(|n| ((n - 1) as f64).exp2() * 2.0 * 4f64.powi(-(n as i32))).sum();
            assert!((brute - pillowcase_tail_area(m)).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_slit_rejected() {
        assert!(DyadicSlit::new(2, 2).is_err());
        assert!(DyadicSlit::new(2, 5).is_err());
        assert!(DyadicSlit::new(0, 1).is_err());
        assert!(DyadicSlit::new(3, 5).is_ok());
    }
}

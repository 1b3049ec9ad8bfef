use serde::Serialize;

use super::{MeshSpace, MetricError};

/// `Δ(E, F) = dist(E, F) / min(diam E, diam F)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelativeDistance {
    pub dist: f64,
    pub diam_e: f64,
    pub diam_f: f64,
    /// `false` when the diameter is only a lower bound that already exceeds
    /// the other set's exact diameter.
    pub diam_e_exact: bool,
    pub diam_f_exact: bool,
    pub delta: f64,
}

/// Sets larger than this get a sweep lower bound before any exact pass.
const EXACT_LIMIT: usize = 64;

/// Exact diameter by one distance pass per member.
pub fn set_diameter<S: MeshSpace + ?Sized>(space: &S, set: &[usize]) -> f64 {
    let mut d: f64 = 0.0;
    for &a in set {
        let dist = space.distances_from(a);
        for &b in set {
            d = d.max(dist[b]);
        }
    }
    d
}

/// Lower bound from repeated farthest-point sweeps.
fn sweep_lower_bound<S: MeshSpace + ?Sized>(space: &S, set: &[usize], sweeps: usize) -> f64 {
    let mut from = set[0];
    let mut best: f64 = 0.0;
    for _ in 0..sweeps {
        let dist = space.distances_from(from);
        let (far, d) = set.iter().map(|&b| (b, dist[b])).fold((from, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        best = best.max(d);
        from = far;
    }
    best
}

pub fn relative_distance<S: MeshSpace + ?Sized>(
    space: &S,
    e: &[usize],
    f: &[usize],
) -> Result<RelativeDistance, MetricError> {
    if e.len() < 2 || f.len() < 2 {
        return Err(MetricError::Degenerate("relative distance needs two nondegenerate sets".into()));
    }
    let swapped = e.len() > f.len();
    let (small, large) = if swapped { (f, e) } else { (e, f) };

    let mut dist = f64::INFINITY;
    let mut diam_small: f64 = 0.0;
    for &a in small {
        let d = space.distances_from(a);
        for &b in large {
            dist = dist.min(d[b]);
        }
        for &b in small {
            diam_small = diam_small.max(d[b]);
        }
    }
    let (diam_large, large_exact) = if large.len() <= EXACT_LIMIT {
        (set_diameter(space, large), true)
    } else {
        let lb = sweep_lower_bound(space, large, 4);
        if lb >= diam_small {
            (lb, false)
        } else {
            (set_diameter(space, large), true)
        }
    };
    let min_diam = diam_small.min(diam_large);
    if !(min_diam > 0.0) {
        return Err(MetricError::Degenerate("a set has zero diameter".into()));
    }
    let (diam_e, diam_f, diam_e_exact, diam_f_exact) =
        if swapped { (diam_large, diam_small, large_exact, true) } else { (diam_small, diam_large, true, large_exact) };
    Ok(RelativeDistance { dist, diam_e, diam_f, diam_e_exact, diam_f_exact, delta: dist / min_diam })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_product, extract_continuum_e, glue_surface, MeshParams};
    use std::sync::Arc;

    #[test]
    fn translated_vertical_segments() {
        let y = glue_surface(&MeshParams::new(1, 1.0 / 16.0).unwrap()).unwrap();
        let x = build_product(Arc::new(y), 0.25).unwrap();
        let foot = x.base.slits[0].bottom as usize;
        // two vertical segments of length 1 at the cusp and at the slit foot
        let e: Vec<usize> = (4..=8).map(|k| x.vertex(x.base.cusp, k)).collect();
        let f: Vec<usize> = (4..=8).map(|k| x.vertex(foot, k)).collect();
        let rd = relative_distance(&x, &e, &f).unwrap();
        assert!((rd.dist - 0.5).abs() < 1e-12);
        assert!((rd.diam_e - 1.0).abs() < 1e-12 && (rd.diam_f - 1.0).abs() < 1e-12);
        assert!((rd.delta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn touching_sets_have_zero_delta() {
        let y = glue_surface(&MeshParams::new(1, 1.0 / 16.0).unwrap()).unwrap();
        let x = build_product(Arc::new(y), 0.25).unwrap();
        let e = extract_continuum_e(&x).unwrap().members;
        let f: Vec<usize> = e.iter().map(|&v| v + 1).collect();
        let rd = relative_distance(&x, &e, &f).unwrap();
        assert!(rd.delta <= 1.0 / 16.0);
    }

    #[test]
    fn degenerate_sets_rejected() {
        let y = glue_surface(&MeshParams::new(1, 1.0 / 16.0).unwrap()).unwrap();
        assert!(relative_distance(&y, &[0], &[5, 6]).is_err());
    }
}

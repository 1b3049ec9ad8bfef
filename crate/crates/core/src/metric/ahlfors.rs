use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{measure_from_distances, stats_from_measure, BallStats, MeshSpace, MetricError};
use crate::geometry::{Chart, GluedSurfaceMesh};

/// Chart families the sampler draws centers from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Stratum {
    /// Either base copy with `t < 1/4`.
    Cusp,
    BaseTop,
    /// The doubled copy of the base.
    BaseBottom,
    Pillowcase {
        level: u32,
    },
}

impl Stratum {
    fn of(chart: &Chart, t: f64) -> Self {
        match chart {
            Chart::BaseTop | Chart::BaseBottom if t < 0.25 => Stratum::Cusp,
            Chart::BaseTop => Stratum::BaseTop,
            Chart::BaseBottom => Stratum::BaseBottom,
            Chart::Pillowcase { level, .. } => Stratum::Pillowcase { level: *level },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallSample {
    pub stratum: Option<Stratum>,
    pub stats: BallStats,
    /// The ball reached the truncation boundary; excluded from the extremes.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AhlforsSummary {
    pub samples: Vec<BallSample>,
    pub valid: usize,
    pub flagged: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub min_ratio_inner: f64,
    pub max_ratio_outer: f64,
}

impl AhlforsSummary {
    /// Valid samples whose bracket leaves `[lo, hi]`.
    pub fn violations(&self, lo: f64, hi: f64) -> Vec<&BallSample> {
        self.samples.iter().filter(|s| !s.flagged && (s.stats.ratio_inner < lo || s.stats.ratio_outer > hi)).collect()
    }
}

/// Ball statistics for every `(center, radius)`; samples touching the
/// truncation boundary are flagged and left out of the extremes.
pub fn ahlfors_scan<S: MeshSpace + ?Sized>(space: &S, samples: &[(usize, f64)]) -> Result<AhlforsSummary, MetricError> {
    if let Some(&(_, r)) = samples.iter().find(|s| !(s.1 > 0.0)) {
        return Err(MetricError::Parameter(format!("sample radius {r} must be positive")));
    }
    let results: Vec<BallSample> = samples
        .par_iter()
        .map(|&(x, r)| {
            let d = space.distances_from(x);
            let m = measure_from_distances(space, r, &d);
            BallSample { stratum: None, stats: stats_from_measure(space, x, r, m), flagged: m.touches_boundary }
        })
        .collect();
    Ok(summarize(results))
}

fn summarize(samples: Vec<BallSample>) -> AhlforsSummary {
    let valid: Vec<&BallStats> = samples.iter().filter(|s| !s.flagged).map(|s| &s.stats).collect();
    let fold = |f: fn(&BallStats) -> f64, min: bool| {
        valid.iter().map(|s| f(s)).fold(if min { f64::INFINITY } else { f64::NEG_INFINITY }, |a, b| {
            if min {
                a.min(b)
            } else {
                a.max(b)
            }
        })
    };
    AhlforsSummary {
        valid: valid.len(),
        flagged: samples.len() - valid.len(),
        min_ratio: fold(|s| s.ratio, true),
        max_ratio: fold(|s| s.ratio, false),
        min_ratio_inner: fold(|s| s.ratio_inner, true),
        max_ratio_outer: fold(|s| s.ratio_outer, false),
        samples,
    }
}

/// Seeded centers and radii on `Y`, drawn round-robin over the strata.
///
/// Radii are log-uniform in `[r_min, r_max]`, capped so a ball cannot reach
/// the truncation edge `t = 1 - h`: every path in `Y` covers at least the
/// change in base abscissa, and a pillowcase sits at its slit's abscissa.
pub fn stratified_samples(
    y: &GluedSurfaceMesh,
    n: usize,
    r_min: f64,
    r_max: f64,
    seed: u64,
) -> Result<Vec<(usize, f64, Stratum)>, MetricError> {
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(MetricError::Parameter(format!("radius range [{r_min}, {r_max}] is empty")));
    }
    let edge = 1.0 - y.params.h;
    let abscissa = |v: usize| {
        let s = &y.vertices[v];
        s.chart.slit().map_or(s.coords[0], |sl| sl.abscissa())
    };
    let mut strata: Vec<(Stratum, Vec<usize>)> = Vec::new();
    for v in 0..y.vertex_count() {
        if y.is_truncation_boundary(v) || edge - abscissa(v) <= r_min {
            continue;
        }
        let s = Stratum::of(&y.vertices[v].chart, y.vertices[v].coords[0]);
        match strata.iter_mut().find(|(k, _)| *k == s) {
            Some((_, list)) => list.push(v),
            None => strata.push((s, vec![v])),
        }
    }
    strata.sort_by_key(|(s, _)| match s {
        Stratum::Cusp => (0, 0),
        Stratum::BaseTop => (1, 0),
        Stratum::BaseBottom => (2, 0),
        Stratum::Pillowcase { level } => (3, *level),
    });
    if strata.is_empty() {
        return Err(MetricError::Degenerate("no admissible ball centers".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (stratum, list) = &strata[i % strata.len()];
        let v = list[rng.random_range(0..list.len())];
        let hi = r_max.min(0.999 * (edge - abscissa(v)));
        let r = (r_min.ln() + rng.random::<f64>() * (hi.ln() - r_min.ln())).exp();
        out.push((v, r, *stratum));
    }
    Ok(out)
}

/// Stratified scan: samples from [`stratified_samples`] with their strata
/// attached.
pub fn stratified_scan(
    y: &GluedSurfaceMesh,
    n: usize,
    r_min: f64,
    r_max: f64,
    seed: u64,
) -> Result<AhlforsSummary, MetricError> {
    let drawn = stratified_samples(y, n, r_min, r_max, seed)?;
    let pairs: Vec<(usize, f64)> = drawn.iter().map(|&(v, r, _)| (v, r)).collect();
    let mut summary = ahlfors_scan(y, &pairs)?;
    for (s, (_, _, st)) in summary.samples.iter_mut().zip(&drawn) {
        s.stratum = Some(*st);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{glue_surface, MeshParams};

    #[test]
    fn sampler_is_seeded_and_covers_strata() {
        let y = glue_surface(&MeshParams::new(3, 1.0 / 32.0).unwrap()).unwrap();
        let a = stratified_samples(&y, 30, 0.1, 0.5, 7).unwrap();
        let b = stratified_samples(&y, 30, 0.1, 0.5, 7).unwrap();
        assert_eq!(a, b);
        let kinds: std::collections::HashSet<Stratum> = a.iter().map(|s| s.2).collect();
        assert_eq!(kinds.len(), 6);
        assert!(a.iter().all(|&(_, r, _)| (0.1..=0.5).contains(&r)));
    }

    #[test]
    fn stratified_balls_never_reach_the_edge() {
        let y = glue_surface(&MeshParams::new(2, 1.0 / 16.0).unwrap()).unwrap();
        let s = stratified_scan(&y, 24, 0.125, 0.6, 3).unwrap();
        assert_eq!(s.flagged, 0);
        assert!(s.min_ratio_inner <= s.min_ratio && s.max_ratio <= s.max_ratio_outer);
    }

    #[test]
    fn big_balls_are_flagged() {
        let y = glue_surface(&MeshParams::new(1, 1.0 / 16.0).unwrap()).unwrap();
        let s = ahlfors_scan(&y, &[(y.cusp, 5.0), (y.cusp, 0.2)]).unwrap();
        assert!(s.samples[0].flagged && !s.samples[1].flagged);
        assert_eq!((s.valid, s.flagged), (1, 1));
        assert!(ahlfors_scan(&y, &[(0, -1.0)]).is_err());
    }
}

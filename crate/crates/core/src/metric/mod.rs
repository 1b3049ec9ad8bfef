//! Length metric, balls and ball measures on the surface and product meshes.

mod ahlfors;
mod constants;
mod llc;
mod relative;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{GluedSurfaceMesh, ProductMesh};
use crate::graph::dijkstra;

pub use ahlfors::{ahlfors_scan, stratified_samples, stratified_scan, AhlforsSummary, BallSample, Stratum};
pub use constants::{
    pillowcase_series_closed_form, pillowcase_series_partial, pillowcase_series_printed, DualityConstants,
};
pub use llc::{llc_check, llc_condition_a, product_geodesic, random_triples, LlcFailure, LlcWitness, WitnessRoute};
pub use relative::{relative_distance, set_diameter, RelativeDistance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate set: {0}")]
    Degenerate(String),
}

/// A meshed metric measure space: distances from a vertex, lumped vertex
/// measures, and a cell decomposition for bracketed ball measures.
pub trait MeshSpace: Sync {
    /// Hausdorff dimension the measure approximates.
    fn dimension(&self) -> u32;
    fn vertex_count(&self) -> usize;
    /// Distances from `v` to every vertex (`INFINITY` when unreachable).
    fn distances_from(&self, v: usize) -> Vec<f64>;
    fn vertex_measure(&self, v: usize) -> f64;
    /// Calls `f(vertices, volume, diameter)` for every cell.
    fn for_each_cell(&self, f: &mut dyn FnMut(&[usize], f64, f64));
    fn is_truncation_boundary(&self, v: usize) -> bool;
    fn chart_label(&self, v: usize) -> String;
    fn coords(&self, v: usize) -> Vec<f64>;
}

fn cell_diameter(corners: &[[f64; 2]]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in corners.iter().enumerate() {
        for q in &corners[i + 1..] {
            d = d.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    d
}

impl MeshSpace for GluedSurfaceMesh {
    fn dimension(&self) -> u32 {
        2
    }

    fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    fn distances_from(&self, v: usize) -> Vec<f64> {
        dijkstra(&self.metric_graph, &[v]).dist
    }

    fn vertex_measure(&self, v: usize) -> f64 {
        self.vertex_area[v]
    }

    fn for_each_cell(&self, f: &mut dyn FnMut(&[usize], f64, f64)) {
        let mut verts = Vec::with_capacity(4);
        for c in &self.cells {
            verts.clear();
            verts.extend(c.verts.iter().map(|&v| v as usize));
            f(&verts, c.area, cell_diameter(&c.corners));
        }
    }

    fn is_truncation_boundary(&self, v: usize) -> bool {
        GluedSurfaceMesh::is_truncation_boundary(self, v)
    }

    fn chart_label(&self, v: usize) -> String {
        self.vertices[v].chart.label()
    }

    fn coords(&self, v: usize) -> Vec<f64> {
        self.vertices[v].coords.to_vec()
    }
}

impl MeshSpace for ProductMesh {
    fn dimension(&self) -> u32 {
        3
    }

    fn vertex_count(&self) -> usize {
        ProductMesh::vertex_count(self)
    }

    fn distances_from(&self, v: usize) -> Vec<f64> {
        ProductMesh::distances_from(self, v)
    }

    fn vertex_measure(&self, v: usize) -> f64 {
        self.network.measure[v]
    }

    fn for_each_cell(&self, f: &mut dyn FnMut(&[usize], f64, f64)) {
        let diam: Vec<f64> = self.base.cells.iter().map(|c| cell_diameter(&c.corners)).collect();
        let nc = self.base.cells.len();
        let mut i = 0;
        ProductMesh::for_each_cell(self, |verts, vol| {
            let dz = self.hz;
            f(verts, vol, diam[i % nc].hypot(dz));
            i += 1;
        });
    }

    fn is_truncation_boundary(&self, v: usize) -> bool {
        ProductMesh::is_truncation_boundary(self, v)
    }

    fn chart_label(&self, v: usize) -> String {
        self.base.vertices[self.split(v).0].chart.label()
    }

    fn coords(&self, v: usize) -> Vec<f64> {
        let (b, _) = self.split(v);
        let c = self.base.vertices[b].coords;
        vec![c[0], c[1], self.z(v)]
    }
}

/// Mesh distance between two vertices; `INFINITY` flags a disconnected pair.
pub fn distance<S: MeshSpace + ?Sized>(space: &S, a: usize, b: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    space.distances_from(a)[b]
}

/// Open mesh ball: its vertices and the cells whose vertices all lie in it.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricBall {
    pub center: usize,
    pub radius: f64,
    pub vertices: Vec<usize>,
    pub cells: Vec<usize>,
}

pub fn metric_ball<S: MeshSpace + ?Sized>(space: &S, x: usize, r: f64) -> Result<MetricBall, MetricError> {
    if !(r > 0.0) {
        return Err(MetricError::Parameter(format!("radius {r} must be positive")));
    }
    let d = space.distances_from(x);
    Ok(ball_from_distances(space, x, r, &d))
}

pub(crate) fn ball_from_distances<S: MeshSpace + ?Sized>(space: &S, x: usize, r: f64, d: &[f64]) -> MetricBall {
    let vertices = (0..d.len()).filter(|&v| d[v] < r).collect();
    let mut cells = Vec::new();
    let mut k = 0;
    space.for_each_cell(&mut |verts, _, _| {
        if verts.iter().all(|&v| d[v] < r) {
            cells.push(k);
        }
        k += 1;
    });
    MetricBall { center: x, radius: r, vertices, cells }
}

/// Ball measure with its cell bracket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallMeasure {
    /// Sum of lumped vertex measures inside the ball.
    pub lumped: f64,
    /// Cells with every vertex inside.
    pub inner: f64,
    /// Cells that can meet the ball: nearest vertex within `r` plus the
    /// cell diameter.
    pub outer: f64,
    /// The ball reaches a truncation-boundary vertex.
    pub touches_boundary: bool,
}

pub fn ball_measure<S: MeshSpace + ?Sized>(space: &S, x: usize, r: f64) -> Result<BallMeasure, MetricError> {
    if !(r > 0.0) {
        return Err(MetricError::Parameter(format!("radius {r} must be positive")));
    }
    Ok(measure_from_distances(space, r, &space.distances_from(x)))
}

pub(crate) fn measure_from_distances<S: MeshSpace + ?Sized>(space: &S, r: f64, d: &[f64]) -> BallMeasure {
    let mut lumped = 0.0;
    let mut touches_boundary = false;
    for (v, &dv) in d.iter().enumerate() {
        if dv < r {
            lumped += space.vertex_measure(v);
            touches_boundary |= space.is_truncation_boundary(v);
        }
    }
    let (mut inner, mut outer) = (0.0, 0.0);
    space.for_each_cell(&mut |verts, vol, diam| {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &v in verts {
            lo = lo.min(d[v]);
            hi = hi.max(d[v]);
        }
        if hi < r {
            inner += vol;
        }
        if lo < r + diam {
            outer += vol;
        }
    });
    BallMeasure { lumped, inner, outer, touches_boundary }
}

/// One ball of an Ahlfors scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallStats {
    pub center: usize,
    pub chart: String,
    pub coords: Vec<f64>,
    pub radius: f64,
    pub k: u32,
    pub measure: BallMeasure,
    /// `lumped / r^k`.
    pub ratio: f64,
    /// `inner / r^k`, used for lower-bound claims.
    pub ratio_inner: f64,
    /// `outer / r^k`, used for upper-bound claims.
    pub ratio_outer: f64,
}

pub fn ball_stats<S: MeshSpace + ?Sized>(space: &S, x: usize, r: f64) -> Result<BallStats, MetricError> {
    let m = ball_measure(space, x, r)?;
    Ok(stats_from_measure(space, x, r, m))
}

pub(crate) fn stats_from_measure<S: MeshSpace + ?Sized>(space: &S, x: usize, r: f64, m: BallMeasure) -> BallStats {
    let k = space.dimension();
    let rk = r.powi(k as i32);
    BallStats {
        center: x,
        chart: space.chart_label(x),
        coords: space.coords(x),
        radius: r,
        k,
        measure: m,
        ratio: m.lumped / rk,
        ratio_inner: m.inner / rk,
        ratio_outer: m.outer / rk,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_product, glue_surface, Chart, MeshParams, Sheet};
    use std::sync::Arc;

    fn surface(depth: u32, h: f64) -> GluedSurfaceMesh {
        glue_surface(&MeshParams::new(depth, h).unwrap()).unwrap()
    }

    #[test]
    fn distance_to_self_is_zero_and_symmetric() {
        let y = surface(1, 1.0 / 16.0);
        assert_eq!(distance(&y, 7, 7), 0.0);
        assert_eq!(distance(&y, 3, 40), distance(&y, 40, 3));
    }

    #[test]
    fn cusp_to_slit_foot_on_top_chart() {
        let y = surface(1, 1.0 / 32.0);
        let foot = y.slits[0].bottom as usize;
        assert!((distance(&y, y.cusp, foot) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tiny_ball_is_the_center() {
        let y = surface(1, 1.0 / 16.0);
        let b = metric_ball(&y, 20, 1e-6).unwrap();
        assert_eq!(b.vertices, vec![20]);
        assert!(b.cells.is_empty());
        assert!(metric_ball(&y, 20, 0.0).is_err());
    }

    #[test]
    fn balls_are_monotone_and_brackets_ordered() {
        let y = surface(2, 1.0 / 32.0);
        let x = y.slits[0].left[0] as usize;
        let mut prev: Option<(MetricBall, BallMeasure)> = None;
        for r in [0.05, 0.1, 0.2, 0.4] {
            let b = metric_ball(&y, x, r).unwrap();
            let m = ball_measure(&y, x, r).unwrap();
            assert!(m.inner <= m.lumped + 1e-15 && m.lumped <= m.outer + 1e-15);
            if let Some((pb, pm)) = prev {
                assert!(pb.vertices.iter().all(|v| b.vertices.contains(v)));
                assert!(pm.inner <= m.inner && pm.outer <= m.outer);
            }
            prev = Some((b, m));
        }
    }

    #[test]
    fn full_radius_ball_is_everything() {
        let y = surface(1, 1.0 / 16.0);
        let m = ball_measure(&y, y.cusp, 10.0).unwrap();
        assert!((m.inner - y.total_area()).abs() < 1e-12);
        assert!((m.lumped - y.total_area()).abs() < 1e-12);
        assert!(m.touches_boundary);
    }

    #[test]
    fn flat_pillowcase_ball_is_near_a_disk() {
        let y = surface(1, 1.0 / 128.0);
        let chart = Chart::Pillowcase { level: 1, numerator: 1, sheet: Sheet::Front };
        let x = (0..y.vertex_count())
            .filter(|&v| y.vertices[v].chart == chart)
            .min_by(|&a, &b| {
                let d = |v: usize| (y.vertices[v].coords[0] - 0.25).hypot(y.vertices[v].coords[1] - 0.25);
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        let r = 0.125;
        let m = ball_measure(&y, x, r).unwrap();
        let disk = std::f64::consts::PI * r * r;
        assert!((m.lumped - disk).abs() / disk < 0.03, "{} vs {disk}", m.lumped);
        assert!(m.inner < disk && disk < m.outer);
    }

    #[test]
    fn product_ball_contains_vertical_neighbours() {
        let y = surface(1, 1.0 / 16.0);
        let x = build_product(Arc::new(y), 0.25).unwrap();
        let v = x.vertex(10, 6);
        let b = metric_ball(&x, v, 0.3).unwrap();
        assert!(b.vertices.contains(&x.vertex(10, 5)) && b.vertices.contains(&x.vertex(10, 7)));
        assert!(!b.vertices.contains(&x.vertex(10, 8)));
        assert_eq!(x.coords(v)[2], x.layers[6]);
    }
}

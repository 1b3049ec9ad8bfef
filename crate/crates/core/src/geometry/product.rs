use std::sync::Arc;

use serde::Serialize;

use super::surface::GluedSurfaceMesh;
use super::GeometryError;
use crate::graph::{dijkstra, EdgeRecord, Graph};
use crate::network::Network;

/// Layered mesh of `X = Y × (-2, 2)` truncated to `[-2 + h_z, 2 - h_z]`.
///
/// Vertex `(v, k)` has id `k · |V(Y)| + v`. Prism cells are base cells times
/// layer intervals; vertex measures lump prism volumes evenly onto corners.
#[derive(Clone, Debug)]
pub struct ProductMesh {
    pub base: Arc<GluedSurfaceMesh>,
    pub hz: f64,
    pub layers: Vec<f64>,
    pub network: Network,
}

/// The continuum `E = {cusp} × [-1, 1]` as product mesh vertices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuumE {
    pub base_point: usize,
    pub extent: (f64, f64),
    pub members: Vec<usize>,
}

pub fn build_product(base: Arc<GluedSurfaceMesh>, hz: f64) -> Result<ProductMesh, GeometryError> {
    if !(hz > 0.0 && hz < 1.0) {
        return Err(GeometryError::Config(format!("vertical step h_z={hz} outside (0, 1)")));
    }
    let count = ((4.0 - 2.0 * hz) / hz + 1e-9).floor() as usize + 1;
    let layers: Vec<f64> = (0..count).map(|k| -2.0 + hz + k as f64 * hz).collect();
    let nb = base.vertex_count();
    let weight = |k: usize| if k == 0 || k + 1 == count { 0.5 * hz } else { hz };

    let mut edges = Vec::new();
    let mut area = Vec::new();
    // ascending (a, b) order: for each layer, horizontal edges then vertical ones
    // would interleave, so collect and sort once
    for k in 0..count {
        let off = (k * nb) as u32;
        for (e, rec) in base.cell_graph.edges().iter().enumerate() {
            edges.push(EdgeRecord { a: off + rec.a, b: off + rec.b, len: rec.len });
            area.push(base.edge_dual[e] * weight(k));
        }
        if k + 1 < count {
            for v in 0..nb {
                edges.push(EdgeRecord { a: off + v as u32, b: off + (nb + v) as u32, len: hz });
                area.push(base.vertex_area[v]);
            }
        }
    }
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&i| (edges[i].a, edges[i].b));
    let edges: Vec<EdgeRecord> = order.iter().map(|&i| edges[i]).collect();
    let area: Vec<f64> = order.iter().map(|&i| area[i]).collect();
    let measure: Vec<f64> = (0..count).flat_map(|k| base.vertex_area.iter().map(move |a| a * weight(k))).collect();
    let network = Network::new(Graph::from_unique_edges(nb * count, edges), measure, area);
    Ok(ProductMesh { base, hz, layers, network })
}

pub fn extract_continuum_e(x: &ProductMesh) -> Result<ContinuumE, GeometryError> {
    let cusp = x.base.cusp;
    let members: Vec<usize> =
        x.layers.iter().enumerate().filter(|(_, &z)| z.abs() <= 1.0 + 1e-12).map(|(k, _)| x.vertex(cusp, k)).collect();
    if members.is_empty() {
        return Err(GeometryError::Internal("continuum E has no mesh vertices".into()));
    }
    Ok(ContinuumE { base_point: cusp, extent: (-1.0, 1.0), members })
}

impl ProductMesh {
    pub fn base_count(&self) -> usize {
        self.base.vertex_count()
    }

    pub fn vertex_count(&self) -> usize {
        self.base_count() * self.layers.len()
    }

    pub fn vertex(&self, base: usize, layer: usize) -> usize {
        layer * self.base_count() + base
    }

    /// `(base vertex, layer index)` of a product vertex.
    pub fn split(&self, v: usize) -> (usize, usize) {
        (v % self.base_count(), v / self.base_count())
    }

    pub fn z(&self, v: usize) -> f64 {
        self.layers[v / self.base_count()]
    }

    /// Shortest-path distances in `Y` from base vertex `v`.
    pub fn base_distances(&self, v: usize) -> Vec<f64> {
        dijkstra(&self.base.metric_graph, &[v]).dist
    }

    /// Product-metric distances `sqrt(d_Y² + Δz²)` from `v` to every vertex.
    pub fn distances_from(&self, v: usize) -> Vec<f64> {
        let (b, k) = self.split(v);
        let dy = self.base_distances(b);
        self.product_distances(&dy, self.layers[k])
    }

    pub fn product_distances(&self, base_dist: &[f64], z0: f64) -> Vec<f64> {
        self.layers.iter().flat_map(|&z| base_dist.iter().map(move |&d| d.hypot(z - z0))).collect()
    }

    pub fn is_truncation_boundary(&self, v: usize) -> bool {
        let (b, k) = self.split(v);
        k == 0 || k + 1 == self.layers.len() || self.base.is_truncation_boundary(b)
    }

    pub fn total_measure(&self) -> f64 {
        self.network.total_measure()
    }

    /// Measure of the prism set `cells × [z_lo, z_hi]` where the cell ids
    /// index `base.cells` and `lo..hi` are layer indices.
    pub fn prism_measure(&self, cells: &[usize], lo: usize, hi: usize) -> f64 {
        let mut total = 0.0;
        for k in lo..hi {
            let dz = self.layers[k + 1] - self.layers[k];
            for &c in cells {
                total += self.base.cells[c].area * dz;
            }
        }
        total
    }

    /// Calls `f(vertices, volume)` for every prism cell.
    pub fn for_each_cell(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut verts = Vec::with_capacity(8);
        for k in 0..self.layers.len().saturating_sub(1) {
            let dz = self.layers[k + 1] - self.layers[k];
            for cell in &self.base.cells {
                verts.clear();
                verts.extend(cell.verts.iter().map(|&v| self.vertex(v as usize, k)));
                verts.extend(cell.verts.iter().map(|&v| self.vertex(v as usize, k + 1)));
                f(&verts, cell.area * dz);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{glue_surface, MeshParams};

    fn product(hz: f64) -> ProductMesh {
        let y = glue_surface(&MeshParams::new(1, 1.0 / 16.0).unwrap()).unwrap();
        build_product(Arc::new(y), hz).unwrap()
    }

    #[test]
    fn layer_count_formula() {
        for hz in [0.5, 0.25, 1.0 / 16.0] {
            let x = product(hz);
            let expected = ((4.0 - 2.0 * hz) / hz).floor() as usize + 1;
            assert_eq!(x.layers.len(), expected);
            assert_eq!(x.layers[0], -2.0 + hz);
            assert_eq!(*x.layers.last().unwrap(), 2.0 - hz);
        }
    }

    #[test]
    fn continuum_e_members() {
        let x = product(0.5);
        let e = extract_continuum_e(&x).unwrap();
        assert_eq!(e.members.len(), 5);
        let zs: Vec<f64> = e.members.iter().map(|&v| x.z(v)).collect();
        assert_eq!(zs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(e.members.iter().all(|&v| x.split(v).0 == x.base.cusp));
        let d = x.distances_from(e.members[0]);
        assert_eq!(d[*e.members.last().unwrap()], 2.0);
    }

    #[test]
    fn measures_are_positive_and_multiplicative() {
        let x = product(0.25);
        assert!(x.network.measure.iter().all(|&m| m > 0.0));
        let len = x.layers.last().unwrap() - x.layers[0];
        let total = x.base.total_area() * len;
        assert!((x.total_measure() - total).abs() < 1e-13);
        let cells: Vec<usize> = (0..x.base.cells.len()).step_by(3).collect();
        let area: f64 = cells.iter().map(|&c| x.base.cells[c].area).sum();
        let got = x.prism_measure(&cells, 2, 7);
        assert!((got - area * (x.layers[7] - x.layers[2])).abs() < 1e-15);
    }

    #[test]
    fn vertical_distance_is_layer_gap() {
        let x = product(0.25);
        let v = x.vertex(5, 3);
        let w = x.vertex(5, 5);
        assert_eq!(x.distances_from(v)[w], 0.5);
    }

    #[test]
    fn rejects_bad_step() {
        let y = glue_surface(&MeshParams::new(1, 1.0 / 16.0).unwrap()).unwrap();
        assert!(build_product(Arc::new(y), 1.5).is_err());
    }
}

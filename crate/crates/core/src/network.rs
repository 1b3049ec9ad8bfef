//! Measured graph consumed by the modulus solvers.

use crate::graph::{EdgeRecord, Graph};

/// A graph with a measure on vertices (for path densities) and a
/// codimension-one dual area on edges (for cut densities).
#[derive(Clone, Debug, Default)]
pub struct Network {
    pub graph: Graph,
    /// Lumped volume per vertex.
    pub measure: Vec<f64>,
    /// Dual face area per edge.
    pub edge_area: Vec<f64>,
}

impl Network {
    pub fn new(graph: Graph, measure: Vec<f64>, edge_area: Vec<f64>) -> Self {
        assert_eq!(graph.vertex_count(), measure.len());
        assert_eq!(graph.edge_count(), edge_area.len());
        Self { graph, measure, edge_area }
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn total_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    /// Volume attributed to an edge for cut-density energies: dual area
    /// times length.
    pub fn edge_volume(&self, e: usize) -> f64 {
        self.edge_area[e] * self.graph.edge(e).len
    }

    /// Induced subnetwork on `keep` (ascending ids), relabelled in order.
    /// Returns the subnetwork and the map from new to old ids.
    pub fn induced(&self, keep: &[usize]) -> (Network, Vec<usize>) {
        let mut new_id = vec![u32::MAX; self.vertex_count()];
        for (i, &v) in keep.iter().enumerate() {
            new_id[v] = i as u32;
        }
        let mut edges = Vec::new();
        let mut area = Vec::new();
        for (e, rec) in self.graph.edges().iter().enumerate() {
            let (a, b) = (new_id[rec.a as usize], new_id[rec.b as usize]);
            if a != u32::MAX && b != u32::MAX {
                edges.push(EdgeRecord { a: a.min(b), b: a.max(b), len: rec.len });
                area.push(self.edge_area[e]);
            }
        }
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&i| (edges[i].a, edges[i].b));
        let edges: Vec<EdgeRecord> = order.iter().map(|&i| edges[i]).collect();
        let area: Vec<f64> = order.iter().map(|&i| area[i]).collect();
        let measure = keep.iter().map(|&v| self.measure[v]).collect();
        (Network::new(Graph::from_unique_edges(keep.len(), edges), measure, area), keep.to_vec())
    }

    /// Uniform grid on `[0, w] × [0, 1]` with `nx × ny` square-ish cells:
    /// vertex measures and dual lengths from the lumped/barycentric rules.
    pub fn grid(nx: usize, ny: usize, w: f64) -> Network {
        let (hx, hy) = (w / nx as f64, 1.0 / ny as f64);
        let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
        let mut edges = Vec::new();
        let mut area = Vec::new();
        let n = (nx + 1) * (ny + 1);
        let mut measure = vec![0.0; n];
        for j in 0..ny {
            for i in 0..nx {
                for (a, b) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                    measure[id(a, b) as usize] += hx * hy / 4.0;
                }
            }
        }
        for j in 0..=ny {
            for i in 0..=nx {
                if i < nx {
                    let cells = if j == 0 || j == ny { 1.0 } else { 2.0 };
                    edges.push(EdgeRecord { a: id(i, j), b: id(i + 1, j), len: hx });
                    area.push(cells * hy / 2.0);
                }
                if j < ny {
                    let cells = if i == 0 || i == nx { 1.0 } else { 2.0 };
                    edges.push(EdgeRecord { a: id(i, j), b: id(i, j + 1), len: hy });
                    area.push(cells * hx / 2.0);
                }
            }
        }
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&i| (edges[i].a, edges[i].b));
        let edges: Vec<EdgeRecord> = order.iter().map(|&i| edges[i]).collect();
        let area = order.iter().map(|&i| area[i]).collect();
        Network::new(Graph::from_unique_edges(n, edges), measure, area)
    }

    /// Columns `i = 0` and `i = nx` of a [`Network::grid`].
    pub fn grid_sides(nx: usize, ny: usize) -> (Vec<usize>, Vec<usize>) {
        let left = (0..=ny).map(|j| j * (nx + 1)).collect();
        let right = (0..=ny).map(|j| j * (nx + 1) + nx).collect();
        (left, right)
    }

    /// Scales lengths by `lambda` and measures by `lambda^n` (areas by
    /// `lambda^{n-1}`).
    pub fn scaled(&self, lambda: f64, n: i32) -> Network {
        let edges = self.graph.edges().iter().map(|e| EdgeRecord { a: e.a, b: e.b, len: e.len * lambda }).collect();
        Network::new(
            Graph::from_unique_edges(self.vertex_count(), edges),
            self.measure.iter().map(|m| m * lambda.powi(n)).collect(),
            self.edge_area.iter().map(|a| a * lambda.powi(n - 1)).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_measures_sum_to_area() {
        let net = Network::grid(8, 4, 2.0);
        assert!((net.total_measure() - 2.0).abs() < 1e-14);
        // dual lengths of horizontal edges in one column sum to the height
        let col: f64 = (0..net.edge_count())
            .filter(|&e| {
                let r = net.graph.edge(e);
                r.b == r.a + 1 && r.a % 9 == 0
            })
            .map(|e| net.edge_area[e])
            .sum();
        assert!((col - 1.0).abs() < 1e-14);
    }

    #[test]
    fn induced_keeps_order() {
        let net = Network::grid(2, 2, 1.0);
        let (sub, map) = net.induced(&[0, 1, 3, 4]);
        assert_eq!(map, vec![0, 1, 3, 4]);
        assert_eq!(sub.edge_count(), 4);
        assert_eq!(sub.measure[3], net.measure[4]);
    }
}

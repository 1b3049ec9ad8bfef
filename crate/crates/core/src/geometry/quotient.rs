use crate::graph::{EdgeRecord, Graph};
use crate::network::Network;

use super::product::{ContinuumE, ProductMesh};
use super::GeometryError;

/// `X` with `E` collapsed to the single vertex `[E]`.
///
/// Vertices outside `E` keep their relative order, so any subnetwork avoiding
/// `E` is identical in `X` and in the quotient.
#[derive(Clone, Debug)]
pub struct QuotientSpace {
    pub network: Network,
    /// Map from `X` vertex ids to quotient ids.
    pub class_of: Vec<u32>,
    /// Id of `[E]`.
    pub collapsed: usize,
}

pub fn quotient_collapse(x: &ProductMesh, e: &ContinuumE) -> Result<QuotientSpace, GeometryError> {
    collapse_network(&x.network, &e.members)
}

pub(crate) fn collapse_network(net: &Network, members: &[usize]) -> Result<QuotientSpace, GeometryError> {
    if members.is_empty() {
        return Err(GeometryError::Config("cannot collapse an empty set".into()));
    }
    let n = net.vertex_count();
    let mut in_e = vec![false; n];
    for &v in members {
        in_e[v] = true;
    }
    let mut class_of = vec![u32::MAX; n];
    let mut collapsed = None;
    let mut next = 0u32;
    for v in 0..n {
        if in_e[v] {
            let c = *collapsed.get_or_insert_with(|| {
                next += 1;
                next - 1
            });
            class_of[v] = c;
        } else {
            class_of[v] = next;
            next += 1;
        }
    }
    let collapsed = collapsed.unwrap() as usize;
    let mut measure = vec![0.0; next as usize];
    for v in 0..n {
        measure[class_of[v] as usize] += net.measure[v];
    }

    let mut raw: Vec<(u32, u32, f64, f64)> = net
        .graph
        .edges()
        .iter()
        .enumerate()
        .filter_map(|(i, rec)| {
            let (a, b) = (class_of[rec.a as usize], class_of[rec.b as usize]);
            (a != b).then(|| (a.min(b), a.max(b), rec.len, net.edge_area[i]))
        })
        .collect();
    raw.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
    let mut edges: Vec<EdgeRecord> = Vec::with_capacity(raw.len());
    let mut area: Vec<f64> = Vec::with_capacity(raw.len());
    for (a, b, len, ar) in raw {
        match edges.last() {
            // parallel edges: shortest length wins, dual areas add up
            Some(last) if last.a == a && last.b == b => *area.last_mut().unwrap() += ar,
            _ => {
                edges.push(EdgeRecord { a, b, len });
                area.push(ar);
            }
        }
    }
    let graph = Graph::from_unique_edges(next as usize, edges);
    Ok(QuotientSpace { network: Network::new(graph, measure, area), class_of, collapsed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_product, extract_continuum_e, glue_surface, MeshParams};
    use crate::graph::dijkstra;
    use std::sync::Arc;

    fn setup() -> (ProductMesh, ContinuumE) {
        let y = glue_surface(&MeshParams::new(1, 1.0 / 16.0).unwrap()).unwrap();
        let x = build_product(Arc::new(y), 0.25).unwrap();
        let e = extract_continuum_e(&x).unwrap();
        (x, e)
    }

    #[test]
    fn vertex_count_drops_by_e_minus_one() {
        let (x, e) = setup();
        let q = quotient_collapse(&x, &e).unwrap();
        assert_eq!(q.network.vertex_count(), x.vertex_count() - e.members.len() + 1);
        let mass: f64 = e.members.iter().map(|&v| x.network.measure[v]).sum();
        assert_eq!(q.network.measure[q.collapsed], mass);
        assert_eq!(q.network.graph.component_count(|_| true), 1);
    }

    #[test]
    fn measures_off_e_unchanged() {
        let (x, e) = setup();
        let q = quotient_collapse(&x, &e).unwrap();
        for v in 0..x.vertex_count() {
            if !e.members.contains(&v) {
                assert_eq!(q.network.measure[q.class_of[v] as usize], x.network.measure[v]);
            }
        }
    }

    #[test]
    fn far_distances_unchanged() {
        let (x, e) = setup();
        let q = quotient_collapse(&x, &e).unwrap();
        // two vertices on the outer truncation edge at the bottom layer: their
        // geodesic stays far from the cusp line
        let outer: Vec<usize> = (0..x.base_count()).filter(|&b| x.base.is_truncation_boundary(b)).take(2).collect();
        let (a, b) = (x.vertex(outer[0], 0), x.vertex(outer[1], 0));
        let before = dijkstra(&x.network.graph, &[a]).dist[b];
        let after = dijkstra(&q.network.graph, &[q.class_of[a] as usize]).dist[q.class_of[b] as usize];
        assert_eq!(before, after);
    }

    #[test]
    fn collapse_of_empty_set_fails() {
        let (x, _) = setup();
        assert!(collapse_network(&x.network, &[]).is_err());
    }
}

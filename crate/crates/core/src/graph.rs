//! Compressed adjacency storage and deterministic shortest paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Undirected edge record: endpoints with `a < b` and Euclidean length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeRecord {
    pub a: u32,
    pub b: u32,
    pub len: f64,
}

/// Undirected weighted graph in CSR form. Neighbour lists are sorted by
/// target id so traversal order is reproducible.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    arc_edge: Vec<u32>,
    edges: Vec<EdgeRecord>,
}

impl Graph {
    /// Builds the graph from an edge list. Duplicate vertex pairs are merged,
    /// keeping the shorter length; self loops are dropped.
    pub fn from_edges(n: usize, raw: impl IntoIterator<Item = (u32, u32, f64)>) -> Self {
        let mut list: Vec<EdgeRecord> = raw
            .into_iter()
            .filter(|&(a, b, _)| a != b)
            .map(|(a, b, len)| EdgeRecord { a: a.min(b), b: a.max(b), len })
            .collect();
        list.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)).then(x.len.partial_cmp(&y.len).unwrap_or(Ordering::Equal)));
        list.dedup_by(|next, kept| next.a == kept.a && next.b == kept.b);
        Self::from_unique_edges(n, list)
    }

    /// Builds from an edge list already free of duplicates and self loops,
    /// preserving the given edge ids.
    pub fn from_unique_edges(n: usize, edges: Vec<EdgeRecord>) -> Self {
        let mut degree = vec![0usize; n + 1];
        for e in &edges {
            degree[e.a as usize + 1] += 1;
            degree[e.b as usize + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        let mut arc_edge = vec![0u32; offsets[n]];
        for (id, e) in edges.iter().enumerate() {
            let (a, b) = (e.a as usize, e.b as usize);
            targets[fill[a]] = e.b;
            arc_edge[fill[a]] = id as u32;
            fill[a] += 1;
            targets[fill[b]] = e.a;
            arc_edge[fill[b]] = id as u32;
            fill[b] += 1;
        }
        for v in 0..n {
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            let mut pairs: Vec<(u32, u32)> = (lo..hi).map(|k| (targets[k], arc_edge[k])).collect();
            pairs.sort_unstable();
            for (k, (t, e)) in (lo..hi).zip(pairs) {
                targets[k] = t;
                arc_edge[k] = e;
            }
        }
        Self { offsets, targets, arc_edge, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> EdgeRecord {
        self.edges[id]
    }

    /// `(neighbour, edge id)` pairs of `v`, ascending by neighbour.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (lo, hi) = (self.offsets[v], self.offsets[v + 1]);
        (lo..hi).map(move |k| (self.targets[k] as usize, self.arc_edge[k] as usize))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Edge id joining `a` and `b`, if any.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        let (lo, hi) = (self.offsets[a], self.offsets[a + 1]);
        self.targets[lo..hi].binary_search(&(b as u32)).ok().map(|k| self.arc_edge[lo + k] as usize)
    }

    /// Number of connected components among the vertices selected by `keep`.
    pub fn component_count(&self, keep: impl Fn(usize) -> bool) -> usize {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] || !keep(s) {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for (w, _) in self.neighbors(v) {
                    if !seen[w] && keep(w) {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, vertex)
        other.dist.total_cmp(&self.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single- or multi-source shortest path tree.
#[derive(Clone, Debug)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pub pred: Vec<Option<usize>>,
}

impl ShortestPaths {
    /// Vertex sequence from the source set to `target`, or `None` when
    /// unreachable.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut v = target;
        while let Some(u) = self.pred[v] {
            path.push(u);
            v = u;
        }
        path.reverse();
        Some(path)
    }
}

/// Dijkstra from `sources` with per-edge weights from `weight(edge_id)`.
/// Vertices rejected by `allow` are never entered. Ties in distance keep the
/// lexicographically smaller predecessor.
pub fn dijkstra_with<W, A>(graph: &Graph, sources: &[usize], weight: W, allow: A) -> ShortestPaths
where
    W: Fn(usize) -> f64,
    A: Fn(usize) -> bool,
{
    let n = graph.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if allow(s) && dist[s] > 0.0 {
            dist[s] = 0.0;
            heap.push(HeapItem { dist: 0.0, vertex: s });
        }
    }
    while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for (w, e) in graph.neighbors(v) {
            if done[w] || !allow(w) {
                continue;
            }
            let nd = d + weight(e);
            let better = nd < dist[w] || (nd == dist[w] && pred[w].is_some_and(|p| v < p));
            if better {
                dist[w] = nd;
                pred[w] = Some(v);
                heap.push(HeapItem { dist: nd, vertex: w });
            }
        }
    }
    ShortestPaths { dist, pred }
}

/// Dijkstra on the graph's own edge lengths.
pub fn dijkstra(graph: &Graph, sources: &[usize]) -> ShortestPaths {
    dijkstra_with(graph, sources, |e| graph.edges[e].len, |_| true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Graph {
        Graph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0), (0, 2, 1.5)])
    }

    #[test]
    fn duplicate_edges_keep_shortest() {
        let g = Graph::from_edges(2, [(0, 1, 2.0), (1, 0, 0.5), (1, 1, 3.0)]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge(0).len, 0.5);
    }

    #[test]
    fn dijkstra_distances_and_paths() {
        let g = square();
        let sp = dijkstra(&g, &[0]);
        assert_eq!(sp.dist, vec![0.0, 1.0, 1.5, 1.0]);
        assert_eq!(sp.path_to(2).unwrap(), vec![0, 2]);
    }

    #[test]
    fn ties_prefer_smaller_predecessor() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]);
        let sp = dijkstra(&g, &[0]);
        assert_eq!(sp.path_to(3).unwrap(), vec![0, 1, 3]);
    }

    #[test]
    fn blocked_vertices_are_avoided() {
        let g = square();
        let sp = dijkstra_with(&g, &[0], |e| g.edge(e).len, |v| v != 2);
        assert!(sp.dist[2].is_infinite());
        assert_eq!(sp.dist[3], 1.0);
    }

    #[test]
    fn find_edge_and_components() {
        let g = Graph::from_edges(5, [(0, 1, 1.0), (3, 4, 1.0)]);
        assert_eq!(g.find_edge(1, 0), Some(0));
        assert_eq!(g.find_edge(0, 3), None);
        assert_eq!(g.component_count(|_| true), 3);
        assert_eq!(g.component_count(|v| v != 2), 2);
    }
}

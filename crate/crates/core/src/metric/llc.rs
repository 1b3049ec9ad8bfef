use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::ProductMesh;
use crate::graph::{dijkstra, dijkstra_with};

/// Which piecewise route produced the witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WitnessRoute {
    /// Both ends far from `x` in `Y`: up to a far layer, across, and back.
    FarLayer,
    /// `y` far in `Y`, `z` far in height: across at `z`'s layer, then vertical.
    AcrossThenVertical,
    /// Both ends far in height: across to a far base point, vertical, across.
    FarBasePoint,
    /// `y` far in height, `z` far in `Y`: vertical at `z`, then across.
    VerticalThenAcross,
    /// Through `x` itself (condition (a)).
    ThroughCenter,
    /// Shortest path in the complement of the small ball.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlcWitness {
    pub x: usize,
    pub r: f64,
    pub y: usize,
    pub z: usize,
    pub route: WitnessRoute,
    pub path: Vec<usize>,
    /// Minimum distance from `x` over the path vertices.
    pub clearance: f64,
    /// Maximum distance from `x` over the path vertices.
    pub reach: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum LlcFailure {
    Precondition(String),
    NoWitness { x: usize, r: f64, y: usize, z: usize },
}

impl std::fmt::Display for LlcFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LlcFailure::Precondition(m) => write!(f, "precondition violated: {m}"),
            LlcFailure::NoWitness { x, r, y, z } => write!(f, "no witness for x={x} r={r} y={y} z={z}"),
        }
    }
}

impl std::error::Error for LlcFailure {}

/// Builds paths out of horizontal (`Y`-geodesic on one layer) and vertical
/// legs.
struct Legs<'a> {
    x: &'a ProductMesh,
    path: Vec<usize>,
}

impl<'a> Legs<'a> {
    fn start(x: &'a ProductMesh, v: usize) -> Self {
        Self { x, path: vec![v] }
    }

    fn at(&self) -> (usize, usize) {
        self.x.split(*self.path.last().unwrap())
    }

    fn across(mut self, to_base: usize) -> Self {
        let (b, k) = self.at();
        let sp = dijkstra(&self.x.base.metric_graph, &[b]);
        let route = sp.path_to(to_base).expect("surface mesh is connected");
        self.path.extend(route[1..].iter().map(|&u| self.x.vertex(u, k)));
        self
    }

    fn vertical(mut self, to_layer: usize) -> Self {
        let (b, k) = self.at();
        if to_layer > k {
            self.path.extend((k + 1..=to_layer).map(|j| self.x.vertex(b, j)));
        } else {
            self.path.extend((to_layer..k).rev().map(|j| self.x.vertex(b, j)));
        }
        self
    }
}

fn witness(d: &[f64], (xc, r, y, z): (usize, f64, usize, usize), route: WitnessRoute, path: Vec<usize>) -> LlcWitness {
    let clearance = path.iter().map(|&v| d[v]).fold(f64::INFINITY, f64::min);
    let reach = path.iter().map(|&v| d[v]).fold(0.0, f64::max);
    LlcWitness { x: xc, r, y, z, route, path, clearance, reach }
}

/// Condition (b) with `λ = 12`: joins `y` and `z` (both outside `B(x, r)`)
/// by a path avoiding `B(x, r/12)`.
///
/// Tries the four axis-aligned routes in order and falls back to a
/// constrained shortest path when none of them keeps the clearance.
pub fn llc_check(x: &ProductMesh, xc: usize, r: f64, y: usize, z: usize) -> Result<LlcWitness, LlcFailure> {
    if !(r > 0.0) {
        return Err(LlcFailure::Precondition(format!("radius {r} must be positive")));
    }
    let d = x.distances_from(xc);
    if d[y] < r || d[z] < r {
        return Err(LlcFailure::Precondition(format!("y={y} or z={z} lies inside B(x, {r})")));
    }
    let small = r / 12.0;
    let (x1, x2) = x.split(xc);
    let (y1, y2) = x.split(y);
    let (z1, z2) = x.split(z);
    let dy = x.base_distances(x1);
    let zx = x.layers[x2];
    let far_y = |b: usize| dy[b] >= small;
    let far_z = |k: usize| (x.layers[k] - zx).abs() >= small;

    let far_layer =
        (0..x.layers.len()).max_by(|&a, &b| (x.layers[a] - zx).abs().total_cmp(&(x.layers[b] - zx).abs())).unwrap();
    let far_base = (0..x.base_count())
        .filter(|&b| !x.base.is_truncation_boundary(b))
        .max_by(|&a, &b| dy[a].total_cmp(&dy[b]))
        .unwrap();

    let mut candidates = Vec::new();
    if far_y(y1) && far_y(z1) && far_z(far_layer) {
        let legs = Legs::start(x, z).vertical(far_layer).across(y1).vertical(y2);
        candidates.push((WitnessRoute::FarLayer, legs.path));
    }
    if far_y(y1) && far_z(z2) {
        let legs = Legs::start(x, z).across(y1).vertical(y2);
        candidates.push((WitnessRoute::AcrossThenVertical, legs.path));
    }
    if far_z(y2) && far_z(z2) && far_y(far_base) {
        let legs = Legs::start(x, z).across(far_base).vertical(y2).across(y1);
        candidates.push((WitnessRoute::FarBasePoint, legs.path));
    }
    if far_z(y2) && far_y(z1) {
        let legs = Legs::start(x, z).vertical(y2).across(y1);
        candidates.push((WitnessRoute::VerticalThenAcross, legs.path));
    }
    let args = (xc, r, y, z);
    for (route, mut path) in candidates {
        path.reverse();
        let w = witness(&d, args, route, path);
        if w.clearance >= small {
            return Ok(w);
        }
    }

    let g = &x.network.graph;
    let sp = dijkstra_with(g, &[y], |e| g.edge(e).len, |v| d[v] >= small);
    match sp.path_to(z) {
        Some(path) => Ok(witness(&d, args, WitnessRoute::Fallback, path)),
        None => Err(LlcFailure::NoWitness { x: xc, r, y, z }),
    }
}

/// Discrete product geodesic from `a` to `b`: the `Y`-geodesic between the
/// base points, with the height interpolated by arc length and rounded to
/// the nearest layer.
pub fn product_geodesic(x: &ProductMesh, a: usize, b: usize) -> Vec<usize> {
    let (a1, a2) = x.split(a);
    let (b1, b2) = x.split(b);
    let sp = dijkstra(&x.base.metric_graph, &[a1]);
    let base = sp.path_to(b1).expect("surface mesh is connected");
    let total = sp.dist[b1];
    let mut legs = Legs::start(x, a);
    for &u in &base[1..] {
        let s = if total > 0.0 { sp.dist[u] / total } else { 1.0 };
        let target = (a2 as f64 + s * (b2 as f64 - a2 as f64)).round() as usize;
        legs = legs.vertical(target);
        let (cur, k) = legs.at();
        if cur != u {
            legs.path.push(x.vertex(u, k));
        }
    }
    legs.vertical(b2).path
}

/// Condition (a): joins `y, z ∈ B(x, r)` through `x` by product geodesics.
/// The witness's `reach` is compared against `λ r`.
pub fn llc_condition_a(x: &ProductMesh, xc: usize, r: f64, y: usize, z: usize) -> Result<LlcWitness, LlcFailure> {
    let d = x.distances_from(xc);
    if d[y] >= r || d[z] >= r {
        return Err(LlcFailure::Precondition(format!("y={y} or z={z} lies outside B(x, {r})")));
    }
    let mut path = product_geodesic(x, y, xc);
    path.extend(product_geodesic(x, xc, z).into_iter().skip(1));
    Ok(witness(&d, (xc, r, y, z), WitnessRoute::ThroughCenter, path))
}

/// Seeded triples `(x, r, y, z)` with `y, z` outside `B(x, r)` and radii
/// log-uniform in `[r_min, r_max]`. Draws with an empty complement are
/// redrawn.
pub fn random_triples(x: &ProductMesh, n: usize, r_min: f64, r_max: f64, seed: u64) -> Vec<(usize, f64, usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let xc = rng.random_range(0..x.vertex_count());
        let r = (r_min.ln() + rng.random::<f64>() * (r_max.ln() - r_min.ln())).exp();
        let d = x.distances_from(xc);
        let outside: Vec<usize> = (0..d.len()).filter(|&v| d[v] >= r).collect();
        if outside.is_empty() {
            continue;
        }
        let y = outside[rng.random_range(0..outside.len())];
        let z = outside[rng.random_range(0..outside.len())];
        out.push((xc, r, y, z));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_product, glue_surface, MeshParams};
    use std::sync::Arc;

    fn product() -> ProductMesh {
        let y = glue_surface(&MeshParams::new(2, 1.0 / 16.0).unwrap()).unwrap();
        build_product(Arc::new(y), 0.125).unwrap()
    }

    fn is_path(x: &ProductMesh, path: &[usize]) -> bool {
        path.windows(2).all(|w| {
            let ((a, ka), (b, kb)) = (x.split(w[0]), x.split(w[1]));
            (a == b && ka.abs_diff(kb) == 1) || (ka == kb && x.base.metric_graph.find_edge(a, b).is_some())
        })
    }

    #[test]
    fn vertical_sides_detour_through_far_base_point() {
        let x = product();
        let c = x.vertex(x.base.cusp, 15);
        let (y, z) = (x.vertex(x.base.cusp, 5), x.vertex(x.base.cusp, 25));
        let w = llc_check(&x, c, 1.0, y, z).unwrap();
        assert_eq!(w.route, WitnessRoute::FarBasePoint);
        assert_eq!((w.path[0], *w.path.last().unwrap()), (y, z));
        assert!(is_path(&x, &w.path));
        assert!(w.clearance >= 1.0 / 12.0);
    }

    #[test]
    fn random_triples_all_have_witnesses() {
        let x = product();
        for (c, r, y, z) in random_triples(&x, 20, 0.25, 2.0, 11) {
            let w = llc_check(&x, c, r, y, z).unwrap();
            assert!(w.clearance >= r / 12.0, "{w:?}");
            assert!(is_path(&x, &w.path) || w.route == WitnessRoute::Fallback);
            assert_eq!((w.path[0], *w.path.last().unwrap()), (y, z));
        }
    }

    #[test]
    fn precondition_checked() {
        let x = product();
        let c = x.vertex(3, 10);
        assert!(matches!(llc_check(&x, c, 0.5, c, c), Err(LlcFailure::Precondition(_))));
    }

    #[test]
    fn condition_a_stays_in_a_slightly_larger_ball() {
        let x = product();
        let c = x.vertex(40, 16);
        let d = x.distances_from(c);
        let r = 0.5;
        let inside: Vec<usize> = (0..d.len()).filter(|&v| d[v] < r).step_by(37).collect();
        let h = x.base.params.h.max(x.hz);
        for pair in inside.windows(2) {
            let w = llc_condition_a(&x, c, r, pair[0], pair[1]).unwrap();
            assert!(is_path(&x, &w.path));
            assert!(w.reach <= r + 2.0 * h, "{} > {}", w.reach, r + 2.0 * h);
        }
    }

    #[test]
    fn product_geodesic_is_a_path() {
        let x = product();
        let (a, b) = (x.vertex(0, 0), x.vertex(x.base_count() - 1, x.layers.len() - 1));
        let p = product_geodesic(&x, a, b);
        assert!(is_path(&x, &p));
        assert_eq!((p[0], *p.last().unwrap()), (a, b));
    }
}

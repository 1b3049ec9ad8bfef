use std::collections::HashMap;

use serde::Serialize;

use super::chart::{build_base_chart, build_pillowcase, dist2, Chart, ChartMesh, MeshParams, Sheet, VertexMarker};
use super::profile::{enumerate_slits, pillowcase_tail_area, DyadicSlit};
use super::GeometryError;
use crate::graph::{EdgeRecord, Graph};

/// Half-width, in mesh cells, of the window used for in-chart straight
/// segments in the metric graph.
pub const STENCIL_RADIUS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceVertex {
    /// Chart the vertex was created in; glued slit vertices belong to the base.
    pub chart: Chart,
    /// Coordinates in that chart.
    pub coords: [f64; 2],
    pub marker: VertexMarker,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceCell {
    pub chart: Chart,
    pub verts: Vec<u32>,
    /// Corner coordinates in the cell's own chart.
    pub corners: Vec<[f64; 2]>,
    pub area: f64,
}

/// Identification of one slit `I` with its pillowcase slit `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlitIdentification {
    pub slit: DyadicSlit,
    /// Shared endpoint at `y = 0`, glued to the pillowcase corner `(0, 0)`.
    pub bottom: u32,
    /// Far endpoint at arc length `len`.
    pub top: u32,
    /// Interior points on the left side of `I`, glued to the front side of `J`.
    pub left: Vec<u32>,
    /// Interior points on the right side of `I`, glued to the back side of `J`.
    pub right: Vec<u32>,
    /// Arc-length positions of all points, endpoints included.
    pub positions: Vec<f64>,
}

impl SlitIdentification {
    /// Point of `J` (as `(front, back)` vertex ids) at arc length `s`,
    /// or `None` if `s` is not a mesh position.
    pub fn partner_at(&self, s: f64) -> Option<(u32, u32)> {
        let k = self.positions.iter().position(|&p| p == s)?;
        let n = self.positions.len() - 1;
        Some(match k {
            0 => (self.bottom, self.bottom),
            k if k == n => (self.top, self.top),
            k => (self.left[k - 1], self.right[k - 1]),
        })
    }
}

/// Truncated glued surface `Y` at depth `M` and scale `h`.
#[derive(Clone, Debug)]
pub struct GluedSurfaceMesh {
    pub params: MeshParams,
    pub vertices: Vec<SurfaceVertex>,
    pub cells: Vec<SurfaceCell>,
    /// Cell edges with Euclidean lengths; curves are paths in this graph.
    pub cell_graph: Graph,
    /// Per cell edge: barycentric dual length normal to the edge (sum over
    /// incident cells of the normal offset of the centroid from the edge
    /// midpoint).
    pub edge_dual: Vec<f64>,
    /// Per cell edge: number of incident cells.
    pub edge_cells: Vec<u32>,
    /// Cell edges plus straight in-chart segments; used for distances.
    pub metric_graph: Graph,
    /// Lumped vertex area (each cell split evenly among its corners).
    pub vertex_area: Vec<f64>,
    pub slits: Vec<SlitIdentification>,
    pub cusp: usize,
    /// Area of one copy of the base chart.
    pub base_chart_area: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
    Both,
}

struct ChartPoint {
    id: u32,
    p: [f64; 2],
    side: Side,
}

struct Builder {
    vertices: Vec<SurfaceVertex>,
    cells: Vec<SurfaceCell>,
}

impl Builder {
    fn vertex(&mut self, chart: Chart, coords: [f64; 2], marker: VertexMarker) -> u32 {
        self.vertices.push(SurfaceVertex { chart, coords, marker });
        (self.vertices.len() - 1) as u32
    }
}

/// Doubles the base chart, opens every slit into two sides, and glues the
/// pillowcases by arc length from the `y = 0` endpoint.
pub fn glue_surface(params: &MeshParams) -> Result<GluedSurfaceMesh, GeometryError> {
    let base = build_base_chart(params)?;
    let mut b = Builder { vertices: Vec::new(), cells: Vec::new() };

    let mut top_id = vec![0u32; base.coords.len()];
    for (k, id) in top_id.iter_mut().enumerate() {
        *id = b.vertex(Chart::BaseTop, base.coords[k], base.markers[k]);
    }
    // right copies of slit-interior vertices
    let mut right_id: HashMap<u32, u32> = HashMap::new();
    for arc in &base.slit_arcs {
        for &k in &arc.vertices[1..arc.vertices.len() - 1] {
            let id = b.vertex(Chart::BaseTop, base.coords[k as usize], base.markers[k as usize]);
            right_id.insert(k, id);
        }
    }
    let bottom_id: Vec<u32> = (0..base.coords.len())
        .map(|k| {
            if base.markers[k].fold {
                top_id[k]
            } else {
                b.vertex(Chart::BaseBottom, base.coords[k], base.markers[k])
            }
        })
        .collect();

    for cell in &base.cells {
        let centroid_t = cell.verts.iter().map(|&v| base.coords[v as usize][0]).sum::<f64>() / cell.verts.len() as f64;
        let corners: Vec<[f64; 2]> = cell.verts.iter().map(|&v| base.coords[v as usize]).collect();
        let top: Vec<u32> = cell
            .verts
            .iter()
            .map(|&v| match right_id.get(&v) {
                Some(&r) if centroid_t > base.coords[v as usize][0] => r,
                _ => top_id[v as usize],
            })
            .collect();
        b.cells.push(SurfaceCell { chart: Chart::BaseTop, verts: top, corners: corners.clone(), area: cell.area });
        let bottom: Vec<u32> = cell.verts.iter().map(|&v| bottom_id[v as usize]).collect();
        b.cells.push(SurfaceCell { chart: Chart::BaseBottom, verts: bottom, corners, area: cell.area });
    }

    let mut slits = Vec::new();
    let mut pillow_points: Vec<(Chart, Vec<ChartPoint>)> = Vec::new();
    for slit in enumerate_slits(params.depth) {
        let pc = build_pillowcase(slit, params.h)?;
        let base_arc = base
            .slit_arcs
            .iter()
            .find(|a| a.slit == slit)
            .ok_or_else(|| GeometryError::Internal(format!("slit {slit:?} missing from base chart")))?;
        let pc_arc = &pc.slit_arcs[0];
        let n = base_arc.vertices.len() - 1;
        if pc_arc.vertices.len() != n + 1 {
            return Err(GeometryError::Internal(format!("slit {slit:?}: arc point count mismatch")));
        }
        let positions: Vec<f64> = base_arc.vertices.iter().map(|&v| base.coords[v as usize][1]).collect();
        for (k, &q) in pc_arc.vertices.iter().enumerate() {
            if pc.coords[q as usize][0] != positions[k] {
                return Err(GeometryError::Internal(format!(
                    "slit {slit:?}: length mismatch between I and J at point {k}"
                )));
            }
        }
        let bottom = top_id[base_arc.vertices[0] as usize];
        let top = top_id[base_arc.vertices[n] as usize];
        let left: Vec<u32> = base_arc.vertices[1..n].iter().map(|&v| top_id[v as usize]).collect();
        let right: Vec<u32> = base_arc.vertices[1..n].iter().map(|&v| right_id[&v]).collect();

        let mut arc_slot: HashMap<u32, usize> = HashMap::new();
        for (k, &q) in pc_arc.vertices.iter().enumerate() {
            arc_slot.insert(q, k);
        }
        let mut own = vec![u32::MAX; pc.coords.len()];
        for q in 0..pc.coords.len() {
            if !arc_slot.contains_key(&(q as u32)) {
                own[q] = b.vertex(pc.provenance[q], pc.coords[q], pc.markers[q]);
            }
        }
        let map = |q: u32, sheet: Sheet| -> u32 {
            match arc_slot.get(&q) {
                Some(&0) => bottom,
                Some(&k) if k == n => top,
                Some(&k) => match sheet {
                    Sheet::Front => left[k - 1],
                    Sheet::Back => right[k - 1],
                },
                None => own[q as usize],
            }
        };
        let mut sheets: [Vec<ChartPoint>; 2] = [Vec::new(), Vec::new()];
        for cell in &pc.cells {
            let Chart::Pillowcase { sheet, .. } = cell.chart else { unreachable!() };
            let verts: Vec<u32> = cell.verts.iter().map(|&q| map(q, sheet)).collect();
            let corners: Vec<[f64; 2]> = cell.verts.iter().map(|&q| pc.coords[q as usize]).collect();
            let slot = if sheet == Sheet::Front { 0 } else { 1 };
            for (&id, &p) in verts.iter().zip(&corners) {
                sheets[slot].push(ChartPoint { id, p, side: Side::Both });
            }
            b.cells.push(SurfaceCell { chart: cell.chart, verts, corners, area: cell.area });
        }
        for (slot, mut pts) in sheets.into_iter().enumerate() {
            pts.sort_by_key(|c| c.id);
            pts.dedup_by_key(|c| c.id);
            let sheet = if slot == 0 { Sheet::Front } else { Sheet::Back };
            let chart = Chart::Pillowcase { level: slit.level, numerator: slit.numerator, sheet };
            pillow_points.push((chart, pts));
        }
        slits.push(SlitIdentification { slit, bottom, top, left, right, positions });
    }

    // cell edges
    let nv = b.vertices.len();
    let mut edge_map: HashMap<(u32, u32), usize> = HashMap::new();
    let mut edges: Vec<EdgeRecord> = Vec::new();
    let mut edge_dual: Vec<f64> = Vec::new();
    let mut edge_cells: Vec<u32> = Vec::new();
    let mut vertex_area = vec![0.0; nv];
    for cell in &b.cells {
        let k = cell.verts.len();
        let centroid = centroid(&cell.corners);
        for &v in &cell.verts {
            vertex_area[v as usize] += cell.area / k as f64;
        }
        for i in 0..k {
            let j = (i + 1) % k;
            let (va, vb) = (cell.verts[i], cell.verts[j]);
            let len = dist2(cell.corners[i], cell.corners[j]);
            let mid =
                [0.5 * (cell.corners[i][0] + cell.corners[j][0]), 0.5 * (cell.corners[i][1] + cell.corners[j][1])];
            let key = (va.min(vb), va.max(vb));
            let id = *edge_map.entry(key).or_insert_with(|| {
                edges.push(EdgeRecord { a: key.0, b: key.1, len });
                edge_dual.push(0.0);
                edge_cells.push(0);
                edges.len() - 1
            });
            if (edges[id].len - len).abs() > 1e-12 * len.max(1e-300) {
                return Err(GeometryError::Internal(format!(
                    "edge {key:?} has inconsistent lengths {} and {len}",
                    edges[id].len
                )));
            }
            // only the offset normal to the edge carries flux across it
            let (dx, dy) = (cell.corners[j][0] - cell.corners[i][0], cell.corners[j][1] - cell.corners[i][1]);
            let (cx, cy) = (centroid[0] - mid[0], centroid[1] - mid[1]);
            edge_dual[id] += (dx * cy - dy * cx).abs() / len;
            edge_cells[id] += 1;
        }
    }
    // canonical edge order so ids are independent of cell traversal
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&i| (edges[i].a, edges[i].b));
    let edges: Vec<EdgeRecord> = order.iter().map(|&i| edges[i]).collect();
    let edge_dual: Vec<f64> = order.iter().map(|&i| edge_dual[i]).collect();
    let edge_cells: Vec<u32> = order.iter().map(|&i| edge_cells[i]).collect();
    if let Some(i) = edge_cells.iter().position(|&c| c > 2) {
        return Err(GeometryError::Internal(format!("edge {:?} is not manifold", edges[i])));
    }

    let mut metric_edges: Vec<(u32, u32, f64)> = edges.iter().map(|e| (e.a, e.b, e.len)).collect();
    let mut top_points = Vec::new();
    let mut bottom_points = Vec::new();
    for k in 0..base.coords.len() {
        let p = base.coords[k];
        match right_id.get(&(k as u32)) {
            Some(&r) => {
                top_points.push(ChartPoint { id: top_id[k], p, side: Side::Left });
                top_points.push(ChartPoint { id: r, p, side: Side::Right });
            }
            None => top_points.push(ChartPoint { id: top_id[k], p, side: Side::Both }),
        }
        bottom_points.push(ChartPoint { id: bottom_id[k], p, side: Side::Both });
    }
    let window = STENCIL_RADIUS * params.h;
    stencil_pairs(&top_points, window, &mut metric_edges, |a, b| base_segment_ok(&base, a, b, true));
    stencil_pairs(&bottom_points, window, &mut metric_edges, |a, b| base_segment_ok(&base, a, b, false));
    for (_, pts) in &pillow_points {
        stencil_pairs(pts, window, &mut metric_edges, |_, _| true);
    }

    let cell_graph = Graph::from_unique_edges(nv, edges);
    let metric_graph = Graph::from_edges(nv, metric_edges);
    let mesh = GluedSurfaceMesh {
        params: *params,
        vertices: b.vertices,
        cells: b.cells,
        cell_graph,
        edge_dual,
        edge_cells,
        metric_graph,
        vertex_area,
        slits,
        cusp: top_id[0] as usize,
        base_chart_area: base.area(),
    };
    Ok(mesh)
}

fn centroid(pts: &[[f64; 2]]) -> [f64; 2] {
    let k = pts.len() as f64;
    let (x, y) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [x / k, y / k]
}

fn stencil_pairs(
    pts: &[ChartPoint],
    window: f64,
    out: &mut Vec<(u32, u32, f64)>,
    ok: impl Fn(&ChartPoint, &ChartPoint) -> bool,
) {
    let key = |p: [f64; 2]| ((p[0] / window).floor() as i64, (p[1] / window).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, c) in pts.iter().enumerate() {
        buckets.entry(key(c.p)).or_default().push(i);
    }
    let reach = window * (1.0 + 1e-9);
    for a in pts {
        let (kx, ky) = key(a.p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(list) = buckets.get(&(kx + dx, ky + dy)) else { continue };
                for &j in list {
                    let c = &pts[j];
                    if c.id <= a.id {
                        continue;
                    }
                    if (c.p[0] - a.p[0]).abs() > reach || (c.p[1] - a.p[1]).abs() > reach {
                        continue;
                    }
                    if ok(a, c) {
                        out.push((a.id, c.id, dist2(a.p, c.p)));
                    }
                }
            }
        }
    }
}

/// Whether the straight segment between two base-chart points stays inside
/// the meshed region and, on the slit copy, avoids slit interiors.
fn base_segment_ok(base: &ChartMesh, a: &ChartPoint, c: &ChartPoint, slitted: bool) -> bool {
    let (p, q, sp, sq) = if a.p[0] <= c.p[0] { (a.p, c.p, a.side, c.side) } else { (c.p, a.p, c.side, a.side) };
    if slitted {
        // p is the left endpoint: a Left copy sits on the left face of its slit
        if p[0] < q[0] && (sp == Side::Left || sq == Side::Right) {
            return false;
        }
        if p[0] == q[0] && ((sp == Side::Left && sq == Side::Right) || (sp == Side::Right && sq == Side::Left)) {
            return false;
        }
    }
    if p[0] == q[0] {
        return true;
    }
    let lines = &base.lines;
    let lo = lines.partition_point(|l| l.t <= p[0]);
    let hi = lines.partition_point(|l| l.t < q[0]);
    for line in &lines[lo..hi] {
        let s = (line.t - p[0]) / (q[0] - p[0]);
        let y = p[1] + s * (q[1] - p[1]);
        if y > line.top * (1.0 + 1e-12) {
            return false;
        }
        if slitted {
            if let Some(slit) = line.slit {
                if y > 0.0 && y < slit.length() {
                    return false;
                }
            }
        }
    }
    true
}

impl GluedSurfaceMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.cell_graph.edge_count()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.cell_count() as i64
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn pillowcase_area(&self) -> f64 {
        self.cells.iter().filter(|c| !c.chart.is_base()).map(|c| c.area).sum()
    }

    /// Exact area the gluing should produce: two base copies plus every
    /// attached pillowcase.
    pub fn expected_area(&self) -> f64 {
        2.0 * self.base_chart_area + self.slits.iter().map(|s| s.slit.pillowcase_area()).sum::<f64>()
    }

    /// Area of pillowcases beyond the truncation depth.
    pub fn truncated_tail_area(&self) -> f64 {
        pillowcase_tail_area(self.params.depth + 1)
    }

    /// Number of cycles formed by edges with a single incident cell, or an
    /// error if those edges do not form disjoint simple cycles.
    pub fn boundary_cycle_count(&self) -> Result<usize, GeometryError> {
        let n = self.vertex_count();
        let mut deg = vec![0u32; n];
        let boundary: Vec<EdgeRecord> =
            self.cell_graph.edges().iter().zip(&self.edge_cells).filter(|(_, &c)| c == 1).map(|(e, _)| *e).collect();
        for e in &boundary {
            deg[e.a as usize] += 1;
            deg[e.b as usize] += 1;
        }
        if let Some(v) = deg.iter().position(|&d| d != 0 && d != 2) {
            return Err(GeometryError::Internal(format!("boundary vertex {v} has degree {}", deg[v])));
        }
        let g = Graph::from_unique_edges(n, boundary);
        Ok(g.component_count(|v| deg[v] == 2))
    }

    /// Vertices on the truncation edge `t = 1 - h` of either base copy.
    pub fn is_truncation_boundary(&self, v: usize) -> bool {
        self.vertices[v].marker.outer
    }

    pub fn vertices_in_chart(&self, pred: impl Fn(&Chart) -> bool) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| pred(&self.vertices[v].chart)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::dijkstra;

    fn mesh(depth: u32, h: f64) -> GluedSurfaceMesh {
        glue_surface(&MeshParams::new(depth, h).unwrap()).unwrap()
    }

    #[test]
    fn depth_zero_is_doubled_cusp_region() {
        let y = mesh(0, 1.0 / 32.0);
        assert_eq!(y.euler_characteristic(), 1);
        assert_eq!(y.boundary_cycle_count().unwrap(), 1);
        let h = 1.0 / 32.0;
        assert!((y.total_area() - 2.0 / 12.0).abs() < h);
        assert!(y.slits.is_empty());
    }

    #[test]
    fn depth_two_is_a_disk() {
        let y = mesh(2, 1.0 / 32.0);
        assert_eq!(y.euler_characteristic(), 1);
        assert_eq!(y.boundary_cycle_count().unwrap(), 1);
    }

    #[test]
    fn gluing_preserves_area_exactly() {
        let y = mesh(3, 1.0 / 64.0);
        assert!((y.total_area() - y.expected_area()).abs() < 1e-13);
        let pillow: f64 = y.slits.iter().map(|s| s.slit.pillowcase_area()).sum();
        assert!((y.pillowcase_area() - pillow).abs() < 1e-13);
    }

    #[test]
    fn slit_points_are_doubled_and_endpoints_single() {
        let y = mesh(2, 1.0 / 32.0);
        for s in &y.slits {
            let n = s.positions.len() - 1;
            assert_eq!(s.left.len(), n - 1);
            assert_eq!(s.right.len(), n - 1);
            for (l, r) in s.left.iter().zip(&s.right) {
                assert_ne!(l, r);
                assert_eq!(y.vertices[*l as usize].coords, y.vertices[*r as usize].coords);
            }
            assert_ne!(s.bottom, s.top);
            assert_eq!(y.vertices[s.bottom as usize].coords, [s.slit.abscissa(), 0.0]);
        }
    }

    #[test]
    fn slit_point_meets_same_arc_length_on_j() {
        let y = mesh(1, 1.0 / 64.0);
        let s = &y.slits[0];
        let k = s.positions.len() / 2;
        let pos = s.positions[k];
        let (front, back) = s.partner_at(pos).unwrap();
        // the glued vertex sits at the same arc length in both the base and pillowcase charts
        for v in [front, back] {
            let cells: Vec<&SurfaceCell> = y.cells.iter().filter(|c| c.verts.contains(&v)).collect();
            assert!(cells.iter().any(|c| c.chart.is_base()));
            let pc = cells.iter().find(|c| !c.chart.is_base()).expect("touches pillowcase");
            let corner = pc.corners[pc.verts.iter().position(|&w| w == v).unwrap()];
            assert_eq!(corner, [pos, 0.0]);
        }
    }

    #[test]
    fn manifold_edges_and_positive_measures() {
        let y = mesh(3, 1.0 / 32.0);
        assert!(y.edge_cells.iter().all(|&c| c == 1 || c == 2));
        assert!(y.vertex_area.iter().all(|&a| a > 0.0));
        assert!(y.cell_graph.edges().iter().all(|e| e.len > 0.0));
        assert_eq!(y.cell_graph.component_count(|_| true), 1);
    }

    #[test]
    fn cusp_to_slit_foot_runs_along_fold() {
        let y = mesh(1, 1.0 / 64.0);
        let sp = dijkstra(&y.metric_graph, &[y.cusp]);
        let foot = y.slits[0].bottom as usize;
        assert!((sp.dist[foot] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stencil_never_shortcuts_across_an_open_slit() {
        // the two sides of a full-height slit are only joined around its ends
        let y = mesh(2, 1.0 / 64.0);
        let s = y.slits.iter().find(|s| s.slit.is_full_height() && s.left.len() >= 3).unwrap();
        let l = s.left[s.left.len() / 2] as usize;
        let r = s.right[s.right.len() / 2] as usize;
        let sp = dijkstra(&y.metric_graph, &[l]);
        let pos = s.positions[s.left.len() / 2 + 1];
        let around = (pos).min(s.slit.length() - pos) * 2.0;
        assert!(sp.dist[r] >= around - 1e-12, "{} < {}", sp.dist[r], around);
    }

    #[test]
    fn metric_graph_refines_flat_distances() {
        let y = mesh(1, 1.0 / 64.0);
        // opposite corners of the front square of the level-1 pillowcase
        let chart = Chart::Pillowcase { level: 1, numerator: 1, sheet: Sheet::Front };
        let nearest = |p: [f64; 2]| {
            y.cells
                .iter()
                .filter(|c| c.chart == chart)
                .flat_map(|c| c.corners.iter().zip(&c.verts))
                .min_by(|x, z| dist2(*x.0, p).total_cmp(&dist2(*z.0, p)))
                .map(|(q, &v)| (*q, v as usize))
                .unwrap()
        };
        let (pa, a) = nearest([0.25, 0.125]);
        let (pb, b) = nearest([0.375, 0.25]);
        let d = dijkstra(&y.metric_graph, &[a]).dist[b];
        let exact = dist2(pa, pb);
        assert!((d - exact).abs() / exact < 0.02, "{d} vs {exact}");
    }
}

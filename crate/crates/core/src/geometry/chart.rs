use serde::{Deserialize, Serialize};

use super::profile::{enumerate_slits, CuspProfile, DyadicSlit};
use super::GeometryError;
use crate::graph::EdgeRecord;

/// Which copy of a doubled square a pillowcase cell lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sheet {
    Front,
    Back,
}

/// Chart a vertex or cell was created in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chart {
    BaseTop,
    BaseBottom,
    Pillowcase { level: u32, numerator: u64, sheet: Sheet },
}

impl Chart {
    pub fn is_base(&self) -> bool {
        matches!(self, Chart::BaseTop | Chart::BaseBottom)
    }

    pub fn slit(&self) -> Option<DyadicSlit> {
        match *self {
            Chart::Pillowcase { level, numerator, .. } => Some(DyadicSlit { level, numerator }),
            _ => None,
        }
    }

    /// Short label used in CSV and OFF output.
    pub fn label(&self) -> String {
        match self {
            Chart::BaseTop => "base-top".into(),
            Chart::BaseBottom => "base-bottom".into(),
            Chart::Pillowcase { level, numerator, sheet } => {
                let side = match sheet {
                    Sheet::Front => "front",
                    Sheet::Back => "back",
                };
                format!("pillowcase({level},{numerator},{side})")
            }
        }
    }
}

/// Resolution parameters shared by every chart of one surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    /// Truncation depth `M`: pillowcases of level `1..=M` are attached.
    pub depth: u32,
    /// Mesh scale; `1/h` must be an integer multiple of `2^{M+1}`.
    pub h: f64,
    /// Width of the innermost cusp column. Columns between it and `h` are
    /// graded geometrically; equal to `h` means no extra grading.
    pub cusp_inner: f64,
}

impl MeshParams {
    pub fn new(depth: u32, h: f64) -> Result<Self, GeometryError> {
        Self::with_cusp_inner(depth, h, h)
    }

    pub fn with_cusp_inner(depth: u32, h: f64, cusp_inner: f64) -> Result<Self, GeometryError> {
        let p = Self { depth, h, cusp_inner };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.h > 0.0 && self.h <= 0.25) {
            return Err(GeometryError::Config(format!("mesh scale h={} outside (0, 1/4]", self.h)));
        }
        if self.depth > 20 {
            return Err(GeometryError::Config(format!("depth {} too large", self.depth)));
        }
        let cells = self.cells_per_unit()?;
        let needed = 1u64 << (self.depth + 1);
        if cells % needed != 0 {
            return Err(GeometryError::Config(format!(
                "h = 1/{cells} does not resolve level-{} slits (need h <= 2^-{} on the dyadic grid)",
                self.depth,
                self.depth + 1
            )));
        }
        if !(self.cusp_inner > 0.0 && self.cusp_inner <= self.h) {
            return Err(GeometryError::Config(format!("cusp inner width {} must lie in (0, h]", self.cusp_inner)));
        }
        Ok(())
    }

    /// `1/h` as an integer.
    pub fn cells_per_unit(&self) -> Result<u64, GeometryError> {
        let n = (1.0 / self.h).round();
        if n < 1.0 || ((n * self.h) - 1.0).abs() > 1e-12 {
            return Err(GeometryError::Config(format!("1/h must be an integer (h={})", self.h)));
        }
        Ok(n as u64)
    }
}

/// Flags attached to chart vertices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexMarker {
    /// On `y = 0` or `y = f(t)` (base) where the two base copies are glued.
    pub fold: bool,
    /// On the truncation edge `t = 1 - h`.
    pub outer: bool,
    /// The cusp point `(0, 0)`.
    pub cusp: bool,
    /// On the shared boundary of the two pillowcase squares.
    pub seam: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartCell {
    pub chart: Chart,
    pub verts: Vec<u32>,
    pub area: f64,
}

/// Vertices along a slit, ordered from the endpoint used for arc-length
/// matching (`y = 0` on the base, the corner `(0,0)` on a pillowcase).
#[derive(Clone, Debug, PartialEq)]
pub struct SlitArc {
    pub slit: DyadicSlit,
    pub vertices: Vec<u32>,
}

/// One vertical grid line of the base chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartLine {
    pub t: f64,
    pub top: f64,
    /// Vertex ids bottom to top.
    pub vertices: Vec<u32>,
    pub slit: Option<DyadicSlit>,
}

/// A flat chart with its cell decomposition.
#[derive(Clone, Debug)]
pub struct ChartMesh {
    pub coords: Vec<[f64; 2]>,
    pub provenance: Vec<Chart>,
    pub markers: Vec<VertexMarker>,
    pub cells: Vec<ChartCell>,
    pub edges: Vec<EdgeRecord>,
    pub slit_arcs: Vec<SlitArc>,
    /// Base chart only.
    pub lines: Vec<ChartLine>,
}

impl ChartMesh {
    pub fn area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.coords.len() as i64 - self.edges.len() as i64 + self.cells.len() as i64
    }

    fn push_vertex(&mut self, p: [f64; 2], chart: Chart, marker: VertexMarker) -> u32 {
        self.coords.push(p);
        self.provenance.push(chart);
        self.markers.push(marker);
        (self.coords.len() - 1) as u32
    }

    fn push_cell(&mut self, chart: Chart, verts: Vec<u32>) {
        let pts: Vec<[f64; 2]> = verts.iter().map(|&v| self.coords[v as usize]).collect();
        let area = polygon_area(&pts);
        self.cells.push(ChartCell { chart, verts, area });
    }

    fn empty() -> Self {
        Self {
            coords: Vec::new(),
            provenance: Vec::new(),
            markers: Vec::new(),
            cells: Vec::new(),
            edges: Vec::new(),
            slit_arcs: Vec::new(),
            lines: Vec::new(),
        }
    }

    fn finish_edges(&mut self) -> Result<(), GeometryError> {
        let mut raw = Vec::new();
        for cell in &self.cells {
            if !(cell.area > 0.0) {
                return Err(GeometryError::Internal(format!("degenerate cell {:?}", cell.verts)));
            }
            let k = cell.verts.len();
            for i in 0..k {
                let (a, b) = (cell.verts[i], cell.verts[(i + 1) % k]);
                raw.push((a.min(b), a.max(b)));
            }
        }
        raw.sort_unstable();
        raw.dedup();
        self.edges = raw
            .into_iter()
            .map(|(a, b)| EdgeRecord { a, b, len: dist2(self.coords[a as usize], self.coords[b as usize]) })
            .collect();
        if let Some(e) = self.edges.iter().find(|e| !(e.len > 0.0)) {
            return Err(GeometryError::Internal(format!("zero-length edge {}-{}", e.a, e.b)));
        }
        Ok(())
    }
}

pub(crate) fn dist2(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

pub(crate) fn polygon_area(pts: &[[f64; 2]]) -> f64 {
    let k = pts.len();
    let twice: f64 = (0..k)
        .map(|i| {
            let (p, q) = (pts[i], pts[(i + 1) % k]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    0.5 * twice.abs()
}

/// `n + 1` evenly spaced points with exact endpoints.
pub(crate) fn subdivide(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 }).collect()
}

pub(crate) fn pieces(len: f64, h: f64, min: usize) -> usize {
    ((len / h - 1e-9).ceil().max(0.0) as usize).max(min)
}

/// Positions along a slit of length `len`, shared by the base and the
/// pillowcase side so the two arcs match by arc length.
pub(crate) fn slit_positions(len: f64, h: f64) -> Vec<f64> {
    subdivide(0.0, len, pieces(len, h, 2))
}

/// Abscissae of the base chart's vertical grid lines, starting at the cusp.
pub fn column_abscissae(params: &MeshParams) -> Result<Vec<f64>, GeometryError> {
    params.validate()?;
    let n = params.cells_per_unit()?;
    let mut ts = vec![0.0];
    let mut g = params.cusp_inner;
    while g < params.h * (1.0 - 1e-9) {
        ts.push(g);
        g *= 2.0;
    }
    ts.extend((1..n).map(|j| j as f64 * params.h));
    Ok(ts)
}

/// Cell decomposition of `{0 <= t <= 1-h, 0 <= y <= f(t)}` with every slit of
/// level `<= depth` a union of edges on its own grid line.
pub fn build_base_chart(params: &MeshParams) -> Result<ChartMesh, GeometryError> {
    let f = CuspProfile;
    let h = params.h;
    let ts = column_abscissae(params)?;
    let slits = enumerate_slits(params.depth);
    let slit_at = |t: f64| slits.iter().copied().find(|s| s.abscissa() == t);

    let mut mesh = ChartMesh::empty();
    let last = ts.len() - 1;
    for (j, &t) in ts.iter().enumerate() {
        let top = f.eval(t);
        if j == 0 {
            let v = mesh.push_vertex(
                [0.0, 0.0],
                Chart::BaseTop,
                VertexMarker { fold: true, cusp: true, ..Default::default() },
            );
            mesh.lines.push(ChartLine { t, top, vertices: vec![v], slit: None });
            continue;
        }
        let slit = slit_at(t);
        let ys = match slit {
            Some(s) if !s.is_full_height() => {
                let len = s.length();
                let mut ys = slit_positions(len, h);
                ys.extend(subdivide(len, top, pieces(top - len, h, 1)).into_iter().skip(1));
                ys
            }
            Some(s) => slit_positions(s.length(), h),
            None => subdivide(0.0, top, pieces(top, h, 2)),
        };
        let k = ys.len() - 1;
        let vertices: Vec<u32> = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let marker = VertexMarker { fold: i == 0 || i == k, outer: j == last, ..Default::default() };
                mesh.push_vertex([t, y], Chart::BaseTop, marker)
            })
            .collect();
        if let Some(s) = slit {
            let len = s.length();
            let arc: Vec<u32> = vertices.iter().zip(&ys).filter(|(_, &y)| y <= len).map(|(&v, _)| v).collect();
            mesh.slit_arcs.push(SlitArc { slit: s, vertices: arc });
        }
        mesh.lines.push(ChartLine { t, top, vertices, slit });
    }
    mesh.slit_arcs.sort_by_key(|a| a.slit);

    for j in 0..last {
        let (left, right) = (&mesh.lines[j], &mesh.lines[j + 1]);
        let tris = zipper(
            &left.vertices,
            &right.vertices,
            |v| normalized_height(&mesh, left.top, v),
            |v| normalized_height(&mesh, right.top, v),
        );
        for tri in tris {
            mesh.push_cell(Chart::BaseTop, tri.to_vec());
        }
    }
    mesh.finish_edges()?;
    Ok(mesh)
}

fn normalized_height(mesh: &ChartMesh, top: f64, v: u32) -> f64 {
    if top > 0.0 {
        mesh.coords[v as usize][1] / top
    } else {
        0.0
    }
}

/// Triangulates the strip between two vertical polylines by merging their
/// vertices in order of normalized height. Triangles are counter-clockwise.
fn zipper(left: &[u32], right: &[u32], hl: impl Fn(u32) -> f64, hr: impl Fn(u32) -> f64) -> Vec<[u32; 3]> {
    let (mut i, mut j) = (0usize, 0usize);
    let mut out = Vec::with_capacity(left.len() + right.len());
    while i + 1 < left.len() || j + 1 < right.len() {
        let advance_right = if i + 1 == left.len() {
            true
        } else if j + 1 == right.len() {
            false
        } else {
            hr(right[j + 1]) <= hl(left[i + 1])
        };
        if advance_right {
            out.push([left[i], right[j], right[j + 1]]);
            j += 1;
        } else {
            out.push([left[i], right[j], left[i + 1]]);
            i += 1;
        }
    }
    out
}

/// The doubled square `[0, 2^{-m}]²` with the slit `J` marked on its bottom
/// edge from the corner `(0, 0)`.
pub fn build_pillowcase(slit: DyadicSlit, h: f64) -> Result<ChartMesh, GeometryError> {
    let side = slit.side();
    if h > side / 2.0 * (1.0 + 1e-12) {
        return Err(GeometryError::Config(format!("h={h} too coarse for a level-{} pillowcase", slit.level)));
    }
    let len = slit.length();
    let mut xs = slit_positions(len, h);
    let n_slit = xs.len() - 1;
    if len < side {
        xs.extend(subdivide(len, side, pieces(side - len, h, 1)).into_iter().skip(1));
    }
    let ys = subdivide(0.0, side, pieces(side, h, 2));
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);

    let chart = |sheet| Chart::Pillowcase { level: slit.level, numerator: slit.numerator, sheet };
    let mut mesh = ChartMesh::empty();
    let mut seam = vec![vec![u32::MAX; ny + 1]; nx + 1];
    for (a, &x) in xs.iter().enumerate() {
        for (b, &y) in ys.iter().enumerate() {
            if a == 0 || a == nx || b == 0 || b == ny {
                seam[a][b] =
                    mesh.push_vertex([x, y], chart(Sheet::Front), VertexMarker { seam: true, ..Default::default() });
            }
        }
    }
    for sheet in [Sheet::Front, Sheet::Back] {
        let mut ids = seam.clone();
        for a in 1..nx {
            for b in 1..ny {
                ids[a][b] = mesh.push_vertex([xs[a], ys[b]], chart(sheet), VertexMarker::default());
            }
        }
        for a in 0..nx {
            for b in 0..ny {
                let quad = vec![ids[a][b], ids[a + 1][b], ids[a + 1][b + 1], ids[a][b + 1]];
                mesh.push_cell(chart(sheet), quad);
            }
        }
    }
    mesh.slit_arcs.push(SlitArc { slit, vertices: (0..=n_slit).map(|a| seam[a][0]).collect() });
    mesh.finish_edges()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(MeshParams::new(1, 0.125).is_ok());
        assert!(MeshParams::new(2, 0.125).is_ok());
        assert!(MeshParams::new(3, 0.125).is_err());
        assert!(MeshParams::new(1, 0.1).is_err());
        assert!(MeshParams::with_cusp_inner(1, 0.125, 0.2).is_err());
        assert!(MeshParams::with_cusp_inner(1, 0.125, 0.01).is_ok());
    }

    #[test]
    fn base_chart_contains_marked_slit() {
        let params = MeshParams::new(1, 0.125).unwrap();
        let mesh = build_base_chart(&params).unwrap();
        assert_eq!(mesh.slit_arcs.len(), 1);
        let arc = &mesh.slit_arcs[0];
        let pts: Vec<[f64; 2]> = arc.vertices.iter().map(|&v| mesh.coords[v as usize]).collect();
        assert!(pts.iter().all(|p| p[0] == 0.5));
        assert_eq!(pts[0][1], 0.0);
        assert!((pts.last().unwrap()[1] - 1.0 / 24.0).abs() < 1e-16);
        for w in arc.vertices.windows(2) {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            assert!(mesh.edges.iter().any(|e| e.a == a && e.b == b), "slit piece is an edge");
        }
    }

    #[test]
    fn base_chart_area_approaches_integral() {
        for k in [5u32, 6, 7] {
            let h = (-(k as f64)).exp2();
            let mesh = build_base_chart(&MeshParams::new(3, h).unwrap()).unwrap();
            let exact = (1.0 - h).powi(4) / 12.0;
            let area = mesh.area();
            // chords of a convex profile lie above it
            assert!(area >= exact);
            assert!(area - exact < h * h, "h={h}: {area} vs {exact}");
            assert!((area - 1.0 / 12.0).abs() < h / 3.0 + h * h);
        }
    }

    #[test]
    fn cusp_present_with_positive_degree() {
        let mesh = build_base_chart(&MeshParams::new(2, 1.0 / 32.0).unwrap()).unwrap();
        assert!(mesh.markers[0].cusp);
        assert_eq!(mesh.coords[0], [0.0, 0.0]);
        assert!(mesh.edges.iter().filter(|e| e.a == 0).count() >= 1);
        // a triangulated polygon is a disk
        assert_eq!(mesh.euler_characteristic(), 1);
    }

    #[test]
    fn no_cell_crosses_a_slit() {
        let mesh = build_base_chart(&MeshParams::new(3, 1.0 / 32.0).unwrap()).unwrap();
        for cell in &mesh.cells {
            let (lo, hi) = cell.verts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
                let t = mesh.coords[v as usize][0];
                (lo.min(t), hi.max(t))
            });
            for arc in &mesh.slit_arcs {
                let t = arc.slit.abscissa();
                assert!(!(lo < t && t < hi));
            }
        }
    }

    #[test]
    fn cusp_grading_adds_inner_columns() {
        let p = MeshParams::with_cusp_inner(2, 1.0 / 32.0, 1.0 / 256.0).unwrap();
        let ts = column_abscissae(&p).unwrap();
        assert_eq!(&ts[..5], &[0.0, 1.0 / 256.0, 1.0 / 128.0, 1.0 / 64.0, 1.0 / 32.0]);
        let mesh = build_base_chart(&p).unwrap();
        assert_eq!(mesh.euler_characteristic(), 1);
    }

    #[test]
    fn pillowcase_level_one() {
        let slit = DyadicSlit::new(1, 1).unwrap();
        let mesh = build_pillowcase(slit, 1.0 / 8.0).unwrap();
        assert!((mesh.area() - 0.5).abs() < 1e-15);
        assert_eq!(mesh.euler_characteristic(), 2);
    }

    #[test]
    fn pillowcase_marks_slit_on_bottom_edge() {
        let slit = DyadicSlit::new(2, 3).unwrap();
        let mesh = build_pillowcase(slit, 1.0 / 32.0).unwrap();
        let arc = &mesh.slit_arcs[0];
        assert_eq!(mesh.coords[arc.vertices[0] as usize], [0.0, 0.0]);
        let end = mesh.coords[*arc.vertices.last().unwrap() as usize];
        assert_eq!(end, [0.140625, 0.0]);
        assert!((mesh.area() - 2.0 / 16.0).abs() < 1e-15);
        assert_eq!(mesh.euler_characteristic(), 2);
    }

    #[test]
    fn pillowcase_rejects_coarse_mesh() {
        let slit = DyadicSlit::new(3, 1).unwrap();
        assert!(build_pillowcase(slit, 0.25).is_err());
    }
}

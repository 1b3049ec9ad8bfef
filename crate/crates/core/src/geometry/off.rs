//! OFF-style text export of the glued surface.
//!
//! Vertices are written in chart coordinates with `z = 0`; a trailing
//! comment names the chart each vertex came from.

use std::io::{self, Write};

use super::surface::GluedSurfaceMesh;

pub fn write_off<W: Write>(mesh: &GluedSurfaceMesh, mut out: W) -> io::Result<()> {
    writeln!(out, "OFF")?;
    writeln!(
        out,
        "# glued surface: depth_M={} mesh_h={} cusp_inner={}",
        mesh.params.depth, mesh.params.h, mesh.params.cusp_inner
    )?;
    writeln!(out, "{} {} {}", mesh.vertex_count(), mesh.cell_count(), mesh.edge_count())?;
    for v in &mesh.vertices {
        writeln!(out, "{:.17} {:.17} 0 # {}", v.coords[0], v.coords[1], v.chart.label())?;
    }
    for c in &mesh.cells {
        write!(out, "{}", c.verts.len())?;
        for v in &c.verts {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

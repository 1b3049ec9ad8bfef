//! Discretized construction of the cusp surface `Y`, the product space
//! `X = Y × (-2, 2)`, the continuum `E` and the quotient collapsing `E`.

mod chart;
mod product;
mod profile;
mod quotient;
mod surface;

pub mod off;

use thiserror::Error;

pub use chart::{
    build_base_chart, build_pillowcase, column_abscissae, Chart, ChartCell, ChartLine, ChartMesh, MeshParams, Sheet,
    SlitArc, VertexMarker,
};
pub use product::{build_product, extract_continuum_e, ContinuumE, ProductMesh};
pub use profile::{cusp_profile, enumerate_slits, pillowcase_tail_area, CuspProfile, DyadicSlit};
pub use quotient::{quotient_collapse, QuotientSpace};
pub use surface::{glue_surface, GluedSurfaceMesh, SlitIdentification, SurfaceCell, SurfaceVertex, STENCIL_RADIUS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("abscissa {t} outside [0, 1)")]
    Domain { t: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal construction error: {0}")]
    Internal(String),
}

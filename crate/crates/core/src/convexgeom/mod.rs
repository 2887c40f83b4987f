//! Convex hypersurfaces as support functions on a directional grid, plus
//! graph patches for local work near a flat side.

mod graph;
mod grid;
mod support;

pub use graph::{graph_curvatures, graph_second_fundamental_form, GraphJet, GraphPatch};
pub(crate) use graph::second_fundamental_form_generic;
pub use grid::{sphere_area, GridError, SphereGrid};
pub use support::{EnclosureReport, NodeRadii, SupportSurface};
pub(crate) use support::{radii_matrix, RadiiMatrix};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("support value at node {node} is not finite")]
    NonFinite { node: usize },
    #[error("convexity lost at node {node}: radius of curvature {radius:e}")]
    ConvexityLoss { node: usize, radius: f64 },
    #[error("origin is not interior: h = {h:e} at node {node}")]
    OriginNotInterior { node: usize, h: f64 },
    #[error("surfaces live on different grids")]
    GridMismatch,
    #[error("surfaces use different support origins")]
    OriginMismatch,
    #[error("dilation factor must be positive, got {0}")]
    BadFactor(f64),
    #[error("node ({a}, {b}) has no centred stencil")]
    BoundaryNode { a: usize, b: usize },
    #[error("malformed surface snapshot: {0}")]
    Parse(String),
}

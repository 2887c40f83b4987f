//! Numerical laboratory for `Q_k = S_k / S_{k-1}` curvature flows of convex
//! hypersurfaces, with tooling for bodies that carry a flat side.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod convexgeom;
pub mod dual;
pub mod flatside;
pub mod flowcore;
pub mod linearization;
pub mod numeric;
pub mod symfun;
pub mod viscosity;

//! Surfaces with a flat side: the pressure `g = √u` over the flat part, its
//! interface, the inverted chart `x₁ = f(z, x̄)` and the weighted Hölder
//! quantities of that chart.
//!
//! Evolution is restricted to rotationally symmetric data.

mod fchart;
mod holder;
mod pressure;

use thiserror::Error;

pub use fchart::{
    assemble_b_matrix, check_starstar, eigen_asymptotics_check, f_chart_approach, f_chart_sweep, geometric_z_grid, graph_to_f,
    interface_curvatures, model_jet, BMatrix, EigenReport, FChartSample, FJet, ModelJet, StarStarReport,
};
pub(crate) use fchart::b_matrix_generic;
pub use holder::{
    euclidean_seminorm, exp_coordinate_seminorms, hyperbolic_distance, parabolic_distance, sbar_seminorm,
    weighted_holder_norms, ExtensionCheck, HolderGrid, HolderNorms, SingularMetricPoint,
    WEIGHTED_COMBINATIONS,
};
pub use pressure::{
    check_star, evolve_pressure, pressure_stable_dt, run_pressure, verify_interface_law, FlatSideRun, InterfaceFit,
    InterfaceTrajectory, PressureConfig, PressureProfile, PressureStop, StarReport,
};

use crate::symfun::SymfunError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlatSideError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("interface is not resolved by the grid")]
    Unresolved,
    #[error("(★) alarm at t={t}: min_grad={:e}, min_hess_eig={:e}", report.min_grad, report.min_hess_eig)]
    StarAlarm { report: StarReport, t: f64 },
    #[error("convexity lost at node {node}, t={t}")]
    ConvexityLoss { node: usize, t: f64 },
    #[error("S_(k-1) degenerate at node {node}, t={t}")]
    Degenerate { node: usize, t: f64 },
    #[error("dt={dt:e} exceeds the stability limit; try {suggested:e}")]
    Cfl { dt: f64, suggested: f64 },
    #[error("interface closed at t={t}")]
    InterfaceClosed { t: f64 },
    #[error("the interface law needs 2 <= k <= n (n={n}, k={k})")]
    OutOfScope { n: usize, k: usize },
    #[error("profile is not monotone near height {z:e}")]
    Inversion { z: f64 },
    #[error("chart is degenerate: f_z = {f_z:e}")]
    DegenerateChart { f_z: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid does not resolve z down to 1e-4 (smallest z is {0:e})")]
    Resolution(f64),
    #[error(transparent)]
    Symfun(#[from] SymfunError),
}

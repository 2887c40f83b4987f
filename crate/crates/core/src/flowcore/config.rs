use serde::{Deserialize, Serialize};

use super::FlowError;
use crate::convexgeom::SphereGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Explicit,
    /// Linearly implicit Euler in the second-order part, with lagged
    /// coefficients; directional splitting on lat-long grids.
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorTolerances {
    /// Allowed per-step decrease of `F_min`, relative to `1 + |F_min|`.
    pub f_min_rel: f64,
    /// Allowed per-step increase of `max H/F`, relative to `1 + |max H/F|`.
    pub h_over_f_rel: f64,
}

impl Default for MonitorTolerances {
    fn default() -> Self {
        Self {
            f_min_rel: 1e-6,
            h_over_f_rel: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub n: usize,
    pub k: usize,
    /// Time step; an upper bound when `adaptive` is set.
    pub dt: f64,
    pub t_end: f64,
    pub grid: SphereGrid,
    #[serde(default)]
    pub scheme: Scheme,
    /// Shrink `dt` to `cfl` times the stability limit each step.
    #[serde(default = "default_true")]
    pub adaptive: bool,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Move the support origin to the Steiner point every this many steps
    /// (0 disables).
    #[serde(default = "default_recenter")]
    pub recenter_every: usize,
    /// Stop as extinct once the inradius about the Steiner point falls below
    /// this fraction of its initial value. Defaults to two polar grid steps.
    #[serde(default)]
    pub extinction_fraction: Option<f64>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub monitor_tolerances: MonitorTolerances,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_true() -> bool {
    true
}
fn default_cfl() -> f64 {
    0.45
}
fn default_recenter() -> usize {
    50
}
fn default_max_steps() -> usize {
    5_000_000
}

impl FlowConfig {
    pub fn new(n: usize, k: usize, dt: f64, t_end: f64, grid: SphereGrid) -> Self {
        Self {
            n,
            k,
            dt,
            t_end,
            grid,
            scheme: Scheme::Explicit,
            adaptive: true,
            cfl: default_cfl(),
            recenter_every: default_recenter(),
            extinction_fraction: None,
            snapshot_times: Vec::new(),
            monitor_tolerances: MonitorTolerances::default(),
            max_steps: default_max_steps(),
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: String| Err(FlowError::Config(m));
        if self.k < 1 || self.k > self.n {
            return bad(format!("need 1 <= k <= n, got k={} n={}", self.k, self.n));
        }
        if self.grid.n() != self.n {
            return bad(format!("grid is for n={}, config says n={}", self.grid.n(), self.n));
        }
        self.grid.validate().map_err(|e| FlowError::Config(e.to_string()))?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be finite and non-negative, got {}", self.t_end));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if let Some(f) = self.extinction_fraction {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("extinction_fraction must lie in (0, 1), got {f}"));
            }
        }
        if self.snapshot_times.windows(2).any(|w| w[1] <= w[0])
            || self.snapshot_times.iter().any(|t| !(*t >= 0.0))
        {
            return bad("snapshot_times must be non-negative and strictly increasing".into());
        }
        Ok(())
    }

    pub fn extinction_fraction(&self) -> f64 {
        self.extinction_fraction
            .unwrap_or(2.0 * self.grid.d_theta())
            .min(0.5)
    }
}

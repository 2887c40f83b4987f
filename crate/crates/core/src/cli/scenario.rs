//! Scenario files: a TOML document with a `name`, optional `output_dir` and
//! `seed`, and a `[params]` table whose keys depend on the name.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::convexgeom::SphereGrid;
use crate::flatside::ModelJet;
use crate::flowcore::Scheme;

use super::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    params: toml::Table,
}

/// Validated scenario with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(flatten)]
    pub params: Params,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum Params {
    ShrinkSphere(ShrinkSphere),
    ShrinkEllipsoid(ShrinkEllipsoid),
    ViscosityConvergence(ViscosityConvergence),
    DilationUniqueness(DilationUniqueness),
    FlatSideLens(FlatSideLens),
    LinearizationAudit(LinearizationAudit),
    HolderNorms(HolderNormsParams),
}

impl Params {
    pub fn name(&self) -> &'static str {
        match self {
            Params::ShrinkSphere(_) => "shrink_sphere",
            Params::ShrinkEllipsoid(_) => "shrink_ellipsoid",
            Params::ViscosityConvergence(_) => "viscosity_convergence",
            Params::DilationUniqueness(_) => "dilation_uniqueness",
            Params::FlatSideLens(_) => "flat_side_lens",
            Params::LinearizationAudit(_) => "linearization_audit",
            Params::HolderNorms(_) => "holder_norms",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShrinkSphere {
    pub n: usize,
    pub k: usize,
    pub radius: f64,
    pub n_theta: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub extinction_fraction: f64,
    /// Defaults to twice the extinction time, so the run ends by extinction.
    pub t_end: Option<f64>,
}

impl Default for ShrinkSphere {
    fn default() -> Self {
        Self {
            n: 3,
            k: 2,
            radius: 1.0,
            n_theta: 64,
            dt: 1e-4,
            scheme: Scheme::Explicit,
            extinction_fraction: 0.05,
            t_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShrinkEllipsoid {
    pub k: usize,
    pub semi_axes: Vec<f64>,
    pub grid: SphereGrid,
    pub dt: f64,
    pub scheme: Scheme,
    /// Apply a random rotation drawn from `seed`.
    pub rotate: bool,
    pub extinction_fraction: Option<f64>,
    /// Defaults to 1.5 times the extinction time of the enclosing ball.
    pub t_end: Option<f64>,
}

impl Default for ShrinkEllipsoid {
    fn default() -> Self {
        Self {
            k: 2,
            semi_axes: vec![1.0, 1.0, 1.5],
            grid: SphereGrid::LatLon { n_theta: 24, n_phi: 48 },
            dt: 1e-3,
            scheme: Scheme::SemiImplicit,
            rotate: false,
            extinction_fraction: None,
            t_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViscosityConvergence {
    pub n: usize,
    pub k: usize,
    pub disc: f64,
    pub ball: f64,
    pub n_theta: usize,
    pub epsilons: Vec<f64>,
    pub probes: Vec<f64>,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Default for ViscosityConvergence {
    fn default() -> Self {
        Self {
            n: 2,
            k: 2,
            disc: 0.5,
            ball: 0.5,
            n_theta: 64,
            epsilons: vec![0.1, 0.05, 0.025, 0.0125],
            probes: vec![0.05, 0.1, 0.2, 0.3],
            dt: 1e-3,
            scheme: Scheme::Explicit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DilationUniqueness {
    pub n: usize,
    pub k: usize,
    /// Rotationally symmetric about the last axis: all but the last entry equal.
    pub semi_axes: Vec<f64>,
    pub n_theta: usize,
    pub deltas: Vec<f64>,
    pub samples: Vec<f64>,
    /// Fixed step; defaults to `0.1 Δθ²`.
    pub dt: Option<f64>,
}

impl Default for DilationUniqueness {
    fn default() -> Self {
        Self {
            n: 2,
            k: 2,
            semi_axes: vec![1.0, 1.0, 1.5],
            n_theta: 64,
            deltas: vec![0.1, 0.05, 0.025],
            samples: vec![0.2, 0.4, 0.6, 0.8],
            dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlatSideLens {
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub ball: f64,
    pub r_max: f64,
    pub nodes: usize,
    /// Recording interval of the interface trajectory; the solver substeps
    /// inside it under its stability limit. Defaults to `t_end / 400`.
    pub dt: Option<f64>,
    /// Defaults to 30% of the predicted closing time of the flat side.
    pub t_end: Option<f64>,
    pub lambda: Option<f64>,
}

impl Default for FlatSideLens {
    fn default() -> Self {
        Self {
            n: 2,
            k: 2,
            rho: 0.5,
            ball: 0.5,
            r_max: 0.8,
            nodes: 201,
            dt: None,
            t_end: None,
            lambda: None,
        }
    }
}

impl FlatSideLens {
    pub fn t_end(&self) -> f64 {
        self.t_end.unwrap_or_else(|| {
            let a = (self.n - self.k + 1) as f64 / (self.k - 1) as f64;
            0.3 * self.rho * self.rho / (2.0 * a)
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(self.t_end() / 400.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearizationAudit {
    pub k: usize,
    pub jet: ModelJet,
    pub z_min: f64,
    pub z_max: f64,
    pub delta: f64,
}

impl Default for LinearizationAudit {
    fn default() -> Self {
        Self {
            k: 2,
            jet: ModelJet {
                c0: 1.0,
                a: 0.5,
                c: vec![1.0, 1.5],
                d: vec![0.0, 0.0],
            },
            z_min: 1e-6,
            z_max: 1e-1,
            delta: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolderFunction {
    /// `f = √z`.
    SqrtZ,
    /// The model chart `f = c0 + a√z − Σ c_i x_i²/2 + √z Σ d_i x_i`.
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HolderNormsParams {
    pub function: HolderFunction,
    pub jet: ModelJet,
    pub alpha: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub nz: usize,
    pub dim: usize,
    pub half_width: f64,
    pub per_axis: usize,
}

impl Default for HolderNormsParams {
    fn default() -> Self {
        Self {
            function: HolderFunction::SqrtZ,
            jet: ModelJet {
                c0: 1.0,
                a: 0.5,
                c: vec![1.0],
                d: vec![0.0],
            },
            alpha: 0.5,
            z_min: 1e-6,
            z_max: 1.0,
            nz: 41,
            dim: 1,
            half_width: 0.5,
            per_axis: 5,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_nk(n: usize, k: usize, k_min: usize) -> Result<(), CliError> {
    if n < 2 || k < k_min || k > n {
        return Err(config_err(format!("need n >= 2 and {k_min} <= k <= n, got n={n} k={k}")));
    }
    Ok(())
}

fn decreasing(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() || v.iter().any(|x| !(*x > 0.0)) || v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(config_err(format!("{name} must be positive and strictly decreasing")));
    }
    Ok(())
}

fn increasing(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() || v.iter().any(|x| !(*x > 0.0)) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err(format!("{name} must be positive and strictly increasing")));
    }
    Ok(())
}

fn axisymmetric(n: usize, axes: &[f64]) -> Result<(), CliError> {
    if axes.len() != n + 1 || axes.iter().any(|a| !(*a > 0.0)) {
        return Err(config_err(format!("semi_axes needs {} positive entries", n + 1)));
    }
    if axes[..n].iter().any(|a| *a != axes[0]) {
        return Err(config_err("axial grids need semi_axes equal except the last"));
    }
    Ok(())
}

fn check_jet(jet: &ModelJet) -> Result<(), CliError> {
    if jet.c.is_empty() || jet.c.len() != jet.d.len() {
        return Err(config_err("jet.c and jet.d must be non-empty and of equal length"));
    }
    positive("jet.a", jet.a)?;
    if jet.c.iter().chain(&jet.d).chain([&jet.c0]).any(|v| !v.is_finite()) {
        return Err(config_err("jet entries must be finite"));
    }
    Ok(())
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        let table = toml::Value::Table(raw.params);
        let typed = |e: toml::de::Error| config_err(format!("params: {e}"));
        let params = match raw.name.as_str() {
            "shrink_sphere" => Params::ShrinkSphere(table.try_into().map_err(typed)?),
            "shrink_ellipsoid" => Params::ShrinkEllipsoid(table.try_into().map_err(typed)?),
            "viscosity_convergence" => Params::ViscosityConvergence(table.try_into().map_err(typed)?),
            "dilation_uniqueness" => Params::DilationUniqueness(table.try_into().map_err(typed)?),
            "flat_side_lens" => Params::FlatSideLens(table.try_into().map_err(typed)?),
            "linearization_audit" => Params::LinearizationAudit(table.try_into().map_err(typed)?),
            "holder_norms" => Params::HolderNorms(table.try_into().map_err(typed)?),
            other => return Err(config_err(format!("unknown scenario name `{other}`"))),
        };
        let s = Scenario {
            params,
            seed: raw.seed,
            output_dir: raw.output_dir,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match &self.params {
            Params::ShrinkSphere(p) => {
                check_nk(p.n, p.k, 1)?;
                positive("radius", p.radius)?;
                positive("dt", p.dt)?;
                if let Some(t) = p.t_end {
                    positive("t_end", t)?;
                }
                if !(p.extinction_fraction > 0.0 && p.extinction_fraction < 1.0) {
                    return Err(config_err("extinction_fraction must lie in (0, 1)"));
                }
                SphereGrid::axial(p.n, p.n_theta).map_err(|e| config_err(e.to_string()))?;
            }
            Params::ShrinkEllipsoid(p) => {
                p.grid.validate().map_err(|e| config_err(e.to_string()))?;
                let n = p.grid.n();
                check_nk(n, p.k, 1)?;
                if matches!(p.grid, SphereGrid::Axial { .. }) {
                    axisymmetric(n, &p.semi_axes)?;
                    if p.rotate {
                        return Err(config_err("rotate needs a lat_lon grid"));
                    }
                } else if p.semi_axes.len() != n + 1 || p.semi_axes.iter().any(|a| !(*a > 0.0)) {
                    return Err(config_err(format!("semi_axes needs {} positive entries", n + 1)));
                }
                positive("dt", p.dt)?;
                if let Some(t) = p.t_end {
                    positive("t_end", t)?;
                }
                if let Some(f) = p.extinction_fraction {
                    if !(f > 0.0 && f < 1.0) {
                        return Err(config_err("extinction_fraction must lie in (0, 1)"));
                    }
                }
            }
            Params::ViscosityConvergence(p) => {
                check_nk(p.n, p.k, 1)?;
                positive("disc", p.disc)?;
                positive("ball", p.ball)?;
                positive("dt", p.dt)?;
                decreasing("epsilons", &p.epsilons)?;
                if p.epsilons.len() < 3 {
                    return Err(config_err("need at least 3 epsilons for a ratio"));
                }
                increasing("probes", &p.probes)?;
                SphereGrid::axial(p.n, p.n_theta).map_err(|e| config_err(e.to_string()))?;
            }
            Params::DilationUniqueness(p) => {
                check_nk(p.n, p.k, 1)?;
                axisymmetric(p.n, &p.semi_axes)?;
                decreasing("deltas", &p.deltas)?;
                increasing("samples", &p.samples)?;
                if let Some(dt) = p.dt {
                    positive("dt", dt)?;
                }
                SphereGrid::axial(p.n, p.n_theta).map_err(|e| config_err(e.to_string()))?;
            }
            Params::FlatSideLens(p) => {
                check_nk(p.n, p.k, 2)?;
                positive("rho", p.rho)?;
                positive("ball", p.ball)?;
                if !(p.r_max > p.rho && p.r_max < p.rho + p.ball) {
                    return Err(config_err("need rho < r_max < rho + ball"));
                }
                if p.nodes < 21 {
                    return Err(config_err("need at least 21 nodes"));
                }
                positive("t_end", p.t_end())?;
                positive("dt", p.dt())?;
                if p.dt() > p.t_end() {
                    return Err(config_err("dt exceeds t_end"));
                }
                if let Some(l) = p.lambda {
                    positive("lambda", l)?;
                }
            }
            Params::LinearizationAudit(p) => {
                check_jet(&p.jet)?;
                check_nk(p.jet.c.len() + 1, p.k, 1)?;
                positive("z_min", p.z_min)?;
                if !(p.z_max > p.z_min && p.z_max <= 1.0) {
                    return Err(config_err("need z_min < z_max <= 1"));
                }
                if !(p.delta >= 0.0) {
                    return Err(config_err("delta must be non-negative"));
                }
            }
            Params::HolderNorms(p) => {
                if !(p.alpha > 0.0 && p.alpha < 1.0) {
                    return Err(config_err("alpha must lie in (0, 1)"));
                }
                positive("z_min", p.z_min)?;
                if !(p.z_max > p.z_min) || p.z_min > 1e-4 {
                    return Err(config_err("need z_min <= 1e-4 and z_min < z_max"));
                }
                if p.nz < 2 || p.dim < 1 || p.per_axis < 1 {
                    return Err(config_err("need nz >= 2, dim >= 1, per_axis >= 1"));
                }
                positive("half_width", p.half_width)?;
                if p.function == HolderFunction::Model {
                    check_jet(&p.jet)?;
                    if p.jet.c.len() != p.dim {
                        return Err(config_err("jet length must equal dim"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::from_toml("name = \"shrink_sphere\"\n[params]\nn = 2\nk = 1\n").unwrap();
        match s.params {
            Params::ShrinkSphere(p) => {
                assert_eq!((p.n, p.k, p.n_theta), (2, 1, 64));
                assert_eq!(p.radius, 1.0);
            }
            _ => panic!(),
        }
        assert_eq!(s.seed, 0);
    }

    #[test]
    fn rejects_unknown_keys_and_names() {
        assert!(Scenario::from_toml("name = \"shrink_sphere\"\n[params]\nradious = 2.0\n").is_err());
        assert!(Scenario::from_toml("name = \"spin\"\n").is_err());
        assert!(Scenario::from_toml("name = \"shrink_sphere\"\nextra = 1\n").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Scenario::from_toml("name = \"shrink_sphere\"\n[params]\nk = 4\n").is_err());
        assert!(Scenario::from_toml("name = \"flat_side_lens\"\n[params]\nk = 1\n").is_err());
        assert!(Scenario::from_toml("name = \"dilation_uniqueness\"\n[params]\nsemi_axes = [1.0, 1.2, 1.5]\n").is_err());
        assert!(Scenario::from_toml("name = \"viscosity_convergence\"\n[params]\nepsilons = [0.1, 0.2, 0.05]\n").is_err());
    }

    #[test]
    fn echo_round_trips_through_json() {
        let s = Scenario::from_toml(
            "name = \"shrink_ellipsoid\"\nseed = 7\n[params]\ngrid = { kind = \"lat_lon\", n_theta = 12, n_phi = 24 }\n",
        )
        .unwrap();
        let j = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&j).unwrap();
        assert_eq!(s, back);
    }
}

//! Scenario execution. Each runner returns its artifacts in memory; the
//! caller writes and hashes them.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use crate::convexgeom::{SphereGrid, SupportSurface};
use crate::flatside::{
    geometric_z_grid, model_jet, run_pressure, weighted_holder_norms, exp_coordinate_seminorms, FJet, HolderGrid,
    PressureConfig, PressureProfile, PressureStop,
};
use crate::flowcore::{extinction_time_estimate, run_coupled, FlowConfig, FlowError, FlowTrace};
use crate::linearization::{
    check_a11_scaling, check_aii_lower_bound, check_speed_derivative_bounds, compare_methods, lambda_series,
    linearized_coefficients, Method,
};
use crate::viscosity::{approximate, dilation_uniqueness_check, family_flow_limit, ViscosityError};

use super::manifest::csv;
use super::scenario::*;
use super::CliError;

pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub stop_reason: String,
    /// Set when the run stopped on a (★) or convexity alarm.
    pub alarm: Option<String>,
}

impl Outcome {
    fn new(stop_reason: impl Into<String>) -> Self {
        Self {
            files: Vec::new(),
            stop_reason: stop_reason.into(),
            alarm: None,
        }
    }

    fn add(&mut self, name: &str, body: impl Into<Vec<u8>>) {
        self.files.push((name.into(), body.into()));
    }

    fn add_json(&mut self, name: &str, v: &impl serde::Serialize) {
        let mut s = serde_json::to_string_pretty(v).expect("report serializes");
        s.push('\n');
        self.add(name, s);
    }

    fn alarm(message: String, partial: Vec<(String, Vec<u8>)>) -> Self {
        let mut o = Self::new("alarm");
        o.files = partial;
        o.add_json("error.json", &json!({ "alarm": message }));
        o.alarm = Some(message);
        o
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn execute(s: &Scenario) -> Result<Outcome, CliError> {
    match &s.params {
        Params::ShrinkSphere(p) => shrink_sphere(p),
        Params::ShrinkEllipsoid(p) => shrink_ellipsoid(p, s.seed),
        Params::ViscosityConvergence(p) => viscosity(p),
        Params::DilationUniqueness(p) => dilation(p),
        Params::FlatSideLens(p) => lens(p),
        Params::LinearizationAudit(p) => audit(p),
        Params::HolderNorms(p) => holder(p),
    }
}

/// Runs one flow; a convexity loss becomes an alarm outcome holding the
/// `(t, volume)` rows observed so far.
fn flow(surface: &SupportSurface, cfg: &FlowConfig) -> Result<Result<FlowTrace, Outcome>, CliError> {
    let mut partial = vec![vec![0.0, surface.volume()]];
    let res = run_coupled(std::slice::from_ref(surface), cfg, |_, t, s| partial.push(vec![t, s[0].volume()]));
    match res {
        Ok(mut v) => Ok(Ok(v.pop().unwrap())),
        Err(e @ FlowError::ConvexityLoss { .. }) => {
            let body = csv(&["t", "volume"], partial);
            Ok(Err(Outcome::alarm(e.to_string(), vec![("partial.csv".into(), body.into_bytes())])))
        }
        Err(e) => Err(runtime(e)),
    }
}

fn flow_outcome(trace: &FlowTrace) -> Outcome {
    let stop = serde_json::to_value(trace.stop).unwrap();
    let mut o = Outcome::new(stop.as_str().unwrap_or("unknown"));
    o.add("trace.csv", trace.to_csv());
    o.add("final_surface.json", trace.final_surface.to_json() + "\n");
    o.add_json(
        "report.json",
        &json!({
            "stop": trace.stop,
            "steps": trace.len().saturating_sub(1),
            "final_time": trace.times.last(),
            "extinction_estimate": extinction_time_estimate(trace).ok(),
            "monitors": trace.monitor_report(&Default::default()),
            "recenterings": trace.recenterings.len(),
        }),
    );
    o
}

pub fn sphere_extinction(n: usize, k: usize, r: f64) -> f64 {
    k as f64 * r * r / (2.0 * (n - k + 1) as f64)
}

fn shrink_sphere(p: &ShrinkSphere) -> Result<Outcome, CliError> {
    let grid = SphereGrid::axial(p.n, p.n_theta).map_err(runtime)?;
    let s = SupportSurface::sphere(grid, p.radius);
    let t_end = p.t_end.unwrap_or(2.0 * sphere_extinction(p.n, p.k, p.radius));
    let mut cfg = FlowConfig::new(p.n, p.k, p.dt, t_end, grid);
    cfg.scheme = p.scheme;
    cfg.extinction_fraction = Some(p.extinction_fraction);
    Ok(match flow(&s, &cfg)? {
        Ok(trace) => flow_outcome(&trace),
        Err(alarm) => alarm,
    })
}

/// Rotation from the QR factor of a Gaussian matrix, sign-fixed to be proper.
fn random_rotation(m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    (0..m).map(|i| q.column(i).iter().copied().collect()).collect()
}

fn shrink_ellipsoid(p: &ShrinkEllipsoid, seed: u64) -> Result<Outcome, CliError> {
    let n = p.grid.n();
    let m = n + 1;
    let center = vec![0.0; m];
    let s = if p.rotate {
        SupportSurface::rotated_ellipsoid(p.grid, &p.semi_axes, &random_rotation(m, seed), &center)
    } else {
        SupportSurface::ellipsoid(p.grid, &p.semi_axes, &center)
    }
    .map_err(runtime)?;
    let a_max = p.semi_axes.iter().copied().fold(0.0, f64::max);
    let t_end = p.t_end.unwrap_or(1.5 * sphere_extinction(n, p.k, a_max));
    let mut cfg = FlowConfig::new(n, p.k, p.dt, t_end, p.grid);
    cfg.scheme = p.scheme;
    cfg.extinction_fraction = p.extinction_fraction;
    Ok(match flow(&s, &cfg)? {
        Ok(trace) => flow_outcome(&trace),
        Err(alarm) => alarm,
    })
}

fn viscosity(p: &ViscosityConvergence) -> Result<Outcome, CliError> {
    let grid = SphereGrid::axial(p.n, p.n_theta).map_err(runtime)?;
    let parent = SupportSurface::flat_sided_lens(grid, p.disc, p.ball);
    let fam = approximate(&parent, &p.epsilons).map_err(runtime)?;
    let mut cfg = FlowConfig::new(p.n, p.k, p.dt, *p.probes.last().unwrap(), grid);
    cfg.scheme = p.scheme;
    let rep = match family_flow_limit(&fam, &cfg, &p.probes) {
        Ok(r) => r,
        Err(ViscosityError::Flow(e @ FlowError::ConvexityLoss { .. })) => {
            return Ok(Outcome::alarm(e.to_string(), Vec::new()))
        }
        Err(e) => return Err(runtime(e)),
    };
    let mut rows = Vec::new();
    for pr in &rep.probes {
        for (i, d) in pr.sup_diffs.iter().enumerate() {
            rows.push(vec![pr.t, rep.epsilons[i], *d, if pr.nested { 1.0 } else { 0.0 }]);
        }
    }
    let mut o = Outcome::new(if rep.failure.is_some() { "member_failure" } else { "horizon" });
    o.add("family.csv", csv(&["t", "eps", "sup_diff", "nested"], rows));
    o.add_json(
        "report.json",
        &json!({
            "epsilons": rep.epsilons,
            "hausdorff": fam.hausdorff,
            "min_radius": fam.min_radius,
            "probes": rep.probes,
            "ratio_bound": rep.ratio_bound,
            "converged": rep.converged,
            "failure": rep.failure,
        }),
    );
    if let Some(f) = &rep.failure {
        o.alarm = Some(format!("member eps={} failed: {}", f.eps, f.message));
    }
    Ok(o)
}

fn dilation(p: &DilationUniqueness) -> Result<Outcome, CliError> {
    let grid = SphereGrid::axial(p.n, p.n_theta).map_err(runtime)?;
    let s = SupportSurface::ellipsoid(grid, &p.semi_axes, &vec![0.0; p.n + 1]).map_err(runtime)?;
    let dt = p.dt.unwrap_or(0.1 * grid.d_theta().powi(2));
    let mut cfg = FlowConfig::new(p.n, p.k, dt, *p.samples.last().unwrap(), grid);
    cfg.adaptive = false;
    cfg.snapshot_times = p.samples.clone();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &delta in &p.deltas {
        let rep = match dilation_uniqueness_check(&s, delta, &cfg) {
            Ok(r) => r,
            Err(ViscosityError::Flow(e @ FlowError::ConvexityLoss { .. })) => {
                return Ok(Outcome::alarm(e.to_string(), Vec::new()))
            }
            Err(e) => return Err(runtime(e)),
        };
        for smp in &rep.samples {
            rows.push(vec![delta, smp.t, smp.scaling_error, smp.deviation]);
        }
        reports.push(rep);
    }
    let mut o = Outcome::new("horizon");
    o.add("dilation.csv", csv(&["delta", "t", "scaling_error", "deviation"], rows));
    o.add_json("report.json", &json!({ "dt": dt, "reports": reports }));
    Ok(o)
}

fn lens(p: &FlatSideLens) -> Result<Outcome, CliError> {
    let p0 = PressureProfile::lens(p.n, p.k, p.rho, p.ball, p.r_max, p.nodes).map_err(runtime)?;
    let (dt, t_end) = (p.dt(), p.t_end());
    let count = (t_end / dt + 1e-9).floor() as usize;
    let cfg = PressureConfig {
        dt,
        t_end,
        cfl: 0.4,
        lambda: p.lambda,
        snapshot_times: (0..=count).map(|i| i as f64 * dt).filter(|t| *t <= t_end).collect(),
    };
    let run = run_pressure(&p0, &cfg).map_err(runtime)?;
    let traj: Vec<Vec<f64>> = run.snapshots.iter().map(|s| vec![s.t, s.rho]).collect();
    let star: Vec<Vec<f64>> = run
        .trajectory
        .times
        .iter()
        .zip(&run.star_history)
        .map(|(t, r)| vec![*t, r.lambda_star, r.min_grad, r.min_hess_eig])
        .collect();
    let stop = serde_json::to_value(run.stop).unwrap();
    let mut o = Outcome::new(stop.as_str().unwrap_or("unknown"));
    o.add("trajectory.csv", csv(&["t", "rho"], traj));
    o.add("star.csv", csv(&["t", "lambda_star", "min_grad", "min_hess_eig"], star));
    o.add("profile_final.csv", run.final_profile.to_csv());
    o.add_json(
        "report.json",
        &json!({
            "lambda": run.lambda,
            "stop": run.stop,
            "steps": run.trajectory.times.len() - 1,
            "recorded": run.snapshots.len(),
            "min_lambda_star": run.min_lambda_star(),
            "final_rho": run.final_profile.rho,
            "predicted_slope": -2.0 * (p.n - p.k + 1) as f64 / (p.k - 1) as f64,
        }),
    );
    if run.stop == PressureStop::StarAlarm {
        let msg = format!("(★) alarm at t={}", run.final_profile.t);
        o.add_json("error.json", &json!({ "alarm": msg }));
        o.alarm = Some(msg);
    }
    Ok(o)
}

fn audit(p: &LinearizationAudit) -> Result<Outcome, CliError> {
    let dim = p.jet.c.len();
    let jets: Vec<FJet> = geometric_z_grid(p.z_max, p.z_min)
        .into_iter()
        .map(|z| model_jet(&p.jet, z, &vec![0.0; dim]))
        .collect();
    let series = lambda_series(&jets).map_err(runtime)?;
    let speed = check_speed_derivative_bounds(&series, p.k).map_err(runtime)?;
    let a11 = check_a11_scaling(&jets, p.k).map_err(runtime)?;
    let aii = check_aii_lower_bound(&jets, p.k, p.delta).map_err(runtime)?;
    let mut rows = Vec::new();
    for (i, j) in jets.iter().enumerate() {
        let x = linearized_coefficients(j, p.k, Method::Minors).map_err(runtime)?;
        let y = linearized_coefficients(j, p.k, Method::FiniteDifference).map_err(runtime)?;
        let g = compare_methods(&x, &y);
        rows.push(vec![
            j.z,
            series[i].1[0],
            speed.dq_dlambda1[i],
            a11.a11[i],
            aii.per_z[i].1,
            g.max_rel_a.max(g.max_rel_b),
        ]);
    }
    let mut o = Outcome::new("complete");
    o.add(
        "audit.csv",
        csv(&["z", "lambda1", "dq_dlambda1", "a11", "min_aii", "method_rel_diff"], rows),
    );
    o.add_json("report.json", &json!({ "speed": speed, "a11": a11, "aii": aii }));
    Ok(o)
}

pub fn holder_function(p: &HolderNormsParams) -> impl Fn(f64, &[f64]) -> f64 + '_ {
    move |z: f64, x: &[f64]| match p.function {
        HolderFunction::SqrtZ => z.sqrt(),
        HolderFunction::Model => model_jet(&p.jet, z, x).f,
    }
}

fn holder(p: &HolderNormsParams) -> Result<Outcome, CliError> {
    let grid = HolderGrid::new(p.z_min, p.z_max, p.nz, p.dim, p.half_width, p.per_axis);
    let f = holder_function(p);
    let norms = weighted_holder_norms(&f, &grid, p.alpha).map_err(runtime)?;
    let (sbar, classical) = exp_coordinate_seminorms(&f, &grid, p.alpha);
    let mut header = vec!["z".to_string()];
    header.extend((1..=p.dim).map(|i| format!("x{i}")));
    header.push("f".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = grid.z.iter().zip(&grid.xbar).map(|(z, x)| {
        let mut r = vec![*z];
        r.extend(x);
        r.push(f(*z, x));
        r
    });
    let mut o = Outcome::new("complete");
    o.add("samples.csv", csv(&header, rows));
    o.add_json(
        "holder.json",
        &json!({ "norms": norms, "sbar_seminorm": sbar, "classical_seminorm": classical }),
    );
    Ok(o)
}

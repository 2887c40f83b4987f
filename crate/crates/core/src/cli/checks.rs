//! Claims recomputed from the artifacts on disk. `run` records them in the
//! manifest and `verify` evaluates them again.

use std::path::Path;

use serde_json::Value;

use crate::convexgeom::sphere_area;
use crate::flatside::{verify_interface_law, InterfaceTrajectory};
use crate::flowcore::extinction_fit;
use crate::numeric::fit_slope;

use super::manifest::{Claim, RunStatus, Table};
use super::run::sphere_extinction;
use super::scenario::{HolderFunction, Params, Scenario};
use super::CliError;

const MONOTONE_TOL: f64 = 1e-6;
const SPHERE_LAW_TOL: f64 = 1e-3;
const EXTINCTION_REL: f64 = 0.02;
const CAUCHY_RATIO: f64 = 0.6;
const DILATION_SPREAD: f64 = 0.2;
const INTERFACE_REL: f64 = 0.05;
const INTERFACE_WINDOW: f64 = 0.25;
const A11_EXPONENT: (f64, f64) = (2.0, 0.1);
const SPEED_SLOPE: (f64, f64) = (1.0, 0.05);
const METHOD_REL: f64 = 1e-5;
const HOLDER_TOL: f64 = 1e-6;

fn read_json(dir: &Path, name: &str) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(dir.join(name)).map_err(|e| CliError::Corrupt(format!("{name}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::Corrupt(format!("{name}: {e}")))
}

fn json_f64(v: &Value, ptr: &str) -> Result<f64, CliError> {
    v.pointer(ptr)
        .and_then(Value::as_f64)
        .ok_or_else(|| CliError::Corrupt(format!("report field {ptr} missing")))
}

/// Worst relative per-step drop of `F_min` and rise of `max H/F`.
fn monotone(f_min: &[f64], hf: &[f64]) -> (f64, f64) {
    let drop = f_min
        .windows(2)
        .map(|w| (w[0] - w[1]) / (1.0 + w[0].abs()))
        .fold(f64::NEG_INFINITY, f64::max);
    let rise = hf
        .windows(2)
        .map(|w| (w[1] - w[0]) / (1.0 + w[0].abs()))
        .fold(f64::NEG_INFINITY, f64::max);
    (drop, rise)
}

fn flow_claims(trace: &Table, out: &mut Vec<Claim>) -> Result<(), CliError> {
    let (drop, rise) = monotone(&trace.column("F_min")?, &trace.column("maxH_over_F")?);
    out.push(Claim::at_most("f_min_nondecreasing", drop, MONOTONE_TOL, "worst relative per-step drop"));
    out.push(Claim::at_most("h_over_f_nonincreasing", rise, MONOTONE_TOL, "worst relative per-step rise"));
    Ok(())
}

pub fn claims(dir: &Path, s: &Scenario, status: RunStatus, stop_reason: &str) -> Result<Vec<Claim>, CliError> {
    let mut out = Vec::new();
    if status == RunStatus::Alarm {
        out.push(Claim::failed("no_alarm", "run stopped on an alarm; see error.json"));
        if matches!(s.params, Params::FlatSideLens(_)) {
            // the lens run keeps full artifacts up to the alarm
        } else {
            return Ok(out);
        }
    }
    match &s.params {
        Params::ShrinkSphere(p) => {
            let trace = Table::read(dir, "trace.csv")?;
            flow_claims(&trace, &mut out)?;
            let t = trace.column("t")?;
            let vol = trace.column("volume")?;
            let ball = sphere_area(p.n) / (p.n as f64 + 1.0);
            let c = 2.0 * (p.n - p.k + 1) as f64 / p.k as f64;
            let err = t
                .iter()
                .zip(&vol)
                .map(|(t, v)| {
                    let r = (v / ball).max(0.0).powf(1.0 / (p.n as f64 + 1.0));
                    (r * r - (p.radius * p.radius - c * t)).abs()
                })
                .fold(0.0, f64::max);
            out.push(Claim::at_most("sphere_law", err, SPHERE_LAW_TOL, "max |R(t)^2 - (R0^2 - 2(n-k+1)t/k)|"));
            let exact = sphere_extinction(p.n, p.k, p.radius);
            if stop_reason == "extinct" {
                match extinction_fit(p.n, &t, &vol) {
                    Ok(est) => out.push(Claim::at_most(
                        "extinction_time",
                        ((est - exact) / exact).abs(),
                        EXTINCTION_REL,
                        format!("estimate {est:.6} vs {exact:.6}"),
                    )),
                    Err(e) => out.push(Claim::failed("extinction_time", e.to_string())),
                }
            } else {
                out.push(Claim::failed("extinction_time", format!("run stopped by {stop_reason}")));
            }
        }
        Params::ShrinkEllipsoid(p) => {
            let trace = Table::read(dir, "trace.csv")?;
            flow_claims(&trace, &mut out)?;
            if stop_reason == "extinct" {
                let n = p.grid.n();
                let a_max = p.semi_axes.iter().copied().fold(0.0, f64::max);
                let bound = sphere_extinction(n, p.k, a_max);
                match extinction_fit(n, &trace.column("t")?, &trace.column("volume")?) {
                    Ok(est) => out.push(Claim::at_most(
                        "extinction_before_outer_ball",
                        est,
                        bound,
                        "extinction estimate vs the enclosing ball",
                    )),
                    Err(e) => out.push(Claim::failed("extinction_before_outer_ball", e.to_string())),
                }
            }
        }
        Params::ViscosityConvergence(_) => {
            let fam = Table::read(dir, "family.csv")?;
            let t = fam.column("t")?;
            let d = fam.column("sup_diff")?;
            let nested = fam.column("nested")?;
            let mut worst: f64 = 0.0;
            let mut i = 0;
            while i < t.len() {
                let mut j = i;
                while j < t.len() && t[j] == t[i] {
                    j += 1;
                }
                for w in d[i..j].windows(2) {
                    worst = worst.max(w[1] / w[0]);
                }
                i = j;
            }
            out.push(Claim::at_most("cauchy_ratio", worst, CAUCHY_RATIO, "largest successive sup-difference ratio"));
            let min_nested = nested.iter().copied().fold(1.0, f64::min);
            out.push(Claim::at_least("members_nested", min_nested, 1.0, "enclosure chain at every probe"));
        }
        Params::DilationUniqueness(p) => {
            let tab = Table::read(dir, "dilation.csv")?;
            let delta = tab.column("delta")?;
            let dev = tab.column("deviation")?;
            let consts: Vec<f64> = p
                .deltas
                .iter()
                .map(|d| {
                    delta
                        .iter()
                        .zip(&dev)
                        .filter(|(x, _)| *x == d)
                        .map(|(_, v)| *v)
                        .fold(0.0, f64::max)
                        / d
                })
                .collect();
            let max = consts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = consts.iter().copied().fold(f64::INFINITY, f64::min);
            out.push(Claim::at_most(
                "dilation_constant_spread",
                max / min - 1.0,
                DILATION_SPREAD,
                format!("sup-deviation/delta = {consts:?}"),
            ));
        }
        Params::FlatSideLens(p) => {
            let tab = Table::read(dir, "trajectory.csv")?;
            let mut traj = InterfaceTrajectory {
                times: tab.column("t")?,
                rho_series: tab.column("rho")?,
                fitted_speed_constant: None,
            };
            match verify_interface_law(&mut traj, p.n, p.k, INTERFACE_WINDOW) {
                Ok(fit) => out.push(Claim::at_most(
                    "interface_law",
                    fit.relative_error,
                    INTERFACE_REL,
                    format!("d(rho^2)/dt {:.6} vs {:.6}", fit.fitted_slope, fit.predicted_slope),
                )),
                Err(e) => out.push(Claim::failed("interface_law", e.to_string())),
            }
            let report = read_json(dir, "report.json")?;
            let lambda = json_f64(&report, "/lambda")?;
            let star = Table::read(dir, "star.csv")?;
            let min = star.column("lambda_star")?.into_iter().fold(f64::INFINITY, f64::min);
            out.push(Claim::at_least("star_constant", min, lambda / 2.0, "min lambda* over the run vs lambda/2"));
        }
        Params::LinearizationAudit(_) => {
            let tab = Table::read(dir, "audit.csv")?;
            let lz: Vec<f64> = tab.column("z")?.iter().map(|z| z.ln()).collect();
            let a11 = tab.column("a11")?;
            let dq = tab.column("dq_dlambda1")?;
            let exp = if a11.iter().all(|v| *v > 0.0) {
                fit_slope(&lz, &a11.iter().map(|v| v.ln()).collect::<Vec<_>>()).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            out.push(Claim::at_most(
                "a11_exponent",
                (exp - A11_EXPONENT.0).abs(),
                A11_EXPONENT.1,
                format!("fitted exponent {exp:.4}"),
            ));
            let slope = if dq.iter().all(|v| *v > 0.0) {
                fit_slope(&lz, &dq.iter().map(|v| v.ln()).collect::<Vec<_>>()).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            out.push(Claim::at_most(
                "speed_derivative_slope",
                (slope - SPEED_SLOPE.0).abs(),
                SPEED_SLOPE.1,
                format!("log-log slope {slope:.4}"),
            ));
            let min_aii = tab.column("min_aii")?.into_iter().fold(f64::INFINITY, f64::min);
            let mut c = Claim::at_least("aii_positive", min_aii, 0.0, "min over i >= 2 and the sweep");
            c.passed = min_aii > 0.0;
            out.push(c);
            let diff = tab.column("method_rel_diff")?.into_iter().fold(0.0, f64::max);
            out.push(Claim::at_most("method_agreement", diff, METHOD_REL, "minors vs finite differences"));
        }
        Params::HolderNorms(p) => {
            let h = read_json(dir, "holder.json")?;
            if p.function == HolderFunction::SqrtZ {
                let c0 = json_f64(&h, "/norms/c0_w")?;
                out.push(Claim::at_most("c0_w_sqrt_z", (c0 - 1.0).abs(), HOLDER_TOL, format!("C0_w = {c0}")));
            }
            let sbar = json_f64(&h, "/sbar_seminorm")?;
            let classical = json_f64(&h, "/classical_seminorm")?;
            out.push(Claim::at_most(
                "exp_coordinate_equivalence",
                (sbar - classical).abs() / classical.abs().max(1.0),
                HOLDER_TOL,
                format!("sbar {sbar:.9e} vs classical {classical:.9e}"),
            ));
        }
    }
    Ok(out)
}

//! Two-column, whitespace-separated series for gnuplot and similar tools.

use std::path::Path;

use serde_json::Value;

use crate::numeric::fit_slope;

use super::manifest::{Manifest, Table};
use super::scenario::Params;
use super::CliError;

pub struct Series {
    pub file: String,
    pub columns: (String, String),
    pub comment: Vec<String>,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    fn new(file: &str, x: &str, y: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            file: file.into(),
            columns: (x.into(), y.into()),
            comment: Vec::new(),
            points,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comment {
            s.push_str(&format!("# {c}\n"));
        }
        s.push_str(&format!("# {} {}\n", self.columns.0, self.columns.1));
        for (x, y) in &self.points {
            s.push_str(&format!("{x:.16e} {y:.16e}\n"));
        }
        s
    }
}

fn pairs(t: &Table, x: &str, y: &str) -> Result<Vec<(f64, f64)>, CliError> {
    Ok(t.column(x)?.into_iter().zip(t.column(y)?).collect())
}

pub fn series(dir: &Path, m: &Manifest) -> Result<Vec<Series>, CliError> {
    let listed = |name: &str| m.files.iter().any(|f| f.path == name);
    let mut out = Vec::new();
    match &m.scenario.params {
        Params::ShrinkSphere(_) | Params::ShrinkEllipsoid(_) if listed("trace.csv") => {
            let t = Table::read(dir, "trace.csv")?;
            out.push(Series::new("volume.dat", "t", "volume", pairs(&t, "t", "volume")?));
            out.push(Series::new("f_min.dat", "t", "F_min", pairs(&t, "t", "F_min")?));
        }
        Params::ViscosityConvergence(_) if listed("family.csv") => {
            let t = Table::read(dir, "family.csv")?;
            let (ts, eps, d) = (t.column("t")?, t.column("eps")?, t.column("sup_diff")?);
            let last = ts.last().copied().unwrap_or(0.0);
            let pts = (0..ts.len())
                .filter(|&i| ts[i] == last)
                .map(|i| (eps[i].ln(), d[i].ln()))
                .collect();
            let mut s = Series::new("sup_diff.dat", "log_eps", "log_sup_diff", pts);
            s.comment.push(format!("probe time t = {last:.6e}"));
            out.push(s);
        }
        Params::DilationUniqueness(_) if listed("dilation.csv") => {
            let t = Table::read(dir, "dilation.csv")?;
            let (delta, ts, dev) = (t.column("delta")?, t.column("t")?, t.column("deviation")?);
            let mut deltas = delta.clone();
            deltas.dedup();
            for (j, d) in deltas.iter().enumerate() {
                let pts = (0..ts.len()).filter(|&i| delta[i] == *d).map(|i| (ts[i], dev[i] / d)).collect();
                let mut s = Series::new(&format!("deviation_{j}.dat"), "t", "deviation_over_delta", pts);
                s.comment.push(format!("delta = {d}"));
                out.push(s);
            }
        }
        Params::FlatSideLens(_) if listed("trajectory.csv") => {
            let t = Table::read(dir, "trajectory.csv")?;
            let pts: Vec<(f64, f64)> = pairs(&t, "t", "rho")?.into_iter().map(|(t, r)| (t, r * r)).collect();
            let mut s = Series::new("rho2.dat", "t", "rho^2", pts);
            let fit = m.claims.iter().find(|c| c.name == "interface_law");
            let report: Option<Value> = std::fs::read_to_string(dir.join("report.json"))
                .ok()
                .and_then(|x| serde_json::from_str(&x).ok());
            if let Some(pred) = report.as_ref().and_then(|r| r.get("predicted_slope")).and_then(Value::as_f64) {
                s.comment.push(format!("predicted slope d(rho^2)/dt = {pred:.6}"));
            }
            match fit {
                Some(c) => match c.value {
                    Some(v) => s.comment.push(format!("fit: {} (relative error {v:.3e})", c.detail)),
                    None => s.comment.push(format!("fit failed: {}", c.detail)),
                },
                None => {
                    let (x, y): (Vec<f64>, Vec<f64>) = s.points.iter().copied().unzip();
                    if let Ok(slope) = fit_slope(&x, &y) {
                        s.comment.push(format!("fitted slope over the whole run = {slope:.6}"));
                    }
                }
            }
            out.push(s);
        }
        Params::LinearizationAudit(_) if listed("audit.csv") => {
            let t = Table::read(dir, "audit.csv")?;
            let pts = pairs(&t, "z", "a11")?.into_iter().map(|(z, a)| (z.ln(), a.ln())).collect();
            out.push(Series::new("a11.dat", "log_z", "log_a11", pts));
            let pts = pairs(&t, "z", "dq_dlambda1")?.into_iter().map(|(z, q)| (z.ln(), q.ln())).collect();
            out.push(Series::new("dq_dlambda1.dat", "log_z", "log_dq_dlambda1", pts));
        }
        Params::HolderNorms(_) if listed("samples.csv") => {
            let t = Table::read(dir, "samples.csv")?;
            let x1 = t.column("x1")?;
            let pts = pairs(&t, "z", "f")?
                .into_iter()
                .zip(&x1)
                .filter(|(_, x)| **x == x1[0])
                .map(|((z, f), _)| (z.ln(), f))
                .collect();
            out.push(Series::new("f_along_z.dat", "log_z", "f", pts));
        }
        _ => {}
    }
    Ok(out)
}

pub fn readme(series: &[Series]) -> String {
    let mut s = String::from("Two-column whitespace-separated data; lines starting with '#' are comments.\n\n");
    for x in series {
        s.push_str(&format!("{}: column 1 = {}, column 2 = {}\n", x.file, x.columns.0, x.columns.1));
    }
    s
}

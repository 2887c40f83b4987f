//! Time stepping of `∂_t h = -Q_k` for support functions, with the
//! monotone quantities `F = ⟨F, ν⟩ + 2tQ_k` and `H/F` monitored per step.

mod config;
mod stepper;

pub use config::{FlowConfig, MonitorTolerances, Scheme};
pub use stepper::{evaluate, nodal_speed, NodeEval};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convexgeom::{GeomError, SupportSurface};
use crate::symfun::SymfunError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    Config(String),
    #[error("step rejected: convexity lost at node {node} (radius {radius:e})")]
    ConvexityLoss { node: usize, radius: f64 },
    #[error("step rejected: dt={dt:e} exceeds the stability limit; try dt <= {suggested:e}")]
    Cfl { dt: f64, suggested: f64 },
    #[error(transparent)]
    Speed(#[from] SymfunError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("extinction time unavailable: run stopped with {0:?}")]
    NotExtinct(StopReason),
    #[error("extinction fit failed: {0}")]
    Fit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Horizon,
    Extinct,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recentering {
    pub step: usize,
    pub t: f64,
    pub shift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub surface: SupportSurface,
}

/// Per-step record of a run. Row `i` of every series belongs to `times[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub n: usize,
    pub k: usize,
    pub times: Vec<f64>,
    pub f_min: Vec<f64>,
    pub h_over_f_max: Vec<f64>,
    pub q_min: Vec<f64>,
    pub volume: Vec<f64>,
    /// Inradius about the current Steiner point.
    pub inradius: Vec<f64>,
    pub recenterings: Vec<Recentering>,
    pub snapshots: Vec<Snapshot>,
    pub stop: StopReason,
    pub final_surface: SupportSurface,
}

/// Largest per-step violations of the two monotonicity properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    /// `max (F_min[i] - F_min[i+1]) / (1 + |F_min[i]|)`.
    pub worst_f_min_drop: f64,
    /// `max (HF[i+1] - HF[i]) / (1 + |HF[i]|)`.
    pub worst_h_over_f_rise: f64,
    pub passed: bool,
}

impl FlowTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn monitor_report(&self, tol: &MonitorTolerances) -> MonitorReport {
        let mut drop = f64::NEG_INFINITY;
        let mut rise = f64::NEG_INFINITY;
        for i in 1..self.len() {
            let f0 = self.f_min[i - 1];
            drop = drop.max((f0 - self.f_min[i]) / (1.0 + f0.abs()));
            let g0 = self.h_over_f_max[i - 1];
            rise = rise.max((self.h_over_f_max[i] - g0) / (1.0 + g0.abs()));
        }
        MonitorReport {
            worst_f_min_drop: drop,
            worst_h_over_f_rise: rise,
            passed: drop <= tol.f_min_rel && rise <= tol.h_over_f_rel,
        }
    }

    /// Radius of the ball with the same enclosed volume.
    pub fn volume_radius(&self) -> Vec<f64> {
        let ball = crate::convexgeom::sphere_area(self.n) / (self.n as f64 + 1.0);
        self.volume
            .iter()
            .map(|v| (v / ball).max(0.0).powf(1.0 / (self.n as f64 + 1.0)))
            .collect()
    }

    /// RFC 4180 CSV, one row per recorded step.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,F_min,maxH_over_F,Q_min,volume\r\n");
        for i in 0..self.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\r\n",
                self.times[i], self.f_min[i], self.h_over_f_max[i], self.q_min[i], self.volume[i]
            ));
        }
        s
    }
}

/// One step of size exactly `cfg.dt`.
pub fn step(surface: &SupportSurface, cfg: &FlowConfig) -> Result<SupportSurface, FlowError> {
    cfg.validate()?;
    check_grid(surface, cfg)?;
    let ev = evaluate(surface, cfg.k)?;
    let limit = ev.limit(cfg.scheme);
    if cfg.dt > limit {
        return Err(FlowError::Cfl {
            dt: cfg.dt,
            suggested: cfg.cfl * limit,
        });
    }
    let dh = stepper::increment(surface, &ev, cfg.dt, cfg);
    let mut out = surface.clone();
    out.h.iter_mut().zip(dh).for_each(|(h, d)| *h += d);
    Ok(out)
}

fn check_grid(surface: &SupportSurface, cfg: &FlowConfig) -> Result<(), FlowError> {
    if surface.grid != cfg.grid {
        return Err(FlowError::Config(format!(
            "surface grid {:?} differs from configured grid {:?}",
            surface.grid, cfg.grid
        )));
    }
    Ok(())
}

pub fn run(surface: &SupportSurface, cfg: &FlowConfig) -> Result<FlowTrace, FlowError> {
    let mut traces = run_coupled(std::slice::from_ref(surface), cfg, |_, _, _| {})?;
    Ok(traces.pop().unwrap())
}

fn inradius_about_steiner(s: &SupportSurface) -> f64 {
    let c = s.steiner_point();
    (0..s.grid.len())
        .map(|node| s.h[node] - s.grid.dot(node, &c))
        .fold(f64::INFINITY, f64::min)
}

/// Evolves several bodies with a shared time-step sequence and shared
/// support origin, calling `observe(step, t, surfaces)` after every step.
///
/// All runs stop as soon as one body reaches extinction. The origin follows
/// the Steiner point of `surfaces[0]`.
pub fn run_coupled(
    surfaces: &[SupportSurface],
    cfg: &FlowConfig,
    mut observe: impl FnMut(usize, f64, &[SupportSurface]),
) -> Result<Vec<FlowTrace>, FlowError> {
    cfg.validate()?;
    let mut state: Vec<SupportSurface> = surfaces.to_vec();
    for s in &state {
        check_grid(s, cfg)?;
        if s.origin != state[0].origin {
            return Err(FlowError::Geometry(GeomError::OriginMismatch));
        }
    }
    let origin0 = state[0].origin.clone();
    let rho0: Vec<f64> = state.iter().map(inradius_about_steiner).collect();
    let frac = cfg.extinction_fraction();
    let mut traces: Vec<FlowTrace> = state
        .iter()
        .map(|s| FlowTrace {
            n: cfg.n,
            k: cfg.k,
            times: Vec::new(),
            f_min: Vec::new(),
            h_over_f_max: Vec::new(),
            q_min: Vec::new(),
            volume: Vec::new(),
            inradius: Vec::new(),
            recenterings: Vec::new(),
            snapshots: Vec::new(),
            stop: StopReason::Horizon,
            final_surface: s.clone(),
        })
        .collect();
    let weights = cfg.grid.weights();
    let mut snaps = cfg.snapshot_times.iter().copied().peekable();
    let mut t = 0.0;
    let mut steps = 0usize;
    loop {
        let evs = state
            .iter()
            .map(|s| evaluate(s, cfg.k))
            .collect::<Result<Vec<_>, _>>()?;
        let mut extinct = false;
        for (idx, ((s, ev), tr)) in state.iter().zip(&evs).zip(traces.iter_mut()).enumerate() {
            let h0 = s.h_about(&origin0);
            let (mut fmin, mut hf, mut qmin, mut vol) =
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, 0.0);
            for node in 0..h0.len() {
                let q = ev.speed[node];
                let f = h0[node] + 2.0 * t * q;
                fmin = fmin.min(f);
                hf = hf.max(ev.mean_curvature[node] / f);
                qmin = qmin.min(q);
                vol += weights[node] * s.h[node] * ev.radii[node].det();
            }
            tr.times.push(t);
            tr.f_min.push(fmin);
            tr.h_over_f_max.push(hf);
            tr.q_min.push(qmin);
            tr.volume.push(vol / (cfg.n as f64 + 1.0));
            let rho = inradius_about_steiner(s);
            tr.inradius.push(rho);
            if rho < frac * rho0[idx] {
                extinct = true;
            }
        }
        while let Some(&ts) = snaps.peek() {
            if ts <= t + 1e-12 * (1.0 + t) {
                for (s, tr) in state.iter().zip(traces.iter_mut()) {
                    tr.snapshots.push(Snapshot {
                        t,
                        surface: s.clone(),
                    });
                }
                snaps.next();
            } else {
                break;
            }
        }
        let stop = if extinct {
            Some(StopReason::Extinct)
        } else if t >= cfg.t_end - 1e-12 * (1.0 + cfg.t_end) {
            Some(StopReason::Horizon)
        } else if steps >= cfg.max_steps {
            Some(StopReason::MaxSteps)
        } else {
            None
        };
        if let Some(reason) = stop {
            for (s, tr) in state.iter().zip(traces.iter_mut()) {
                tr.stop = reason;
                tr.final_surface = s.clone();
            }
            return Ok(traces);
        }

        let limit = evs
            .iter()
            .map(|e| e.limit(cfg.scheme))
            .fold(f64::INFINITY, f64::min);
        let mut dt = cfg.dt;
        if cfg.adaptive {
            dt = dt.min(cfg.cfl * limit);
        } else if dt > limit {
            return Err(FlowError::Cfl {
                dt,
                suggested: cfg.cfl * limit,
            });
        }
        dt = dt.min(cfg.t_end - t);
        if let Some(&ts) = snaps.peek() {
            dt = dt.min(ts - t);
        }
        for (s, ev) in state.iter_mut().zip(&evs) {
            let dh = stepper::increment(s, ev, dt, cfg);
            s.h.iter_mut().zip(dh).for_each(|(h, d)| *h += d);
        }
        t += dt;
        steps += 1;
        if cfg.recenter_every > 0 && steps.is_multiple_of(cfg.recenter_every) {
            let shift = state[0].steiner_point();
            for s in state.iter_mut() {
                s.shift_origin(&shift);
            }
            for tr in traces.iter_mut() {
                tr.recenterings.push(Recentering {
                    step: steps,
                    t,
                    shift: shift.clone(),
                });
            }
        }
        observe(steps, t, &state);
    }
}

/// Extinction time from the tail of the volume series.
///
/// Near extinction the body is asymptotically round, so `V^{2/(n+1)}` is
/// close to linear in `t`; a quadratic least-squares fit over the last tenth
/// of the recorded steps is continued to its first root past the final time.
pub fn extinction_time_estimate(trace: &FlowTrace) -> Result<f64, FlowError> {
    if trace.stop != StopReason::Extinct {
        return Err(FlowError::NotExtinct(trace.stop));
    }
    extinction_fit(trace.n, &trace.times, &trace.volume)
}

/// The fit behind [`extinction_time_estimate`], on bare `(t, volume)` columns.
pub fn extinction_fit(n: usize, times: &[f64], volume: &[f64]) -> Result<f64, FlowError> {
    if times.len() != volume.len() {
        return Err(FlowError::Fit("column lengths differ".into()));
    }
    let m = times.len();
    let take = (m / 10).max(8).min(m);
    if take < 3 {
        return Err(FlowError::Fit("too few steps".into()));
    }
    let expo = 2.0 / (n as f64 + 1.0);
    let ts = &times[m - take..];
    let ys: Vec<f64> = volume[m - take..].iter().map(|v| v.max(0.0).powf(expo)).collect();
    let t_last = ts[take - 1];
    // centre and scale t for conditioning
    let t0 = ts[0];
    let span = (t_last - t0).max(f64::MIN_POSITIVE);
    let xs: Vec<f64> = ts.iter().map(|t| (t - t0) / span).collect();
    let coef = crate::numeric::polyfit(&xs, &ys, 2).map_err(FlowError::Fit)?;
    let (c, b, a) = (coef[0], coef[1], coef[2]);
    let x_last = 1.0;
    let root = if a.abs() < 1e-14 * (b.abs() + c.abs()) {
        -c / b
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Err(FlowError::Fit("fitted volume trend has no zero".into()));
        }
        let sq = disc.sqrt();
        let mut roots = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)];
        roots.sort_by(f64::total_cmp);
        *roots
            .iter()
            .find(|r| **r >= x_last - 1e-9)
            .ok_or_else(|| FlowError::Fit("fitted volume trend has no zero past the run".into()))?
    };
    Ok(t0 + root * span)
}

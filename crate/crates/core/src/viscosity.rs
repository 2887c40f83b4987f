//! Strictly convex inner approximations of a `C^{1,1}` body, the limit of
//! their flows, the dilation comparison and a positive-speed probe.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convexgeom::{radii_matrix, GeomError, SupportSurface};
use crate::flowcore::{evaluate, run, FlowConfig, FlowError, FlowTrace, Snapshot};
use crate::numeric::fit_slope;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ViscosityError {
    #[error("parent is not convex: radius {radius:e} at node {node}")]
    ParentNotConvex { node: usize, radius: f64 },
    #[error("epsilons must be positive and strictly decreasing")]
    BadEpsilons,
    #[error("member for eps={eps} has minimum radius {min_radius:e} < eps/2")]
    MemberNotStrictlyConvex { eps: f64, min_radius: f64 },
    #[error("dilation factor offset must be positive, got {0}")]
    BadDelta(f64),
    #[error("trace has no snapshot at t={0}")]
    MissingSnapshot(f64),
    #[error("run ended before any sample time")]
    NoSamples,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Inner approximations ordered by decreasing `ε`; member `i` is enclosed by
/// member `i + 1` and every member is enclosed by the parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationFamily {
    pub epsilons: Vec<f64>,
    pub members: Vec<SupportSurface>,
    pub parent: SupportSurface,
    /// Constant subtracted after smoothing, per member.
    pub shifts: Vec<f64>,
    /// `sup |h_member - h_parent|`, per member.
    pub hausdorff: Vec<f64>,
    /// Smallest principal radius of each member.
    pub min_radius: Vec<f64>,
}

/// Heat-flow smoothing of `h` on the sphere for time `s` by explicit substeps.
///
/// The heat semigroup commutes with rotations, so it is an average of
/// rotated copies and keeps support functions convex.
pub fn heat_smooth(surface: &SupportSurface, s: f64) -> SupportSurface {
    let g = surface.grid;
    let n = g.n() as f64;
    let dth = g.d_theta();
    let th0 = g.theta(0);
    let rate = match g.d_phi() {
        Some(dph) => 2.0 / (dth * dth) + 2.0 / (th0.sin() * dph).powi(2) + th0.cos() / th0.sin() / dth,
        None => 2.0 / (dth * dth) + (n - 1.0) * th0.cos() / th0.sin() / dth,
    };
    let max_ds = 0.4 / rate;
    let substeps = (s / max_ds).ceil().max(1.0) as usize;
    let ds = s / substeps as f64;
    let mut out = surface.clone();
    if s <= 0.0 {
        return out;
    }
    for _ in 0..substeps {
        let lap: Vec<f64> = (0..g.len())
            .map(|node| {
                let tr: f64 = radii_matrix(&g, &out.h, node).radii().radii.iter().sum();
                tr - n * out.h[node]
            })
            .collect();
        out.h.iter_mut().zip(lap).for_each(|(h, l)| *h += ds * l);
    }
    out
}

/// Smoothing time used for member `ε`.
pub fn smoothing_time(eps: f64) -> f64 {
    eps * eps / (16.0 * std::f64::consts::PI)
}

pub fn approximate(
    parent: &SupportSurface,
    epsilons: &[f64],
) -> Result<ApproximationFamily, ViscosityError> {
    if epsilons.is_empty()
        || epsilons.iter().any(|e| !(*e > 0.0))
        || epsilons.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(ViscosityError::BadEpsilons);
    }
    for node in 0..parent.grid.len() {
        let r = parent.node_radii(node).min();
        if r < 0.0 {
            return Err(ViscosityError::ParentNotConvex { node, radius: r });
        }
    }
    let smoothed: Vec<SupportSurface> = epsilons
        .iter()
        .map(|&e| heat_smooth(parent, smoothing_time(e)))
        .collect();
    let m = epsilons.len();
    let mut shifts = vec![0.0; m];
    let mut members: Vec<SupportSurface> = smoothed.clone();
    for i in (0..m).rev() {
        let over = smoothed[i]
            .h
            .iter()
            .zip(&parent.h)
            .map(|(a, b)| a - b)
            .fold(0.0, f64::max);
        let mut c = over + epsilons[i];
        if i + 1 < m {
            let need = smoothed[i]
                .h
                .iter()
                .zip(&members[i + 1].h)
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max);
            c = c.max(need);
        }
        shifts[i] = c;
        members[i].h.iter_mut().for_each(|h| *h -= c);
    }
    let mut hausdorff = Vec::with_capacity(m);
    let mut min_radius = Vec::with_capacity(m);
    for (mem, &eps) in members.iter().zip(epsilons) {
        let rmin = (0..mem.grid.len())
            .map(|node| mem.node_radii(node).min())
            .fold(f64::INFINITY, f64::min);
        if rmin < 0.5 * eps {
            return Err(ViscosityError::MemberNotStrictlyConvex {
                eps,
                min_radius: rmin,
            });
        }
        min_radius.push(rmin);
        hausdorff.push(parent.sup_distance(mem)?);
    }
    Ok(ApproximationFamily {
        epsilons: epsilons.to_vec(),
        members,
        parent: parent.clone(),
        shifts,
        hausdorff,
        min_radius,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeDifferences {
    pub t: f64,
    /// `sup |h_{ε_i} - h_{ε_{i+1}}|`.
    pub sup_diffs: Vec<f64>,
    /// Consecutive ratios of `sup_diffs`.
    pub ratios: Vec<f64>,
    /// Log-log slope of `sup_diffs` against `ε_i`.
    pub decay_slope: f64,
    /// Every coarser member is still enclosed by the next finer one.
    pub nested: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFailure {
    pub eps: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub epsilons: Vec<f64>,
    pub probes: Vec<ProbeDifferences>,
    pub ratio_bound: f64,
    pub converged: bool,
    pub failure: Option<FamilyFailure>,
    /// The finest member at each probe time.
    pub limit: Vec<Snapshot>,
}

/// Successive-difference ratio at or below which the family is declared
/// Cauchy.
pub const CAUCHY_RATIO: f64 = 0.6;

pub fn family_flow_limit(
    fam: &ApproximationFamily,
    cfg: &FlowConfig,
    t_probe: &[f64],
) -> Result<FamilyReport, ViscosityError> {
    let mut probes: Vec<f64> = t_probe.to_vec();
    probes.sort_by(f64::total_cmp);
    probes.dedup();
    let mut run_cfg = cfg.clone();
    run_cfg.t_end = *probes.last().unwrap_or(&0.0);
    run_cfg.snapshot_times = probes.clone();
    let origin0 = fam.parent.origin.clone();
    let mut failure = None;
    let mut evolved: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut limit = Vec::new();
    for (i, (mem, &eps)) in fam.members.iter().zip(&fam.epsilons).enumerate() {
        match run(mem, &run_cfg) {
            Ok(tr) if tr.snapshots.len() == probes.len() => {
                evolved.push(tr.snapshots.iter().map(|s| s.surface.h_about(&origin0)).collect());
                if i + 1 == fam.members.len() {
                    limit = tr.snapshots;
                }
            }
            Ok(tr) => {
                failure = Some(FamilyFailure {
                    eps,
                    message: format!("run stopped ({:?}) before the last probe", tr.stop),
                });
                break;
            }
            Err(e) => {
                failure = Some(FamilyFailure {
                    eps,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    let mut rows = Vec::new();
    if failure.is_none() {
        for (p, &t) in probes.iter().enumerate() {
            let mut diffs = Vec::new();
            let mut nested = true;
            for i in 0..evolved.len() - 1 {
                let (a, b) = (&evolved[i][p], &evolved[i + 1][p]);
                diffs.push(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
                nested &= a.iter().zip(b).all(|(x, y)| x <= y);
            }
            let ratios: Vec<f64> = diffs.windows(2).map(|w| w[1] / w[0]).collect();
            let decay_slope = if diffs.len() >= 2 {
                let lx: Vec<f64> = fam.epsilons[..diffs.len()].iter().map(|e| e.ln()).collect();
                let ly: Vec<f64> = diffs.iter().map(|d| d.max(f64::MIN_POSITIVE).ln()).collect();
                fit_slope(&lx, &ly).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            rows.push(ProbeDifferences {
                t,
                sup_diffs: diffs,
                ratios,
                decay_slope,
                nested,
            });
        }
    }
    let converged = failure.is_none()
        && rows
            .iter()
            .all(|r| r.ratios.iter().all(|q| *q <= CAUCHY_RATIO));
    Ok(FamilyReport {
        epsilons: fam.epsilons.clone(),
        probes: rows,
        ratio_bound: CAUCHY_RATIO,
        converged,
        failure,
        limit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationSample {
    pub t: f64,
    /// `sup |h_dil(t(1+δ)²) - (1+δ) h(t)|`.
    pub scaling_error: f64,
    /// `sup |h_dil(t) - h(t)|`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationReport {
    pub delta: f64,
    pub samples: Vec<DilationSample>,
    pub max_scaling_error: f64,
    pub max_deviation: f64,
    /// `max_deviation / δ`.
    pub constant: f64,
}

/// Evolves `surface` and its dilation by `1 + δ` and compares them.
///
/// Sample times are `cfg.snapshot_times` when given, otherwise five evenly
/// spaced times up to `cfg.t_end`.
pub fn dilation_uniqueness_check(
    surface: &SupportSurface,
    delta: f64,
    cfg: &FlowConfig,
) -> Result<DilationReport, ViscosityError> {
    if !(delta > 0.0) {
        return Err(ViscosityError::BadDelta(delta));
    }
    let samples: Vec<f64> = if cfg.snapshot_times.is_empty() {
        (1..=5).map(|i| cfg.t_end * i as f64 / 5.0).collect()
    } else {
        cfg.snapshot_times.clone()
    };
    let lam = (1.0 + delta) * (1.0 + delta);
    let dilated = surface.dilate(1.0 + delta)?;
    let origin0 = surface.origin.clone();

    let mut base_cfg = cfg.clone();
    base_cfg.snapshot_times = samples.clone();
    base_cfg.t_end = *samples.last().unwrap();
    let base = run(surface, &base_cfg)?;

    let mut dil_times: Vec<f64> = samples.iter().flat_map(|t| [*t, t * lam]).collect();
    dil_times.sort_by(f64::total_cmp);
    dil_times.dedup();
    let mut dil_cfg = cfg.clone();
    dil_cfg.t_end = *dil_times.last().unwrap();
    dil_cfg.snapshot_times = dil_times;
    let dil = run(&dilated, &dil_cfg)?;

    let find = |tr: &FlowTrace, t: f64| -> Option<Vec<f64>> {
        tr.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * (1.0 + t))
            .map(|s| s.surface.h_about(&origin0))
    };
    let sup = |a: &[f64], b: &[f64], scale: f64| {
        a.iter().zip(b).map(|(x, y)| (x - scale * y).abs()).fold(0.0, f64::max)
    };
    let mut out = Vec::new();
    for &t in &samples {
        let (Some(h), Some(hd), Some(hs)) = (find(&base, t), find(&dil, t), find(&dil, t * lam)) else {
            continue;
        };
        out.push(DilationSample {
            t,
            scaling_error: sup(&hs, &h, 1.0 + delta),
            deviation: sup(&hd, &h, 1.0),
        });
    }
    if out.is_empty() {
        return Err(ViscosityError::NoSamples);
    }
    let max_scaling_error = out.iter().map(|s| s.scaling_error).fold(0.0, f64::max);
    let max_deviation = out.iter().map(|s| s.deviation).fold(0.0, f64::max);
    Ok(DilationReport {
        delta,
        samples: out,
        max_scaling_error,
        max_deviation,
        constant: max_deviation / delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProbe {
    pub t0: f64,
    pub min_move: f64,
    /// Nodes whose boundary point sits at least `min_move` inside the initial body.
    pub moved_nodes: usize,
    pub min_speed: f64,
    /// Smallest `Q_k(p) · 4t₀ / F^P_min(0)` over the moved nodes; the
    /// estimate holds when this is at least 1.
    pub min_bound_ratio: f64,
    pub passed: bool,
}

/// Positive-speed diagnostic at `t0`.
///
/// For every node whose boundary point `P` at `t0` lies at distance at
/// least `min_move` inside the initial body, `F^P = ⟨F - P, ν⟩ + 2tQ_k` is
/// formed about `P`; its initial minimum bounds `Q_k(P)` from below.
pub fn speed_positivity_probe(
    trace: &FlowTrace,
    t0: f64,
    min_move: f64,
    tolerance: f64,
) -> Result<SpeedProbe, ViscosityError> {
    let snap = |t: f64| {
        trace
            .snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * (1.0 + t))
            .ok_or(ViscosityError::MissingSnapshot(t))
    };
    let initial = &snap(0.0)?.surface;
    let now = &snap(t0)?.surface;
    let ev = evaluate(now, trace.k)?;
    let mut moved = 0;
    let mut min_speed = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    for node in 0..now.grid.len() {
        let p = now.boundary_point(node);
        let d = initial.interior_distance(&p);
        if d < min_move {
            continue;
        }
        moved += 1;
        let f0 = d;
        let q = ev.speed[node];
        min_speed = min_speed.min(q);
        min_ratio = min_ratio.min(q * 4.0 * t0 / f0);
    }
    Ok(SpeedProbe {
        t0,
        min_move,
        moved_nodes: moved,
        min_speed,
        min_bound_ratio: min_ratio,
        passed: moved == 0 || min_ratio >= 1.0 - tolerance,
    })
}

/// Ratio of circumradius to inradius about the Steiner point.
pub fn asphericity(surface: &SupportSurface) -> f64 {
    let c = surface.steiner_point();
    let vals: Vec<f64> = (0..surface.grid.len())
        .map(|node| surface.h[node] - surface.grid.dot(node, &c))
        .collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Extinction time of the smallest ball about the origin enclosing the
/// body; by comparison it bounds the body's own extinction time.
pub fn outer_sphere_extinction_time(surface: &SupportSurface, k: usize) -> f64 {
    let n = surface.n;
    let r = surface.h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    k as f64 * r * r / (2.0 * (n - k + 1) as f64)
}

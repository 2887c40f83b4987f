use serde::{Deserialize, Serialize};

use super::FlatSideError;
use crate::numeric::fit_slope;
use crate::symfun::{qk_gradient, CurvatureVector};

fn binom(n: usize, k: isize) -> f64 {
    if k < 0 || k as usize > n {
        return 0.0;
    }
    let k = k as usize;
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Rotationally symmetric lower graph `u(r) = g(r)²` over the flat side.
///
/// With a flat side (`rho > 0`) the nodes cover `[rho, r_max]` uniformly and
/// move with the interface, `g[0] = 0`. Without one (`rho == 0`) the nodes
/// cover `[0, r_max]` and stay put.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureProfile {
    pub n: usize,
    pub k: usize,
    pub t: f64,
    pub rho: f64,
    pub r_max: f64,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    /// `g_r` at the interface, one-sided.
    pub min_grad: f64,
    /// Tangential Hessian eigenvalue `g_r / r` at the interface.
    pub min_hess_eig: f64,
    pub lambda_star: f64,
    pub lambda: f64,
    pub holds: bool,
    /// `lambda_star < lambda / 2`.
    pub alarm: bool,
    pub empty_interface: bool,
}

impl PressureProfile {
    pub fn from_fn(
        n: usize,
        k: usize,
        rho: f64,
        r_max: f64,
        nodes: usize,
        g: impl Fn(f64) -> f64,
    ) -> Result<Self, FlatSideError> {
        if n < 2 || k < 1 || k > n {
            return Err(FlatSideError::Config(format!("need 1 <= k <= n, n >= 2 (n={n}, k={k})")));
        }
        if !(rho >= 0.0) || !(r_max > rho) || nodes < 5 {
            return Err(FlatSideError::Config(format!(
                "need 0 <= rho < r_max and at least 5 nodes (rho={rho}, r_max={r_max}, nodes={nodes})"
            )));
        }
        let mut p = Self {
            n,
            k,
            t: 0.0,
            rho,
            r_max,
            g: vec![0.0; nodes],
        };
        for j in 0..nodes {
            p.g[j] = g(p.r(j));
        }
        if rho > 0.0 {
            p.g[0] = 0.0;
        }
        if let Some(j) = p.g.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(FlatSideError::Config(format!("invalid pressure sample at node {j}")));
        }
        Ok(p)
    }

    /// Lower half of the Minkowski sum of a flat disc of radius `rho` and a
    /// ball of radius `ball`, resolved out to `r_max < rho + ball`.
    pub fn lens(
        n: usize,
        k: usize,
        rho: f64,
        ball: f64,
        r_max: f64,
        nodes: usize,
    ) -> Result<Self, FlatSideError> {
        if !(r_max < rho + ball) {
            return Err(FlatSideError::Config("r_max must stay below rho + ball".into()));
        }
        Self::from_fn(n, k, rho, r_max, nodes, |r| {
            let d = (r - rho).max(0.0);
            (ball - (ball * ball - d * d).sqrt()).max(0.0).sqrt()
        })
    }

    pub fn nodes(&self) -> usize {
        self.g.len()
    }

    pub fn dr(&self) -> f64 {
        (self.r_max - self.rho) / (self.nodes() - 1) as f64
    }

    pub fn r(&self, j: usize) -> f64 {
        self.rho + j as f64 * self.dr()
    }

    pub fn has_flat_side(&self) -> bool {
        self.rho > 0.0
    }

    /// Linear interpolation of `g`, zero on the flat side.
    pub fn sample(&self, r: f64) -> f64 {
        if r <= self.rho {
            return if self.has_flat_side() { 0.0 } else { self.g[0] };
        }
        let x = (r - self.rho) / self.dr();
        let j = (x.floor() as usize).min(self.nodes() - 2);
        let w = x - j as f64;
        (1.0 - w) * self.g[j] + w * self.g[j + 1]
    }

    /// `g` at index `j`, continued past the outer end by quadratic extrapolation.
    fn at(&self, j: usize) -> f64 {
        let m = self.nodes() - 1;
        if j <= m {
            self.g[j]
        } else {
            3.0 * self.g[m] - 3.0 * self.g[m - 1] + self.g[m - 2]
        }
    }

    /// RFC 4180 CSV of `(r, g, u)`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,g,u\r\n");
        for j in 0..self.nodes() {
            let g = self.g[j];
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\r\n", self.r(j), g, g * g));
        }
        s
    }
}

pub fn check_star(p: &PressureProfile, lambda: f64) -> Result<StarReport, FlatSideError> {
    if !p.has_flat_side() {
        return Ok(StarReport {
            min_grad: f64::NAN,
            min_hess_eig: f64::NAN,
            lambda_star: f64::NAN,
            lambda,
            holds: false,
            alarm: false,
            empty_interface: true,
        });
    }
    if p.nodes() < 4 || p.g[1..4].iter().any(|v| !(*v > 0.0)) {
        return Err(FlatSideError::Unresolved);
    }
    let grad = (-3.0 * p.g[0] + 4.0 * p.g[1] - p.g[2]) / (2.0 * p.dr());
    let hess = grad / p.rho;
    let star = grad.min(hess);
    Ok(StarReport {
        min_grad: grad,
        min_hess_eig: hess,
        lambda_star: star,
        lambda,
        holds: star >= lambda,
        alarm: star < 0.5 * lambda,
        empty_interface: false,
    })
}

struct Rates {
    /// `∂g/∂t` at fixed `s`, or `u_t` when there is no flat side.
    dg: Vec<f64>,
    drho: f64,
    stable_dt: f64,
}

fn flat_rates(p: &PressureProfile) -> Result<Rates, FlatSideError> {
    let (n, k) = (p.n, p.k);
    let a = binom(n - 1, k as isize);
    let b = binom(n - 1, k as isize - 1);
    let c = binom(n - 1, k as isize - 2);
    let m = p.nodes() - 1;
    let h = p.dr();
    let mut gt = vec![0.0; m + 1];
    let mut gr = vec![0.0; m + 1];
    let mut vel = vec![0.0; m + 1];
    let mut dmax: f64 = 0.0;
    for j in 1..=m {
        let (gm, g0, gp) = (p.at(j - 1), p.g[j], p.at(j + 1));
        let r = p.r(j);
        let g_r = (gp - gm) / (2.0 * h);
        let g_rr = (gp - 2.0 * g0 + gm) / (h * h);
        let v = (1.0 + 4.0 * g0 * g0 * g_r * g_r).sqrt();
        let mu = 2.0 * g0 * g_r / (r * v);
        let kap = (2.0 * g_r * g_r + 2.0 * g0 * g_rr) / (v * v * v);
        if !(g_r > 0.0) || !(kap > 0.0) {
            return Err(FlatSideError::ConvexityLoss { node: j, t: p.t });
        }
        let den = b * mu + c * kap;
        if !(den > 0.0) {
            return Err(FlatSideError::Degenerate { node: j, t: p.t });
        }
        let ratio = (a * mu + b * kap) / den;
        gt[j] = g_r / r * ratio;
        gr[j] = g_r;
        vel[j] = ratio / r;
        let diff = g_r / r * mu * (b * b - a * c) / (den * den) * 2.0 * g0 / (v * v * v);
        dmax = dmax.max(diff);
    }
    // level-set speed continued to the interface
    let v0 = 3.0 * vel[1] - 3.0 * vel[2] + vel[3];
    let drho = -v0;
    let mut dg = vec![0.0; m + 1];
    for j in 1..=m {
        let s = j as f64 / m as f64;
        dg[j] = gt[j] + gr[j] * drho * (1.0 - s);
    }
    let adv = drho.abs() / h;
    Ok(Rates {
        dg,
        drho,
        stable_dt: 1.0 / (2.0 * dmax / (h * h) + adv + f64::MIN_POSITIVE),
    })
}

fn round_rates(p: &PressureProfile) -> Result<Rates, FlatSideError> {
    let m = p.nodes() - 1;
    let h = p.dr();
    let u: Vec<f64> = p.g.iter().map(|g| g * g).collect();
    let um = |j: isize| -> f64 {
        if j < 0 {
            u[(-j) as usize]
        } else if j as usize > m {
            3.0 * u[m] - 3.0 * u[m - 1] + u[m - 2]
        } else {
            u[j as usize]
        }
    };
    let mut dg = vec![0.0; m + 1];
    let mut dmax: f64 = 0.0;
    for j in 0..=m {
        let ji = j as isize;
        let u_r = (um(ji + 1) - um(ji - 1)) / (2.0 * h);
        let u_rr = (um(ji + 1) - 2.0 * u[j] + um(ji - 1)) / (h * h);
        let v = (1.0 + u_r * u_r).sqrt();
        let kr = u_rr / (v * v * v);
        let kt = if j == 0 { u_rr / v } else { u_r / (p.r(j) * v) };
        let mut lam = vec![kt; p.n];
        lam[0] = kr;
        let lam = CurvatureVector::new(lam)?;
        let jet = qk_gradient(&lam, p.k)?;
        if !(kr > 0.0) || !(kt > 0.0) {
            return Err(FlatSideError::ConvexityLoss { node: j, t: p.t });
        }
        // u_t here; converted back to g by the caller
        dg[j] = v * jet.value;
        let coeff = jet.gradient.iter().sum::<f64>() / (v * v);
        dmax = dmax.max(coeff);
    }
    Ok(Rates {
        dg,
        drho: 0.0,
        stable_dt: 1.0 / (2.0 * dmax / (h * h)),
    })
}

/// Largest explicit step the profile currently tolerates.
pub fn pressure_stable_dt(p: &PressureProfile) -> Result<f64, FlatSideError> {
    Ok(if p.has_flat_side() {
        flat_rates(p)?.stable_dt
    } else {
        round_rates(p)?.stable_dt
    })
}

/// One explicit step. With a flat side the interface moves by the level-set
/// speed continued from the resolved nodes. Without one `u = g²` is advanced
/// directly.
///
/// When `lambda` is given, a (★) alarm at the start of the step halts it.
pub fn evolve_pressure(
    p: &PressureProfile,
    dt: f64,
    lambda: Option<f64>,
) -> Result<PressureProfile, FlatSideError> {
    if let (Some(l), true) = (lambda, p.has_flat_side()) {
        let rep = check_star(p, l)?;
        if rep.alarm {
            return Err(FlatSideError::StarAlarm { report: rep, t: p.t });
        }
    }
    let rates = if p.has_flat_side() {
        flat_rates(p)?
    } else {
        round_rates(p)?
    };
    if dt > rates.stable_dt {
        return Err(FlatSideError::Cfl {
            dt,
            suggested: 0.4 * rates.stable_dt,
        });
    }
    let mut out = p.clone();
    if p.has_flat_side() {
        for (g, d) in out.g.iter_mut().zip(&rates.dg).skip(1) {
            *g += dt * d;
        }
        out.rho += dt * rates.drho;
        if !(out.rho > 0.0) {
            return Err(FlatSideError::InterfaceClosed { t: p.t + dt });
        }
    } else {
        for (g, ut) in out.g.iter_mut().zip(&rates.dg) {
            *g = (*g * *g + dt * ut).max(0.0).sqrt();
        }
    }
    out.t += dt;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceTrajectory {
    pub times: Vec<f64>,
    pub rho_series: Vec<f64>,
    /// Slope of `rho²` against `t`, once fitted.
    pub fitted_speed_constant: Option<f64>,
}

impl InterfaceTrajectory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,rho\r\n");
        for (t, r) in self.times.iter().zip(&self.rho_series) {
            s.push_str(&format!("{t:.16e},{r:.16e}\r\n"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// (★) constant; alarms fire below half of it. Defaults to the value
    /// certified on the initial profile.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn default_cfl() -> f64 {
    0.4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureStop {
    Horizon,
    StarAlarm,
    InterfaceClosed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatSideRun {
    pub trajectory: InterfaceTrajectory,
    pub star_history: Vec<StarReport>,
    pub lambda: f64,
    pub stop: PressureStop,
    pub snapshots: Vec<PressureProfile>,
    pub final_profile: PressureProfile,
}

impl FlatSideRun {
    /// Smallest `min(min_grad, min_hess_eig)` seen during the run.
    pub fn min_lambda_star(&self) -> f64 {
        self.star_history
            .iter()
            .map(|r| r.lambda_star)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Runs the flat-side profile to `t_end`, recording the interface every step.
pub fn run_pressure(p0: &PressureProfile, cfg: &PressureConfig) -> Result<FlatSideRun, FlatSideError> {
    if !p0.has_flat_side() {
        return Err(FlatSideError::Config("profile has no flat side".into()));
    }
    if !(cfg.dt > 0.0) || !(cfg.t_end > 0.0) || !(cfg.cfl > 0.0 && cfg.cfl <= 1.0) {
        return Err(FlatSideError::Config("need dt > 0, t_end > 0, 0 < cfl <= 1".into()));
    }
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => check_star(p0, 0.0)?.lambda_star,
    };
    let mut p = p0.clone();
    let mut traj = InterfaceTrajectory {
        times: vec![0.0],
        rho_series: vec![p.rho],
        fitted_speed_constant: None,
    };
    let mut star = vec![check_star(&p, lambda)?];
    let mut snaps = Vec::new();
    let mut pending = cfg.snapshot_times.iter().copied().peekable();
    let mut stop = PressureStop::Horizon;
    while p.t < cfg.t_end * (1.0 - 1e-12) {
        while let Some(&ts) = pending.peek() {
            if ts <= p.t + 1e-12 {
                snaps.push(p.clone());
                pending.next();
            } else {
                break;
            }
        }
        let mut dt = cfg.dt.min(cfg.cfl * pressure_stable_dt(&p)?).min(cfg.t_end - p.t);
        if let Some(&ts) = pending.peek() {
            dt = dt.min(ts - p.t);
        }
        match evolve_pressure(&p, dt, Some(lambda)) {
            Ok(next) => p = next,
            Err(FlatSideError::StarAlarm { .. }) => {
                stop = PressureStop::StarAlarm;
                break;
            }
            Err(FlatSideError::InterfaceClosed { .. }) => {
                stop = PressureStop::InterfaceClosed;
                break;
            }
            Err(e) => return Err(e),
        }
        traj.times.push(p.t);
        traj.rho_series.push(p.rho);
        star.push(check_star(&p, lambda)?);
    }
    if pending.peek().is_some() && stop == PressureStop::Horizon {
        snaps.push(p.clone());
    }
    Ok(FlatSideRun {
        trajectory: traj,
        star_history: star,
        lambda,
        stop,
        snapshots: snaps,
        final_profile: p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceFit {
    pub predicted_slope: f64,
    pub fitted_slope: f64,
    pub relative_error: f64,
    pub window_end: f64,
    pub samples: usize,
}

/// Fits `d(rho²)/dt` over the leading `window` fraction of the trajectory
/// and compares with `-2(n-k+1)/(k-1)`.
pub fn verify_interface_law(
    traj: &mut InterfaceTrajectory,
    n: usize,
    k: usize,
    window: f64,
) -> Result<InterfaceFit, FlatSideError> {
    if k < 2 || k > n {
        return Err(FlatSideError::OutOfScope { n, k });
    }
    if traj.times.len() < 21 {
        return Err(FlatSideError::Config(format!(
            "trajectory has {} steps, need at least 20",
            traj.times.len().saturating_sub(1)
        )));
    }
    let t_last = *traj.times.last().unwrap();
    let window_end = window.clamp(0.0, 1.0) * t_last;
    let (ts, r2): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&traj.rho_series)
        .filter(|(t, _)| **t <= window_end * (1.0 + 1e-12))
        .map(|(t, r)| (*t, r * r))
        .unzip();
    if ts.len() < 3 {
        return Err(FlatSideError::Config("fit window holds fewer than 3 samples".into()));
    }
    let slope = fit_slope(&ts, &r2).map_err(FlatSideError::Config)?;
    traj.fitted_speed_constant = Some(slope);
    let predicted = -2.0 * (n - k + 1) as f64 / (k - 1) as f64;
    Ok(InterfaceFit {
        predicted_slope: predicted,
        fitted_slope: slope,
        relative_error: ((slope - predicted) / predicted).abs(),
        window_end,
        samples: ts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binom(4, 2), 6.0);
        assert_eq!(binom(2, -1), 0.0);
        assert_eq!(binom(2, 3), 0.0);
    }

    #[test]
    fn star_examples() {
        let lin = PressureProfile::from_fn(2, 2, 0.5, 1.0, 51, |r| r - 0.5).unwrap();
        let rep = check_star(&lin, 0.5).unwrap();
        assert!((rep.min_grad - 1.0).abs() < 1e-12);
        assert!((rep.min_hess_eig - 2.0).abs() < 1e-12);
        assert!(rep.holds && !rep.alarm);

        let sq = PressureProfile::from_fn(2, 2, 0.5, 1.0, 51, |r| (r - 0.5).powi(2)).unwrap();
        let rep = check_star(&sq, 0.5).unwrap();
        assert!(rep.min_grad.abs() < 1e-12);
        assert!(!rep.holds && rep.alarm);

        let round = PressureProfile::from_fn(2, 2, 0.0, 1.0, 51, |r| r).unwrap();
        assert!(check_star(&round, 0.5).unwrap().empty_interface);
    }

    #[test]
    fn lens_step_moves_interface_inward() {
        let p = PressureProfile::lens(2, 2, 0.5, 0.5, 0.8, 121).unwrap();
        let dt = 0.2 * pressure_stable_dt(&p).unwrap();
        let q = evolve_pressure(&p, dt, Some(0.5)).unwrap();
        assert!(q.rho < p.rho);
        // leading-order interface speed (n-k+1)/((k-1) rho) = 2
        let speed = (p.rho - q.rho) / dt;
        assert!((speed - 2.0).abs() < 0.05, "{speed}");
        assert!(q.g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn first_order_flow_is_out_of_scope() {
        let mut traj = InterfaceTrajectory {
            times: (0..30).map(|i| i as f64).collect(),
            rho_series: vec![1.0; 30],
            fitted_speed_constant: None,
        };
        assert!(matches!(
            verify_interface_law(&mut traj, 3, 1, 0.25),
            Err(FlatSideError::OutOfScope { .. })
        ));
    }

    #[test]
    fn sphere_without_flat_side_follows_radial_law() {
        // bottom of a unit sphere: u = 1 - sqrt(1 - r²); it rises by 1 - R(t)
        let (n, k) = (2, 2);
        let mut p = PressureProfile::from_fn(n, k, 0.0, 0.6, 61, |r| (1.0 - (1.0 - r * r).sqrt()).sqrt())
            .unwrap();
        let t_end = 0.05;
        while p.t < t_end - 1e-15 {
            let dt = (0.4 * pressure_stable_dt(&p).unwrap()).min(t_end - p.t);
            p = evolve_pressure(&p, dt, None).unwrap();
        }
        let r = (1.0 - 2.0 * (n - k + 1) as f64 / k as f64 * t_end).sqrt();
        let lift = p.g[0] * p.g[0];
        assert!((lift - (1.0 - r)).abs() < 1e-3, "{lift} vs {}", 1.0 - r);
    }
}

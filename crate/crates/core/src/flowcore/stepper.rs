use super::{FlowConfig, FlowError, Scheme};
use crate::convexgeom::{radii_matrix, NodeRadii, RadiiMatrix, SphereGrid, SupportSurface};
use crate::symfun::{qk_from_radii, qk_quotient, qk_radii_gradient, CurvatureVector};

/// Everything the stepper and the monitors need at one time level.
#[derive(Debug, Clone)]
pub struct NodeEval {
    pub radii: Vec<NodeRadii>,
    /// `Q_k` per node.
    pub speed: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    /// Forward Euler stability limit.
    pub stable_dt: f64,
    /// Limit from the explicitly treated cross terms of the semi-implicit scheme.
    pub semi_stable_dt: f64,
    /// `∂Q/∂W` in the chart frame: `(tt, tp, pp)` on lat-long grids,
    /// `(meridian, Σ tangential, 0)` on axial grids.
    coeff: Vec<[f64; 3]>,
}

/// Nodal speed, switching to the radii form when curvatures are badly spread.
pub fn nodal_speed(radii: &[f64], k: usize) -> Result<f64, FlowError> {
    let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let rmax = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if rmin < 1e-6 * rmax {
        Ok(qk_from_radii(radii, k)?)
    } else {
        let lambda = CurvatureVector::new(radii.iter().map(|r| 1.0 / r).collect())?;
        Ok(qk_quotient(&lambda, k)?)
    }
}

/// Speed and its radii gradient, closed form for surfaces in `R^3`.
fn speed_jet(radii: &[f64], k: usize) -> Result<(f64, Vec<f64>), FlowError> {
    if let [r1, r2] = *radii {
        let (q, g) = if k == 1 {
            (1.0 / r1 + 1.0 / r2, vec![-1.0 / (r1 * r1), -1.0 / (r2 * r2)])
        } else {
            let s = r1 + r2;
            (1.0 / s, vec![-1.0 / (s * s); 2])
        };
        return Ok((q, g));
    }
    Ok((nodal_speed(radii, k)?, qk_radii_gradient(radii, k)?))
}

pub fn evaluate(surface: &SupportSurface, k: usize) -> Result<NodeEval, FlowError> {
    let grid = surface.grid;
    let len = grid.len();
    let dth = grid.d_theta();
    let mut out = NodeEval {
        radii: Vec::with_capacity(len),
        speed: Vec::with_capacity(len),
        mean_curvature: Vec::with_capacity(len),
        stable_dt: f64::INFINITY,
        semi_stable_dt: f64::INFINITY,
        coeff: Vec::with_capacity(len),
    };
    for node in 0..len {
        let m = radii_matrix(&grid, &surface.h, node);
        let r = m.radii();
        if let Some(&bad) = r.radii.iter().find(|&&x| !(x > 0.0)) {
            return Err(FlowError::ConvexityLoss { node, radius: bad });
        }
        let theta = grid.theta(grid.split(node).0);
        let (s, c) = theta.sin_cos();
        let (coeff, q) = match m {
            RadiiMatrix::Axial { merid, tang, n } => {
                let mut rr = vec![tang; n];
                rr[0] = merid;
                let (q, g) = speed_jet(&rr, k)?;
                let gt: f64 = g[1..].iter().sum();
                let rate = -g[0] * 2.0 / (dth * dth) - gt * (c / s).abs() / dth;
                out.stable_dt = out.stable_dt.min(1.0 / rate);
                ([g[0], gt, 0.0], q)
            }
            RadiiMatrix::Planar { tt, tp, pp } => {
                let (q, g) = speed_jet(&r.radii, k)?;
                // eigenvector of the larger radius
                let ang = 0.5 * (2.0 * tp).atan2(tt - pp);
                let (e1, e2) = ((ang.cos(), ang.sin()), (-ang.sin(), ang.cos()));
                let ctt = g[0] * e1.0 * e1.0 + g[1] * e2.0 * e2.0;
                let ctp = g[0] * e1.0 * e1.1 + g[1] * e2.0 * e2.1;
                let cpp = g[0] * e1.1 * e1.1 + g[1] * e2.1 * e2.1;
                let dph = grid.d_phi().unwrap();
                let dmax = -g[0].min(g[1]);
                let rate = dmax
                    * (2.0 / (dth * dth) + 2.0 / (s * s * dph * dph) + 1.0 / (s * dth * dph) + (c / s).abs() / dth);
                out.stable_dt = out.stable_dt.min(1.0 / rate);
                let cross = 2.0 * ctp.abs() * (1.0 / (s * dth * dph) + (c / s).abs() / (s * dph)) + 1e-300;
                out.semi_stable_dt = out.semi_stable_dt.min(1.0 / cross);
                ([ctt, ctp, cpp], q)
            }
        };
        out.mean_curvature.push(r.curvatures().iter().sum());
        out.radii.push(r);
        out.speed.push(q);
        out.coeff.push(coeff);
    }
    Ok(out)
}

impl NodeEval {
    /// Largest step the chosen scheme tolerates.
    pub fn limit(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::Explicit => self.stable_dt,
            Scheme::SemiImplicit => self.semi_stable_dt,
        }
    }
}

/// Increment `Δh` for one step of size `dt`.
pub fn increment(surface: &SupportSurface, ev: &NodeEval, dt: f64, cfg: &FlowConfig) -> Vec<f64> {
    let rhs: Vec<f64> = ev.speed.iter().map(|q| -dt * q).collect();
    match cfg.scheme {
        Scheme::Explicit => rhs,
        Scheme::SemiImplicit => match surface.grid {
            SphereGrid::Axial { .. } => axial_implicit(&surface.grid, ev, dt, rhs),
            SphereGrid::LatLon { .. } => latlon_adi(&surface.grid, ev, dt, rhs),
        },
    }
}

fn axial_implicit(grid: &SphereGrid, ev: &NodeEval, dt: f64, rhs: Vec<f64>) -> Vec<f64> {
    let nt = grid.n_theta();
    let dth = grid.d_theta();
    let (mut a, mut b, mut c) = (vec![0.0; nt], vec![0.0; nt], vec![0.0; nt]);
    for j in 0..nt {
        let [gm, gt, _] = ev.coeff[j];
        let th = grid.theta(j);
        let cot = th.cos() / th.sin();
        // dQ = gm dr_merid + gt dr_tang
        let up = gm / (dth * dth) + gt * cot / (2.0 * dth);
        let dn = gm / (dth * dth) - gt * cot / (2.0 * dth);
        let mut diag = -2.0 * gm / (dth * dth) + gm + gt;
        if j == 0 {
            diag += dn;
        } else {
            a[j] = dt * dn;
        }
        if j == nt - 1 {
            diag += up;
        } else {
            c[j] = dt * up;
        }
        b[j] = 1.0 + dt * diag;
    }
    solve_tridiagonal(&a, &b, &c, rhs)
}

fn latlon_adi(grid: &SphereGrid, ev: &NodeEval, dt: f64, rhs: Vec<f64>) -> Vec<f64> {
    let (nt, np) = (grid.n_theta(), grid.len() / grid.n_theta());
    let dth = grid.d_theta();
    let dph = grid.d_phi().unwrap();
    let mut y = rhs;
    // great circles through both poles
    for i in 0..np / 2 {
        let ii = i + np / 2;
        let nodes: Vec<(usize, bool)> = (0..nt)
            .map(|j| (j * np + i, true))
            .chain((0..nt).rev().map(|j| (j * np + ii, false)))
            .collect();
        let m = nodes.len();
        let (mut a, mut b, mut c, mut r) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for (p, &(node, forward)) in nodes.iter().enumerate() {
            let [ctt, _, cpp] = ev.coeff[node];
            let th = grid.theta(node / np);
            let cot = th.cos() / th.sin();
            let up = ctt / (dth * dth) + cpp * cot / (2.0 * dth);
            let dn = ctt / (dth * dth) - cpp * cot / (2.0 * dth);
            let (next, prev) = if forward { (up, dn) } else { (dn, up) };
            a[p] = dt * prev;
            c[p] = dt * next;
            b[p] = 1.0 + dt * (-2.0 * ctt / (dth * dth) + ctt + cpp);
            r[p] = y[node];
        }
        let x = solve_cyclic(&a, &b, &c, r);
        for (p, &(node, _)) in nodes.iter().enumerate() {
            y[node] = x[p];
        }
    }
    // latitude rings
    let mut out = y.clone();
    for j in 0..nt {
        let s = grid.theta(j).sin();
        let (mut a, mut b, mut c) = (vec![0.0; np], vec![0.0; np], vec![0.0; np]);
        for i in 0..np {
            let [_, _, cpp] = ev.coeff[j * np + i];
            let w = cpp / (s * s * dph * dph);
            a[i] = dt * w;
            c[i] = dt * w;
            b[i] = 1.0 - 2.0 * dt * w;
        }
        let x = solve_cyclic(&a, &b, &c, y[j * np..(j + 1) * np].to_vec());
        out[j * np..(j + 1) * np].copy_from_slice(&x);
    }
    out
}

/// Thomas algorithm; `a[0]` and `c[m-1]` are ignored.
fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], mut d: Vec<f64>) -> Vec<f64> {
    let m = b.len();
    let mut cp = vec![0.0; m];
    let mut den = b[0];
    cp[0] = c[0] / den;
    d[0] /= den;
    for i in 1..m {
        den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        d[i] = (d[i] - a[i] * d[i - 1]) / den;
    }
    for i in (0..m - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
    d
}

/// Periodic tridiagonal solve (Sherman-Morrison); row `p` couples `p-1`,
/// `p`, `p+1` modulo the length.
fn solve_cyclic(a: &[f64], b: &[f64], c: &[f64], d: Vec<f64>) -> Vec<f64> {
    let m = b.len();
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] -= gamma;
    bb[m - 1] -= a[0] * c[m - 1] / gamma;
    let x = solve_tridiagonal(a, &bb, c, d);
    let mut u = vec![0.0; m];
    u[0] = gamma;
    u[m - 1] = c[m - 1];
    let z = solve_tridiagonal(a, &bb, c, u);
    let fact = (x[0] + a[0] * x[m - 1] / gamma) / (1.0 + z[0] + a[0] * z[m - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_solver_matches_dense() {
        let m = 7;
        let a: Vec<f64> = (0..m).map(|i| -0.3 - 0.01 * i as f64).collect();
        let c: Vec<f64> = (0..m).map(|i| -0.2 + 0.02 * i as f64).collect();
        let b: Vec<f64> = (0..m).map(|i| 2.0 + 0.1 * i as f64).collect();
        let x: Vec<f64> = (0..m).map(|i| (i as f64).sin()).collect();
        let d: Vec<f64> = (0..m)
            .map(|p| a[p] * x[(p + m - 1) % m] + b[p] * x[p] + c[p] * x[(p + 1) % m])
            .collect();
        let got = solve_cyclic(&a, &b, &c, d);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-13);
        }
    }
}

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{FlatSideError, PressureProfile};
use crate::convexgeom::{graph_curvatures, second_fundamental_form_generic, GraphJet};
use crate::dual::Real;
use crate::numeric::fit_slope;

/// Second-order jet of `x₁ = f(z, x̄)` at one point. Tangential indices run
/// over `x̄ = (x₂, …, x_n)` and are stored from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FJet {
    pub z: f64,
    pub xbar: Vec<f64>,
    pub f: f64,
    pub f_z: f64,
    pub f_x: Vec<f64>,
    pub f_zz: f64,
    pub f_zx: Vec<f64>,
    pub f_xx: DMatrix<f64>,
}

impl FJet {
    pub fn n(&self) -> usize {
        self.xbar.len() + 1
    }

    /// The (★★) matrix `[[-z^{3/2} f_zz, z^{3/4} f_zi], [z^{3/4} f_zi, -f_ij]]`.
    pub fn starstar_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let z34 = self.z.powf(0.75);
        DMatrix::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => -self.z.powf(1.5) * self.f_zz,
            (0, j) => z34 * self.f_zx[j - 1],
            (i, 0) => z34 * self.f_zx[i - 1],
            (i, j) => -self.f_xx[(i - 1, j - 1)],
        })
    }
}

/// `f = c0 + a√z − Σ c_i x_i²/2 + √z Σ d_i x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJet {
    pub c0: f64,
    pub a: f64,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

pub fn model_jet(m: &ModelJet, z: f64, xbar: &[f64]) -> FJet {
    let nb = xbar.len();
    let d = |i: usize| m.d.get(i).copied().unwrap_or(0.0);
    let c = |i: usize| m.c.get(i).copied().unwrap_or(0.0);
    let sz = z.sqrt();
    let lin: f64 = (0..nb).map(|i| d(i) * xbar[i]).sum();
    let quad: f64 = (0..nb).map(|i| c(i) * xbar[i] * xbar[i]).sum();
    FJet {
        z,
        xbar: xbar.to_vec(),
        f: m.c0 + m.a * sz - 0.5 * quad + sz * lin,
        f_z: (m.a + lin) / (2.0 * sz),
        f_x: (0..nb).map(|i| -c(i) * xbar[i] + d(i) * sz).collect(),
        f_zz: -(m.a + lin) / (4.0 * z * sz),
        f_zx: (0..nb).map(|i| d(i) / (2.0 * sz)).collect(),
        f_xx: DMatrix::from_fn(nb, nb, |i, j| if i == j { -c(i) } else { 0.0 }),
    }
}

/// Jet of `u` at `(f, x̄)` from the jet of its inverse `f`.
pub(crate) fn u_jet_from_f<T: Real>(f_z: T, f_x: &[T], f_zz: T, f_zx: &[T], f_xx: &[Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
    let nb = f_x.len();
    let n = nb + 1;
    let fz2 = f_z * f_z;
    let fz3 = fz2 * f_z;
    let mut du = vec![T::cst(0.0); n];
    let mut d2u = vec![vec![T::cst(0.0); n]; n];
    du[0] = T::cst(1.0) / f_z;
    d2u[0][0] = -f_zz / fz3;
    for i in 0..nb {
        du[i + 1] = -f_x[i] / f_z;
        let m = f_x[i] * f_zz / fz3 - f_zx[i] / fz2;
        d2u[0][i + 1] = m;
        d2u[i + 1][0] = m;
        for j in 0..nb {
            d2u[i + 1][j + 1] = -f_xx[i][j] / f_z - f_zz * f_x[i] * f_x[j] / fz3
                + (f_x[i] * f_zx[j] + f_x[j] * f_zx[i]) / fz2;
        }
    }
    (du, d2u)
}

/// `b_ij = a_ij v f_z`, with `a_ij` the second fundamental form of the graph
/// of `u` and `v = √(1 + |Du|²)`.
pub(crate) fn b_matrix_generic<T: Real>(f_z: T, f_x: &[T], f_zz: T, f_zx: &[T], f_xx: &[Vec<T>]) -> Vec<Vec<T>> {
    let (du, d2u) = u_jet_from_f(f_z, f_x, f_zz, f_zx, f_xx);
    let a = second_fundamental_form_generic(&du, &d2u);
    let v = du.iter().fold(T::cst(1.0), |acc, &d| acc + d * d).sqrt();
    let s = v * f_z;
    a.into_iter().map(|row| row.into_iter().map(|x| x * s).collect()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BMatrix {
    pub jet: FJet,
    pub b: DMatrix<f64>,
    /// Leading-order entries as `f_z → ∞`.
    pub asymptotic: DMatrix<f64>,
    /// Second fundamental form of the graph of `u` at the same point.
    pub a: DMatrix<f64>,
    pub v: f64,
}

pub fn assemble_b_matrix(jet: &FJet) -> Result<BMatrix, FlatSideError> {
    if !(jet.f_z != 0.0) || !jet.f_z.is_finite() {
        return Err(FlatSideError::DegenerateChart { f_z: jet.f_z });
    }
    let n = jet.n();
    let nb = n - 1;
    let fxx: Vec<Vec<f64>> = (0..nb).map(|i| (0..nb).map(|j| jet.f_xx[(i, j)]).collect()).collect();
    let (du, d2u) = u_jet_from_f(jet.f_z, &jet.f_x, jet.f_zz, &jet.f_zx, &fxx);
    let a = second_fundamental_form_generic(&du, &d2u);
    let v = (1.0 + du.iter().map(|d| d * d).sum::<f64>()).sqrt();
    let a = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let b = &a * (v * jet.f_z);
    let (fz, fzz) = (jet.f_z, jet.f_zz);
    let asym = DMatrix::from_fn(n, n, |i, j| match (i, j) {
        (0, 0) => -fzz / (fz * fz),
        (0, j) | (j, 0) => -jet.f_zx[j - 1] / fz + jet.f_x[j - 1] * fzz / (fz * fz),
        (i, j) => {
            let (p, q) = (i - 1, j - 1);
            -jet.f_xx[(p, q)] + (jet.f_x[p] * jet.f_zx[q] + jet.f_x[q] * jet.f_zx[p]) / fz
                - jet.f_x[p] * jet.f_x[q] * fzz / (fz * fz)
        }
    });
    Ok(BMatrix {
        jet: jet.clone(),
        b,
        asymptotic: asym,
        a,
        v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarStarReport {
    pub lambda_bar: f64,
    /// `(z, smallest eigenvalue)` per jet.
    pub per_z: Vec<(f64, f64)>,
    pub min_eig: f64,
    pub holds: bool,
}

pub fn check_starstar(jets: &[FJet], lambda_bar: f64) -> StarStarReport {
    let per_z: Vec<(f64, f64)> = jets
        .iter()
        .map(|j| {
            let ev = SymmetricEigen::new(j.starstar_matrix()).eigenvalues;
            (j.z, ev.iter().copied().fold(f64::INFINITY, f64::min))
        })
        .collect();
    let min_eig = per_z.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    StarStarReport {
        lambda_bar,
        per_z,
        min_eig,
        holds: min_eig >= lambda_bar,
    }
}

/// Geometric grid from `z_max` down to `z_min`, both included, with ratio
/// as close to `0.8` as the endpoints allow.
pub fn geometric_z_grid(z_max: f64, z_min: f64) -> Vec<f64> {
    if !(z_min > 0.0) || !(z_max > z_min) {
        return if z_max > 0.0 { vec![z_max] } else { Vec::new() };
    }
    let steps = ((z_min / z_max).ln() / 0.8f64.ln()).round().max(1.0) as usize;
    let q = (z_min / z_max).powf(1.0 / steps as f64);
    let mut out: Vec<f64> = (0..steps).map(|j| z_max * q.powi(j as i32)).collect();
    out.push(z_min);
    out
}

fn cubic(xs: &[f64], ys: &[f64], x: f64) -> (f64, f64, f64) {
    // Newton form through four points
    let mut c = [ys[0], ys[1], ys[2], ys[3]];
    for lvl in 1..4 {
        for i in (lvl..4).rev() {
            c[i] = (c[i] - c[i - 1]) / (xs[i] - xs[i - lvl]);
        }
    }
    let (d0, d1, d2) = (x - xs[0], x - xs[1], x - xs[2]);
    let w2 = d0 * d1;
    let w2p = d0 + d1;
    let w3 = w2 * d2;
    let w3p = w2p * d2 + w2;
    let w3pp = 2.0 * d2 + 2.0 * w2p;
    (
        c[0] + c[1] * d0 + c[2] * w2 + c[3] * w3,
        c[1] + c[2] * w2p + c[3] * w3p,
        2.0 * c[2] + c[3] * w3pp,
    )
}

/// Local cubic interpolant of `g` on `[rho, r_max]` and its inverse.
struct Profile<'a> {
    p: &'a PressureProfile,
}

impl Profile<'_> {
    fn window(&self, r: f64) -> usize {
        let m = self.p.nodes() - 1;
        let j = ((r - self.p.rho) / self.p.dr()).floor().max(0.0) as usize;
        j.saturating_sub(1).min(m - 3)
    }

    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let w = self.window(r);
        let xs: Vec<f64> = (w..w + 4).map(|j| self.p.r(j)).collect();
        cubic(&xs, &self.p.g[w..w + 4], r)
    }

    /// Radius with `g(r) = √z`.
    fn invert(&self, z: f64) -> Result<f64, FlatSideError> {
        let target = z.sqrt();
        let g = &self.p.g;
        let mut j = 0;
        while j + 1 < g.len() && g[j + 1] <= target {
            if g[j + 1] <= g[j] {
                return Err(FlatSideError::Inversion { z });
            }
            j += 1;
        }
        if j + 1 == g.len() || g[j + 1] <= g[j] {
            return Err(FlatSideError::Inversion { z });
        }
        let (mut lo, mut hi) = (self.p.r(j), self.p.r(j + 1));
        let mut r = lo + (target - g[j]) / (g[j + 1] - g[j]) * (hi - lo);
        for _ in 0..100 {
            let (v, d, _) = self.eval(r);
            let e = v - target;
            if e > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let step = if d > 0.0 { r - e / d } else { f64::NAN };
            let next = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
            if (next - r).abs() <= 1e-15 * r.abs().max(1.0) {
                return Ok(next);
            }
            r = next;
        }
        Ok(r)
    }
}

/// Chart jet at one point, from the identities and from direct differencing.
#[derive(Debug, Clone, PartialEq)]
pub struct FChartSample {
    pub jet: FJet,
    /// Same jet by centred differences of the inverted profile.
    pub direct: FJet,
    /// `u_{x₁} f_z`, one up to rounding.
    pub identity_product: f64,
    /// Largest relative discrepancy between `jet` and `direct`.
    pub direct_mismatch: f64,
}

/// Inverts `z = u(x₁, x̄)` for the profile and returns the chart jet at `(z, x̄)`.
pub fn graph_to_f(p: &PressureProfile, z: f64, xbar: &[f64]) -> Result<FChartSample, FlatSideError> {
    if !p.has_flat_side() {
        return Err(FlatSideError::Config("profile has no flat side".into()));
    }
    if xbar.len() + 1 != p.n {
        return Err(FlatSideError::Config(format!("x̄ needs {} components", p.n - 1)));
    }
    if !(z > 0.0) {
        return Err(FlatSideError::Domain(format!("z must be positive, got {z}")));
    }
    let prof = Profile { p };
    let nb = xbar.len();
    let xb2: f64 = xbar.iter().map(|x| x * x).sum();
    let r = prof.invert(z)?;
    if r * r <= xb2 {
        return Err(FlatSideError::Domain("x̄ lies outside the level set".into()));
    }
    let x1 = (r * r - xb2).sqrt();
    // jet of u = G(|x|)² at x = (x1, x̄)
    let (gv, gp, gpp) = prof.eval(r);
    let u_r = 2.0 * gv * gp;
    let u_rr = 2.0 * gp * gp + 2.0 * gv * gpp;
    let x: Vec<f64> = std::iter::once(x1).chain(xbar.iter().copied()).collect();
    let n = nb + 1;
    let du: Vec<f64> = x.iter().map(|xi| u_r * xi / r).collect();
    let d2u = DMatrix::from_fn(n, n, |i, j| {
        let e = x[i] * x[j] / (r * r);
        u_rr * e + u_r / r * (if i == j { 1.0 } else { 0.0 } - e)
    });
    let u1 = du[0];
    if !(u1 > 0.0) {
        return Err(FlatSideError::Inversion { z });
    }
    let f_z = 1.0 / u1;
    let f_x: Vec<f64> = (0..nb).map(|i| -du[i + 1] / u1).collect();
    let u11 = d2u[(0, 0)];
    let f_zz = -u11 * f_z.powi(3);
    let f_zx: Vec<f64> = (0..nb)
        .map(|i| -f_z * f_z * (u11 * f_x[i] + d2u[(0, i + 1)]))
        .collect();
    let f_xx = DMatrix::from_fn(nb, nb, |i, j| {
        -(u11 * f_x[i] * f_x[j] + d2u[(0, j + 1)] * f_x[i] + d2u[(0, i + 1)] * f_x[j] + d2u[(i + 1, j + 1)]) / u1
    });
    let jet = FJet {
        z,
        xbar: xbar.to_vec(),
        f: x1,
        f_z,
        f_x,
        f_zz,
        f_zx,
        f_xx,
    };
    let direct = direct_jet(&prof, z, xbar)?;
    let mismatch = jet_mismatch(&jet, &direct);
    Ok(FChartSample {
        identity_product: u1 * jet.f_z,
        jet,
        direct,
        direct_mismatch: mismatch,
    })
}

fn direct_jet(prof: &Profile, z: f64, xbar: &[f64]) -> Result<FJet, FlatSideError> {
    let nb = xbar.len();
    let f = |z: f64, xb: &[f64]| -> Result<f64, FlatSideError> {
        let r = prof.invert(z)?;
        Ok((r * r - xb.iter().map(|x| x * x).sum::<f64>()).sqrt())
    };
    let hz = 1e-3 * z;
    let hx = 1e-4;
    let shift = |i: usize, d: f64| -> Vec<f64> {
        let mut v = xbar.to_vec();
        v[i] += d;
        v
    };
    let f0 = f(z, xbar)?;
    let (fzp, fzm) = (f(z + hz, xbar)?, f(z - hz, xbar)?);
    let mut f_x = vec![0.0; nb];
    let mut f_zx = vec![0.0; nb];
    let mut f_xx = DMatrix::zeros(nb, nb);
    for i in 0..nb {
        let (p, m) = (shift(i, hx), shift(i, -hx));
        let (fp, fm) = (f(z, &p)?, f(z, &m)?);
        f_x[i] = (fp - fm) / (2.0 * hx);
        f_xx[(i, i)] = (fp - 2.0 * f0 + fm) / (hx * hx);
        f_zx[i] = (f(z + hz, &p)? - f(z + hz, &m)? - f(z - hz, &p)? + f(z - hz, &m)?) / (4.0 * hz * hx);
        for j in 0..i {
            let pp = {
                let mut v = p.clone();
                v[j] += hx;
                v
            };
            let pm = {
                let mut v = p.clone();
                v[j] -= hx;
                v
            };
            let mp = {
                let mut v = m.clone();
                v[j] += hx;
                v
            };
            let mm = {
                let mut v = m.clone();
                v[j] -= hx;
                v
            };
            let val = (f(z, &pp)? - f(z, &pm)? - f(z, &mp)? + f(z, &mm)?) / (4.0 * hx * hx);
            f_xx[(i, j)] = val;
            f_xx[(j, i)] = val;
        }
    }
    Ok(FJet {
        z,
        xbar: xbar.to_vec(),
        f: f0,
        f_z: (fzp - fzm) / (2.0 * hz),
        f_x,
        f_zz: (fzp - 2.0 * f0 + fzm) / (hz * hz),
        f_zx,
        f_xx,
    })
}

fn jet_mismatch(a: &FJet, b: &FJet) -> f64 {
    let rel = |x: f64, y: f64, scale: f64| (x - y).abs() / scale.max(x.abs()).max(1e-300);
    let mut worst = rel(a.f, b.f, 1.0).max(rel(a.f_z, b.f_z, 1.0)).max(rel(a.f_zz, b.f_zz, 1.0));
    let sx = 1.0 + a.f_x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let szx = 1.0 + a.f_zx.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let sxx = 1.0 + a.f_xx.amax();
    for i in 0..a.f_x.len() {
        worst = worst.max(rel(a.f_x[i], b.f_x[i], sx)).max(rel(a.f_zx[i], b.f_zx[i], szx));
        for j in 0..a.f_x.len() {
            worst = worst.max(rel(a.f_xx[(i, j)], b.f_xx[(i, j)], sxx));
        }
    }
    worst
}

/// Chart jets along `geometric_z_grid(z_max, z_min)` at fixed `x̄`.
pub fn f_chart_sweep(
    p: &PressureProfile,
    xbar: &[f64],
    z_max: f64,
    z_min: f64,
) -> Result<Vec<FChartSample>, FlatSideError> {
    geometric_z_grid(z_max, z_min)
        .into_iter()
        .map(|z| graph_to_f(p, z, xbar))
        .collect()
}

/// Chart jets approaching the interface point `x̄ = 0` along
/// `x̄ = x̄_ref √(z / z_max)`, on `geometric_z_grid(z_max, z_min)`.
pub fn f_chart_approach(
    p: &PressureProfile,
    xbar_ref: &[f64],
    z_max: f64,
    z_min: f64,
) -> Result<Vec<FChartSample>, FlatSideError> {
    geometric_z_grid(z_max, z_min)
        .into_iter()
        .map(|z| {
            let s = (z / z_max).sqrt();
            let xb: Vec<f64> = xbar_ref.iter().map(|x| x * s).collect();
            graph_to_f(p, z, &xb)
        })
        .collect()
}

/// Principal curvatures of the interface `x₁ = f(0, x̄)` at `x̄`, from
/// differences of the chart restricted to the flat side's boundary.
pub fn interface_curvatures(p: &PressureProfile, xbar: &[f64]) -> Result<Vec<f64>, FlatSideError> {
    let nb = xbar.len();
    if nb + 1 != p.n {
        return Err(FlatSideError::Config(format!("x̄ needs {} components", p.n - 1)));
    }
    if nb == 0 {
        return Ok(Vec::new());
    }
    // the interpolant vanishes exactly at the first node
    let r0 = p.rho;
    let f0 = |xb: &[f64]| -> f64 { (r0 * r0 - xb.iter().map(|x| x * x).sum::<f64>()).sqrt() };
    let h = 1e-4 * r0;
    let at = |d: &[(usize, f64)]| -> f64 {
        let mut v = xbar.to_vec();
        for &(i, s) in d {
            v[i] += s;
        }
        f0(&v)
    };
    let c = f0(xbar);
    let mut du = vec![0.0; nb];
    let mut d2u = DMatrix::zeros(nb, nb);
    for i in 0..nb {
        let (fp, fm) = (at(&[(i, h)]), at(&[(i, -h)]));
        du[i] = -(fp - fm) / (2.0 * h);
        d2u[(i, i)] = -(fp - 2.0 * c + fm) / (h * h);
        for j in 0..i {
            let v = -(at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)])
                + at(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            d2u[(i, j)] = v;
            d2u[(j, i)] = v;
        }
    }
    let jet = GraphJet::new(du, d2u).map_err(|e| FlatSideError::Domain(e.to_string()))?;
    Ok(graph_curvatures(&jet))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub z: Vec<f64>,
    pub sqrt_z_lambda1: Vec<f64>,
    pub mu: f64,
    pub nu: f64,
    /// `nu / mu`.
    pub band_ratio: f64,
    /// `max_{i≥2} |λ_i + f_ii|` after matching, per `z`.
    pub tangential_gap: Vec<f64>,
    pub gap_monotone: bool,
    /// Log-log slope of the gap against `z`, when every gap is positive.
    pub gap_slope: Option<f64>,
    /// Eigenvalues `λ_2..λ_n` at the smallest `z`, ascending.
    pub limiting_tangential: Vec<f64>,
    pub interface_curvatures: Vec<f64>,
    pub interface_rel_err: f64,
    pub failures: Vec<String>,
}

/// Largest single mismatch of the assignment with the smallest total mismatch.
fn best_assignment(lams: &[f64], targets: &[f64]) -> f64 {
    let m = lams.len();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = (f64::INFINITY, f64::INFINITY);
    permute(&mut perm, 0, &mut |p| {
        let diffs: Vec<f64> = (0..m).map(|i| (lams[i] - targets[p[i]]).abs()).collect();
        let sum: f64 = diffs.iter().sum();
        if sum < best.0 {
            best = (sum, diffs.iter().copied().fold(0.0, f64::max));
        }
    });
    best.1
}

fn permute(p: &mut Vec<usize>, i: usize, visit: &mut dyn FnMut(&[usize])) {
    if i == p.len() {
        visit(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute(p, i + 1, visit);
        p.swap(i, j);
    }
}

/// Eigenvalue behaviour of `b` along a sweep ordered towards `z = 0`.
pub fn eigen_asymptotics_check(series: &[BMatrix], interface: &[f64]) -> EigenReport {
    let mut rep = EigenReport {
        z: Vec::new(),
        sqrt_z_lambda1: Vec::new(),
        mu: f64::NAN,
        nu: f64::NAN,
        band_ratio: f64::NAN,
        tangential_gap: Vec::new(),
        gap_monotone: false,
        gap_slope: None,
        limiting_tangential: Vec::new(),
        interface_curvatures: interface.to_vec(),
        interface_rel_err: f64::NAN,
        failures: Vec::new(),
    };
    for bm in series {
        if bm.b.iter().any(|x| !x.is_finite()) {
            rep.failures.push(format!("non-finite b at z={:e}", bm.jet.z));
            continue;
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(bm.b.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let z = bm.jet.z;
        rep.z.push(z);
        rep.sqrt_z_lambda1.push(z.sqrt() * ev[0]);
        let targets: Vec<f64> = (0..bm.jet.xbar.len()).map(|i| -bm.jet.f_xx[(i, i)]).collect();
        rep.tangential_gap.push(if targets.is_empty() {
            0.0
        } else {
            best_assignment(&ev[1..], &targets)
        });
        let mut tail = ev[1..].to_vec();
        tail.sort_by(f64::total_cmp);
        rep.limiting_tangential = tail;
    }
    if rep.z.is_empty() {
        return rep;
    }
    rep.mu = rep.sqrt_z_lambda1.iter().copied().fold(f64::INFINITY, f64::min);
    rep.nu = rep.sqrt_z_lambda1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rep.band_ratio = rep.nu / rep.mu;
    let ordered = rep.z.windows(2).all(|w| w[1] < w[0]);
    rep.gap_monotone = ordered && rep.tangential_gap.windows(2).all(|w| w[1] <= w[0]);
    if rep.tangential_gap.iter().all(|g| *g > 0.0) && rep.z.len() >= 2 {
        let lz: Vec<f64> = rep.z.iter().map(|z| z.ln()).collect();
        let lg: Vec<f64> = rep.tangential_gap.iter().map(|g| g.ln()).collect();
        rep.gap_slope = fit_slope(&lz, &lg).ok();
    }
    let mut iface = interface.to_vec();
    iface.sort_by(f64::total_cmp);
    if iface.len() == rep.limiting_tangential.len() && !iface.is_empty() {
        rep.interface_rel_err = iface
            .iter()
            .zip(&rep.limiting_tangential)
            .map(|(k, l)| ((l - k) / k).abs())
            .fold(0.0, f64::max);
    }
    rep
}

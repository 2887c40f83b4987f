//! Linearization of the chart equation `f_t = -Q_k(b)` and checks of its
//! degenerate structure near the interface, plus evolution residuals of
//! curvature quantities along a computed flow.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convexgeom::{radii_matrix, RadiiMatrix};
use crate::dual::Dual;
use crate::flatside::{assemble_b_matrix, b_matrix_generic, FJet, FlatSideError, SingularMetricPoint};
use crate::flowcore::{evaluate, nodal_speed, FlowError, FlowTrace};
use crate::numeric::{fit_slope, polyfit};
use crate::symfun::{qk_gradient, CurvatureVector, SymfunError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearizationError {
    #[error("eigenvalues {0:e} and {1:e} are too close for the minors formula")]
    RepeatedEigenvalue(f64, f64),
    #[error("k={k} is out of range for n={n}")]
    BadK { n: usize, k: usize },
    #[error("trace holds fewer than two snapshots")]
    NoSnapshots,
    #[error(transparent)]
    Chart(#[from] FlatSideError),
    #[error(transparent)]
    Symfun(#[from] SymfunError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Minors,
    FiniteDifference,
}

/// `F(jet) = -Q_k(b)` linearized as `Σ a_ij D_ij + Σ b_i D_i + c`, with
/// index 0 standing for `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedCoefficients {
    pub k: usize,
    pub at: SingularMetricPoint,
    pub method: Method,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

/// Jet entries in a fixed order: `f_z, f_i…, f_zz, f_zi…, f_ij (i ≤ j)…`.
#[derive(Clone, Copy)]
enum Slot {
    Z,
    X(usize),
    ZZ,
    ZX(usize),
    XX(usize, usize),
}

fn slots(nb: usize) -> Vec<Slot> {
    let mut s = vec![Slot::Z];
    s.extend((0..nb).map(Slot::X));
    s.push(Slot::ZZ);
    s.extend((0..nb).map(Slot::ZX));
    for i in 0..nb {
        for j in i..nb {
            s.push(Slot::XX(i, j));
        }
    }
    s
}

fn value_of(jet: &FJet, s: Slot) -> f64 {
    match s {
        Slot::Z => jet.f_z,
        Slot::X(i) => jet.f_x[i],
        Slot::ZZ => jet.f_zz,
        Slot::ZX(i) => jet.f_zx[i],
        Slot::XX(i, j) => jet.f_xx[(i, j)],
    }
}

fn perturbed(jet: &FJet, s: Slot, d: f64) -> FJet {
    let mut j = jet.clone();
    match s {
        Slot::Z => j.f_z += d,
        Slot::X(i) => j.f_x[i] += d,
        Slot::ZZ => j.f_zz += d,
        Slot::ZX(i) => j.f_zx[i] += d,
        Slot::XX(a, b) => {
            j.f_xx[(a, b)] += d;
            if a != b {
                j.f_xx[(b, a)] += d;
            }
        }
    }
    j
}

/// `∂b/∂(slot)` by forward-mode differentiation.
fn db_dslot(jet: &FJet, s: Slot) -> DMatrix<f64> {
    let nb = jet.xbar.len();
    let seed = |t: Slot| -> f64 {
        match (s, t) {
            (Slot::Z, Slot::Z) | (Slot::ZZ, Slot::ZZ) => 1.0,
            (Slot::X(a), Slot::X(b)) | (Slot::ZX(a), Slot::ZX(b)) if a == b => 1.0,
            (Slot::XX(a, b), Slot::XX(c, d)) if (a, b) == (c, d) || (a, b) == (d, c) => 1.0,
            _ => 0.0,
        }
    };
    let d = |v: f64, t: Slot| Dual::new(v, seed(t));
    let fz = d(jet.f_z, Slot::Z);
    let fx: Vec<Dual> = (0..nb).map(|i| d(jet.f_x[i], Slot::X(i))).collect();
    let fzz = d(jet.f_zz, Slot::ZZ);
    let fzx: Vec<Dual> = (0..nb).map(|i| d(jet.f_zx[i], Slot::ZX(i))).collect();
    let fxx: Vec<Vec<Dual>> = (0..nb)
        .map(|i| (0..nb).map(|j| d(jet.f_xx[(i, j)], Slot::XX(i.min(j), i.max(j)))).collect())
        .collect();
    let b = b_matrix_generic(fz, &fx, fzz, &fzx, &fxx);
    DMatrix::from_fn(nb + 1, nb + 1, |i, j| b[i][j].eps)
}

fn cofactors(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    DMatrix::from_fn(n, n, |i, j| {
        let minor = m.clone().remove_row(i).remove_column(j);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

/// Sum of the principal `k × k` minors, i.e. `S_k` of the eigenvalues.
fn principal_minor_sum(m: &DMatrix<f64>, k: usize) -> f64 {
    fn rec(m: &DMatrix<f64>, k: usize, start: usize, idx: &mut Vec<usize>, acc: &mut f64) {
        if idx.len() == k {
            *acc += m.select_rows(idx.iter()).select_columns(idx.iter()).determinant();
            return;
        }
        for i in start..m.nrows() {
            idx.push(i);
            rec(m, k, i + 1, idx, acc);
            idx.pop();
        }
    }
    if k == 0 {
        return 1.0;
    }
    let mut acc = 0.0;
    rec(m, k, 0, &mut Vec::with_capacity(k), &mut acc);
    acc
}

/// Right-hand side `-Q_k(b)` of the chart equation. Principal minors keep
/// the relative accuracy that an eigen-solve loses once `λ₁` dominates.
pub fn chart_speed(jet: &FJet, k: usize) -> Result<f64, LinearizationError> {
    let b = assemble_b_matrix(jet)?.b;
    let den = principal_minor_sum(&b, k - 1);
    if !(den > 0.0) {
        return Err(LinearizationError::Symfun(SymfunError::DegenerateDenominator {
            k,
            denominator: den,
            lambda: SymmetricEigen::new(b).eigenvalues.iter().copied().collect(),
        }));
    }
    Ok(-principal_minor_sum(&b, k) / den)
}

fn assemble(jet: &FJet, k: usize, method: Method, grad: impl Fn(Slot) -> Result<f64, LinearizationError>) -> Result<LinearizedCoefficients, LinearizationError> {
    let nb = jet.xbar.len();
    let n = nb + 1;
    let mut a = DMatrix::zeros(n, n);
    let mut b = vec![0.0; n];
    for s in slots(nb) {
        let g = grad(s)?;
        match s {
            Slot::Z => b[0] = g,
            Slot::X(i) => b[i + 1] = g,
            Slot::ZZ => a[(0, 0)] = g,
            Slot::ZX(i) => {
                a[(0, i + 1)] = 0.5 * g;
                a[(i + 1, 0)] = 0.5 * g;
            }
            Slot::XX(i, j) if i == j => a[(i + 1, i + 1)] = g,
            Slot::XX(i, j) => {
                a[(i + 1, j + 1)] = 0.5 * g;
                a[(j + 1, i + 1)] = 0.5 * g;
            }
        }
    }
    Ok(LinearizedCoefficients {
        k,
        at: SingularMetricPoint::new(jet.z, jet.xbar.clone()),
        method,
        a,
        b,
        // the equation does not see f itself
        c: 0.0,
    })
}

pub fn linearized_coefficients(jet: &FJet, k: usize, method: Method) -> Result<LinearizedCoefficients, LinearizationError> {
    let n = jet.n();
    if k < 1 || k > n {
        return Err(LinearizationError::BadK { n, k });
    }
    match method {
        Method::FiniteDifference => assemble(jet, k, method, |s| {
            let h = 1e-6 * (1.0 + value_of(jet, s).abs());
            let p = chart_speed(&perturbed(jet, s, h), k)?;
            let m = chart_speed(&perturbed(jet, s, -h), k)?;
            Ok((p - m) / (2.0 * h))
        }),
        Method::Minors => {
            let bm = assemble_b_matrix(jet)?;
            let mut lam: Vec<f64> = SymmetricEigen::new(bm.b.clone()).eigenvalues.iter().copied().collect();
            lam.sort_by(|a, b| b.total_cmp(a));
            for w in lam.windows(2) {
                if (w[0] - w[1]).abs() < 1e-8 * w[0].abs().max(1.0) {
                    return Err(LinearizationError::RepeatedEigenvalue(w[0], w[1]));
                }
            }
            let dq = qk_gradient(&CurvatureVector::new(lam.clone())?, k)?.gradient;
            let adj: Vec<DMatrix<f64>> = lam
                .iter()
                .map(|&l| cofactors(&(&bm.b - DMatrix::identity(n, n) * l)))
                .collect();
            assemble(jet, k, method, |s| {
                let db = db_dslot(jet, s);
                let mut total = 0.0;
                for (p, m) in adj.iter().enumerate() {
                    let dl = m.component_mul(&db).sum() / m.trace();
                    total += dq[p] * dl;
                }
                Ok(-total)
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodAgreement {
    pub max_rel_a: f64,
    pub max_rel_b: f64,
}

/// Relative disagreement of two coefficient sets; off-diagonal entries are
/// measured against `√(a_ii a_jj)`.
pub fn compare_methods(x: &LinearizedCoefficients, y: &LinearizedCoefficients) -> MethodAgreement {
    let n = x.a.nrows();
    let mut ra: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let scale = if i == j {
                x.a[(i, i)].abs()
            } else {
                x.a[(i, j)].abs().max((x.a[(i, i)] * x.a[(j, j)]).abs().sqrt())
            };
            ra = ra.max((x.a[(i, j)] - y.a[(i, j)]).abs() / scale.max(1e-300));
        }
    }
    let bmax = x.b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let rb = x
        .b
        .iter()
        .zip(&y.b)
        .map(|(p, q)| (p - q).abs() / p.abs().max(1e-8 * bmax).max(1e-300))
        .fold(0.0, f64::max);
    MethodAgreement {
        max_rel_a: ra,
        max_rel_b: rb,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedDerivativeReport {
    pub z: Vec<f64>,
    /// `∂Q_k/∂λ₁` per sample, `λ₁` the largest eigenvalue.
    pub dq_dlambda1: Vec<f64>,
    /// Log-log slope of `∂Q_k/∂λ₁` against `z`.
    pub slope: f64,
    /// Bounds of `∂Q_k/∂λ_p`, `p ≥ 2`, over the sweep.
    pub c1: f64,
    pub c2: f64,
}

pub fn check_speed_derivative_bounds(
    series: &[(f64, Vec<f64>)],
    k: usize,
) -> Result<SpeedDerivativeReport, LinearizationError> {
    let mut rep = SpeedDerivativeReport {
        z: Vec::new(),
        dq_dlambda1: Vec::new(),
        slope: f64::NAN,
        c1: f64::INFINITY,
        c2: f64::NEG_INFINITY,
    };
    for (z, lam) in series {
        let mut lam = lam.clone();
        lam.sort_by(|a, b| b.total_cmp(a));
        let g = qk_gradient(&CurvatureVector::new(lam)?, k)?.gradient;
        rep.z.push(*z);
        rep.dq_dlambda1.push(g[0]);
        for v in &g[1..] {
            rep.c1 = rep.c1.min(*v);
            rep.c2 = rep.c2.max(*v);
        }
    }
    if rep.z.len() >= 2 && rep.dq_dlambda1.iter().all(|v| *v > 0.0) {
        let lz: Vec<f64> = rep.z.iter().map(|z| z.ln()).collect();
        let lq: Vec<f64> = rep.dq_dlambda1.iter().map(|q| q.ln()).collect();
        rep.slope = fit_slope(&lz, &lq).unwrap_or(f64::NAN);
    }
    Ok(rep)
}

/// Eigenvalues of `b` along a sweep, each sorted descending.
pub fn lambda_series(jets: &[FJet]) -> Result<Vec<(f64, Vec<f64>)>, LinearizationError> {
    jets.iter()
        .map(|j| {
            let bm = assemble_b_matrix(j)?;
            let mut l: Vec<f64> = SymmetricEigen::new(bm.b).eigenvalues.iter().copied().collect();
            l.sort_by(|a, b| b.total_cmp(a));
            Ok((j.z, l))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A11Report {
    pub z: Vec<f64>,
    pub a11: Vec<f64>,
    pub exponent: f64,
    pub r_squared: f64,
    pub inconclusive: bool,
    /// `min (a₁₁/z²) / (1/(2a(z)²))` with `a(z) = √z f_z`.
    pub min_bound_ratio: f64,
    pub bound_holds: bool,
}

pub fn check_a11_scaling(jets: &[FJet], k: usize) -> Result<A11Report, LinearizationError> {
    let mut z = Vec::new();
    let mut a11 = Vec::new();
    let mut ratio = f64::INFINITY;
    for j in jets {
        let c = linearized_coefficients(j, k, Method::FiniteDifference)?;
        let a = j.z.sqrt() * j.f_z;
        ratio = ratio.min((c.a[(0, 0)] / (j.z * j.z)) * 2.0 * a * a);
        z.push(j.z);
        a11.push(c.a[(0, 0)]);
    }
    let (exponent, r2) = if a11.iter().all(|v| *v > 0.0) && z.len() >= 3 {
        let lz: Vec<f64> = z.iter().map(|v: &f64| v.ln()).collect();
        let la: Vec<f64> = a11.iter().map(|v: &f64| v.ln()).collect();
        let c = polyfit(&lz, &la, 1).unwrap_or_else(|_| vec![f64::NAN; 2]);
        let mean = la.iter().sum::<f64>() / la.len() as f64;
        let ss_tot: f64 = la.iter().map(|v| (v - mean).powi(2)).sum();
        let ss_res: f64 = lz.iter().zip(&la).map(|(x, y)| (y - c[0] - c[1] * x).powi(2)).sum();
        (c[1], if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 })
    } else {
        (f64::NAN, 0.0)
    };
    Ok(A11Report {
        z,
        a11,
        exponent,
        r_squared: r2,
        inconclusive: !(r2 >= 0.99),
        min_bound_ratio: ratio,
        bound_holds: ratio >= 0.9,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiiReport {
    /// `(z, min_{i≥2} a_ii)` per jet.
    pub per_z: Vec<(f64, f64)>,
    /// Smallest tangential diagonal coefficient over the sweep.
    pub min_aii: f64,
    pub delta: f64,
    /// `min_aii ≥ delta`.
    pub holds: bool,
}

/// Checks `a_ii ≥ delta` for `i ≥ 2` along a sweep.
pub fn check_aii_lower_bound(jets: &[FJet], k: usize, delta: f64) -> Result<AiiReport, LinearizationError> {
    let mut per_z = Vec::new();
    for j in jets {
        let c = linearized_coefficients(j, k, Method::FiniteDifference)?;
        let m = (1..c.a.nrows()).map(|i| c.a[(i, i)]).fold(f64::INFINITY, f64::min);
        per_z.push((j.z, m));
    }
    let min_aii = per_z.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(AiiReport {
        per_z,
        min_aii,
        delta,
        holds: min_aii >= delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub t: f64,
    pub dt: f64,
    pub metric: f64,
    pub mean_curvature: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub samples: Vec<ResidualSample>,
    pub max_metric: f64,
    pub max_mean_curvature: f64,
    pub max_speed: f64,
}

fn as_matrix(m: RadiiMatrix) -> DMatrix<f64> {
    match m {
        RadiiMatrix::Planar { tt, tp, pp } => DMatrix::from_row_slice(2, 2, &[tt, tp, tp, pp]),
        RadiiMatrix::Axial { merid, tang, n } => {
            DMatrix::from_fn(n, n, |i, j| if i != j { 0.0 } else if i == 0 { merid } else { tang })
        }
    }
}

fn speed_of(w: &DMatrix<f64>, k: usize) -> Result<f64, LinearizationError> {
    let r: Vec<f64> = SymmetricEigen::new(w.clone()).eigenvalues.iter().copied().collect();
    Ok(nodal_speed(&r, k)?)
}

/// Compares forward differences between consecutive snapshots with the
/// evolution laws in the normal parametrization. With `h_t = -Q` the radii
/// matrix obeys `W_t = -(∇²Q + Q g)`; from it follow the rates of the
/// surface metric `W²`, of `H = tr W⁻¹` and of `Q_k(W)`.
pub fn residual_evolution_check(trace: &FlowTrace) -> Result<ResidualReport, LinearizationError> {
    if trace.snapshots.len() < 2 {
        return Err(LinearizationError::NoSnapshots);
    }
    let k = trace.k;
    let mut samples = Vec::new();
    for pair in trace.snapshots.windows(2) {
        let (s0, s1) = (&pair[0], &pair[1]);
        let dt = s1.t - s0.t;
        if !(dt > 0.0) {
            continue;
        }
        let (g, h0) = (s0.surface.grid, &s0.surface.h);
        // the support origin may move between snapshots
        let h1 = s1.surface.h_about(&s0.surface.origin);
        let q = evaluate(&s0.surface, k)?.speed;
        let mut rs = ResidualSample {
            t: s0.t,
            dt,
            metric: 0.0,
            mean_curvature: 0.0,
            speed: 0.0,
        };
        for node in 0..g.len() {
            let w0 = as_matrix(radii_matrix(&g, h0, node));
            let w1 = as_matrix(radii_matrix(&g, &h1, node));
            let wt = -as_matrix(radii_matrix(&g, &q, node));
            let dim = w0.nrows();
            let (Some(i0), Some(i1)) = (w0.clone().try_inverse(), w1.clone().try_inverse()) else {
                continue;
            };
            let met_fd = (&w1 * &w1 - &w0 * &w0) / dt;
            let met_rhs = &wt * &w0 + &w0 * &wt;
            let scale = 1.0 + met_rhs.amax();
            rs.metric = rs.metric.max((met_fd - met_rhs).amax() / scale);
            let h_fd = (i1.trace() - i0.trace()) / dt;
            let h_rhs = -(&i0 * &wt * &i0).trace();
            rs.mean_curvature = rs.mean_curvature.max((h_fd - h_rhs).abs() / (1.0 + h_rhs.abs()));
            let q_fd = (speed_of(&w1, k)? - speed_of(&w0, k)?) / dt;
            let eps = 1e-6 * (1.0 + w0.amax());
            let q_rhs = (speed_of(&(&w0 + &wt * eps), k)? - speed_of(&(&w0 - &wt * eps), k)?) / (2.0 * eps);
            rs.speed = rs.speed.max((q_fd - q_rhs).abs() / (1.0 + q_rhs.abs()));
            debug_assert_eq!(dim, w1.nrows());
        }
        samples.push(rs);
    }
    let mx = |f: fn(&ResidualSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(ResidualReport {
        max_metric: mx(|s| s.metric),
        max_mean_curvature: mx(|s| s.mean_curvature),
        max_speed: mx(|s| s.speed),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexgeom::{SphereGrid, SupportSurface};
    use crate::flatside::{geometric_z_grid, model_jet, ModelJet};
    use crate::flowcore::{run, FlowConfig};

    fn model() -> ModelJet {
        ModelJet {
            c0: 1.0,
            a: 0.5,
            c: vec![1.0, 1.5],
            d: vec![0.2, -0.1],
        }
    }

    #[test]
    fn methods_agree_on_model_jet() {
        for z in [1e-1, 1e-3, 1e-6] {
            let j = model_jet(&model(), z, &[0.0, 0.0]);
            let m = linearized_coefficients(&j, 2, Method::Minors).unwrap();
            let f = linearized_coefficients(&j, 2, Method::FiniteDifference).unwrap();
            let agr = compare_methods(&m, &f);
            assert!(agr.max_rel_a < 1e-5 && agr.max_rel_b < 1e-5, "z={z}: {agr:?}");
            assert!(m.a[(0, 0)] > 0.0 && m.a[(1, 1)] > 0.0 && m.a[(2, 2)] > 0.0);
            assert!((m.a.clone() - m.a.transpose()).amax() == 0.0);
        }
    }

    #[test]
    fn harmonic_case_matches_hand_formula() {
        // n = k = 2: Q = det b / tr b, so ∂Q/∂b_ij = (cof_ij tr b - det b δ_ij) / (tr b)²
        let j = model_jet(
            &ModelJet {
                c0: 1.0,
                a: 0.7,
                c: vec![1.3],
                d: vec![0.25],
            },
            0.02,
            &[0.1],
        );
        let c = linearized_coefficients(&j, 2, Method::Minors).unwrap();
        let b = assemble_b_matrix(&j).unwrap().b;
        let (tr, det) = (b.trace(), b.determinant());
        let cof = DMatrix::from_row_slice(2, 2, &[b[(1, 1)], -b[(0, 1)], -b[(1, 0)], b[(0, 0)]]);
        let dq = (cof * tr - DMatrix::identity(2, 2) * det) / (tr * tr);
        let db = db_dslot(&j, Slot::ZZ);
        let expect = -(dq.component_mul(&db)).sum();
        assert!((c.a[(0, 0)] - expect).abs() < 1e-10 * expect.abs());
    }

    #[test]
    fn sphere_jet_is_tangentially_isotropic() {
        let r = 2.0_f64;
        let z = 0.3_f64;
        let f = (r * r - (r - z).powi(2)).sqrt();
        let f_z = (r - z) / f;
        let jet = FJet {
            z,
            xbar: vec![0.0, 0.0],
            f,
            f_z,
            f_x: vec![0.0, 0.0],
            f_zz: (-1.0 - f_z * f_z) / f,
            f_zx: vec![0.0, 0.0],
            f_xx: DMatrix::identity(2, 2) * (-1.0 / f),
        };
        let c = linearized_coefficients(&jet, 2, Method::FiniteDifference).unwrap();
        assert!((c.a[(1, 1)] - c.a[(2, 2)]).abs() < 1e-8 * c.a[(1, 1)].abs());
        assert!(c.a[(1, 2)].abs() < 1e-8);
        assert!(matches!(
            linearized_coefficients(&jet, 2, Method::Minors),
            Err(LinearizationError::RepeatedEigenvalue(..))
        ));
    }

    #[test]
    fn speed_derivative_examples() {
        let series: Vec<(f64, Vec<f64>)> = geometric_z_grid(1e-3, 1e-8)
            .into_iter()
            .map(|z| (z, vec![z.powf(-0.5), 1.0, 1.0]))
            .collect();
        let rep = check_speed_derivative_bounds(&series, 2).unwrap();
        assert!((rep.slope - 1.0).abs() < 0.05, "{}", rep.slope);
        // ∂Q₂/∂λ₁ = 3/(λ₁ + 2)²
        for (z, q) in rep.z.iter().zip(&rep.dq_dlambda1) {
            let l = z.powf(-0.5);
            assert!((3.0 / (l + 2.0).powi(2) / q - 1.0).abs() < 1e-10);
        }

        let flat = check_speed_derivative_bounds(&[(1.0, vec![1.0; 3])], 2).unwrap();
        assert!((flat.c1 - flat.dq_dlambda1[0]).abs() < 1e-15 && flat.c1 == flat.c2);
    }

    #[test]
    fn a11_scales_like_z_squared() {
        let jets: Vec<FJet> = geometric_z_grid(1e-1, 1e-6)
            .into_iter()
            .map(|z| model_jet(&model(), z, &[0.0, 0.0]))
            .collect();
        let rep = check_a11_scaling(&jets, 2).unwrap();
        assert!((rep.exponent - 2.0).abs() < 0.1, "{}", rep.exponent);
        assert!(!rep.inconclusive && rep.bound_holds);
        let aii = check_aii_lower_bound(&jets, 2, 0.1).unwrap();
        assert!(aii.holds && aii.min_aii > 0.1);

        let interior = model_jet(&model(), 1.0, &[0.0, 0.0]);
        let c = linearized_coefficients(&interior, 2, Method::FiniteDifference).unwrap();
        assert!(c.a[(0, 0)] > 1e-3 && c.a[(0, 0)] < 10.0);
    }

    #[test]
    fn degenerate_jet_fails_the_aii_bound() {
        // an almost flat tangential direction
        let bad = ModelJet {
            c0: 1.0,
            a: 0.5,
            c: vec![1.0, 1e-4],
            d: vec![0.0, 0.0],
        };
        let jets: Vec<FJet> = geometric_z_grid(1e-2, 1e-4)
            .into_iter()
            .map(|z| model_jet(&bad, z, &[0.0, 0.0]))
            .collect();
        let rep = check_aii_lower_bound(&jets, 3, 1e-3).unwrap();
        assert!(!rep.holds && rep.min_aii < 1e-6);
    }

    #[test]
    fn sphere_residuals_shrink_with_snapshot_spacing() {
        let grid = SphereGrid::axial(2, 32).unwrap();
        let mut res = Vec::new();
        for spacing in [2e-3, 1e-3] {
            let mut cfg = FlowConfig::new(2, 1, 1e-4, 0.05, grid);
            cfg.snapshot_times = vec![0.02, 0.02 + spacing];
            let tr = run(&SupportSurface::sphere(grid, 1.0), &cfg).unwrap();
            let rep = residual_evolution_check(&tr).unwrap();
            res.push(rep);
        }
        for r in &res {
            assert!(r.max_metric < 1e-2 && r.max_mean_curvature < 1e-2 && r.max_speed < 1e-2, "{r:?}");
        }
        let ratio = res[1].max_speed / res[0].max_speed;
        assert!(ratio > 0.4 && ratio < 0.6, "{ratio}");
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FlatSideError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularMetricPoint {
    pub z: f64,
    pub xbar: Vec<f64>,
    #[serde(default)]
    pub t: f64,
}

impl SingularMetricPoint {
    pub fn new(z: f64, xbar: Vec<f64>) -> Self {
        Self { z, xbar, t: 0.0 }
    }
}

/// `ln z` below 1, continued as `z - 1` above (value and slope match at 1).
fn psi(z: f64) -> f64 {
    if z <= 1.0 {
        z.ln()
    } else {
        z - 1.0
    }
}

fn sbar_raw(z1: f64, x1: &[f64], z2: f64, x2: &[f64]) -> f64 {
    let dz = psi(z1) - psi(z2);
    let dx: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    (dz * dz + dx).sqrt()
}

fn check_pair(p1: &SingularMetricPoint, p2: &SingularMetricPoint) -> Result<(), FlatSideError> {
    if !(p1.z > 0.0) || !(p2.z > 0.0) {
        return Err(FlatSideError::Domain(format!("z must be positive, got {} and {}", p1.z, p2.z)));
    }
    if p1.xbar.len() != p2.xbar.len() {
        return Err(FlatSideError::Domain("points have different dimensions".into()));
    }
    Ok(())
}

/// `√(|ln z₁ − ln z₂|² + |x̄₁ − x̄₂|²)`, Euclidean in `z` above `z = 1`.
pub fn hyperbolic_distance(p1: &SingularMetricPoint, p2: &SingularMetricPoint) -> Result<f64, FlatSideError> {
    check_pair(p1, p2)?;
    Ok(sbar_raw(p1.z, &p1.xbar, p2.z, &p2.xbar))
}

/// [`hyperbolic_distance`] plus `√|t₁ − t₂|`.
pub fn parabolic_distance(p1: &SingularMetricPoint, p2: &SingularMetricPoint) -> Result<f64, FlatSideError> {
    Ok(hyperbolic_distance(p1, p2)? + (p1.t - p2.t).abs().sqrt())
}

/// Tensor grid `z × x̄` on which norms are estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderGrid {
    pub z: Vec<f64>,
    pub xbar: Vec<Vec<f64>>,
}

impl HolderGrid {
    /// Geometric `z` between `z_min` and `z_max` and a uniform tangential box
    /// `[-half, half]^dim` with `per_axis` points per axis.
    pub fn new(z_min: f64, z_max: f64, nz: usize, dim: usize, half: f64, per_axis: usize) -> Self {
        let z = (0..nz)
            .map(|i| {
                let s = if nz > 1 { i as f64 / (nz - 1) as f64 } else { 0.0 };
                (z_min.ln() + s * (z_max.ln() - z_min.ln())).exp()
            })
            .collect();
        let axis: Vec<f64> = (0..per_axis)
            .map(|i| {
                if per_axis > 1 {
                    -half + 2.0 * half * i as f64 / (per_axis - 1) as f64
                } else {
                    0.0
                }
            })
            .collect();
        let mut xbar = vec![Vec::new()];
        for _ in 0..dim {
            xbar = xbar
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |a| {
                        let mut q = p.clone();
                        q.push(*a);
                        q
                    })
                })
                .collect();
        }
        Self { z, xbar }
    }

    pub fn len(&self) -> usize {
        self.z.len() * self.xbar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dim(&self) -> usize {
        self.xbar.first().map_or(0, |p| p.len())
    }
}

/// Names of the weighted combinations that must extend continuously to `z = 0`.
pub const WEIGHTED_COMBINATIONS: [&str; 6] = [
    "(f-f°)/√z",
    "√z f_z",
    "(f_i-f_i°)/√z",
    "z^{3/2} f_zz",
    "√z f_zi",
    "(f_ij-f_ij°)/√z",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionCheck {
    pub name: String,
    /// Largest spread over the lowest decade of `z`, across `x̄`.
    pub oscillation_low: f64,
    /// The same over the decade above it.
    pub oscillation_high: f64,
    pub cauchy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderNorms {
    pub alpha: f64,
    pub c0_w: f64,
    pub calpha_ws: f64,
    pub c2_w: f64,
    pub c2alpha_ws: f64,
    /// `H^α_s̄` of `f` itself.
    pub seminorm_sbar: f64,
    pub extension: Vec<ExtensionCheck>,
    pub extends_continuously: bool,
    /// False when semi-norms come from a random subsample of pairs, in which
    /// case they are lower bounds.
    pub exact_pairs: bool,
}

const EXACT_LIMIT: usize = 5_000;
const SAMPLED_PAIRS: usize = 1_000_000;
const SEED: u64 = 0x005e_ed0f_4a11;

fn pairs_seminorm(n: usize, mut ratio: impl FnMut(usize, usize) -> f64) -> (f64, bool) {
    let mut best: f64 = 0.0;
    if n <= EXACT_LIMIT {
        for i in 0..n {
            for j in 0..i {
                best = best.max(ratio(i, j));
            }
        }
        (best, true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for _ in 0..SAMPLED_PAIRS {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i != j {
                best = best.max(ratio(i, j));
            }
        }
        (best, false)
    }
}

/// Classical `C^α` semi-norm of samples at Euclidean points.
pub fn euclidean_seminorm(points: &[Vec<f64>], values: &[f64], alpha: f64) -> (f64, bool) {
    pairs_seminorm(points.len(), |i, j| {
        let d: f64 = points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if d > 0.0 {
            (values[i] - values[j]).abs() / d.powf(alpha)
        } else {
            0.0
        }
    })
}

/// `H^α_s̄` semi-norm of samples on a [`HolderGrid`], values in `z`-major order.
pub fn sbar_seminorm(grid: &HolderGrid, values: &[f64], alpha: f64) -> (f64, bool) {
    let nx = grid.xbar.len();
    pairs_seminorm(grid.len(), |i, j| {
        let (zi, xi) = (grid.z[i / nx], &grid.xbar[i % nx]);
        let (zj, xj) = (grid.z[j / nx], &grid.xbar[j % nx]);
        let d = sbar_raw(zi, xi, zj, xj);
        if d > 0.0 {
            (values[i] - values[j]).abs() / d.powf(alpha)
        } else {
            0.0
        }
    })
}

/// `H^α_s̄` of `f` on the grid, and the classical `C^α` semi-norm of
/// `f(e^ξ, x̄)` on the image points `(ln z, x̄)`. They agree for `z ≤ 1`.
pub fn exp_coordinate_seminorms(f: &dyn Fn(f64, &[f64]) -> f64, grid: &HolderGrid, alpha: f64) -> (f64, f64) {
    let vals: Vec<f64> = grid
        .z
        .iter()
        .flat_map(|&z| grid.xbar.iter().map(move |x| (z, x)))
        .map(|(z, x)| f(z, x))
        .collect();
    let (s, _) = sbar_seminorm(grid, &vals, alpha);
    let mut pts = Vec::with_capacity(grid.len());
    let mut img = Vec::with_capacity(grid.len());
    for &z in &grid.z {
        let xi = z.ln();
        for x in &grid.xbar {
            let mut p = vec![xi];
            p.extend_from_slice(x);
            img.push(f(xi.exp(), x));
            pts.push(p);
        }
    }
    let (e, _) = euclidean_seminorm(&pts, &img, alpha);
    (s, e)
}

const H_XI: f64 = 1e-3;
const H_X: f64 = 1e-4;
/// Richardson pair `(ε, 4ε)` used to continue weighted quantities to `z = 0`.
const Z_LIMIT: f64 = 1e-12;

/// Jet `(f, z f_z, z² f_zz, f_i, z f_zi, f_ij)` by differences in `(ln z, x̄)`.
struct Weighted {
    f: f64,
    zf_z: f64,
    z2f_zz: f64,
    f_i: Vec<f64>,
    zf_zi: Vec<f64>,
    f_ij: Vec<f64>,
}

impl Weighted {
    fn flat(&self) -> Vec<f64> {
        let mut v = vec![self.f, self.zf_z, self.z2f_zz];
        v.extend_from_slice(&self.f_i);
        v.extend_from_slice(&self.zf_zi);
        v.extend_from_slice(&self.f_ij);
        v
    }
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut v = x.to_vec();
    for &(i, d) in moves {
        v[i] += d;
    }
    v
}

fn x_derivs(f: &dyn Fn(f64, &[f64]) -> f64, z: f64, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nb = x.len();
    let c = f(z, x);
    let mut d1 = vec![0.0; nb];
    let mut d2 = vec![0.0; nb * nb];
    for i in 0..nb {
        let (p, m) = (f(z, &shifted(x, &[(i, H_X)])), f(z, &shifted(x, &[(i, -H_X)])));
        d1[i] = (p - m) / (2.0 * H_X);
        d2[i * nb + i] = (p - 2.0 * c + m) / (H_X * H_X);
        for j in 0..i {
            let v = (f(z, &shifted(x, &[(i, H_X), (j, H_X)])) - f(z, &shifted(x, &[(i, H_X), (j, -H_X)]))
                - f(z, &shifted(x, &[(i, -H_X), (j, H_X)]))
                + f(z, &shifted(x, &[(i, -H_X), (j, -H_X)])))
                / (4.0 * H_X * H_X);
            d2[i * nb + j] = v;
            d2[j * nb + i] = v;
        }
    }
    (d1, d2)
}

fn weighted_jet(f: &dyn Fn(f64, &[f64]) -> f64, z: f64, x: &[f64]) -> Weighted {
    let (zp, zm) = (z * H_XI.exp(), z * (-H_XI).exp());
    let (c, p, m) = (f(z, x), f(zp, x), f(zm, x));
    let f_xi = (p - m) / (2.0 * H_XI);
    let f_xixi = (p - 2.0 * c + m) / (H_XI * H_XI);
    let (d1, d2) = x_derivs(f, z, x);
    let (d1p, _) = x_derivs(f, zp, x);
    let (d1m, _) = x_derivs(f, zm, x);
    Weighted {
        f: c,
        zf_z: f_xi,
        z2f_zz: f_xixi - f_xi,
        f_i: d1,
        zf_zi: d1p.iter().zip(&d1m).map(|(a, b)| (a - b) / (2.0 * H_XI)).collect(),
        f_ij: d2,
    }
}

/// Values of the weighted jet continued to `z = 0`.
fn weighted_limit(f: &dyn Fn(f64, &[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let a = weighted_jet(f, Z_LIMIT, x).flat();
    let b = weighted_jet(f, 4.0 * Z_LIMIT, x).flat();
    a.iter().zip(&b).map(|(a, b)| 2.0 * a - b).collect()
}

/// `‖g‖_{C^α_{w,s̄}} = ‖g°‖_{C^α} + ‖g̃‖_{C^α_s̄}` from samples and the limit `g°`.
fn calpha_w(grid: &HolderGrid, values: &[f64], limit: &[f64], alpha: f64, exact: &mut bool) -> f64 {
    let nx = grid.xbar.len();
    let tilde: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(p, v)| (v - limit[p % nx]) / grid.z[p / nx].sqrt())
        .collect();
    let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let (h0, e0) = euclidean_seminorm(&grid.xbar, limit, alpha);
    let (h1, e1) = sbar_seminorm(grid, &tilde, alpha);
    *exact &= e0 && e1;
    sup(limit) + h0 + sup(&tilde) + h1
}

fn tail_spread(grid: &HolderGrid, values: &[f64], lo: f64, hi: f64) -> f64 {
    let nx = grid.xbar.len();
    (0..nx)
        .map(|ix| {
            let sel: Vec<f64> = grid
                .z
                .iter()
                .enumerate()
                .filter(|(_, z)| **z >= lo && **z <= hi)
                .map(|(iz, _)| values[iz * nx + ix])
                .collect();
            let mx = sel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mn = sel.iter().copied().fold(f64::INFINITY, f64::min);
            if sel.is_empty() {
                0.0
            } else {
                mx - mn
            }
        })
        .fold(0.0, f64::max)
}

/// Discrete estimates of `C⁰_w`, `C^α_{w,s̄}`, `C²_w` and `C^{2+α}_{w,s̄}` of
/// `f` on the grid. `f` must also be defined at `z = 0`.
pub fn weighted_holder_norms(
    f: &dyn Fn(f64, &[f64]) -> f64,
    grid: &HolderGrid,
    alpha: f64,
) -> Result<HolderNorms, FlatSideError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FlatSideError::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if grid.is_empty() || grid.z.iter().any(|z| !(*z > 0.0)) {
        return Err(FlatSideError::Domain("grid needs positive z and at least one point".into()));
    }
    let z_min = grid.z.iter().copied().fold(f64::INFINITY, f64::min);
    if z_min > 1e-4 {
        return Err(FlatSideError::Resolution(z_min));
    }
    let nx = grid.xbar.len();
    let nb = grid.dim();
    let mut exact = true;

    // f° and its tangential derivatives
    let f0: Vec<f64> = grid.xbar.iter().map(|x| f(0.0, x)).collect();
    let d0: Vec<(Vec<f64>, Vec<f64>)> = grid.xbar.iter().map(|x| x_derivs(f, 0.0, x)).collect();

    let jets: Vec<Weighted> = grid
        .z
        .iter()
        .flat_map(|&z| grid.xbar.iter().map(move |x| (z, x)))
        .map(|(z, x)| weighted_jet(f, z, x))
        .collect();
    let vals: Vec<f64> = jets.iter().map(|j| j.f).collect();
    let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let tilde_of = |v: &[f64], lim: &[f64]| -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(p, x)| (x - lim[p % nx]) / grid.z[p / nx].sqrt())
            .collect()
    };
    let ft = tilde_of(&vals, &f0);

    let c0_w = sup(&f0) + sup(&ft);
    let (hf0, e0) = euclidean_seminorm(&grid.xbar, &f0, alpha);
    let (hft, e1) = sbar_seminorm(grid, &ft, alpha);
    exact &= e0 && e1;
    let calpha_ws = sup(&f0) + hf0 + sup(&ft) + hft;
    let (seminorm_sbar, e2) = sbar_seminorm(grid, &vals, alpha);
    exact &= e2;

    // C²_w: derivatives of f° plus z^m D_z^m D_x̄^n f̃
    let grad0 = d0.iter().map(|(g, _)| g.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let hess0 = d0.iter().map(|(_, h)| h.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let ft_fn = |z: f64, x: &[f64]| -> f64 { (f(z, x) - f(0.0, x)) / z.sqrt() };
    let mut c2_w = sup(&f0) + grad0 + hess0;
    let ft_jets: Vec<Vec<f64>> = grid
        .z
        .iter()
        .flat_map(|&z| grid.xbar.iter().map(move |x| (z, x)))
        .map(|(z, x)| weighted_jet(&ft_fn, z, x).flat())
        .collect();
    // group sizes: 1, 1, 1, nb, nb, nb²
    let groups = [1, 1, 1, nb, nb, nb * nb];
    let mut off = 0;
    for g in groups {
        let s = ft_jets
            .iter()
            .map(|j| j[off..off + g].iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        c2_w += s;
        off += g;
    }

    // continuous extension of the weighted combinations
    let combos: Vec<Vec<f64>> = {
        let mut out: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(grid.len())).collect();
        for (p, j) in jets.iter().enumerate() {
            let (z, ix) = (grid.z[p / nx], p % nx);
            let sz = z.sqrt();
            let (g0, h0) = &d0[ix];
            out[0].push((j.f - f0[ix]) / sz);
            out[1].push(j.zf_z / sz);
            out[2].push((0..nb).map(|i| ((j.f_i[i] - g0[i]) / sz).abs()).fold(0.0, f64::max));
            out[3].push(j.z2f_zz / sz);
            out[4].push((0..nb).map(|i| (j.zf_zi[i] / sz).abs()).fold(0.0, f64::max));
            out[5].push((0..nb * nb).map(|i| ((j.f_ij[i] - h0[i]) / sz).abs()).fold(0.0, f64::max));
        }
        out
    };
    let extension: Vec<ExtensionCheck> = combos
        .iter()
        .zip(WEIGHTED_COMBINATIONS)
        .map(|(vals, name)| {
            let low = tail_spread(grid, vals, z_min, 10.0 * z_min);
            let high = tail_spread(grid, vals, 10.0 * z_min, 100.0 * z_min);
            let scale = 1.0 + sup(vals);
            ExtensionCheck {
                name: name.to_string(),
                oscillation_low: low,
                oscillation_high: high,
                cauchy: vals.iter().all(|v| v.is_finite()) && low <= high + 1e-6 * scale,
            }
        })
        .collect();
    let extends_continuously = extension.iter().all(|e| e.cauchy);

    // C^{2+α}_{w,s̄}: every weighted derivative in C^α_{w,s̄}
    let limits: Vec<Vec<f64>> = grid.xbar.iter().map(|x| weighted_limit(f, x)).collect();
    let width = limits.first().map_or(0, |l| l.len());
    let mut c2alpha_ws = 0.0;
    for c in 0..width {
        let v: Vec<f64> = jets.iter().map(|j| j.flat()[c]).collect();
        let lim: Vec<f64> = limits.iter().map(|l| l[c]).collect();
        c2alpha_ws += calpha_w(grid, &v, &lim, alpha, &mut exact);
    }

    Ok(HolderNorms {
        alpha,
        c0_w,
        calpha_ws,
        c2_w,
        c2alpha_ws,
        seminorm_sbar,
        extension,
        extends_continuously,
        exact_pairs: exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(z: f64, x: &[f64]) -> SingularMetricPoint {
        SingularMetricPoint::new(z, x.to_vec())
    }

    #[test]
    fn distance_examples() {
        let d = hyperbolic_distance(&pt((-1.0f64).exp(), &[0.0]), &pt(1.0, &[0.0])).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let d = hyperbolic_distance(&pt(0.3, &[0.0, 0.0]), &pt(0.3, &[0.6, 0.8])).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        assert!(hyperbolic_distance(&pt(0.0, &[0.0]), &pt(1.0, &[0.0])).is_err());
        let d = hyperbolic_distance(&pt(2.0, &[0.0]), &pt(5.0, &[4.0])).unwrap();
        assert!((d - 5.0).abs() < 1e-15);
        let mut a = pt(0.5, &[0.0]);
        a.t = 0.25;
        let d = parabolic_distance(&a, &pt(0.5, &[0.0])).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn metric_axioms(
            z in proptest::array::uniform3(1e-8f64..1.0),
            x in proptest::array::uniform3(proptest::array::uniform2(-2.0f64..2.0)),
        ) {
            let p: Vec<SingularMetricPoint> = (0..3).map(|i| pt(z[i], &x[i])).collect();
            let d = |a: usize, b: usize| hyperbolic_distance(&p[a], &p[b]).unwrap();
            prop_assert!(d(0, 0) == 0.0);
            prop_assert!((d(0, 1) - d(1, 0)).abs() <= 1e-12);
            prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
            prop_assert!(d(0, 1) >= 0.0);
        }
    }

    fn small_grid() -> HolderGrid {
        HolderGrid::new(1e-6, 1.0, 25, 1, 0.5, 7)
    }

    #[test]
    fn sqrt_prototype() {
        let f = |z: f64, _: &[f64]| z.sqrt();
        let n = weighted_holder_norms(&f, &small_grid(), 0.5).unwrap();
        assert!((n.c0_w - 1.0).abs() < 1e-6);
        assert!(n.extends_continuously, "{:?}", n.extension);
    }

    #[test]
    fn z_independent_function_reduces_to_classical() {
        let f = |_: f64, x: &[f64]| x[0];
        let g = small_grid();
        let n = weighted_holder_norms(&f, &g, 0.5).unwrap();
        // f̃ ≡ 0, so C⁰_w = sup|x₂| and C^α_{w,s̄} = classical C^α of f°
        assert!((n.c0_w - 0.5).abs() < 1e-12);
        let (h, _) = euclidean_seminorm(&g.xbar, &g.xbar.iter().map(|x| x[0]).collect::<Vec<_>>(), 0.5);
        assert!((n.calpha_ws - (0.5 + h)).abs() < 1e-9);
    }

    #[test]
    fn linear_in_z_is_c2_weighted() {
        let f = |z: f64, _: &[f64]| z;
        let n = weighted_holder_norms(&f, &small_grid(), 0.5).unwrap();
        assert!(n.c2_w.is_finite() && n.c2_w < 10.0);
        assert!(n.extends_continuously);
        // z^{3/2} f_zz vanishes identically
        assert!(n.extension[3].oscillation_low < 1e-6);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = HolderGrid::new(1e-3, 1.0, 5, 1, 0.5, 3);
        let f = |z: f64, _: &[f64]| z;
        assert!(matches!(weighted_holder_norms(&f, &g, 0.5), Err(FlatSideError::Resolution(_))));
    }

    #[test]
    fn exp_coordinates_match() {
        let f = |z: f64, x: &[f64]| z.sqrt() * (1.0 + x[0]) + x[1] * x[1];
        let g = HolderGrid::new(1e-6, 1.0, 30, 2, 0.5, 5);
        let (s, e) = exp_coordinate_seminorms(&f, &g, 0.4);
        assert!((s - e).abs() <= 1e-6 * s.max(1.0));
    }

    #[test]
    fn large_grids_are_subsampled() {
        let g = HolderGrid::new(1e-6, 1.0, 80, 1, 0.5, 80);
        let vals: Vec<f64> = (0..g.len()).map(|i| i as f64 * 1e-4).collect();
        let (_, exact) = sbar_seminorm(&g, &vals, 0.5);
        assert!(!exact);
    }
}

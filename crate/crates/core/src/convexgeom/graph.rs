use nalgebra::{DMatrix, SymmetricEigen};

use super::GeomError;
use crate::dual::Real;

/// First and second derivatives of a height function at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphJet {
    pub du: Vec<f64>,
    pub d2u: DMatrix<f64>,
    pub v: f64,
}

impl GraphJet {
    pub fn new(du: Vec<f64>, d2u: DMatrix<f64>) -> Result<Self, GeomError> {
        let n = du.len();
        if d2u.nrows() != n || d2u.ncols() != n {
            return Err(GeomError::Shape {
                expected: n,
                got: d2u.nrows(),
            });
        }
        let v = (1.0 + du.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let d2u = (&d2u + d2u.transpose()) * 0.5;
        Ok(Self { du, d2u, v })
    }

    pub fn n(&self) -> usize {
        self.du.len()
    }
}

/// Second fundamental form `[a_ij]` of the graph `x_{n+1} = u(x)` in the
/// symmetric frame whose eigenvalues are the principal curvatures.
pub fn graph_second_fundamental_form(jet: &GraphJet) -> DMatrix<f64> {
    let n = jet.n();
    let d2u: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| jet.d2u[(i, j)]).collect()).collect();
    let a = second_fundamental_form_generic(&jet.du, &d2u);
    DMatrix::from_fn(n, n, |i, j| a[i][j])
}

/// Principal curvatures of the graph at the jet, ascending.
pub fn graph_curvatures(jet: &GraphJet) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(graph_second_fundamental_form(jet))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub(crate) fn second_fundamental_form_generic<T: Real>(du: &[T], d2u: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = du.len();
    let one = T::cst(1.0);
    let mut sq = T::cst(0.0);
    for &d in du {
        sq = sq + d * d;
    }
    let v = (one + sq).sqrt();
    let w = v * (one + v);
    // p_i = Σ_l D_l u D_il u, q = Σ_kl D_k u D_l u D_kl u
    let p: Vec<T> = (0..n)
        .map(|i| (0..n).fold(T::cst(0.0), |acc, l| acc + du[l] * d2u[i][l]))
        .collect();
    let q = (0..n).fold(T::cst(0.0), |acc, k| acc + du[k] * p[k]);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (d2u[i][j] - du[i] * p[j] / w - du[j] * p[i] / w + du[i] * du[j] * q / (w * w)) / v
                })
                .collect()
        })
        .collect()
}

/// Height samples of a graph over a uniform rectangular grid in `R^2`,
/// with centred-difference jets at interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPatch {
    pub x0: [f64; 2],
    pub spacing: f64,
    pub shape: [usize; 2],
    pub u: Vec<f64>,
}

impl GraphPatch {
    pub fn from_fn(
        x0: [f64; 2],
        spacing: f64,
        shape: [usize; 2],
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut u = Vec::with_capacity(shape[0] * shape[1]);
        for a in 0..shape[0] {
            for b in 0..shape[1] {
                u.push(f(x0[0] + a as f64 * spacing, x0[1] + b as f64 * spacing));
            }
        }
        Self {
            x0,
            spacing,
            shape,
            u,
        }
    }

    fn at(&self, a: usize, b: usize) -> f64 {
        self.u[a * self.shape[1] + b]
    }

    /// Jet at an interior node `(a, b)`.
    pub fn jet(&self, a: usize, b: usize) -> Result<GraphJet, GeomError> {
        if a == 0 || b == 0 || a + 1 >= self.shape[0] || b + 1 >= self.shape[1] {
            return Err(GeomError::BoundaryNode { a, b });
        }
        let h = self.spacing;
        let u = |da: isize, db: isize| self.at((a as isize + da) as usize, (b as isize + db) as usize);
        let du = vec![(u(1, 0) - u(-1, 0)) / (2.0 * h), (u(0, 1) - u(0, -1)) / (2.0 * h)];
        let uxx = (u(1, 0) - 2.0 * u(0, 0) + u(-1, 0)) / (h * h);
        let uyy = (u(0, 1) - 2.0 * u(0, 0) + u(0, -1)) / (h * h);
        let uxy = (u(1, 1) - u(1, -1) - u(-1, 1) + u(-1, -1)) / (4.0 * h * h);
        GraphJet::new(du, DMatrix::from_row_slice(2, 2, &[uxx, uxy, uxy, uyy]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cap_jet(r: f64, x: &[f64]) -> GraphJet {
        // u = R - sqrt(R² - |x|²)
        let n = x.len();
        let s2: f64 = x.iter().map(|t| t * t).sum();
        let w = (r * r - s2).sqrt();
        let du = x.iter().map(|t| t / w).collect();
        let d2u = DMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            delta / w + x[i] * x[j] / (w * w * w)
        });
        GraphJet::new(du, d2u).unwrap()
    }

    #[test]
    fn flat_identity_hessian() {
        let jet = GraphJet::new(vec![0.0; 3], DMatrix::identity(3, 3)).unwrap();
        let a = graph_second_fundamental_form(&jet);
        assert!((a - DMatrix::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn sphere_cap_is_umbilic() {
        for x in [vec![0.3, -0.2], vec![0.7, 0.5], vec![0.1, 0.2, 0.9]] {
            let k = graph_curvatures(&cap_jet(1.5, &x));
            for v in k {
                assert!((v - 1.0 / 1.5).abs() < 1e-12, "{v}");
            }
        }
    }

    #[test]
    fn scaling_inverts_curvature() {
        // u_c(x) = c u(x / c): Du unchanged, D²u scaled by 1/c
        let jet = cap_jet(2.0, &[0.4, 1.1]);
        let base = graph_curvatures(&jet);
        for c in [0.5, 3.0, 10.0] {
            let scaled = GraphJet::new(jet.du.clone(), &jet.d2u / c).unwrap();
            for (a, b) in graph_curvatures(&scaled).iter().zip(&base) {
                assert!((a - b / c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn patch_jet_matches_cap() {
        let r = 2.0;
        let p = GraphPatch::from_fn([-0.5, -0.5], 1e-3, [1001, 1001], |x, y| {
            r - (r * r - x * x - y * y).sqrt()
        });
        let k = graph_curvatures(&p.jet(700, 400).unwrap());
        assert!(k.iter().all(|v| (v - 0.5).abs() < 1e-6));
    }
}

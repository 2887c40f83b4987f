use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Directional grid on the unit sphere `S^n` that a support function is
/// sampled on.
///
/// Both variants are cell-centred in the polar angle, so no node sits on a
/// pole. Finite differences that step past a pole read the node on the
/// opposite meridian (`φ + π`), which keeps centred stencils second order
/// everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphereGrid {
    /// Equiangular `(θ, φ)` grid on `S^2`. `n_phi` must be even.
    LatLon { n_theta: usize, n_phi: usize },
    /// Rotationally symmetric data on `S^n`: one sample per polar angle,
    /// symmetric about the last coordinate axis.
    Axial { n: usize, n_theta: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("latitude-longitude grids need n_theta >= 4 and an even n_phi >= 4 (got {n_theta}x{n_phi})")]
    BadLatLon { n_theta: usize, n_phi: usize },
    #[error("axial grids need n >= 2 and n_theta >= 4 (got n={n}, n_theta={n_theta})")]
    BadAxial { n: usize, n_theta: usize },
}

/// Surface measure of the unit sphere `S^m`.
pub fn sphere_area(m: usize) -> f64 {
    // |S^0| = 2, |S^1| = 2π, |S^m| = 2π/(m-1) |S^{m-2}|
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * sphere_area(m - 2),
    }
}

impl SphereGrid {
    pub fn lat_lon(n_theta: usize, n_phi: usize) -> Result<Self, GridError> {
        if n_theta < 4 || n_phi < 4 || !n_phi.is_multiple_of(2) {
            return Err(GridError::BadLatLon { n_theta, n_phi });
        }
        Ok(Self::LatLon { n_theta, n_phi })
    }

    pub fn axial(n: usize, n_theta: usize) -> Result<Self, GridError> {
        if n < 2 || n_theta < 4 {
            return Err(GridError::BadAxial { n, n_theta });
        }
        Ok(Self::Axial { n, n_theta })
    }

    pub fn validate(&self) -> Result<(), GridError> {
        match *self {
            Self::LatLon { n_theta, n_phi } => Self::lat_lon(n_theta, n_phi).map(|_| ()),
            Self::Axial { n, n_theta } => Self::axial(n, n_theta).map(|_| ()),
        }
    }

    /// Dimension of the hypersurface (the sphere is `S^n ⊂ R^{n+1}`).
    pub fn n(&self) -> usize {
        match *self {
            Self::LatLon { .. } => 2,
            Self::Axial { n, .. } => n,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n() + 1
    }

    pub fn len(&self) -> usize {
        match *self {
            Self::LatLon { n_theta, n_phi } => n_theta * n_phi,
            Self::Axial { n_theta, .. } => n_theta,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_theta(&self) -> usize {
        match *self {
            Self::LatLon { n_theta, .. } | Self::Axial { n_theta, .. } => n_theta,
        }
    }

    pub fn d_theta(&self) -> f64 {
        PI / self.n_theta() as f64
    }

    pub fn d_phi(&self) -> Option<f64> {
        match *self {
            Self::LatLon { n_phi, .. } => Some(2.0 * PI / n_phi as f64),
            Self::Axial { .. } => None,
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.d_theta()
    }

    /// `(θ index, φ index)` of a node; the φ index is 0 on axial grids.
    pub fn split(&self, node: usize) -> (usize, usize) {
        match *self {
            Self::LatLon { n_phi, .. } => (node / n_phi, node % n_phi),
            Self::Axial { .. } => (node, 0),
        }
    }

    /// Node index for a possibly out-of-range `(j, i)` pair, folding across
    /// the poles and wrapping in φ.
    pub fn fold(&self, j: isize, i: isize) -> usize {
        let nt = self.n_theta() as isize;
        match *self {
            Self::LatLon { n_phi, .. } => {
                let np = n_phi as isize;
                let (mut j, mut i) = (j, i);
                if j < 0 {
                    j = -j - 1;
                    i += np / 2;
                } else if j >= nt {
                    j = 2 * nt - j - 1;
                    i += np / 2;
                }
                (j * np + i.rem_euclid(np)) as usize
            }
            Self::Axial { .. } => {
                let j = if j < 0 {
                    -j - 1
                } else if j >= nt {
                    2 * nt - j - 1
                } else {
                    j
                };
                j as usize
            }
        }
    }

    /// Unit direction of a node in `R^{n+1}`. On axial grids the
    /// representative meridian through the first coordinate axis is used.
    pub fn direction(&self, node: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.ambient_dim()];
        self.direction_into(node, &mut v);
        v
    }

    /// Writes the node direction into `out` (length `n + 1`).
    pub fn direction_into(&self, node: usize, out: &mut [f64]) {
        let (j, i) = self.split(node);
        let (s, c) = self.theta(j).sin_cos();
        match *self {
            Self::LatLon { .. } => {
                let (sp, cp) = (i as f64 * self.d_phi().unwrap()).sin_cos();
                out[0] = s * cp;
                out[1] = s * sp;
                out[2] = c;
            }
            Self::Axial { n, .. } => {
                out.iter_mut().for_each(|x| *x = 0.0);
                out[0] = s;
                out[n] = c;
            }
        }
    }

    /// Node whose direction is the antipode of `node`.
    pub fn antipode(&self, node: usize) -> usize {
        let (j, i) = self.split(node);
        let nt = self.n_theta();
        match *self {
            Self::LatLon { n_phi, .. } => (nt - 1 - j) * n_phi + (i + n_phi / 2) % n_phi,
            Self::Axial { .. } => nt - 1 - j,
        }
    }

    /// Quadrature weights normalised so that they sum to `|S^n|` exactly.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.n();
        let raw: Vec<f64> = (0..self.len())
            .map(|node| {
                let (j, _) = self.split(node);
                self.theta(j).sin().powi(n as i32 - 1)
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let scale = sphere_area(n) / total;
        raw.into_iter().map(|w| w * scale).collect()
    }

    /// Smallest geodesic spacing between neighbouring nodes; drives the
    /// explicit stability bound.
    pub fn min_spacing(&self) -> f64 {
        match self.d_phi() {
            Some(dp) => self.d_theta().min(self.theta(0).sin() * dp),
            None => self.d_theta(),
        }
    }

    /// Same grid at `factor` times the resolution.
    pub fn refined(&self, factor: usize) -> Self {
        match *self {
            Self::LatLon { n_theta, n_phi } => Self::LatLon {
                n_theta: n_theta * factor,
                n_phi: n_phi * factor,
            },
            Self::Axial { n, n_theta } => Self::Axial {
                n,
                n_theta: n_theta * factor,
            },
        }
    }

    /// Inner product of a node direction with a vector of `R^{n+1}`.
    pub fn dot(&self, node: usize, v: &[f64]) -> f64 {
        let (j, i) = self.split(node);
        let (s, c) = self.theta(j).sin_cos();
        match *self {
            Self::LatLon { .. } => {
                let (sp, cp) = (i as f64 * self.d_phi().unwrap()).sin_cos();
                s * cp * v[0] + s * sp * v[1] + c * v[2]
            }
            Self::Axial { n, .. } => s * v[0] + c * v[n],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn fold_across_pole() {
        let g = SphereGrid::lat_lon(8, 16).unwrap();
        assert_eq!(g.fold(-1, 3), g.fold(0, 11));
        assert_eq!(g.fold(8, 0), g.fold(7, 8));
        assert_eq!(g.fold(2, -1), g.fold(2, 15));
        let a = SphereGrid::axial(3, 8).unwrap();
        assert_eq!(a.fold(-1, 0), 0);
        assert_eq!(a.fold(8, 0), 7);
    }

    #[test]
    fn antipodes_are_opposite() {
        for g in [SphereGrid::lat_lon(7, 12).unwrap(), SphereGrid::axial(3, 9).unwrap()] {
            for node in 0..g.len() {
                let a = g.direction(node);
                let b = g.direction(g.antipode(node));
                if g.d_phi().is_some() {
                    for (x, y) in a.iter().zip(&b) {
                        assert!((x + y).abs() < 1e-12);
                    }
                } else {
                    assert!((a[a.len() - 1] + b[b.len() - 1]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_area() {
        let g = SphereGrid::axial(3, 20).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - sphere_area(3)).abs() < 1e-12);
    }

    #[test]
    fn rejects_odd_phi() {
        assert!(SphereGrid::lat_lon(8, 15).is_err());
        assert!(SphereGrid::axial(1, 15).is_err());
    }
}

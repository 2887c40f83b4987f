use serde::{Deserialize, Serialize};

use super::grid::{sphere_area, SphereGrid};
use super::GeomError;
use crate::symfun::CurvatureVector;

/// Principal radii at one grid node, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRadii {
    pub radii: Vec<f64>,
}

impl NodeRadii {
    pub fn curvatures(&self) -> Vec<f64> {
        self.radii.iter().map(|r| 1.0 / r).collect()
    }

    pub fn min(&self) -> f64 {
        self.radii.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.radii.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn det(&self) -> f64 {
        self.radii.iter().product()
    }
}

/// A closed convex hypersurface stored as its support function
/// `h(ν) = max_{x ∈ body} ⟨x - origin, ν⟩` sampled on a directional grid.
///
/// The boundary point with outer normal `ν` is `origin + h ν + ∇h`, so
/// `⟨F - origin, ν⟩ = h` at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSurface {
    pub n: usize,
    pub grid: SphereGrid,
    pub h: Vec<f64>,
    pub origin: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnclosureReport {
    /// Radius of the largest ball about the origin inside the body.
    pub inner_ball_radius: f64,
    pub diameter: f64,
    /// `min ⟨q - origin, ν⟩` over the sampled boundary points.
    pub support_gap: f64,
}

impl SupportSurface {
    pub fn new(grid: SphereGrid, h: Vec<f64>, origin: Vec<f64>) -> Result<Self, GeomError> {
        grid.validate()?;
        if h.len() != grid.len() {
            return Err(GeomError::Shape {
                expected: grid.len(),
                got: h.len(),
            });
        }
        if origin.len() != grid.ambient_dim() {
            return Err(GeomError::Shape {
                expected: grid.ambient_dim(),
                got: origin.len(),
            });
        }
        if let Some(node) = h.iter().position(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite { node });
        }
        Ok(Self {
            n: grid.n(),
            grid,
            h,
            origin,
        })
    }

    pub fn from_fn(grid: SphereGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self, GeomError> {
        let h = (0..grid.len()).map(|node| f(&grid.direction(node))).collect();
        Self::new(grid, h, vec![0.0; grid.ambient_dim()])
    }

    pub fn sphere(grid: SphereGrid, radius: f64) -> Self {
        Self::from_fn(grid, |_| radius).expect("valid grid")
    }

    /// Ellipsoid with the given semi-axes along the coordinate axes, centred at `center`
    /// (measured from the support origin at 0).
    pub fn ellipsoid(grid: SphereGrid, semi_axes: &[f64], center: &[f64]) -> Result<Self, GeomError> {
        let m = grid.ambient_dim();
        let rot = vec![vec![0.0; m]; m]
            .into_iter()
            .enumerate()
            .map(|(i, mut row)| {
                row[i] = 1.0;
                row
            })
            .collect::<Vec<_>>();
        Self::rotated_ellipsoid(grid, semi_axes, &rot, center)
    }

    /// Ellipsoid `{c + R y : Σ y_i²/a_i² ≤ 1}`; `rotation` rows are the
    /// images of the coordinate axes.
    pub fn rotated_ellipsoid(
        grid: SphereGrid,
        semi_axes: &[f64],
        rotation: &[Vec<f64>],
        center: &[f64],
    ) -> Result<Self, GeomError> {
        let m = grid.ambient_dim();
        if semi_axes.len() != m || center.len() != m || rotation.len() != m {
            return Err(GeomError::Shape {
                expected: m,
                got: semi_axes.len(),
            });
        }
        Self::from_fn(grid, |nu| {
            let mut q = 0.0;
            for (axis, a) in rotation.iter().zip(semi_axes) {
                let p: f64 = axis.iter().zip(nu).map(|(x, y)| x * y).sum();
                q += a * a * p * p;
            }
            q.sqrt() + center.iter().zip(nu).map(|(c, v)| c * v).sum::<f64>()
        })
    }

    /// Minkowski sum of a flat disc of radius `disc_radius` (perpendicular to
    /// the last axis) and a ball of radius `ball_radius`: a `C^{1,1}` body
    /// with two flat sides.
    pub fn flat_sided_lens(grid: SphereGrid, disc_radius: f64, ball_radius: f64) -> Self {
        let m = grid.ambient_dim();
        Self::from_fn(grid, |nu| {
            let horiz: f64 = nu[..m - 1].iter().map(|x| x * x).sum::<f64>().sqrt();
            ball_radius + disc_radius * horiz
        })
        .expect("valid grid")
    }

    pub fn check_compatible(&self, other: &Self) -> Result<(), GeomError> {
        if self.grid != other.grid {
            return Err(GeomError::GridMismatch);
        }
        if self.origin != other.origin {
            return Err(GeomError::OriginMismatch);
        }
        Ok(())
    }

    /// Principal radii at `node`: eigenvalues of `∇²h + h·g` in an
    /// orthonormal frame, from centred differences in chart coordinates.
    pub fn node_radii(&self, node: usize) -> NodeRadii {
        radii_at(&self.grid, &self.h, node)
    }

    pub fn all_radii(&self) -> Vec<NodeRadii> {
        (0..self.grid.len()).map(|node| self.node_radii(node)).collect()
    }

    pub fn support_curvatures(&self, node: usize) -> Result<CurvatureVector, GeomError> {
        let r = self.node_radii(node);
        if let Some(&bad) = r.radii.iter().find(|&&x| !(x > 0.0)) {
            return Err(GeomError::ConvexityLoss { node, radius: bad });
        }
        Ok(CurvatureVector::new(r.curvatures()).expect("finite curvatures"))
    }

    pub fn enclosure_report(&self) -> Result<EnclosureReport, GeomError> {
        let (node, min_h) = self
            .h
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty grid");
        if min_h <= 0.0 {
            return Err(GeomError::OriginNotInterior { node, h: min_h });
        }
        let diameter = (0..self.grid.len())
            .map(|nd| self.h[nd] + self.h[self.grid.antipode(nd)])
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(EnclosureReport {
            inner_ball_radius: min_h,
            diameter,
            support_gap: min_h,
        })
    }

    /// `true` iff `self` encloses `inner`: `h_inner ≤ h_self` at every node.
    pub fn encloses(&self, inner: &Self) -> Result<bool, GeomError> {
        self.check_compatible(inner)?;
        Ok(self.h.iter().zip(&inner.h).all(|(a, b)| b <= a))
    }

    /// Smallest `h_self - h_inner` over the grid; negative when enclosure fails.
    pub fn enclosure_margin(&self, inner: &Self) -> Result<f64, GeomError> {
        self.check_compatible(inner)?;
        Ok(self
            .h
            .iter()
            .zip(&inner.h)
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min))
    }

    /// Sup-norm distance of support functions, i.e. the Hausdorff distance
    /// of the two bodies up to sampling.
    pub fn sup_distance(&self, other: &Self) -> Result<f64, GeomError> {
        self.check_compatible(other)?;
        Ok(self
            .h
            .iter()
            .zip(&other.h)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn dilate(&self, factor: f64) -> Result<Self, GeomError> {
        if !(factor > 0.0) {
            return Err(GeomError::BadFactor(factor));
        }
        let mut out = self.clone();
        out.h.iter_mut().for_each(|v| *v *= factor);
        Ok(out)
    }

    /// Enclosed volume `1/(n+1) ∫ h det(W) dσ`.
    pub fn volume(&self) -> f64 {
        let w = self.grid.weights();
        let s: f64 = (0..self.grid.len())
            .map(|node| w[node] * self.h[node] * self.node_radii(node).det())
            .sum();
        s / (self.n as f64 + 1.0)
    }

    /// Surface area `∫ det(W) dσ`.
    pub fn area(&self) -> f64 {
        let w = self.grid.weights();
        (0..self.grid.len())
            .map(|node| w[node] * self.node_radii(node).det())
            .sum()
    }

    pub fn mean_h(&self) -> f64 {
        let w = self.grid.weights();
        self.h.iter().zip(&w).map(|(h, w)| h * w).sum::<f64>() / sphere_area(self.n)
    }

    /// Steiner point of the body relative to the current origin.
    pub fn steiner_point(&self) -> Vec<f64> {
        let m = self.grid.ambient_dim();
        let w = self.grid.weights();
        let mut s = vec![0.0; m];
        let mut e = vec![0.0; m];
        for (node, (wn, hn)) in w.iter().zip(&self.h).enumerate() {
            self.grid.direction_into(node, &mut e);
            let wh = wn * hn;
            s.iter_mut().zip(&e).for_each(|(sa, ea)| *sa += wh * ea);
        }
        let scale = (self.n as f64 + 1.0) / sphere_area(self.n);
        if let SphereGrid::Axial { n, .. } = self.grid {
            // only the axial component survives the rotational average
            let mut out = vec![0.0; n + 1];
            out[n] = s[n] * scale;
            return out;
        }
        s.into_iter().map(|x| x * scale).collect()
    }

    /// Boundary point with outer normal at `node`: `origin + hν + ∇h`.
    pub fn boundary_point(&self, node: usize) -> Vec<f64> {
        let g = &self.grid;
        let (j, i) = g.split(node);
        let (j, i) = (j as isize, i as isize);
        let dth = g.d_theta();
        let h_t = (self.h[g.fold(j + 1, i)] - self.h[g.fold(j - 1, i)]) / (2.0 * dth);
        let (st, ct) = g.theta(j as usize).sin_cos();
        let mut p = g.direction(node);
        p.iter_mut().for_each(|x| *x *= self.h[node]);
        match *g {
            SphereGrid::LatLon { .. } => {
                let dph = g.d_phi().unwrap();
                let h_p = (self.h[g.fold(j, i + 1)] - self.h[g.fold(j, i - 1)]) / (2.0 * dph);
                let (sp, cp) = (i as f64 * dph).sin_cos();
                let e_t = [ct * cp, ct * sp, -st];
                let e_p = [-sp, cp, 0.0];
                for a in 0..3 {
                    p[a] += h_t * e_t[a] + h_p / st * e_p[a];
                }
            }
            SphereGrid::Axial { n, .. } => {
                p[0] += h_t * ct;
                p[n] -= h_t * st;
            }
        }
        p.iter_mut().zip(&self.origin).for_each(|(x, o)| *x += o);
        p
    }

    /// Distance from an interior point to the boundary,
    /// `min_ν (h(ν) - ⟨x - origin, ν⟩)`; negative outside.
    pub fn interior_distance(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.origin).map(|(a, o)| a - o).collect();
        (0..self.grid.len())
            .map(|node| self.h[node] - self.grid.dot(node, &d))
            .fold(f64::INFINITY, f64::min)
    }

    /// Moves the support origin by `shift` (body fixed in space).
    pub fn shift_origin(&mut self, shift: &[f64]) {
        for node in 0..self.grid.len() {
            self.h[node] -= self.grid.dot(node, shift);
        }
        for (o, s) in self.origin.iter_mut().zip(shift) {
            *o += s;
        }
    }

    /// Support values about another origin, without modifying `self`.
    pub fn h_about(&self, origin: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = self.origin.iter().zip(origin).map(|(a, b)| a - b).collect();
        (0..self.grid.len())
            .map(|node| self.h[node] + self.grid.dot(node, &d))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serialisable")
    }

    pub fn from_json(s: &str) -> Result<Self, GeomError> {
        let raw: SupportSurface =
            serde_json::from_str(s).map_err(|e| GeomError::Parse(e.to_string()))?;
        Self::new(raw.grid, raw.h, raw.origin)
    }
}

/// Radii-of-curvature matrix `∇²h + h·g` at a node, in the orthonormal
/// frame `(e_θ, e_φ)` for lat-long grids, or as (meridian, tangential)
/// radii for axial grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RadiiMatrix {
    Planar { tt: f64, tp: f64, pp: f64 },
    Axial { merid: f64, tang: f64, n: usize },
}

impl RadiiMatrix {
    pub(crate) fn radii(&self) -> NodeRadii {
        match *self {
            Self::Planar { tt, tp, pp } => {
                let mean = 0.5 * (tt + pp);
                let disc = (0.25 * (tt - pp) * (tt - pp) + tp * tp).sqrt();
                NodeRadii {
                    radii: vec![mean + disc, mean - disc],
                }
            }
            Self::Axial { merid, tang, n } => {
                let mut radii = Vec::with_capacity(n);
                radii.push(merid);
                radii.extend(std::iter::repeat_n(tang, n - 1));
                radii.sort_by(|a, b| b.total_cmp(a));
                NodeRadii { radii }
            }
        }
    }
}

pub(crate) fn radii_matrix(grid: &SphereGrid, h: &[f64], node: usize) -> RadiiMatrix {
    let (j, i) = grid.split(node);
    let (j, i) = (j as isize, i as isize);
    let at = |jj: isize, ii: isize| h[grid.fold(jj, ii)];
    let dt = grid.d_theta();
    let th = grid.theta(j as usize);
    let (s, c) = th.sin_cos();
    let h0 = h[node];
    let h_t = (at(j + 1, i) - at(j - 1, i)) / (2.0 * dt);
    let h_tt = (at(j + 1, i) - 2.0 * h0 + at(j - 1, i)) / (dt * dt);
    match *grid {
        SphereGrid::LatLon { .. } => {
            let dp = grid.d_phi().unwrap();
            let h_p = (at(j, i + 1) - at(j, i - 1)) / (2.0 * dp);
            let h_pp = (at(j, i + 1) - 2.0 * h0 + at(j, i - 1)) / (dp * dp);
            let h_tp = (at(j + 1, i + 1) - at(j + 1, i - 1) - at(j - 1, i + 1) + at(j - 1, i - 1))
                / (4.0 * dt * dp);
            RadiiMatrix::Planar {
                tt: h_tt + h0,
                pp: h_pp / (s * s) + c / s * h_t + h0,
                tp: (h_tp - c / s * h_p) / s,
            }
        }
        SphereGrid::Axial { n, .. } => RadiiMatrix::Axial {
            merid: h_tt + h0,
            tang: c / s * h_t + h0,
            n,
        },
    }
}

/// Radii at a node for an arbitrary sample vector on `grid`.
pub(crate) fn radii_at(grid: &SphereGrid, h: &[f64], node: usize) -> NodeRadii {
    radii_matrix(grid, h, node).radii()
}

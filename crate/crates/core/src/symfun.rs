//! Elementary symmetric polynomials of principal curvatures and the
//! quotient speeds `Q_k = S_k / S_{k-1}` built from them.
//!
//! All `S_0..S_n` are produced in one pass by expanding `prod_i (1 + λ_i x)`.
//! Inputs are sorted in descending order first, so every quantity here is
//! bit-for-bit invariant under permutation of the curvature tuple.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymfunError {
    #[error("curvature vector must have at least one entry")]
    Empty,
    #[error("curvature entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("order k={k} out of range for n={n}")]
    OrderOutOfRange { k: usize, n: usize },
    #[error("degenerate denominator S_{{k-1}}={denominator:e} for k={k} at lambda={lambda:?}")]
    DegenerateDenominator {
        k: usize,
        denominator: f64,
        lambda: Vec<f64>,
    },
}

/// Principal curvatures `(λ_1, …, λ_n)` of a hypersurface at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureVector(Vec<f64>);

impl CurvatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, SymfunError> {
        if values.is_empty() {
            return Err(SymfunError::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SymfunError::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    /// `n` copies of `c`; the umbilic point.
    pub fn umbilic(n: usize, c: f64) -> Self {
        Self(vec![c; n.max(1)])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<CurvatureVector> for Vec<f64> {
    fn from(c: CurvatureVector) -> Self {
        c.0
    }
}

/// Value and gradient of `Q_k` at a curvature tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymQuotientJet {
    pub k: usize,
    pub value: f64,
    /// `∂Q_k/∂λ_i`, in the index order of the input tuple.
    pub gradient: Vec<f64>,
}

fn sorted_desc(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn expand(sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &x) in sorted.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// All of `S_0, …, S_n` for an arbitrary slice (no validation).
pub fn elementary_symmetric_all(values: &[f64]) -> Vec<f64> {
    expand(&sorted_desc(values))
}

/// `S_j` of the tuple with entry `skip` removed, for `j = 0..n-1`.
fn elementary_symmetric_without(values: &[f64], skip: usize) -> Vec<f64> {
    let reduced: Vec<f64> = values
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| (i != skip).then_some(v))
        .collect();
    expand(&sorted_desc(&reduced))
}

pub fn elementary_symmetric(lambda: &CurvatureVector, k: usize) -> Result<f64, SymfunError> {
    let n = lambda.n();
    if k > n {
        return Err(SymfunError::OrderOutOfRange { k, n });
    }
    Ok(elementary_symmetric_all(lambda.values())[k])
}

fn check_order(n: usize, k: usize) -> Result<(), SymfunError> {
    if k == 0 || k > n {
        Err(SymfunError::OrderOutOfRange { k, n })
    } else {
        Ok(())
    }
}

/// Degeneracy threshold for `S_{k-1}`, scaled by `S_{k-1}(|λ|)`.
fn denominator_floor(values: &[f64], k: usize) -> f64 {
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    1e-14 * elementary_symmetric_all(&abs)[k - 1].max(1.0)
}

pub fn qk_quotient(lambda: &CurvatureVector, k: usize) -> Result<f64, SymfunError> {
    let n = lambda.n();
    check_order(n, k)?;
    let s = elementary_symmetric_all(lambda.values());
    let denom = s[k - 1];
    if denom <= denominator_floor(lambda.values(), k) {
        return Err(SymfunError::DegenerateDenominator {
            k,
            denominator: denom,
            lambda: lambda.values().to_vec(),
        });
    }
    Ok(s[k] / denom)
}

/// `Q_k` and its gradient `(S_{k-1,p}^2 - S_{k,p} S_{k-2,p}) / S_{k-1}^2`,
/// where `S_{j,p}` omits `λ_p`.
pub fn qk_gradient(lambda: &CurvatureVector, k: usize) -> Result<SymQuotientJet, SymfunError> {
    let value = qk_quotient(lambda, k)?;
    let vals = lambda.values();
    let n = vals.len();
    let denom = elementary_symmetric_all(vals)[k - 1];
    let gradient = (0..n)
        .map(|p| {
            let sp = elementary_symmetric_without(vals, p);
            let at = |j: isize| -> f64 {
                if j < 0 || j as usize >= sp.len() {
                    0.0
                } else {
                    sp[j as usize]
                }
            };
            let k = k as isize;
            (at(k - 1) * at(k - 1) - at(k) * at(k - 2)) / (denom * denom)
        })
        .collect();
    Ok(SymQuotientJet { k, value, gradient })
}

/// Right-hand side of Dieter's lower bound on `∂Q_k/∂λ_p`:
/// `n/(k(n-k+1)) (S_{k-1,p}/S_{k-1})^2`.
pub fn dieter_lower_bound(lambda: &CurvatureVector, k: usize) -> Result<Vec<f64>, SymfunError> {
    let n = lambda.n();
    check_order(n, k)?;
    let vals = lambda.values();
    let denom = elementary_symmetric_all(vals)[k - 1];
    let factor = n as f64 / (k as f64 * (n - k + 1) as f64);
    Ok((0..n)
        .map(|p| {
            let r = elementary_symmetric_without(vals, p)[k - 1] / denom;
            factor * r * r
        })
        .collect())
}

/// Returns `(Σ ∂Q_k/∂λ_i λ_i², k/(n-k+1) Q_k²)`; the first dominates the second
/// for strictly positive tuples.
pub fn positivity_identity_check(
    lambda: &CurvatureVector,
    k: usize,
) -> Result<(f64, f64), SymfunError> {
    let jet = qk_gradient(lambda, k)?;
    let n = lambda.n();
    let lhs = jet
        .gradient
        .iter()
        .zip(lambda.values())
        .map(|(g, l)| g * l * l)
        .sum();
    let rhs = k as f64 / (n - k + 1) as f64 * jet.value * jet.value;
    Ok((lhs, rhs))
}

/// `Q_k(1/r)` evaluated through the principal radii as `S_{n-k}(r)/S_{n-k+1}(r)`.
///
/// Well conditioned when some curvature is nearly zero (its radius is large
/// but finite) or when radii are tiny.
pub fn qk_from_radii(radii: &[f64], k: usize) -> Result<f64, SymfunError> {
    let n = radii.len();
    if n == 0 {
        return Err(SymfunError::Empty);
    }
    check_order(n, k)?;
    let s = elementary_symmetric_all(radii);
    let denom = s[n - k + 1];
    let abs: Vec<f64> = radii.iter().map(|v| v.abs()).collect();
    if denom <= 1e-14 * elementary_symmetric_all(&abs)[n - k + 1].max(f64::MIN_POSITIVE) {
        return Err(SymfunError::DegenerateDenominator {
            k,
            denominator: denom,
            lambda: radii.iter().map(|r| 1.0 / r).collect(),
        });
    }
    Ok(s[n - k] / denom)
}

/// Gradient of the speed with respect to the radii,
/// `∂/∂r_p [S_{n-k}(r)/S_{n-k+1}(r)]`.
pub fn qk_radii_gradient(radii: &[f64], k: usize) -> Result<Vec<f64>, SymfunError> {
    let n = radii.len();
    check_order(n, k)?;
    let s = elementary_symmetric_all(radii);
    let (top, bot) = (s[n - k], s[n - k + 1]);
    Ok((0..n)
        .map(|p| {
            let sp = elementary_symmetric_without(radii, p);
            // ∂S_j/∂r_p = S_{j-1,p}
            let dtop = if n - k >= 1 { sp[n - k - 1] } else { 0.0 };
            let dbot = sp[n - k];
            (dtop * bot - top * dbot) / (bot * bot)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cv(v: &[f64]) -> CurvatureVector {
        CurvatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn small_values() {
        assert_eq!(elementary_symmetric(&cv(&[1.0, 2.0, 3.0]), 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&cv(&[5.0, 7.0, 9.0]), 0).unwrap(), 1.0);
        assert_eq!(elementary_symmetric(&cv(&[1.0; 4]), 2).unwrap(), 6.0);
        assert_eq!(qk_quotient(&cv(&[1.0; 3]), 2).unwrap(), 1.0);
        let q = qk_quotient(&cv(&[1.0, 2.0, 3.0]), 3).unwrap();
        assert!((q - 6.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn umbilic_quotient() {
        for n in 1..=6 {
            for k in 1..=n {
                let c = 1.7;
                let q = qk_quotient(&CurvatureVector::umbilic(n, c), k).unwrap();
                let want = c * (n - k + 1) as f64 / k as f64;
                assert!((q - want).abs() < 1e-14 * want);
                let jet = qk_gradient(&CurvatureVector::umbilic(n, 1.0), k).unwrap();
                let s: f64 = jet.gradient.iter().sum();
                assert!((s - (n - k + 1) as f64 / k as f64).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn errors() {
        assert_eq!(CurvatureVector::new(vec![]), Err(SymfunError::Empty));
        assert!(matches!(
            elementary_symmetric(&cv(&[1.0, 2.0]), 3),
            Err(SymfunError::OrderOutOfRange { k: 3, n: 2 })
        ));
        assert!(matches!(
            qk_quotient(&cv(&[1.0, 2.0]), 0),
            Err(SymfunError::OrderOutOfRange { .. })
        ));
        // S_1 = 0 for k = 2 on a flat point
        assert!(matches!(
            qk_quotient(&cv(&[0.0, 0.0, 0.0]), 2),
            Err(SymfunError::DegenerateDenominator { k: 2, .. })
        ));
    }

    #[test]
    fn radii_form_matches_curvature_form() {
        let lam = [0.3, 1.1, 2.5, 0.7];
        let radii: Vec<f64> = lam.iter().map(|l| 1.0 / l).collect();
        for k in 1..=4 {
            let a = qk_quotient(&cv(&lam), k).unwrap();
            let b = qk_from_radii(&radii, k).unwrap();
            assert!((a - b).abs() < 1e-13 * a);
        }
    }

    #[test]
    fn radii_gradient_matches_chain_rule() {
        let lam = [0.3, 1.1, 2.5];
        let radii: Vec<f64> = lam.iter().map(|l| 1.0 / l).collect();
        for k in 1..=3 {
            let jet = qk_gradient(&cv(&lam), k).unwrap();
            let g = qk_radii_gradient(&radii, k).unwrap();
            for p in 0..3 {
                let want = -jet.gradient[p] * lam[p] * lam[p];
                assert!((g[p] - want).abs() < 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn positivity_equality_at_umbilic() {
        for n in 1..=5 {
            for k in 1..=n {
                let (lhs, rhs) = positivity_identity_check(&CurvatureVector::umbilic(n, 1.0), k).unwrap();
                let want = (n - k + 1) as f64 / k as f64;
                assert!((lhs - want).abs() < 1e-13);
                assert!((rhs - want).abs() < 1e-13);
            }
        }
        let (lhs, rhs) = positivity_identity_check(&cv(&[1.0, 2.0]), 2).unwrap();
        assert!(lhs >= rhs);
    }

    #[test]
    fn positivity_near_degenerate_sweep() {
        for n in 2..=5 {
            for k in 1..n {
                let mut eps = 1.0;
                while eps > 1e-10 {
                    let mut v = vec![1.0; n];
                    v[0] = eps;
                    let (lhs, rhs) = positivity_identity_check(&cv(&v), k).unwrap();
                    assert!(lhs >= rhs - 1e-12 * rhs.max(1.0), "n={n} k={k} eps={eps}");
                    eps *= 0.1;
                }
            }
        }
    }

    #[test]
    fn permutation_is_bitwise_invariant() {
        let a = cv(&[0.3, 1.7, 2.9, 0.11, 5.0]);
        let b = cv(&[5.0, 0.11, 0.3, 2.9, 1.7]);
        for k in 0..=5 {
            assert_eq!(
                elementary_symmetric(&a, k).unwrap().to_bits(),
                elementary_symmetric(&b, k).unwrap().to_bits()
            );
        }
        for k in 1..=5 {
            assert_eq!(
                qk_quotient(&a, k).unwrap().to_bits(),
                qk_quotient(&b, k).unwrap().to_bits()
            );
        }
    }

    fn subset_sum(v: &[f64], k: usize) -> f64 {
        (0u32..1 << v.len())
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..v.len()).filter(|i| m >> i & 1 == 1).map(|i| v[i]).product::<f64>())
            .sum()
    }

    fn tuple() -> impl Strategy<Value = (Vec<f64>, usize)> {
        (1usize..=8).prop_flat_map(|n| (proptest::collection::vec(0.05f64..20.0, n), 1..=n))
    }

    proptest! {
        #[test]
        fn matches_subset_enumeration((v, k) in tuple()) {
            let got = elementary_symmetric(&cv(&v), k).unwrap();
            let want = subset_sum(&v, k);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs());
        }

        #[test]
        fn euler_identity((v, k) in tuple()) {
            let jet = qk_gradient(&cv(&v), k).unwrap();
            let e: f64 = jet.gradient.iter().zip(&v).map(|(g, l)| g * l).sum();
            prop_assert!((e - jet.value).abs() <= 1e-12 * jet.value);
        }

        #[test]
        fn concave_on_positive_cone((v, k) in tuple(), seed in 0.05f64..20.0) {
            let w: Vec<f64> = v.iter().enumerate().map(|(i, x)| (x * seed + i as f64).rem_euclid(19.0) + 0.1).collect();
            let mid: Vec<f64> = v.iter().zip(&w).map(|(a, b)| 0.5 * (a + b)).collect();
            let q = |x: &[f64]| qk_quotient(&cv(x), k).unwrap();
            prop_assert!(q(&mid) >= 0.5 * (q(&v) + q(&w)) - 1e-12 * q(&mid));
        }

        #[test]
        fn dieter_and_positivity((v, k) in tuple()) {
            let lam = cv(&v);
            let g = qk_gradient(&lam, k).unwrap().gradient;
            let lb = dieter_lower_bound(&lam, k).unwrap();
            for (a, b) in g.iter().zip(&lb) {
                prop_assert!(*a >= b * (1.0 - 1e-12));
            }
            let (lhs, rhs) = positivity_identity_check(&lam, k).unwrap();
            prop_assert!(lhs >= rhs * (1.0 - 1e-12));
        }
    }
}

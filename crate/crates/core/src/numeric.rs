//! Small least-squares helpers shared by the fitting code.

use nalgebra::{DMatrix, DVector};

/// Least-squares polynomial coefficients, lowest degree first.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>, String> {
    if x.len() != y.len() || x.len() <= degree {
        return Err(format!(
            "need more than {degree} points for a degree-{degree} fit, got {}",
            x.len()
        ));
    }
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, j| x[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let sol = svd.solve(&b, 1e-14).map_err(|e| e.to_string())?;
    Ok(sol.iter().copied().collect())
}

/// Slope of the least-squares line through `(x, y)`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64, String> {
    polyfit(x, y, 1).map(|c| c[1])
}

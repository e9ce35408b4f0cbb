//! Least squares through a Householder QR of the column-equilibrated design.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solve `min ||X b - y||` where `rows` are the rows of `X`. Columns are
/// scaled to unit norm before factorising so that e.g. a time column in the
/// tens of thousands does not swamp the rank test.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64], what: &'static str) -> Result<Vec<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n < p || p == 0 || y.len() != n {
        return Err(Error::SingularDesign(what));
    }
    let mut x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let mut scale = vec![0.0; p];
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = x.column(j).norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::SingularDesign(what));
        }
        *s = norm;
        x.column_mut(j).unscale_mut(norm);
    }
    let qr = x.qr();
    let r = qr.r();
    let rmax = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= 1e-12 * rmax) {
        return Err(Error::SingularDesign(what));
    }
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let b = r.solve_upper_triangular(&qty).ok_or(Error::SingularDesign(what))?;
    Ok(b.iter().zip(&scale).map(|(v, s)| v / s).collect())
}

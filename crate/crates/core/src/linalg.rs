//! Dense solves for the spatial system `(I - rho W) x = b`.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Reciprocal condition numbers below this are treated as singular.
pub(crate) const RCOND_THRESHOLD: f64 = 1e-12;

/// Maximum absolute column sum (the matrix 1-norm).
fn one_norm(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|v| v.abs()).sum();
        worst = worst.max(s);
    }
    worst
}

/// Solve `a x = b` by LU factorization, rejecting systems whose estimated
/// reciprocal condition number `1 / (||A||_1 ||A^-1||_1)` falls below
/// [`RCOND_THRESHOLD`].
pub(crate) fn solve_checked(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let norm_a = one_norm(&a);
    let lu = a.lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::numerical("spatial system is singular".to_string()))?;
    let rcond = 1.0 / (norm_a * one_norm(&inv));
    if !rcond.is_finite() || rcond < RCOND_THRESHOLD {
        return Err(Error::numerical(format!(
            "spatial system is numerically singular (rcond {rcond:.3e})"
        )));
    }
    lu.solve(b)
        .ok_or_else(|| Error::numerical("spatial system solve failed".to_string()))
}

/// Solve `(I - rho W) x = b`.
pub(crate) fn solve_spatial(w: &DMatrix<f64>, rho: f64, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = w.nrows();
    let mut a = w * (-rho);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    solve_checked(a, b)
}

/// Ordinary least squares fit of `y` on the columns of `x`; returns the
/// coefficient vector and the residual standard deviation.
pub(crate) fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let beta = xtx
        .lu()
        .solve(&xty)
        .ok_or_else(|| Error::numerical("least-squares system is singular".to_string()))?;
    let resid = y - x * &beta;
    let dof = (x.nrows() as f64 - x.ncols() as f64).max(1.0);
    let sd = (resid.norm_squared() / dof).sqrt();
    Ok((beta, sd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_small_system() {
        // W = [[0,1],[1,0]], rho = 0.5: (I - 0.5 W) x = b
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0]);
        let x = solve_spatial(&w, 0.5, &b).unwrap();
        // A = [[1,-0.5],[-0.5,1]], A^-1 = (1/0.75)[[1,0.5],[0.5,1]]
        assert_relative_eq!(x[0], (1.0 + 1.0) / 0.75, epsilon = 1e-12);
        assert_relative_eq!(x[1], (0.5 + 2.0) / 0.75, epsilon = 1e-12);
    }

    #[test]
    fn rejects_singular_system() {
        // rho = 1 with W = [[0,1],[1,0]] makes I - W singular
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0]);
        let err = solve_spatial(&w, 1.0, &b).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn ols_recovers_exact_fit() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let y = DVector::from_column_slice(&[1.0, 3.0, 5.0]);
        let (beta, sd) = ols(&x, &y).unwrap();
        assert_relative_eq!(beta[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(beta[1], 2.0, epsilon = 1e-12);
        assert!(sd.abs() < 1e-10);
    }
}

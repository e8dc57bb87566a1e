use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Gaussian elimination with partial pivoting on a dense copy.
///
/// A pivot smaller than `1e-12` times the largest entry of the input is
/// treated as singular.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::invalid(format!(
            "dense_solve: matrix {}x{} with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let scale = m.amax();
    if n > 0 && scale == 0.0 {
        return Err(Error::SingularMatrix("zero matrix".into()));
    }
    let threshold = 1e-12 * scale;
    for col in 0..n {
        let (piv, val) = (col..n)
            .map(|r| (r, m[(r, col)].abs()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= threshold {
            return Err(Error::SingularMatrix(format!(
                "pivot {val:.3e} at column {col} below {threshold:.3e}"
            )));
        }
        if piv != col {
            m.swap_rows(piv, col);
            rhs.swap(piv, col);
        }
        let p = m[(col, col)];
        for r in col + 1..n {
            let f = m[(r, col)] / p;
            if f != 0.0 {
                for c in col..n {
                    let v = m[(col, c)];
                    m[(r, c)] -= f * v;
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in r + 1..n {
            acc -= m[(r, c)] * x[c];
        }
        x[r] = acc / m[(r, r)];
    }
    Ok(x)
}

/// Orthonormal kernel basis of a dense symmetric matrix from a full eigen
/// decomposition: eigenvectors with `|lambda| <= rel_tol * max|lambda|`.
pub fn dense_symmetric_kernel(a: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    let lmax = eig.eigenvalues.amax();
    (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i].abs() <= rel_tol * lmax)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect()
}

/// Largest principal angle (radians) between the column spans of two
/// orthonormal bases of equal dimension.
pub fn max_principal_angle(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let qa = DMatrix::from_columns(a);
    let qb = DMatrix::from_columns(b);
    // sin of the largest angle = ||(I - Qb Qb^T) Qa||_2
    let resid = &qa - &qb * (qb.transpose() * &qa);
    let s = resid.singular_values().max();
    s.min(1.0).asin()
}

//! Small dense linear algebra helpers over faer.

use faer::linalg::solvers::Solve;
use faer::{MatRef, Side};

use crate::{c64, CMatrix, Error, Matrix, Result};

/// Symmetric eigendecomposition with eigenvalues in descending order.
///
/// Each eigenvector is signed so that its largest-magnitude entry is
/// positive (first such entry on ties), which makes outputs deterministic.
pub fn sym_eigen_desc(g: MatRef<'_, f64>) -> Result<(Vec<f64>, Matrix)> {
    let n = g.nrows();
    if n != g.ncols() {
        return Err(Error::DimensionMismatch { expected: n, got: g.ncols() });
    }
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0, 0)));
    }
    let sym = symmetrize(g);
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("symmetric eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut values = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(n, n);
    for (k, src) in (0..n).rev().enumerate() {
        values.push(s[src]);
        let mut pivot = 0;
        for i in 1..n {
            if u[(i, src)].abs() > u[(pivot, src)].abs() {
                pivot = i;
            }
        }
        let sign = if u[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, k)] = sign * u[(i, src)];
        }
    }
    Ok((values, vectors))
}

/// `(A + Aᵀ)/2`.
pub fn symmetrize(a: MatRef<'_, f64>) -> Matrix {
    Matrix::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// `max |a_ij - a_ji| / max |a_ij|` (zero for the zero matrix).
pub fn relative_asymmetry(a: MatRef<'_, f64>) -> f64 {
    let mut scale = 0.0f64;
    let mut asym = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            scale = scale.max(a[(i, j)].abs());
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        asym / scale
    }
}

/// `xᵀ A y`.
pub fn bilinear(a: MatRef<'_, f64>, x: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..a.nrows() {
        let mut row = 0.0;
        for j in 0..a.ncols() {
            row += a[(i, j)] * y[j];
        }
        total += x[i] * row;
    }
    total
}

pub fn mat_vec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
        .collect()
}

pub fn to_rows(a: MatRef<'_, f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<Matrix> {
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch { expected: ncols, got: bad.len() });
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

/// 2-norm condition number via singular values (`inf` when singular).
pub fn condition_number(a: MatRef<'_, f64>) -> Result<f64> {
    let sv = a
        .singular_values()
        .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
    Ok(condition_from_singular_values(&sv))
}

pub fn complex_condition_number(a: MatRef<'_, c64>) -> Result<f64> {
    let sv = a
        .singular_values()
        .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
    Ok(condition_from_singular_values(&sv))
}

fn condition_from_singular_values(sv: &[f64]) -> f64 {
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Solves `A X = B` for square complex `A` by partial-pivot LU.
pub fn complex_solve(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<CMatrix> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    let x = a.partial_piv_lu().solve(b);
    if x.col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::LinearAlgebra("singular complex system".into()));
    }
    Ok(x)
}

pub fn to_complex(a: MatRef<'_, f64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_descending_with_sign_convention() {
        let g = Matrix::from_fn(2, 2, |i, j| if i == j { 2.0 } else { -1.0 });
        let (vals, vecs) = sym_eigen_desc(g.as_ref()).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        for k in 0..2 {
            let col: Vec<f64> = (0..2).map(|i| vecs[(i, k)]).collect();
            let pivot = col.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn asymmetry_measure() {
        let a = Matrix::from_fn(2, 2, |i, j| if i < j { 1.0 } else { 0.0 });
        assert_eq!(relative_asymmetry(a.as_ref()), 1.0);
        assert_eq!(relative_asymmetry(Matrix::identity(3, 3).as_ref()), 0.0);
    }

    #[test]
    fn complex_solve_roundtrip() {
        let a = CMatrix::from_fn(2, 2, |i, j| c64::new((i + 2 * j) as f64 + 1.0, (i as f64) - (j as f64)));
        let b = CMatrix::from_fn(2, 1, |i, _| c64::new(1.0, i as f64));
        let x = complex_solve(a.as_ref(), b.as_ref()).unwrap();
        let r = &a * &x - &b;
        assert!(r.norm_l2() < 1e-14);
    }
}

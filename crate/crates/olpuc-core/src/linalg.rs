//! Dense complex matrix helpers shared by the factorization, operator and
//! tau modules.
//!
//! Storage and generic arithmetic come from `nalgebra`; the one algorithm
//! implemented by hand is the unpivoted Doolittle factorization, because the
//! Gauss-Borel splitting g = S1^{-1} S2 is only meaningful without row
//! exchanges (pivoting would destroy the triangular dressing).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest entry magnitude; 0 for empty matrices.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
}

/// Unpivoted Doolittle factorization a = L U with unit-lower L.
///
/// Fails with `SingularMinor(k)` when the k-th leading principal minor is
/// numerically singular: the pivot magnitude falls below `tol * max|a_ij|`.
/// No row exchanges are performed; existence of the factorization is exactly
/// quasi-definiteness of the truncation.
pub fn unpivoted_lu(a: &CMatrix, tol: f64) -> Result<(CMatrix, CMatrix)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "unpivoted_lu expects a square matrix");
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let mut l = CMatrix::identity(n, n);
    let mut u = a.clone();
    for k in 0..n {
        let pivot = u[(k, k)];
        if pivot.norm() < tol * scale {
            return Err(Error::SingularMinor(k + 1));
        }
        for i in k + 1..n {
            let factor = u[(i, k)] / pivot;
            l[(i, k)] = factor;
            for j in k..n {
                let ukj = u[(k, j)];
                u[(i, j)] -= factor * ukj;
            }
        }
    }
    // Zero the numerically eliminated strictly-lower part of U.
    for i in 1..n {
        for j in 0..i {
            u[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok((l, u))
}

/// Inverse of a unit-lower-triangular matrix by forward substitution.
pub fn unit_lower_inverse(l: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mut inv = CMatrix::identity(n, n);
    for col in 0..n {
        for i in col + 1..n {
            let mut sum = Complex64::new(0.0, 0.0);
            for k in col..i {
                sum += l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = -sum;
        }
    }
    inv
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn upper_inverse(u: &CMatrix) -> Result<CMatrix> {
    let n = u.nrows();
    let mut inv = CMatrix::zeros(n, n);
    for col in (0..n).rev() {
        for i in (0..=col).rev() {
            let mut sum = if i == col {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for k in i + 1..=col {
                sum -= u[(i, k)] * inv[(k, col)];
            }
            let d = u[(i, i)];
            if d.norm() == 0.0 {
                return Err(Error::SingularMinor(i + 1));
            }
            inv[(i, col)] = sum / d;
        }
    }
    Ok(inv)
}

/// Determinant through the library's partially pivoted LU; stable even when
/// leading minors vanish, which makes it the independent referee for the
/// unpivoted path.
pub fn det_pivoted(a: &CMatrix) -> Complex64 {
    if a.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    a.clone().lu().determinant()
}

/// Solve a x = b with partial pivoting.
pub fn solve_pivoted(a: &CMatrix, b: &CVector) -> Result<CVector> {
    if a.nrows() == 0 {
        return Ok(CVector::zeros(0));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularMinor(a.nrows()))
}

/// Upper-triangular projection including the diagonal.
pub fn upper_part(m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..i.min(m.ncols()) {
            out[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Strictly lower-triangular projection.
pub fn strict_lower_part(m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            out[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Submatrix picked by explicit row and column index lists.
pub fn pick(m: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

//! Moment matrices of a measure in a monomial ordering.
//!
//! g_{jk} = integral chi^(j)(z) conj(chi^(k)(z)) dmu = 2 pi c_{J(k)-J(j)},
//! so every truncation is a symmetric permutation of a Toeplitz block and
//! det g^[l] = (2 pi)^l det(c_{k-j})_{j,k<l} for every ordering. The module
//! also exposes the quadrature oracle for g and the commutation residual of
//! the shift operator, [Upsilon, g] = 0 away from the truncation edge.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::linalg::{det_pivoted, CMatrix};
use crate::measure::Measure;
use crate::ordering::{OrderingSpec, UpsilonMatrix};
use crate::Result;

/// Truncated moment matrix from closed-form Fourier coefficients.
pub fn moment_matrix(m: &Measure, ord: OrderingSpec, size: usize) -> Result<CMatrix> {
    let two_pi = Complex64::new(2.0 * PI, 0.0);
    let mut g = CMatrix::zeros(size, size);
    for j in 0..size {
        for k in 0..size {
            let n = ord.index_exponent(k) - ord.index_exponent(j);
            g[(j, k)] = two_pi * m.moment(n)?;
        }
    }
    Ok(g)
}

/// The same matrix by trapezoid quadrature of chi chi^dagger dmu;
/// independent of the Fourier route.
pub fn moment_matrix_quadrature(
    m: &Measure,
    ord: OrderingSpec,
    size: usize,
    nodes: usize,
) -> CMatrix {
    let mut g = CMatrix::zeros(size, size);
    for (z, w) in m.quadrature(nodes) {
        let chi = ord.chi_vec(size, z);
        for j in 0..size {
            for k in 0..size {
                g[(j, k)] += w * chi[j] * chi[k].conj();
            }
        }
    }
    g
}

/// det g^[l] for l = 0..=size, each by pivoted LU. Entry 0 is 1.
pub fn leading_minor_dets(g: &CMatrix) -> Vec<Complex64> {
    (0..=g.nrows())
        .map(|l| det_pivoted(&g.view((0, 0), (l, l)).into_owned()))
        .collect()
}

/// det (c_{k-j})_{j,k=0..l-1}, the classical Toeplitz minor.
pub fn toeplitz_det(m: &Measure, l: usize) -> Result<Complex64> {
    let mut t = CMatrix::zeros(l, l);
    for j in 0..l {
        for k in 0..l {
            t[(j, k)] = m.moment(k as i64 - j as i64)?;
        }
    }
    Ok(det_pivoted(&t))
}

/// Max |(Upsilon g - g Upsilon)_{jk}| over rows with an in-range shift
/// target and columns with an in-range shift source. Exactly zero in exact
/// arithmetic, and in floating point too: both sides read the same moment.
pub fn string_residual(g: &CMatrix, ups: &UpsilonMatrix) -> f64 {
    let n = g.nrows();
    assert_eq!(n, ups.size);
    let lhs = &ups.entries * g;
    let rhs = g * &ups.entries;
    let mut worst = 0.0_f64;
    for j in 0..n {
        if ups.boundary_rows[j] {
            continue;
        }
        for k in 0..n {
            if ups.col_source(k).is_none() {
                continue;
            }
            worst = worst.max((lhs[(j, k)] - rhs[(j, k)]).norm());
        }
    }
    worst
}

/// Same residual for the transposed shift (division by z).
pub fn string_residual_transpose(g: &CMatrix, ups: &UpsilonMatrix) -> f64 {
    let n = g.nrows();
    let upt = ups.entries.transpose();
    let lhs = &upt * g;
    let rhs = g * &upt;
    let mut worst = 0.0_f64;
    for j in 0..n {
        // Row j of Upsilon^T is column j of Upsilon; it acts when j has a
        // shift source. Column k of Upsilon^T needs row k non-boundary.
        if ups.col_source(j).is_none() {
            continue;
        }
        for k in 0..n {
            if ups.boundary_rows[k] {
                continue;
            }
            worst = worst.max((lhs[(j, k)] - rhs[(j, k)]).norm());
        }
    }
    worst
}

//! The multiplication operators in the biorthogonal bases.
//!
//! Dressing the shift by either triangular factor gives the same banded
//! matrix: J = S1 Upsilon S1^{-1} = S2 Upsilon S2^{-1} realizes
//! multiplication by z on Phi_1, and M = S1 Upsilon^T S1^{-1} realizes
//! division by z. J carries n_minus + 1 superdiagonals and n_plus + 1
//! subdiagonals; M the transpose shape. In the CMV ordering both are
//! five-diagonal with closed-form entries in the Verblunsky coefficients,
//! which this module builds as an independent oracle for the dressed route.
//! All finite-truncation statements hold away from the edge; the interior
//! margin below is the band width plus one.

use num_complex::Complex64;

use crate::factorization::{Factorization, VerblunskyData};
use crate::linalg::CMatrix;
use crate::ordering::{build_upsilon, OrderingSpec};
use crate::{Error, Result};

/// Rows/columns within `size - margin` are unaffected by the truncation.
pub fn interior_margin(ord: OrderingSpec) -> usize {
    ord.n_plus() + ord.n_minus() + 2
}

/// J = S1 Upsilon S1^{-1}.
pub fn jacobi_from_s1(f: &Factorization) -> CMatrix {
    let ups = build_upsilon(f.ord, f.size);
    &f.s1 * &ups.entries * &f.s1_inv
}

/// J = S2 Upsilon S2^{-1}; equal to the S1 dressing on the interior.
pub fn jacobi_from_s2(f: &Factorization) -> CMatrix {
    let ups = build_upsilon(f.ord, f.size);
    &f.s2 * &ups.entries * &f.s2_inv
}

/// M = S1 Upsilon^T S1^{-1}, the division-by-z operator on Phi_1.
pub fn inverse_op_from_s1(f: &Factorization) -> CMatrix {
    let ups = build_upsilon(f.ord, f.size);
    &f.s1 * ups.entries.transpose() * &f.s1_inv
}

/// M = S2 Upsilon^T S2^{-1}.
pub fn inverse_op_from_s2(f: &Factorization) -> CMatrix {
    let ups = build_upsilon(f.ord, f.size);
    &f.s2 * ups.entries.transpose() * &f.s2_inv
}

/// Max |a - b| over the leading square block of side `size - margin`.
pub fn interior_diff(a: &CMatrix, b: &CMatrix, margin: usize) -> f64 {
    let n = a.nrows().saturating_sub(margin);
    let mut worst = 0.0_f64;
    for j in 0..n {
        for k in 0..n {
            worst = worst.max((a[(j, k)] - b[(j, k)]).norm());
        }
    }
    worst
}

/// Max |entry| outside the band k - j in [-sub, sup], interior rows only.
pub fn band_residual(m: &CMatrix, sup: usize, sub: usize, margin: usize) -> f64 {
    let n = m.nrows().saturating_sub(margin);
    let mut worst = 0.0_f64;
    for j in 0..n {
        for k in 0..n {
            let off = k as i64 - j as i64;
            if off > sup as i64 || -off > sub as i64 {
                worst = worst.max(m[(j, k)].norm());
            }
        }
    }
    worst
}

fn require_data(v: &VerblunskyData, needed: usize) -> Result<()> {
    if v.len() < needed {
        Err(Error::IndexOutOfRange {
            index: needed,
            size: v.len(),
        })
    } else {
        Ok(())
    }
}

/// Five-diagonal multiplication matrix in the CMV ordering, from Verblunsky
/// data alone. With alpha_0 = 1 and rho_0^2 = 0 the edge rows need no
/// special casing. Requires data up to index size + 1.
pub fn explicit_jacobi(v: &VerblunskyData, size: usize) -> Result<CMatrix> {
    require_data(v, size + 2)?;
    let mut j = CMatrix::zeros(size, size);
    let mut put = |r: usize, c: i64, val: Complex64| {
        if r < size && c >= 0 && (c as usize) < size {
            j[(r, c as usize)] = val;
        }
    };
    for k in 0..size.div_ceil(2) {
        let (e, o) = (2 * k, 2 * k + 1);
        put(
            e,
            e as i64 - 1,
            -v.rho_sq[e] * v.alpha1[o],
        );
        put(e, e as i64, -v.alpha2[e].conj() * v.alpha1[o]);
        put(e, e as i64 + 1, -v.alpha1[e + 2]);
        put(e, e as i64 + 2, Complex64::new(1.0, 0.0));
        if o < size {
            put(o, e as i64 - 1, v.rho_sq[o] * v.rho_sq[e]);
            put(o, e as i64, v.rho_sq[o] * v.alpha2[e].conj());
            put(o, o as i64, -v.alpha2[o].conj() * v.alpha1[e + 2]);
            put(o, o as i64 + 1, v.alpha2[o].conj());
        }
    }
    Ok(j)
}

/// Explicit division-by-z matrix in the CMV ordering:
/// even rows (2k): alpha1_{2k} at 2k+1, -alpha1_{2k} conj(alpha2_{2k+1}) at
/// 2k, rho_{2k}^2 alpha1_{2k-1} at 2k-1, rho_{2k-1}^2 rho_{2k}^2 at 2k-2;
/// odd rows (2k+1): 1 at 2k+3, -conj(alpha2_{2k+3}) at 2k+2,
/// -alpha1_{2k+1} conj(alpha2_{2k+2}) at 2k+1, -rho_{2k+1}^2
/// conj(alpha2_{2k+2}) at 2k.
pub fn explicit_inverse_op(v: &VerblunskyData, size: usize) -> Result<CMatrix> {
    require_data(v, size + 3)?;
    let mut m = CMatrix::zeros(size, size);
    let mut put = |r: usize, c: i64, val: Complex64| {
        if r < size && c >= 0 && (c as usize) < size {
            m[(r, c as usize)] = val;
        }
    };
    for k in 0..size.div_ceil(2) {
        let (e, o) = (2 * k, 2 * k + 1);
        put(e, e as i64 + 1, v.alpha1[e]);
        put(e, e as i64, -v.alpha1[e] * v.alpha2[o].conj());
        if e >= 1 {
            put(e, e as i64 - 1, v.rho_sq[e] * v.alpha1[e - 1]);
        }
        if e >= 2 {
            put(e, e as i64 - 2, v.rho_sq[e - 1] * v.rho_sq[e]);
        }
        if o < size {
            put(o, o as i64 + 2, Complex64::new(1.0, 0.0));
            put(o, o as i64 + 1, -v.alpha2[o + 2].conj());
            put(o, o as i64, -v.alpha1[o] * v.alpha2[o + 1].conj());
            put(o, e as i64, -v.rho_sq[o] * v.alpha2[o + 1].conj());
        }
    }
    Ok(m)
}

/// Max |z^{+-1} phi_1^(l)(z) - sum_k op_{lk} phi_1^(k)(z)| over trusted rows
/// and the given sample points.
pub fn recursion_residual(
    f: &Factorization,
    op: &CMatrix,
    inverse: bool,
    zs: &[Complex64],
) -> f64 {
    let rows = f.trusted_len();
    let phis = f.phi1_all(f.size);
    let mut worst = 0.0_f64;
    for &z in zs {
        let vals: Vec<Complex64> = phis.iter().map(|p| p.eval(z)).collect();
        let factor = if inverse { z.inv() } else { z };
        for l in 0..rows {
            let mut rhs = Complex64::new(0.0, 0.0);
            for k in 0..f.size {
                if op[(l, k)].norm() != 0.0 {
                    rhs += op[(l, k)] * vals[k];
                }
            }
            worst = worst.max((factor * vals[l] - rhs).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::factorize;
    use crate::measure::Measure;
    use crate::moments::moment_matrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quasi() -> Measure {
        Measure::custom([
            (0, c(1.0, 0.0)),
            (1, c(0.2, 0.1)),
            (-1, c(0.15, -0.25)),
            (2, c(-0.05, 0.08)),
            (-2, c(0.1, 0.02)),
        ])
    }

    fn fact(m: &Measure, ord: OrderingSpec, size: usize) -> Factorization {
        let g = moment_matrix(m, ord, size).unwrap();
        factorize(&g, ord, 1e-13).unwrap()
    }

    fn orderings() -> [OrderingSpec; 3] {
        [
            OrderingSpec::cmv(),
            OrderingSpec::new(2, 1).unwrap(),
            OrderingSpec::new(3, 2).unwrap(),
        ]
    }

    #[test]
    fn dressings_agree_on_interior() {
        let m = quasi();
        for ord in orderings() {
            let f = fact(&m, ord, 16);
            let margin = interior_margin(ord);
            let d = interior_diff(&jacobi_from_s1(&f), &jacobi_from_s2(&f), margin);
            assert!(d < 1e-9, "J dressing ({}, {}): {d}", ord.n_plus(), ord.n_minus());
            let di = interior_diff(&inverse_op_from_s1(&f), &inverse_op_from_s2(&f), margin);
            assert!(di < 1e-9, "M dressing: {di}");
        }
    }

    #[test]
    fn band_structure() {
        let m = quasi();
        for ord in orderings() {
            let f = fact(&m, ord, 18);
            let margin = interior_margin(ord);
            let (np, nm) = (ord.n_plus(), ord.n_minus());
            assert!(band_residual(&jacobi_from_s1(&f), nm + 1, np + 1, margin) < 1e-9);
            assert!(band_residual(&inverse_op_from_s1(&f), np + 1, nm + 1, margin) < 1e-9);
        }
    }

    #[test]
    fn explicit_jacobi_matches_dressed() {
        for m in [quasi(), Measure::trig_poly(0.5).unwrap(), Measure::exp_cos()] {
            let ord = OrderingSpec::cmv();
            let f = fact(&m, ord, 16);
            let v = f.verblunsky(16).unwrap();
            let inner = f.size - interior_margin(ord);
            let j = explicit_jacobi(&v, inner).unwrap();
            let dressed = jacobi_from_s1(&f);
            let mut worst = 0.0_f64;
            for r in 0..inner {
                for cidx in 0..inner {
                    worst = worst.max((j[(r, cidx)] - dressed[(r, cidx)]).norm());
                }
            }
            assert!(worst < 1e-9, "explicit J residual {worst}");
        }
    }

    #[test]
    fn explicit_inverse_matches_dressed() {
        let m = quasi();
        let ord = OrderingSpec::cmv();
        let f = fact(&m, ord, 18);
        let v = f.verblunsky(18).unwrap();
        let inner = f.size - interior_margin(ord);
        let mi = explicit_inverse_op(&v, inner).unwrap();
        let dressed = inverse_op_from_s1(&f);
        let mut worst = 0.0_f64;
        for r in 0..inner {
            for cidx in 0..inner {
                worst = worst.max((mi[(r, cidx)] - dressed[(r, cidx)]).norm());
            }
        }
        assert!(worst < 1e-9, "explicit M residual {worst}");
        // Row 0 is the truncated relation z^{-1} phi^(0) = phi^(1)
        // - conj(alpha2_1) phi^(0).
        assert!((mi[(0, 0)] + v.alpha2[1].conj()).norm() < 1e-10);
        assert!((mi[(0, 1)] - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn five_term_recursions_at_sample_points() {
        let m = quasi();
        let zs = [c(0.8, 0.3), c(-0.4, 1.1), c(0.05, -0.95)];
        for ord in orderings() {
            let f = fact(&m, ord, 16);
            let j = jacobi_from_s1(&f);
            let mi = inverse_op_from_s1(&f);
            assert!(recursion_residual(&f, &j, false, &zs) < 1e-8);
            assert!(recursion_residual(&f, &mi, true, &zs) < 1e-8);
        }
    }
}

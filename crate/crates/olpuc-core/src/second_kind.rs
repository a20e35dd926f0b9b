//! Second-kind functions: the tails C_1^(l) = (S1^{-1})^dag chi^*,
//! C_2^(l) = S2 chi^* and their class-1 / class-2 partial splits.
//!
//! Three evaluation routes are kept consistent:
//! series    - the measure's Fourier series against the polynomial
//!             coefficients, e.g. C_2^(l)(z) = 2 pi phi_1^(l)(1/z) F_mu(1/z)/z;
//! cauchy    - quadrature of the Cauchy integrals z^{-1} oint u phi(u)/(u - 1/z),
//!             valid off the unit circle (partials only);
//! gamma_det - bordered-determinant form: pivoted solves against g with the
//!             windowed Fourier tails Gamma^(l)_{a,j}.
//!
//! The Gamma tail sum_{k>=l} g_{jk} chi^{*(k)} splits the Fourier series at
//! the class counts nu_plus(l-1) / nu_minus(l-1), not at l itself: the first
//! l columns remove nu_plus(l-1) nonnegative and nu_minus(l-1) negative
//! exponents. The direct-sum oracle in the tests pins this window.

use num_complex::Complex64;

use crate::factorization::Factorization;
use crate::linalg::{solve_pivoted, CVector};
use crate::measure::{LaurentPoly, Measure};
use crate::ordering::OrderingSpec;
use crate::{Error, Result};

pub const NEAR_CIRCLE_INNER: f64 = 0.95;
pub const NEAR_CIRCLE_OUTER: f64 = 1.05;

/// Which second-kind function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    C11,
    C12,
    C21,
    C22,
    C1,
    C2,
}

/// Evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Series,
    Cauchy,
    GammaDet,
}

const TAU: f64 = std::f64::consts::TAU;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Class-b monomial part of a Laurent polynomial: nonnegative exponents for
/// b = 1, negative for b = 2.
pub fn partial_poly(p: &LaurentPoly, b: u8) -> LaurentPoly {
    let keep: Vec<(i64, Complex64)> = p
        .iter()
        .filter(|&(k, _)| if b == 1 { k >= 0 } else { k < 0 })
        .collect();
    LaurentPoly::from_pairs(keep)
}

fn series_partial(
    f: &Factorization,
    m: &Measure,
    l: usize,
    which: Which,
    z: Complex64,
) -> Result<Complex64> {
    let zi = one() / z;
    let mut s = Complex64::new(0.0, 0.0);
    match which {
        Which::C11 | Which::C12 => {
            for (k, pk) in f.phi2(l).iter() {
                let fk = match which {
                    Which::C11 => m.fourier_minus_bar(-k - 1, z)?,
                    _ => m.fourier_plus_bar(-k - 1, z)?,
                };
                s += pk * z.powi(-(k as i32) - 1) * fk;
            }
        }
        Which::C21 | Which::C22 => {
            for (k, pk) in f.phi1(l).iter() {
                let fk = match which {
                    Which::C21 => m.fourier_plus(k, zi)?,
                    _ => m.fourier_minus(k, zi)?,
                };
                s += pk * z.powi(-(k as i32) - 1) * fk;
            }
        }
        _ => unreachable!(),
    }
    Ok(TAU * s)
}

fn cauchy_partial(
    f: &Factorization,
    m: &Measure,
    l: usize,
    which: Which,
    z: Complex64,
    nodes: usize,
) -> Result<Complex64> {
    let r = z.norm();
    if r > NEAR_CIRCLE_INNER && r < NEAR_CIRCLE_OUTER {
        return Err(Error::QuadratureNearCircle);
    }
    let outer = matches!(which, Which::C11 | Which::C21);
    if outer != (r >= 1.0) {
        return Err(Error::OutsideRegion(format!(
            "cauchy form of {which:?} needs |z| {} 1, got {r}",
            if outer { ">" } else { "<" }
        )));
    }
    let conj_measure = matches!(which, Which::C11 | Which::C12);
    let poly = if conj_measure { f.phi2(l) } else { f.phi1(l) };
    let zi = one() / z;
    let mut s = Complex64::new(0.0, 0.0);
    for (u, w) in m.quadrature(nodes) {
        let w = if conj_measure { w.conj() } else { w };
        s += u * poly.eval(u) / (u - zi) * w;
    }
    let sign = if outer { 1.0 } else { -1.0 };
    Ok(sign * zi * s)
}

/// Windowed Fourier form of the tail Gamma^(l)_{side,j}(z).
pub fn gamma_eval(
    m: &Measure,
    ord: OrderingSpec,
    l: usize,
    j: usize,
    side: u8,
    z: Complex64,
) -> Result<Complex64> {
    let (p, q) = if l == 0 {
        (0i64, 0i64)
    } else {
        (ord.nu_plus(l - 1) as i64, ord.nu_minus(l - 1) as i64)
    };
    let jj = ord.index_exponent(j);
    let pref = TAU * z.powi(-(jj as i32) - 1);
    match side {
        1 => {
            let zi = one() / z;
            Ok(pref * (m.fourier_plus(jj - p, zi)? + m.fourier_minus(jj + q, zi)?))
        }
        2 => Ok(pref
            * (m.fourier_minus_bar(p - jj - 1, z)? + m.fourier_plus_bar(-q - jj - 1, z)?)),
        other => panic!("side must be 1 or 2, got {other}"),
    }
}

/// Truncated direct sum over moment-matrix entries; the oracle for
/// `gamma_eval`.
pub fn gamma_direct(
    m: &Measure,
    ord: OrderingSpec,
    l: usize,
    j: usize,
    side: u8,
    z: Complex64,
    terms: usize,
) -> Result<Complex64> {
    let jj = ord.index_exponent(j);
    let mut s = Complex64::new(0.0, 0.0);
    for k in l..l + terms {
        let jk = ord.index_exponent(k);
        let entry = match side {
            1 => TAU * m.moment(jk - jj)?,
            _ => (TAU * m.moment(jj - jk)?).conj(),
        };
        s += entry * z.powi(-(jk as i32) - 1);
    }
    Ok(s)
}

fn gamma_det_full(
    f: &Factorization,
    m: &Measure,
    l: usize,
    which: Which,
    z: Complex64,
) -> Result<Complex64> {
    let g = &f.s1_inv * &f.s2;
    let gl1 = g.view((0, 0), (l + 1, l + 1)).into_owned();
    let mut e = CVector::zeros(l + 1);
    e[l] = one();
    match which {
        Which::C1 => {
            // Column l of S2^{-1} solves g^[l+1] x = e_l.
            let x = solve_pivoted(&gl1, &e)?;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..=l {
                s += x[j].conj() * gamma_eval(m, f.ord, l, j, 2, z)?;
            }
            Ok(s)
        }
        Which::C2 => {
            // Row l of S1 is h_l times row l of (g^[l+1])^{-1}.
            let w = solve_pivoted(&gl1.transpose(), &e)?;
            let h = f.h(l);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..=l {
                s += h * w[j] * gamma_eval(m, f.ord, l, j, 1, z)?;
            }
            Ok(s)
        }
        other => Err(Error::OutsideRegion(format!(
            "gamma_det defines only C1 and C2, not {other:?}"
        ))),
    }
}

pub fn second_kind(
    f: &Factorization,
    m: &Measure,
    l: usize,
    which: Which,
    z: Complex64,
    method: Method,
    nodes: usize,
) -> Result<Complex64> {
    match (method, which) {
        (Method::Series, Which::C1) => {
            let zi = one() / z;
            Ok(TAU * f.phi2(l).eval(zi) * zi * m.fourier_f_bar(z)?)
        }
        (Method::Series, Which::C2) => {
            let zi = one() / z;
            Ok(TAU * f.phi1(l).eval(zi) * zi * m.fourier_f(zi)?)
        }
        (Method::Series, w) => series_partial(f, m, l, w, z),
        (Method::Cauchy, Which::C1) => {
            // Mixed: the partial whose Cauchy form is valid at z by
            // quadrature, the other by series.
            if z.norm() >= 1.0 {
                Ok(cauchy_partial(f, m, l, Which::C11, z, nodes)?
                    + series_partial(f, m, l, Which::C12, z)?)
            } else {
                Ok(series_partial(f, m, l, Which::C11, z)?
                    + cauchy_partial(f, m, l, Which::C12, z, nodes)?)
            }
        }
        (Method::Cauchy, Which::C2) => {
            if z.norm() >= 1.0 {
                Ok(cauchy_partial(f, m, l, Which::C21, z, nodes)?
                    + series_partial(f, m, l, Which::C22, z)?)
            } else {
                Ok(series_partial(f, m, l, Which::C21, z)?
                    + cauchy_partial(f, m, l, Which::C22, z, nodes)?)
            }
        }
        (Method::Cauchy, w) => cauchy_partial(f, m, l, w, z, nodes),
        (Method::GammaDet, w) => gamma_det_full(f, m, l, w, z),
    }
}

/// Partial sum over levels l < cap of conj(C_{a,bc}^(l)(conj(z))) times the
/// class-bp part of phi_a^(l)(z').
pub fn summation_partial_sum(
    f: &Factorization,
    m: &Measure,
    a: u8,
    bc: u8,
    bp: u8,
    z: Complex64,
    zp: Complex64,
    cap: usize,
) -> Result<Complex64> {
    let which = match (a, bc) {
        (1, 1) => Which::C11,
        (1, 2) => Which::C12,
        (2, 1) => Which::C21,
        _ => Which::C22,
    };
    let mut s = Complex64::new(0.0, 0.0);
    for l in 0..cap {
        let c = second_kind(f, m, l, which, z.conj(), Method::Series, 0)?.conj();
        let phi = if a == 1 { f.phi1(l) } else { f.phi2(l) };
        s += c * partial_poly(&phi, bp).eval(zp);
    }
    Ok(s)
}

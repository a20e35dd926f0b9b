//! Determinantal tau-functions of the deformed moment matrix: the leading
//! minors, their one-line associated variants, Miwa shifts realized as
//! weight decorations, and the identities expressing the biorthogonal
//! families, the second-kind functions and the Fourier series as ratios of
//! shifted tau-functions. Ends with the residue-form bilinear checks.

use num_complex::Complex64;

use crate::cd_kernel::{associated_minus, associated_plus};
use crate::linalg::{det_pivoted, pick, CMatrix};
use crate::measure::{LaurentPoly, Measure};
use crate::moments::moment_matrix;
use crate::ordering::{AssocDir, OrderingSpec};
use crate::second_kind::{second_kind, Method, Which};
use crate::toda::{deform, refactorize_at_time, DeformationTimes};
use crate::{Error, Result};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn one() -> Complex64 {
    c(1.0, 0.0)
}

const SERIES_NODES: usize = 512;

/// One Miwa shift t -> t +/- [u]_family with [u] = (u, u^2/2, u^3/3, ...),
/// realized as a multiplicative decoration of the weight:
///   t - [u]_1: (1 - u z)          t + [u]_1: 1/(1 - u z), needs |u| < 1,
///   t + [u]_2: (1 - u z^{-1})     t - [u]_2: 1/(1 - u z^{-1}), |u| < 1.
/// The contracting directions are exact degree-one factors for any u; the
/// expanding ones are geometric and keep the strict validity requirement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiwaShift {
    pub family: u8,
    pub plus: bool,
    pub u: Complex64,
}

impl MiwaShift {
    pub fn new(family: u8, plus: bool, u: Complex64) -> Self {
        assert!(family == 1 || family == 2, "family must be 1 or 2");
        MiwaShift { family, plus, u }
    }
}

/// Copy of the measure with the shift's factor multiplied into the weight.
pub fn miwa_shifted(m: &Measure, s: MiwaShift) -> Result<Measure> {
    let mut out = m.clone();
    if s.u.norm() == 0.0 {
        return Ok(out);
    }
    match (s.family, s.plus) {
        (1, false) => out.decorate_poly(LaurentPoly::from_pairs([(0, one()), (1, -s.u)]))?,
        (2, true) => out.decorate_poly(LaurentPoly::from_pairs([(0, one()), (-1, -s.u)]))?,
        (1, true) => out.decorate_geometric_outer(s.u.inv())?,
        (2, false) => out.decorate_geometric_inner(s.u)?,
        _ => unreachable!("family checked at construction"),
    }
    Ok(out)
}

/// Which determinant a tau evaluation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauLabel {
    Main,
    Assoc { family: u8, dir: AssocDir, a: u8 },
}

/// A labeled tau evaluation, the unit the CLI reports.
#[derive(Debug, Clone)]
pub struct TauValue {
    pub label: TauLabel,
    pub l: usize,
    pub times: DeformationTimes,
    pub value: Complex64,
}

fn deformed(m: &Measure, times: &DeformationTimes) -> Result<Measure> {
    if times.is_zero() {
        Ok(m.clone())
    } else {
        deform(m, times)
    }
}

/// tau^(l)(t): determinant of the leading l x l block of the moment matrix
/// of the deformed measure. Empty product convention tau^(0) = 1.
pub fn tau(
    m: &Measure,
    ord: OrderingSpec,
    times: &DeformationTimes,
    l: usize,
) -> Result<Complex64> {
    if l == 0 {
        return Ok(one());
    }
    let g = moment_matrix(&deformed(m, times)?, ord, l)?;
    Ok(det_pivoted(&g))
}

/// Associated tau. Minus drops the last line of class `a` from the
/// (l+1)-block, with the sign (-1)^(l + l_{-a}) that keeps the cofactor
/// expansion alternating; family 1 keeps the first l rows, family 2 the
/// first l columns. Plus swaps the boundary line l-1 for the next line of
/// class `a`; family 1 edits rows, family 2 edits columns.
pub fn tau_assoc(
    m: &Measure,
    ord: OrderingSpec,
    times: &DeformationTimes,
    l: usize,
    family: u8,
    dir: AssocDir,
    a: u8,
) -> Result<Complex64> {
    assert!(family == 1 || family == 2, "family must be 1 or 2");
    assert!(a == 1 || a == 2, "associated class must be 1 or 2");
    if l == 0 {
        return Err(Error::IndexOutOfRange { index: 0, size: 0 });
    }
    let mt = deformed(m, times)?;
    match dir {
        AssocDir::Minus => {
            let lm = ord.l_assoc(l, a, AssocDir::Minus)?;
            let g = moment_matrix(&mt, ord, l + 1)?;
            let kept: Vec<usize> = (0..=l).filter(|&j| j != lm).collect();
            let first: Vec<usize> = (0..l).collect();
            let d = match family {
                1 => det_pivoted(&pick(&g, &first, &kept)),
                _ => det_pivoted(&pick(&g, &kept, &first)),
            };
            let sign = if (l + lm) % 2 == 0 { 1.0 } else { -1.0 };
            Ok(d * sign)
        }
        AssocDir::Plus => {
            let lp = ord.l_assoc(l - 1, a, AssocDir::Plus)?;
            let g = moment_matrix(&mt, ord, lp + 1)?;
            let mut edited: Vec<usize> = (0..l - 1).collect();
            edited.push(lp);
            let first: Vec<usize> = (0..l).collect();
            Ok(match family {
                1 => det_pivoted(&pick(&g, &edited, &first)),
                _ => det_pivoted(&pick(&g, &first, &edited)),
            })
        }
    }
}

pub fn tau_labeled(
    m: &Measure,
    ord: OrderingSpec,
    times: &DeformationTimes,
    l: usize,
    label: TauLabel,
) -> Result<TauValue> {
    let value = match label {
        TauLabel::Main => tau(m, ord, times, l)?,
        TauLabel::Assoc { family, dir, a } => tau_assoc(m, ord, times, l, family, dir, a)?,
    };
    Ok(TauValue {
        label,
        l,
        times: times.clone(),
        value,
    })
}

/// Relative mismatch, guarded at 1 so tiny magnitudes read absolutely.
fn rel(lhs: Complex64, rhs: Complex64) -> f64 {
    (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1.0)
}

fn tau_shifted(
    m: &Measure,
    ord: OrderingSpec,
    times: &DeformationTimes,
    l: usize,
    s: MiwaShift,
) -> Result<Complex64> {
    tau(&miwa_shifted(m, s)?, ord, times, l)
}

/// Max relative residual of the tau-representations of both polynomial
/// families and their opposite-class associated variants at the point z.
/// Every shift involved is a polynomial decoration, so any z != 0 is
/// admissible. The second-family identities compare against
/// coefficient-conjugated polynomials, which are the right dual objects
/// when the time parameters are real.
pub fn tau_poly_residual(
    m: &Measure,
    ord: OrderingSpec,
    times: &DeformationTimes,
    l: usize,
    z: Complex64,
) -> Result<f64> {
    if z.norm() < 1e-12 {
        return Err(Error::OutsideRegion(
            "tau representations need z != 0".into(),
        ));
    }
    let big = l + 2 * ord.block_len() + 4;
    let f = refactorize_at_time(m, ord, times, big)?;
    let g = moment_matrix(&deformed(m, times)?, ord, big)?;
    let tau_l = tau(m, ord, times, l)?;
    let tau_l1 = tau(m, ord, times, l + 1)?;
    let a = ord.class_of(l);
    let ab = 3 - a;

    let minus_zinv_1 = MiwaShift::new(1, false, z.inv());
    let plus_z_2 = MiwaShift::new(2, true, z);
    let minus_z_1 = MiwaShift::new(1, false, z);
    let plus_zinv_2 = MiwaShift::new(2, true, z.inv());

    let mut worst: f64 = 0.0;

    // First family, own class.
    let lhs = f.phi1(l).eval(z);
    let rhs = match a {
        1 => {
            z.powi(ord.nu_plus(l) as i32 - 1) * tau_shifted(m, ord, times, l, minus_zinv_1)?
                / tau_l
        }
        _ => {
            z.powi(-(ord.nu_minus(l) as i32)) * tau_shifted(m, ord, times, l, plus_z_2)? / tau_l
        }
    };
    worst = worst.max(rel(lhs, rhs));

    // Second family, own class; denominator steps up one level.
    let lhs = f.phi2(l).conj_coeffs().eval(z);
    let rhs = match a {
        1 => {
            z.powi(ord.nu_plus(l) as i32 - 1) * tau_shifted(m, ord, times, l, plus_zinv_2)?
                / tau_l1
        }
        _ => {
            z.powi(-(ord.nu_minus(l) as i32)) * tau_shifted(m, ord, times, l, minus_z_1)?
                / tau_l1
        }
    };
    worst = worst.max(rel(lhs, rhs));

    if l == 0 {
        return Ok(worst);
    }

    // Opposite-class plus variants. The own-class ones repeat the pair
    // above up to the pivot scaling, so they add nothing.
    let lp = ord.l_assoc(l, ab, AssocDir::Plus)?;
    let lhs = associated_plus(&g, ord, l, 1, ab)?.eval(z);
    let rhs = match a {
        1 => {
            z.powi(-(ord.nu_minus(lp) as i32)) * tau_shifted(m, ord, times, l, plus_z_2)? / tau_l
        }
        _ => {
            z.powi(ord.nu_plus(lp) as i32 - 1) * tau_shifted(m, ord, times, l, minus_zinv_1)?
                / tau_l
        }
    };
    worst = worst.max(rel(lhs, rhs));

    let lhs = associated_plus(&g, ord, l, 2, ab)?.conj_coeffs().eval(z);
    let rhs = match a {
        1 => {
            z.powi(-(ord.nu_minus(lp) as i32)) * tau_shifted(m, ord, times, l, minus_z_1)? / tau_l
        }
        _ => {
            z.powi(ord.nu_plus(lp) as i32 - 1) * tau_shifted(m, ord, times, l, plus_zinv_2)?
                / tau_l
        }
    };
    worst = worst.max(rel(lhs, rhs));

    // Opposite-class minus variants, once that class has appeared.
    if ord.l_assoc(l, ab, AssocDir::Minus).is_ok() {
        let lhs = associated_minus(&g, ord, l, 1, ab)?.eval(z);
        let rhs = match a {
            1 => {
                z.powi(ord.nu_plus(l) as i32 - 1)
                    * tau_assoc(
                        &miwa_shifted(m, minus_zinv_1)?,
                        ord,
                        times,
                        l,
                        1,
                        AssocDir::Minus,
                        ab,
                    )?
                    / tau_l1
            }
            _ => {
                z.powi(-(ord.nu_minus(l) as i32))
                    * tau_assoc(
                        &miwa_shifted(m, plus_z_2)?,
                        ord,
                        times,
                        l,
                        1,
                        AssocDir::Minus,
                        ab,
                    )?
                    / tau_l1
            }
        };
        worst = worst.max(rel(lhs, rhs));

        let lhs = associated_minus(&g, ord, l, 2, ab)?.conj_coeffs().eval(z);
        let rhs = match a {
            1 => {
                z.powi(ord.nu_plus(l) as i32 - 1)
                    * tau_assoc(
                        &miwa_shifted(m, plus_zinv_2)?,
                        ord,
                        times,
                        l,
                        2,
                        AssocDir::Minus,
                        ab,
                    )?
                    / tau_l1
            }
            _ => {
                z.powi(-(ord.nu_minus(l) as i32))
                    * tau_assoc(
                        &miwa_shifted(m, minus_z_1)?,
                        ord,
                        times,
                        l,
                        2,
                        AssocDir::Minus,
                        ab,
                    )?
                    / tau_l1
            }
        };
        worst = worst.max(rel(lhs, rhs));
    }

    Ok(worst)
}

/// Max relative residual of the tau-representations of the second-kind
/// functions and of the Fourier series at z. Needs a positive measure and
/// |z| away from the unit circle; the strictly valid pair of partial
/// branches for that modulus is compared against the series route. The
/// Fourier identity routes its one divergent-decoration numerator term
/// through the matching second-kind series, which is its analytic
/// continuation.
pub fn tau_second_kind_residual(
    m: &Measure,
    ord: OrderingSpec,
    times: &DeformationTimes,
    l: usize,
    z: Complex64,
) -> Result<f64> {
    if !m.is_positive() {
        return Err(Error::NotPositiveMeasure);
    }
    let r = z.norm();
    if r < 1e-12 || (0.98..=1.02).contains(&r) {
        return Err(Error::OutsideRegion(
            "second-kind tau checks need 0 < |z| bounded away from 1".into(),
        ));
    }
    let mt = deformed(m, times)?;
    let big = l + 2 * ord.block_len() + 6;
    let f = refactorize_at_time(m, ord, times, big)?;
    let tau_l = tau(m, ord, times, l)?;
    let tau_l1 = tau(m, ord, times, l + 1)?;
    let lp1 = ord.l_assoc(l, 1, AssocDir::Plus)?;
    let lp2 = ord.l_assoc(l, 2, AssocDir::Plus)?;

    let mut worst: f64 = 0.0;

    if r > 1.0 {
        // Coefficient conjugate of C_{1,1}; its shift is geometric-outer
        // and strictly valid out here.
        let lhs = second_kind(&f, &mt, l, Which::C11, z.conj(), Method::Series, SERIES_NODES)?
            .conj();
        let shifted = miwa_shifted(m, MiwaShift::new(1, true, z.inv()))?;
        let rhs = z.powi(-(ord.nu_plus(lp1) as i32))
            * tau_assoc(&shifted, ord, times, l + 1, 1, AssocDir::Plus, 1)?
            / tau_l1;
        worst = worst.max(rel(lhs, rhs));

        let lhs = second_kind(&f, &mt, l, Which::C21, z, Method::Series, SERIES_NODES)?;
        let shifted = miwa_shifted(m, MiwaShift::new(2, false, z.inv()))?;
        let rhs = z.powi(-(ord.nu_plus(lp1) as i32))
            * tau_assoc(&shifted, ord, times, l + 1, 2, AssocDir::Plus, 1)?
            / tau_l;
        worst = worst.max(rel(lhs, rhs));
    } else {
        let lhs = second_kind(&f, &mt, l, Which::C12, z.conj(), Method::Series, SERIES_NODES)?
            .conj();
        let shifted = miwa_shifted(m, MiwaShift::new(2, false, z))?;
        let rhs = z.powi(ord.nu_minus(lp2) as i32 - 1)
            * tau_assoc(&shifted, ord, times, l + 1, 1, AssocDir::Plus, 2)?
            / tau_l1;
        worst = worst.max(rel(lhs, rhs));

        let lhs = second_kind(&f, &mt, l, Which::C22, z, Method::Series, SERIES_NODES)?;
        let shifted = miwa_shifted(m, MiwaShift::new(1, true, z))?;
        let rhs = z.powi(ord.nu_minus(lp2) as i32 - 1)
            * tau_assoc(&shifted, ord, times, l + 1, 2, AssocDir::Plus, 2)?
            / tau_l;
        worst = worst.max(rel(lhs, rhs));
    }

    worst = worst.max(fourier_tau_residual(
        m, ord, times, l, z, &f, &mt, tau_l, lp1, lp2,
    )?);
    Ok(worst)
}

/// Second-family form of the Fourier-series tau-representation, with the
/// out-of-region numerator term continued through the second-kind series.
#[allow(clippy::too_many_arguments)]
fn fourier_tau_residual(
    m: &Measure,
    ord: OrderingSpec,
    times: &DeformationTimes,
    l: usize,
    z: Complex64,
    f: &crate::factorization::Factorization,
    mt: &Measure,
    tau_l: Complex64,
    lp1: usize,
    lp2: usize,
) -> Result<f64> {
    let r = z.norm();
    let two_pi = std::f64::consts::TAU;

    // P1 = tau_{2,+1}^{(l+1)}(t - [z]_2): strict for |z| < 1.
    let p1 = if r < 1.0 {
        let shifted = miwa_shifted(m, MiwaShift::new(2, false, z))?;
        tau_assoc(&shifted, ord, times, l + 1, 2, AssocDir::Plus, 1)?
    } else {
        z.powi(-(ord.nu_plus(lp1) as i32))
            * second_kind(f, mt, l, Which::C21, z.inv(), Method::Series, SERIES_NODES)?
            * tau_l
    };

    // P2 = tau_{2,+2}^{(l+1)}(t + [z^{-1}]_1): strict for |z| > 1.
    let p2 = if r > 1.0 {
        let shifted = miwa_shifted(m, MiwaShift::new(1, true, z.inv()))?;
        tau_assoc(&shifted, ord, times, l + 1, 2, AssocDir::Plus, 2)?
    } else {
        z.powi(ord.nu_minus(lp2) as i32 - 1)
            * second_kind(f, mt, l, Which::C22, z.inv(), Method::Series, SERIES_NODES)?
            * tau_l
    };

    let cross = ord.nu_plus(lp1) as i32 + ord.nu_minus(lp2) as i32 - 1;
    let rep = match ord.class_of(l) {
        1 => {
            let den = tau_shifted(m, ord, times, l, MiwaShift::new(1, false, z.inv()))?;
            (p1 + z.powi(-cross) * p2) / (two_pi * den)
        }
        _ => {
            let den = tau_shifted(m, ord, times, l, MiwaShift::new(2, true, z))?;
            (z.powi(cross) * p1 + p2) / (two_pi * den)
        }
    };
    Ok(rel(mt.fourier_f(z)?, rep))
}

fn require_entire(m: &Measure) -> Result<()> {
    let ann = m.annulus();
    if ann.r_minus > 0.0 || ann.r_plus.is_finite() {
        return Err(Error::OutsideRegion(
            "contour comparison needs an entire-type weight (decorations \
             with poles bound the annulus)"
                .into(),
        ));
    }
    Ok(())
}

/// z^{-1} Laurent coefficient of
///   G(z) = phi_1^(k)(z,t) phibar_2^(l)(z^{-1},t') z^{-1} F_mu(z)
///          exp(sum_j t_{1j} z^j - t'_{2j} z^{-j})
/// picked up on the radius-r0 and radius-r_inf circles by N-node
/// trapezoid quadrature. The two coefficients agree exactly when G is
/// analytic in the punctured plane, so the weight must be entire-type.
/// At zero times the common value is the biorthogonality pairing, which
/// vanishes for k != l; callers comparing relatively should pick
/// parameters where the pairing does not degenerate.
#[allow(clippy::too_many_arguments)]
pub fn bilinear_contours(
    m: &Measure,
    ord: OrderingSpec,
    t: &DeformationTimes,
    tp: &DeformationTimes,
    k: usize,
    l: usize,
    r0: f64,
    r_inf: f64,
    n: usize,
) -> Result<(Complex64, Complex64)> {
    require_entire(m)?;
    if !(r0 > 0.0 && r0 < 1.0 && r_inf > 1.0) {
        return Err(Error::OutsideRegion(
            "bilinear radii must satisfy 0 < r0 < 1 < r_inf".into(),
        ));
    }
    let fk = refactorize_at_time(m, ord, t, k + ord.block_len() + 3)?;
    let fl = refactorize_at_time(m, ord, tp, l + ord.block_len() + 3)?;
    let p1 = fk.phi1(k);
    let p2bar = fl.phi2(l).conj_coeffs();
    let contour = |radius: f64| -> Result<Complex64> {
        let mut acc = c(0.0, 0.0);
        for i in 0..n {
            let th = std::f64::consts::TAU * i as f64 / n as f64;
            let zi = Complex64::from_polar(radius, th);
            let g = p1.eval(zi) * p2bar.eval(zi.inv()) * zi.inv() * m.fourier_f(zi)?
                * t.exp1(zi)
                / tp.exp2(zi.inv());
            acc += g * zi;
        }
        Ok(acc / c(n as f64, 0.0))
    };
    Ok((contour(r0)?, contour(r_inf)?))
}

/// |I(r0) - I(r_inf)| / max(|I(r0)|, 1e-30) for the contour pair above.
#[allow(clippy::too_many_arguments)]
pub fn bilinear_residual(
    m: &Measure,
    ord: OrderingSpec,
    t: &DeformationTimes,
    tp: &DeformationTimes,
    k: usize,
    l: usize,
    r0: f64,
    r_inf: f64,
    n: usize,
) -> Result<f64> {
    let (inner, outer) = bilinear_contours(m, ord, t, tp, k, l, r0, r_inf, n)?;
    Ok((inner - outer).norm() / inner.norm().max(1e-30))
}

/// Wave-function bilinear identity integrated on the radius-r0 circle,
/// with the two sides assembled through disjoint routes: the first pairs
/// the refactorized first family at t with the conjugated second-kind C_1
/// series at t', the second pairs the C_2 series at t with the
/// coefficient-conjugated second family at t'.
#[allow(clippy::too_many_arguments)]
pub fn wave_bilinear_residual(
    m: &Measure,
    ord: OrderingSpec,
    t: &DeformationTimes,
    tp: &DeformationTimes,
    n_idx: usize,
    m_idx: usize,
    r0: f64,
    n: usize,
) -> Result<f64> {
    require_entire(m)?;
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(Error::OutsideRegion("wave contour needs 0 < r0 < 1".into()));
    }
    let mt = deformed(m, t)?;
    let mtp = deformed(m, tp)?;
    let ft = refactorize_at_time(m, ord, t, n_idx + ord.block_len() + 3)?;
    let ftp = refactorize_at_time(m, ord, tp, m_idx + ord.block_len() + 3)?;
    let p1 = ft.phi1(n_idx);
    let p2bar = ftp.phi2(m_idx).conj_coeffs();
    let mut acc_a = c(0.0, 0.0);
    let mut acc_b = c(0.0, 0.0);
    for i in 0..n {
        let th = std::f64::consts::TAU * i as f64 / n as f64;
        let zi = Complex64::from_polar(r0, th);
        let psi1 = p1.eval(zi) * t.exp1(zi);
        let c1bar = second_kind(&ftp, &mtp, m_idx, Which::C1, zi.conj(), Method::Series,
            SERIES_NODES)?
            .conj();
        acc_a += psi1 * c1bar / tp.exp1(zi) * zi;

        let psi2 =
            second_kind(&ft, &mt, n_idx, Which::C2, zi, Method::Series, SERIES_NODES)?
                * t.exp2(zi);
        acc_b += psi2 * p2bar.eval(zi) / tp.exp2(zi) * zi;
    }
    let ia = acc_a / c(n as f64, 0.0);
    let ib = acc_b / c(n as f64, 0.0);
    Ok((ia - ib).norm() / ia.norm().max(1e-30))
}

/// g restricted to arbitrary rows/columns, for tests that want minors
/// without going through a measure.
pub fn minor(g: &CMatrix, rows: &[usize], cols: &[usize]) -> Complex64 {
    det_pivoted(&pick(g, rows, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;
    use crate::ordering::OrderingSpec;
    use std::f64::consts::PI;

    const TWO_PI: f64 = 2.0 * PI;

    fn ord11() -> OrderingSpec {
        OrderingSpec::new(1, 1).unwrap()
    }

    #[test]
    fn lebesgue_tau_is_power_of_two_pi() {
        let m = Measure::lebesgue();
        let t = DeformationTimes::zero();
        for l in 0..=6 {
            let v = tau(&m, ord11(), &t, l).unwrap();
            let want = TWO_PI.powi(l as i32);
            assert!((v - c(want, 0.0)).norm() < 1e-8 * want.max(1.0), "l={l}");
        }
    }

    #[test]
    fn trig_tau_frozen_value() {
        let m = Measure::trig_poly(0.5).unwrap();
        let v = tau(&m, ord11(), &DeformationTimes::zero(), 2).unwrap();
        let want = 4.0 * PI * PI * (1.0 - 1.0 / 16.0);
        assert!((v - c(want, 0.0)).norm() < 1e-9 * want);
    }

    #[test]
    fn tau_matches_pivot_product() {
        let times = DeformationTimes::first(c(0.05, 0.0), c(0.0, 0.0));
        for (np, nm) in [(1, 1), (2, 1)] {
            let ord = OrderingSpec::new(np, nm).unwrap();
            let m = Measure::exp_cos();
            let f = refactorize_at_time(&m, ord, &times, 10).unwrap();
            for l in 1..=6 {
                let v = tau(&m, ord, &times, l).unwrap();
                let prod: Complex64 = (0..l).map(|k| f.h(k)).product();
                assert!(
                    (v - prod).norm() / prod.norm() < 1e-9,
                    "l={l} ord=({np},{nm})"
                );
            }
        }
    }

    #[test]
    fn assoc_plus_by_hand() {
        // rows {0,1}, cols {0,2} of the trig moment matrix: det = -pi^2/4.
        let m = Measure::trig_poly(0.5).unwrap();
        let v = tau_assoc(
            &m,
            ord11(),
            &DeformationTimes::zero(),
            2,
            2,
            AssocDir::Plus,
            1,
        )
        .unwrap();
        assert!((v - c(-PI * PI / 4.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn assoc_minus_lebesgue_diagonal() {
        // Odd l: the dropped column is l itself, leaving the diagonal
        // block with positive sign. Even l: a zero row survives.
        let m = Measure::lebesgue();
        let t = DeformationTimes::zero();
        let v5 = tau_assoc(&m, ord11(), &t, 5, 1, AssocDir::Minus, 2).unwrap();
        assert!((v5 - c(TWO_PI.powi(5), 0.0)).norm() < 1e-6);
        let v4 = tau_assoc(&m, ord11(), &t, 4, 1, AssocDir::Minus, 2).unwrap();
        assert!(v4.norm() < 1e-9);
    }

    #[test]
    fn tau_labeled_dispatch() {
        let m = Measure::trig_poly(0.5).unwrap();
        let t = DeformationTimes::zero();
        let main = tau_labeled(&m, ord11(), &t, 2, TauLabel::Main).unwrap();
        assert_eq!(main.value, tau(&m, ord11(), &t, 2).unwrap());
        let lab = TauLabel::Assoc {
            family: 2,
            dir: AssocDir::Plus,
            a: 1,
        };
        let assoc = tau_labeled(&m, ord11(), &t, 2, lab).unwrap();
        assert_eq!(
            assoc.value,
            tau_assoc(&m, ord11(), &t, 2, 2, AssocDir::Plus, 1).unwrap()
        );
    }

    #[test]
    fn miwa_contracting_then_expanding_cancels() {
        let m = Measure::exp_cos();
        let u = c(0.3, 0.1);
        let once = miwa_shifted(&m, MiwaShift::new(1, false, u)).unwrap();
        let back = miwa_shifted(&once, MiwaShift::new(1, true, u)).unwrap();
        for n in -4..=4 {
            let a = m.moment(n).unwrap();
            let b = back.moment(n).unwrap();
            assert!((a - b).norm() < 1e-9, "n={n}");
        }
        let noop = miwa_shifted(&m, MiwaShift::new(2, false, c(0.0, 0.0))).unwrap();
        assert_eq!(noop.moment(1).unwrap(), m.moment(1).unwrap());
    }

    #[test]
    fn poly_residual_lebesgue() {
        let m = Measure::lebesgue();
        let t = DeformationTimes::zero();
        let r = tau_poly_residual(&m, ord11(), &t, 3, c(2.0, 0.0)).unwrap();
        assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn poly_residual_trig() {
        let m = Measure::trig_poly(0.5).unwrap();
        let t = DeformationTimes::zero();
        let r = tau_poly_residual(&m, ord11(), &t, 2, c(3.0, 0.0)).unwrap();
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn poly_residual_class_two_branch_deformed() {
        // Ordering (1,2) puts index 4 in the second class, exercising the
        // t + [z]_2 main branch at deformed times.
        let ord = OrderingSpec::new(1, 2).unwrap();
        assert_eq!(ord.class_of(4), 2);
        let m = Measure::exp_cos();
        let times = DeformationTimes::first(c(0.05, 0.0), c(0.0, 0.0));
        let r = tau_poly_residual(&m, ord, &times, 4, c(0.4, 0.0)).unwrap();
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn poly_residual_random_points() {
        let zs = [
            c(1.7, 0.4),
            c(-0.6, 0.8),
            c(0.3, -0.5),
            c(-1.2, -0.9),
            c(0.9, 1.4),
        ];
        let m = Measure::exp_cos();
        let t = DeformationTimes::zero();
        for ord in [ord11(), OrderingSpec::new(2, 1).unwrap()] {
            for &z in &zs {
                let r = tau_poly_residual(&m, ord, &t, 4, z).unwrap();
                assert!(r < 1e-8, "z={z} residual {r}");
            }
        }
    }

    #[test]
    fn second_kind_residual_lebesgue_outside() {
        let m = Measure::lebesgue();
        let t = DeformationTimes::zero();
        let r = tau_second_kind_residual(&m, ord11(), &t, 0, c(2.0, 0.0)).unwrap();
        assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn second_kind_residual_exp_cos_both_sides() {
        let m = Measure::exp_cos();
        let t = DeformationTimes::zero();
        let outside = tau_second_kind_residual(&m, ord11(), &t, 2, c(1.5, 0.0)).unwrap();
        assert!(outside < 1e-6, "outside residual {outside}");
        let inside = tau_second_kind_residual(&m, ord11(), &t, 1, c(0.6, 0.0)).unwrap();
        assert!(inside < 1e-6, "inside residual {inside}");
    }

    #[test]
    fn second_kind_residual_deformed_fourier_point() {
        let m = Measure::exp_cos();
        let times = DeformationTimes::first(c(0.05, 0.0), c(0.0, 0.0));
        let r = tau_second_kind_residual(&m, ord11(), &times, 2, c(0.8, 0.0)).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn second_kind_residual_preconditions() {
        let m = Measure::custom([
            (0, c(1.0, 0.0)),
            (1, c(0.2, 0.1)),
            (-1, c(0.15, -0.25)),
        ]);
        let t = DeformationTimes::zero();
        assert!(matches!(
            tau_second_kind_residual(&m, ord11(), &t, 1, c(2.0, 0.0)),
            Err(Error::NotPositiveMeasure)
        ));
        let pos = Measure::exp_cos();
        assert!(matches!(
            tau_second_kind_residual(&pos, ord11(), &t, 1, c(1.01, 0.0)),
            Err(Error::OutsideRegion(_))
        ));
    }

    #[test]
    fn bilinear_lebesgue_trivial() {
        let m = Measure::lebesgue();
        let t = DeformationTimes::zero();
        let r = bilinear_residual(&m, ord11(), &t, &t, 0, 0, 0.5, 2.0, 1024).unwrap();
        assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn bilinear_exp_cos_zero_times() {
        // Equal indices: the common value is the nonzero pairing 1/(2 pi).
        let m = Measure::exp_cos();
        let t = DeformationTimes::zero();
        let r = bilinear_residual(&m, ord11(), &t, &t, 2, 2, 0.5, 2.0, 2048).unwrap();
        assert!(r < 1e-8, "residual {r}");
        let (i0, _) = bilinear_contours(&m, ord11(), &t, &t, 2, 2, 0.5, 2.0, 2048).unwrap();
        assert!((i0 - c(1.0 / TWO_PI, 0.0)).norm() < 1e-10);

        // Distinct indices at zero times sit on the biorthogonality zero,
        // so the comparison is absolute there.
        let (i0, i1) = bilinear_contours(&m, ord11(), &t, &t, 2, 1, 0.5, 2.0, 2048).unwrap();
        assert!(i0.norm() < 1e-12 && i1.norm() < 1e-12, "{i0} {i1}");
    }

    #[test]
    fn bilinear_mixed_indices_deformed() {
        // k > l needs differing second-family times: with t2 = t2' the
        // product of wave matrices is upper triangular and the entry is
        // an exact zero.
        let m = Measure::exp_cos();
        let t = DeformationTimes::first(c(0.1, 0.0), c(0.05, 0.0));
        let tp = DeformationTimes::first(c(0.02, 0.0), c(0.04, 0.0));
        let r = bilinear_residual(&m, ord11(), &t, &tp, 2, 1, 0.5, 2.0, 2048).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn bilinear_exp_cos_deformed() {
        let m = Measure::exp_cos();
        let t = DeformationTimes::first(c(0.05, 0.0), c(0.0, 0.0));
        let tp = DeformationTimes::first(c(0.0, 0.0), c(0.03, 0.0));
        let r = bilinear_residual(&m, ord11(), &t, &tp, 2, 2, 0.5, 2.0, 2048).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn bilinear_rejects_bounded_annulus() {
        let mut m = Measure::lebesgue();
        m.decorate_geometric_outer(c(2.0, 0.0)).unwrap();
        let t = DeformationTimes::zero();
        assert!(matches!(
            bilinear_residual(&m, ord11(), &t, &t, 0, 0, 0.5, 2.0, 64),
            Err(Error::OutsideRegion(_))
        ));
    }

    #[test]
    fn wave_bilinear_exp_cos() {
        let m = Measure::exp_cos();
        let t = DeformationTimes::first(c(0.08, 0.0), c(0.0, 0.0));
        let tp = DeformationTimes::first(c(0.0, 0.0), c(0.05, 0.0));
        let r = wave_bilinear_residual(&m, ord11(), &t, &tp, 2, 1, 0.5, 256).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn time_translation_consistency() {
        let m = Measure::exp_cos();
        let t = DeformationTimes::first(c(0.04, 0.0), c(0.0, 0.0));
        let s = DeformationTimes::first(c(0.03, 0.0), c(0.02, 0.0));
        let combined = DeformationTimes {
            t1: vec![t.t1[0] + s.t1[0]],
            t2: vec![t.t2[0] + s.t2[0]],
        };
        let lhs = tau(&m, ord11(), &combined, 3).unwrap();
        let shifted = deform(&m, &s).unwrap();
        let rhs = tau(&shifted, ord11(), &t, 3).unwrap();
        assert!((lhs - rhs).norm() / rhs.norm() < 1e-9);
    }
}

//! Christoffel-Darboux kernels, associated Laurent polynomials, and the
//! projection onto truncated Laurent polynomial spaces.
//!
//! The kernel K^[l](z, z') = sum_{k<l} phi_1^(k)(z') conj(phi_2^(k)(z)) has
//! the Aitken-Berg-Collar form chi^[l](z)^dag (g^[l])^{-1} chi^[l](z') and a
//! closed Christoffel-Darboux form in four associated polynomials: the +a
//! family borders the moment matrix with row/column l_{+a}, the -a family
//! picks row l_{-a} of the inverse. Away from z' conj(z) = 1,
//!
//!   K^[l](z,z') = [conj(phi_{2,+2}^(l)(z)) zbar phi_{1,-2}^(l-1)(z')
//!                  - phi_{1,+1}^(l)(z') zbar conj(phi_{2,-1}^(l-1)(z))]
//!                 / (1 - z' zbar).
//!
//! Every associated polynomial has three independent constructions kept in
//! agreement by the tests: the bordered-solve definition, triangular-factor
//! linear combinations, and cofactor determinants.

use num_complex::Complex64;

use crate::factorization::Factorization;
use crate::linalg::{det_pivoted, pick, solve_pivoted, CMatrix, CVector};
use crate::measure::{LaurentPoly, Measure};
use crate::ordering::{AssocDir, OrderingSpec};
use crate::{Error, Result};

/// |1 - z' conj(z)| below which the CD denominator is treated as zero.
pub const DIAGONAL_TOL: f64 = 1e-8;

fn chi_poly(ord: OrderingSpec, j: usize) -> LaurentPoly {
    LaurentPoly::monomial(ord.index_exponent(j), Complex64::new(1.0, 0.0))
}

fn check_index(index: usize, size: usize) -> Result<()> {
    if index >= size {
        Err(Error::IndexOutOfRange { index, size })
    } else {
        Ok(())
    }
}

/// phi_{family, +a}^(l): the new monomial chi^(l_{+a}) minus its projection
/// onto the first l monomials. Solved against g^[l] with pivoting.
pub fn associated_plus(
    g: &CMatrix,
    ord: OrderingSpec,
    l: usize,
    family: u8,
    a: u8,
) -> Result<LaurentPoly> {
    let lp = ord.l_assoc(l, a, AssocDir::Plus)?;
    check_index(lp, g.nrows())?;
    let gl = g.view((0, 0), (l, l)).into_owned();
    let mut out = chi_poly(ord, lp);
    match family {
        1 => {
            // Row vector g_{lp, 0..l-1} times (g^[l])^{-1}.
            let r = CVector::from_fn(l, |j, _| g[(lp, j)]);
            let w = solve_pivoted(&gl.transpose(), &r)?;
            for j in 0..l {
                out = out.sub(&chi_poly(ord, j).scale(w[j]));
            }
        }
        2 => {
            // conj(g_{0..l-1, lp}) times ((g^[l])^{-1})^dagger.
            let col = CVector::from_fn(l, |j, _| g[(j, lp)]);
            let x = solve_pivoted(&gl, &col)?;
            for j in 0..l {
                out = out.sub(&chi_poly(ord, j).scale(x[j].conj()));
            }
        }
        other => panic!("family must be 1 or 2, got {other}"),
    }
    Ok(out)
}

/// phi_{family, -a}^(l): row l_{-a} of (g^[l+1])^{-1} (family 1) or of its
/// adjoint (family 2), paired with chi^[l+1].
pub fn associated_minus(
    g: &CMatrix,
    ord: OrderingSpec,
    l: usize,
    family: u8,
    a: u8,
) -> Result<LaurentPoly> {
    let lm = ord.l_assoc(l, a, AssocDir::Minus)?;
    check_index(l, g.nrows())?;
    let gl1 = g.view((0, 0), (l + 1, l + 1)).into_owned();
    let mut e = CVector::zeros(l + 1);
    e[lm] = Complex64::new(1.0, 0.0);
    let mut out = LaurentPoly::zero();
    match family {
        1 => {
            let y = solve_pivoted(&gl1.transpose(), &e)?;
            for j in 0..=l {
                out = out.add(&chi_poly(ord, j).scale(y[j]));
            }
        }
        2 => {
            let x = solve_pivoted(&gl1, &e)?;
            for j in 0..=l {
                out = out.add(&chi_poly(ord, j).scale(x[j].conj()));
            }
        }
        other => panic!("family must be 1 or 2, got {other}"),
    }
    Ok(out)
}

/// The same polynomials as linear combinations through the triangular
/// factors: +a mixes phi^(l..l_{+a}) with S1^{-1} / conj(S2) weights, -a
/// mixes phi^(l_{-a}..l) with S2^{-1} / conj(S1) weights.
pub fn associated_linear_combo(
    f: &Factorization,
    l: usize,
    family: u8,
    a: u8,
    dir: AssocDir,
) -> Result<LaurentPoly> {
    let mut out = LaurentPoly::zero();
    match dir {
        AssocDir::Plus => {
            let lp = f.ord.l_assoc(l, a, AssocDir::Plus)?;
            check_index(lp, f.size)?;
            for j in l..=lp {
                let (w, phi) = match family {
                    1 => (f.s1_inv[(lp, j)], f.phi1(j)),
                    _ => (f.s2[(j, lp)].conj(), f.phi2(j)),
                };
                out = out.add(&phi.scale(w));
            }
        }
        AssocDir::Minus => {
            let lm = f.ord.l_assoc(l, a, AssocDir::Minus)?;
            check_index(l, f.size)?;
            for j in lm..=l {
                let (w, phi) = match family {
                    1 => (f.s2_inv[(lm, j)], f.phi1(j)),
                    _ => (f.s1[(j, lm)].conj(), f.phi2(j)),
                };
                out = out.add(&phi.scale(w));
            }
        }
    }
    Ok(out)
}

/// Cofactor form of the associated polynomials; pivoted determinants only.
pub fn associated_determinantal(
    g: &CMatrix,
    ord: OrderingSpec,
    l: usize,
    family: u8,
    a: u8,
    dir: AssocDir,
) -> Result<LaurentPoly> {
    let sign_of = |n: usize| if n % 2 == 0 { 1.0 } else { -1.0 };
    match dir {
        AssocDir::Plus => {
            let lp = ord.l_assoc(l, a, AssocDir::Plus)?;
            check_index(lp, g.nrows())?;
            let base: Vec<usize> = (0..l).collect();
            let mut bordered = base.clone();
            bordered.push(lp);
            let denom = det_pivoted(&pick(g, &base, &base));
            let mut out = LaurentPoly::zero();
            for (i, &idx) in bordered.iter().enumerate() {
                let kept: Vec<usize> = bordered
                    .iter()
                    .enumerate()
                    .filter(|&(i2, _)| i2 != i)
                    .map(|(_, &v)| v)
                    .collect();
                let minor = match family {
                    1 => det_pivoted(&pick(g, &kept, &base)),
                    _ => det_pivoted(&pick(g, &base, &kept)).conj(),
                };
                let coeff = Complex64::new(sign_of(i + l), 0.0) * minor
                    / match family {
                        1 => denom,
                        _ => denom.conj(),
                    };
                out = out.add(&chi_poly(ord, idx).scale(coeff));
            }
            Ok(out)
        }
        AssocDir::Minus => {
            let lm = ord.l_assoc(l, a, AssocDir::Minus)?;
            check_index(l, g.nrows())?;
            let full: Vec<usize> = (0..=l).collect();
            let reduced: Vec<usize> = (0..=l).filter(|&v| v != lm).collect();
            let denom = det_pivoted(&pick(g, &full, &full));
            let mut out = LaurentPoly::zero();
            for j in 0..=l {
                let kept: Vec<usize> = (0..=l).filter(|&v| v != j).collect();
                let minor = match family {
                    1 => det_pivoted(&pick(g, &kept, &reduced)),
                    _ => det_pivoted(&pick(g, &reduced, &kept)).conj(),
                };
                let coeff = Complex64::new(sign_of(j + lm), 0.0) * minor
                    / match family {
                        1 => denom,
                        _ => denom.conj(),
                    };
                out = out.add(&chi_poly(ord, j).scale(coeff));
            }
            Ok(out)
        }
    }
}

/// The four polynomials entering the CD formula at level l: +families at
/// level l, -families at level l-1.
#[derive(Debug, Clone)]
pub struct AssociatedPolys {
    pub l: usize,
    pub plus1_fam1: LaurentPoly,
    pub plus2_fam2: LaurentPoly,
    pub minus2_fam1: LaurentPoly,
    pub minus1_fam2: LaurentPoly,
}

pub fn associated_for_cd(g: &CMatrix, ord: OrderingSpec, l: usize) -> Result<AssociatedPolys> {
    if l == 0 {
        return Err(Error::IndexOutOfRange {
            index: 0,
            size: g.nrows(),
        });
    }
    Ok(AssociatedPolys {
        l,
        plus1_fam1: associated_plus(g, ord, l, 1, 1)?,
        plus2_fam2: associated_plus(g, ord, l, 2, 2)?,
        minus2_fam1: associated_minus(g, ord, l - 1, 1, 2)?,
        minus1_fam2: associated_minus(g, ord, l - 1, 2, 1)?,
    })
}

/// K^[l](z, z') as the biorthogonal sum.
pub fn kernel_sum(f: &Factorization, l: usize, z: Complex64, zp: Complex64) -> Complex64 {
    (0..l)
        .map(|k| f.phi1(k).eval(zp) * f.phi2(k).eval(z).conj())
        .sum()
}

/// K^[l](z, z') through the moment matrix: solve g^[l] x = chi^[l](z') and
/// contract with conj(chi^[l](z)). Bypasses the factorization entirely.
pub fn kernel_abc(
    g: &CMatrix,
    ord: OrderingSpec,
    l: usize,
    z: Complex64,
    zp: Complex64,
) -> Result<Complex64> {
    let gl = g.view((0, 0), (l, l)).into_owned();
    let rhs = CVector::from_fn(l, |j, _| ord.chi(j, zp));
    let x = solve_pivoted(&gl, &rhs)?;
    Ok((0..l).map(|j| ord.chi(j, z).conj() * x[j]).sum())
}

/// The Christoffel-Darboux closed form. Errors on the degenerate diagonal
/// z' conj(z) = 1 where the denominator vanishes.
pub fn cd_formula(assoc: &AssociatedPolys, z: Complex64, zp: Complex64) -> Result<Complex64> {
    let zb = z.conj();
    let denom = Complex64::new(1.0, 0.0) - zp * zb;
    if denom.norm() < DIAGONAL_TOL {
        return Err(Error::DegenerateDiagonal);
    }
    let num = assoc.plus2_fam2.eval(z).conj() * zb * assoc.minus2_fam1.eval(zp)
        - assoc.plus1_fam1.eval(zp) * zb * assoc.minus1_fam2.eval(z).conj();
    Ok(num / denom)
}

/// Projection onto span{chi^(0), ..., chi^(l-1)}: coefficients against
/// family 2 by quadrature, resummed over family 1.
pub fn project(
    f: &Factorization,
    m: &Measure,
    l: usize,
    target: &LaurentPoly,
    nodes: usize,
) -> LaurentPoly {
    let quad = m.quadrature(nodes);
    let mut out = LaurentPoly::zero();
    for k in 0..l {
        let phi2 = f.phi2(k);
        let mut ck = Complex64::new(0.0, 0.0);
        for &(zq, w) in &quad {
            ck += phi2.eval(zq).conj() * target.eval(zq) * w;
        }
        out = out.add(&f.phi1(k).scale(ck));
    }
    out
}

/// Ordering whose first l indices span Lambda_{[-p, q]}, i.e. exponents
/// -p..=q: n_plus = q + 1, n_minus = p (or 1 when p = 0), l = p + q + 1.
pub fn window_ordering(p: usize, q: usize) -> Result<(OrderingSpec, usize)> {
    let ord = OrderingSpec::new(q + 1, p.max(1))?;
    Ok((ord, p + q + 1))
}

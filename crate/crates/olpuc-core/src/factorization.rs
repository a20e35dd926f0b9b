//! Gauss-Borel factorization of the moment matrix and the biorthogonal
//! Laurent polynomial families it dresses.
//!
//! g = S1^{-1} S2 with S1 unit lower and S2 upper triangular; the rows of
//! Phi_1 = S1 chi and Phi_2 = (S2^{-1})^dagger chi are biorthogonal under
//! <f, g> = integral f(z) conj(g(z)) dmu. The factorization is unpivoted on
//! purpose: pivoting would destroy the triangular dressing. Singular leading
//! minors surface as `SingularMinor`.
//!
//! Alongside the factorization route the module carries two independent
//! oracles used by the tests: monic Szego polynomials from pivoted Toeplitz
//! solves, and Cramer-rule cofactor expansions of the polynomial
//! coefficients.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{
    det_pivoted, pick, solve_pivoted, unit_lower_inverse, unpivoted_lu, upper_inverse, CMatrix,
    CVector,
};
use crate::measure::{LaurentPoly, Measure};
use crate::ordering::OrderingSpec;
use crate::{Error, Result};

/// Triangular dressing of a truncated moment matrix.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub ord: OrderingSpec,
    pub size: usize,
    /// Unit lower triangular; Phi_1 = s1 chi.
    pub s1: CMatrix,
    /// Upper triangular; g = s1^{-1} s2.
    pub s2: CMatrix,
    pub s1_inv: CMatrix,
    pub s2_inv: CMatrix,
}

/// Verblunsky data read off the factorization. Index 0 carries the
/// convention alpha = 1 and rho^2 = 0; flows act on indices >= 1.
#[derive(Debug, Clone)]
pub struct VerblunskyData {
    pub alpha1: Vec<Complex64>,
    pub alpha2: Vec<Complex64>,
    pub rho_sq: Vec<Complex64>,
    pub h: Vec<Complex64>,
}

impl VerblunskyData {
    pub fn len(&self) -> usize {
        self.alpha1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha1.is_empty()
    }

    /// Max |rho_l^2 - (1 - alpha1_l conj(alpha2_l))|; an identity that pins
    /// down every conjugation choice in the extraction.
    pub fn rho_identity_residual(&self) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        (0..self.len())
            .map(|l| {
                (self.rho_sq[l] - (one - self.alpha1[l] * self.alpha2[l].conj())).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Factorize a truncated moment matrix. `tol` is relative to max |g|.
pub fn factorize(g: &CMatrix, ord: OrderingSpec, tol: f64) -> Result<Factorization> {
    let size = g.nrows();
    if size != g.ncols() {
        return Err(Error::SizeMismatch(size, g.ncols()));
    }
    let (l, u) = unpivoted_lu(g, tol)?;
    let s1 = unit_lower_inverse(&l);
    let s2_inv = upper_inverse(&u)?;
    Ok(Factorization {
        ord,
        size,
        s1,
        s2: u,
        s1_inv: l,
        s2_inv,
    })
}

impl Factorization {
    /// h_l = (S2)_{ll}; the squared norms for a positive measure.
    pub fn h(&self, l: usize) -> Complex64 {
        self.s2[(l, l)]
    }

    /// Indices far enough from the truncation edge that the finite
    /// factorization agrees with the semi-infinite one. The band width of
    /// the shift operator sets the safety margin.
    pub fn trusted_len(&self) -> usize {
        self.size
            .saturating_sub(self.ord.n_plus() + self.ord.n_minus() + 1)
    }

    /// phi_1^(l)(z) = sum_j (S1)_{lj} z^{J(j)}.
    pub fn phi1(&self, l: usize) -> LaurentPoly {
        LaurentPoly::from_pairs(
            (0..=l).map(|j| (self.ord.index_exponent(j), self.s1[(l, j)])),
        )
    }

    /// phi_2^(l)(z) = sum_j conj((S2^{-1})_{jl}) z^{J(j)}.
    pub fn phi2(&self, l: usize) -> LaurentPoly {
        LaurentPoly::from_pairs(
            (0..=l).map(|j| (self.ord.index_exponent(j), self.s2_inv[(j, l)].conj())),
        )
    }

    pub fn phi1_all(&self, count: usize) -> Vec<LaurentPoly> {
        (0..count).map(|l| self.phi1(l)).collect()
    }

    pub fn phi2_all(&self, count: usize) -> Vec<LaurentPoly> {
        (0..count).map(|l| self.phi2(l)).collect()
    }

    /// Verblunsky coefficients for indices 0..count, read from the extreme
    /// coefficients of both families:
    /// class 1: alpha1_l at z^{-nu-}, alpha2_l from phi_2 there;
    /// class 2: alpha2_l from conj of the z^{nu+ - 1} coefficient of phi_1,
    /// alpha1_l from phi_2 there. h scales family 2 throughout.
    pub fn verblunsky(&self, count: usize) -> Result<VerblunskyData> {
        if count > self.size {
            return Err(Error::IndexOutOfRange {
                index: count,
                size: self.size,
            });
        }
        let mut alpha1 = Vec::with_capacity(count);
        let mut alpha2 = Vec::with_capacity(count);
        let mut rho_sq = Vec::with_capacity(count);
        let mut h = Vec::with_capacity(count);
        for l in 0..count {
            let hl = self.h(l);
            let p1 = self.phi1(l);
            let p2 = self.phi2(l);
            let nu_m = self.ord.nu_minus(l) as i64;
            let nu_p = self.ord.nu_plus(l) as i64;
            let (a1, a2) = match self.ord.class_of(l) {
                1 => (p1.coeff(-nu_m), hl.conj() * p2.coeff(-nu_m)),
                _ => (
                    (hl.conj() * p2.coeff(nu_p - 1)).conj(),
                    p1.coeff(nu_p - 1).conj(),
                ),
            };
            alpha1.push(a1);
            alpha2.push(a2);
            rho_sq.push(if l == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                hl / h[l - 1]
            });
            h.push(hl);
        }
        Ok(VerblunskyData {
            alpha1,
            alpha2,
            rho_sq,
            h,
        })
    }

    /// Monic Szego polynomial of the first family through the Laurent
    /// identification: multiply phi_1 (class 1) or rescale-and-reverse phi_2
    /// (class 2) back to polynomial form.
    pub fn szego_p1(&self, l: usize) -> LaurentPoly {
        let nu_m = self.ord.nu_minus(l) as i64;
        match self.ord.class_of(l) {
            1 => self.phi1(l).shift(nu_m),
            _ => reverse_poly(&self.phi2(l).scale(self.h(l).conj()).shift(nu_m), l as i64),
        }
    }

    /// Monic Szego polynomial of the second family.
    pub fn szego_p2(&self, l: usize) -> LaurentPoly {
        let nu_m = self.ord.nu_minus(l) as i64;
        match self.ord.class_of(l) {
            1 => self.phi2(l).scale(self.h(l).conj()).shift(nu_m),
            _ => reverse_poly(&self.phi1(l).shift(nu_m), l as i64),
        }
    }
}

/// Q -> z^l conj-coeff-Q(1/z), the degree-l reversal P -> P*.
pub fn reverse_poly(q: &LaurentPoly, l: i64) -> LaurentPoly {
    q.conj_coeffs().invert_z().shift(l)
}

/// Max |<phi_1^(l), phi_2^(k)> - delta_{lk}| for l, k < count, by circle
/// quadrature of the sesquilinear form.
pub fn biorthogonality_residual(
    fact: &Factorization,
    m: &Measure,
    count: usize,
    nodes: usize,
) -> f64 {
    let quad = m.quadrature(nodes);
    let mut v1 = CMatrix::zeros(count, nodes);
    let mut v2 = CMatrix::zeros(count, nodes);
    for l in 0..count {
        let p1 = fact.phi1(l);
        let p2 = fact.phi2(l);
        for (i, (z, _)) in quad.iter().enumerate() {
            v1[(l, i)] = p1.eval(*z);
            v2[(l, i)] = p2.eval(*z);
        }
    }
    let w = CVector::from_iterator(nodes, quad.iter().map(|(_, w)| *w));
    let gram = &v1 * DMatrix::from_diagonal(&w) * v2.adjoint();
    let mut worst = 0.0_f64;
    for l in 0..count {
        for k in 0..count {
            let want = if l == k { 1.0 } else { 0.0 };
            worst = worst.max((gram[(l, k)] - Complex64::new(want, 0.0)).norm());
        }
    }
    worst
}

/// Monic first-family Szego polynomial by a pivoted Toeplitz solve:
/// sum_{j<l} p_j c_{k-j} = -c_{k-l} for k = 0..l-1. Independent of the
/// factorization route.
pub fn szego_oracle_p1(m: &Measure, l: usize) -> Result<LaurentPoly> {
    let mut a = CMatrix::zeros(l, l);
    let mut rhs = CVector::zeros(l);
    for k in 0..l {
        for j in 0..l {
            a[(k, j)] = m.moment(k as i64 - j as i64)?;
        }
        rhs[k] = -m.moment(k as i64 - l as i64)?;
    }
    let p = solve_pivoted(&a, &rhs)?;
    let mut out = LaurentPoly::monomial(l as i64, Complex64::new(1.0, 0.0));
    for j in 0..l {
        out.set(j as i64, p[j]);
    }
    Ok(out)
}

/// Second family: sum_{j<l} q_j conj(c_{j-k}) = -conj(c_{l-k}).
pub fn szego_oracle_p2(m: &Measure, l: usize) -> Result<LaurentPoly> {
    let mut a = CMatrix::zeros(l, l);
    let mut rhs = CVector::zeros(l);
    for k in 0..l {
        for j in 0..l {
            a[(k, j)] = m.moment(j as i64 - k as i64)?.conj();
        }
        rhs[k] = -m.moment(l as i64 - k as i64)?.conj();
    }
    let q = solve_pivoted(&a, &rhs)?;
    let mut out = LaurentPoly::monomial(l as i64, Complex64::new(1.0, 0.0));
    for j in 0..l {
        out.set(j as i64, q[j]);
    }
    Ok(out)
}

/// phi_1^(l) by Cramer's rule on the bordered moment determinant: the
/// z^{J(k)} coefficient is (-1)^{l+k} det(g rows 0..l minus k, cols 0..l-1)
/// over det g^[l]. Pivoted determinants only; no triangular dressing.
pub fn phi1_determinantal(g: &CMatrix, ord: OrderingSpec, l: usize) -> LaurentPoly {
    let cols: Vec<usize> = (0..l).collect();
    let denom = det_pivoted(&pick(g, &cols, &cols));
    LaurentPoly::from_pairs((0..=l).map(|k| {
        let rows: Vec<usize> = (0..=l).filter(|&r| r != k).collect();
        let minor = det_pivoted(&pick(g, &rows, &cols));
        let sign = if (l + k) % 2 == 0 { 1.0 } else { -1.0 };
        (
            ord.index_exponent(k),
            Complex64::new(sign, 0.0) * minor / denom,
        )
    }))
}

/// phi_2^(l) the same way: coefficient at z^{J(k)} is the conjugate of
/// (-1)^{l+k} det(g rows 0..l-1, cols 0..l minus k) over det g^[l+1].
pub fn phi2_determinantal(g: &CMatrix, ord: OrderingSpec, l: usize) -> LaurentPoly {
    let rows: Vec<usize> = (0..l).collect();
    let full: Vec<usize> = (0..=l).collect();
    let denom = det_pivoted(&pick(g, &full, &full));
    LaurentPoly::from_pairs((0..=l).map(|k| {
        let cols: Vec<usize> = (0..=l).filter(|&c| c != k).collect();
        let minor = det_pivoted(&pick(g, &rows, &cols));
        let sign = if (l + k) % 2 == 0 { 1.0 } else { -1.0 };
        (
            ord.index_exponent(k),
            (Complex64::new(sign, 0.0) * minor / denom).conj(),
        )
    }))
}

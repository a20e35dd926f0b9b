//! CMV and extended-CMV orderings of Laurent monomials.
//!
//! An ordering (n+, n-) lists n+ increasing nonnegative powers of z followed
//! by n- increasing-magnitude negative powers, repeating blockwise:
//! (1,1) gives 1, z^{-1}, z, z^{-2}, z^2, ...; (2,1) gives
//! 1, z, z^{-1}, z^2, z^3, z^{-2}, ... The module owns the index<->exponent
//! maps, the class bookkeeping a(l), nu+-(l), l_{+-a}, and the banded shift
//! operator Upsilon realizing multiplication by z on the monomial vector.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::linalg::CMatrix;
use crate::{Error, Result};

/// The pair (n+, n-) defining the monomial ordering; both at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderingSpec {
    n_plus: usize,
    n_minus: usize,
}

impl OrderingSpec {
    pub fn new(n_plus: usize, n_minus: usize) -> Result<Self> {
        if n_plus < 1 || n_minus < 1 {
            return Err(Error::ParseError(
                "ordering requires n_plus >= 1 and n_minus >= 1".into(),
            ));
        }
        Ok(Self { n_plus, n_minus })
    }

    /// The classical CMV ordering (1,1).
    pub fn cmv() -> Self {
        Self {
            n_plus: 1,
            n_minus: 1,
        }
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    pub fn n_minus(&self) -> usize {
        self.n_minus
    }

    /// Block length |n| = n+ + n-.
    pub fn block_len(&self) -> usize {
        self.n_plus + self.n_minus
    }

    pub fn is_cmv(&self) -> bool {
        self.n_plus == 1 && self.n_minus == 1
    }

    /// Exponent J(j) of the j-th monomial: chi^(j)(z) = z^{J(j)}.
    pub fn index_exponent(&self, j: usize) -> i64 {
        let nn = self.block_len();
        let b = (j / nn) as i64;
        let r = j % nn;
        if r < self.n_plus {
            b * self.n_plus as i64 + r as i64
        } else {
            -(b * self.n_minus as i64 + (r - self.n_plus) as i64 + 1)
        }
    }

    /// Inverse of `index_exponent`: the position of exponent e in the
    /// sequence. Every integer exponent appears exactly once.
    pub fn exponent_index(&self, e: i64) -> usize {
        let nn = self.block_len();
        if e >= 0 {
            let b = e as usize / self.n_plus;
            let r = e as usize % self.n_plus;
            b * nn + r
        } else {
            let m = (-e - 1) as usize;
            let b = m / self.n_minus;
            let r = m % self.n_minus;
            b * nn + self.n_plus + r
        }
    }

    /// Class a(l): 1 for nonnegative exponents, 2 for negative ones.
    pub fn class_of(&self, l: usize) -> u8 {
        if self.index_exponent(l) >= 0 {
            1
        } else {
            2
        }
    }

    /// Number of class-1 indices among 0..=l.
    pub fn nu_plus(&self, l: usize) -> usize {
        let nn = self.block_len();
        let b = l / nn;
        let r = l % nn;
        b * self.n_plus + (r + 1).min(self.n_plus)
    }

    /// Number of class-2 indices among 0..=l.
    pub fn nu_minus(&self, l: usize) -> usize {
        let nn = self.block_len();
        let b = l / nn;
        let r = l % nn;
        b * self.n_minus + (r + 1).saturating_sub(self.n_plus)
    }

    /// l_{+a} (dir = plus): smallest l' >= l of class a; l_{-a} (dir = minus):
    /// largest l' <= l of class a.
    pub fn l_assoc(&self, l: usize, a: u8, dir: AssocDir) -> Result<usize> {
        assert!(a == 1 || a == 2, "class must be 1 or 2");
        match dir {
            AssocDir::Plus => {
                let mut lp = l;
                loop {
                    if self.class_of(lp) == a {
                        return Ok(lp);
                    }
                    lp += 1;
                }
            }
            AssocDir::Minus => {
                let mut lp = l as i64;
                while lp >= 0 {
                    if self.class_of(lp as usize) == a {
                        return Ok(lp as usize);
                    }
                    lp -= 1;
                }
                Err(Error::NoSuchIndex { l, class: a })
            }
        }
    }

    /// Monomial value chi^(j)(z) = z^{J(j)}.
    pub fn chi(&self, j: usize, z: Complex64) -> Complex64 {
        z.powi(self.index_exponent(j) as i32)
    }

    /// Column vector (chi^(0)(z), ..., chi^(size-1)(z)).
    pub fn chi_vec(&self, size: usize, z: Complex64) -> DVector<Complex64> {
        DVector::from_fn(size, |j, _| self.chi(j, z))
    }

    /// chi*^(j)(z) = z^{-1} chi^(j)(z^{-1}) = z^{-J(j)-1}.
    pub fn chi_star(&self, j: usize, z: Complex64) -> Complex64 {
        z.powi((-self.index_exponent(j) - 1) as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssocDir {
    Plus,
    Minus,
}

/// Finite truncation of the shift operator: (Upsilon chi)(z) = z chi(z) holds
/// on every interior row; rows whose shifted exponent falls outside the
/// truncation are marked boundary and excluded from identity checks.
#[derive(Debug, Clone)]
pub struct UpsilonMatrix {
    pub ord: OrderingSpec,
    pub size: usize,
    pub entries: CMatrix,
    /// True where the row's target index >= size.
    pub boundary_rows: Vec<bool>,
}

impl UpsilonMatrix {
    /// Index k with J(k) = J(j) + 1, when it lies inside the truncation.
    pub fn row_target(&self, j: usize) -> Option<usize> {
        let k = self.ord.exponent_index(self.ord.index_exponent(j) + 1);
        (k < self.size).then_some(k)
    }

    /// Index k with J(k) = J(j) - 1, when it lies inside the truncation.
    /// Column j of the truncation has its single 1 in this row.
    pub fn col_source(&self, j: usize) -> Option<usize> {
        let k = self.ord.exponent_index(self.ord.index_exponent(j) - 1);
        (k < self.size).then_some(k)
    }
}

/// Build the size x size truncation of Upsilon for the given ordering.
pub fn build_upsilon(ord: OrderingSpec, size: usize) -> UpsilonMatrix {
    let mut entries = CMatrix::zeros(size, size);
    let mut boundary_rows = vec![false; size];
    for j in 0..size {
        let k = ord.exponent_index(ord.index_exponent(j) + 1);
        if k < size {
            entries[(j, k)] = Complex64::new(1.0, 0.0);
        } else {
            boundary_rows[j] = true;
        }
    }
    UpsilonMatrix {
        ord,
        size,
        entries,
        boundary_rows,
    }
}

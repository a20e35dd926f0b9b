//! Measures on the unit circle and their Fourier data.
//!
//! A measure is a base weight (Lebesgue, a trigonometric polynomial, the
//! entire-type exp-cos weight, or a custom finite Fourier table) times a
//! stack of decorations: Laurent-polynomial factors, geometric factors
//! 1/(1 - z/w) or 1/(1 - w/z), and exponential flow factors
//! exp(sum_j t1_j z^j - t2_j z^{-j}). Moments are produced two ways that the
//! tests keep honest against each other: closed-form Fourier coefficients
//! convolved with the decoration series, and trapezoid quadrature of the
//! pointwise density.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Coefficient window for decoration series and Fourier partial sums.
pub const DEFAULT_TRUNCATION_BOUND: i64 = 128;

/// Default node count for circle quadrature.
pub const DEFAULT_QUAD_NODES: usize = 4096;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Finite Laurent polynomial sum c_e z^e, stored sparsely by exponent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, Complex64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, c(1.0, 0.0))
    }

    pub fn monomial(e: i64, coeff: Complex64) -> Self {
        let mut p = Self::default();
        p.set(e, coeff);
        p
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut p = Self::default();
        for (e, v) in pairs {
            p.set(e, p.coeff(e) + v);
        }
        p
    }

    pub fn coeff(&self, e: i64) -> Complex64 {
        self.coeffs.get(&e).copied().unwrap_or_else(|| c(0.0, 0.0))
    }

    pub fn set(&mut self, e: i64, v: Complex64) {
        if v.norm() == 0.0 {
            self.coeffs.remove(&e);
        } else {
            self.coeffs.insert(e, v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&e, &v)| (e, v))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&e, &v)| v * z.powi(e as i32))
            .sum()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (e, v) in rhs.iter() {
            out.set(e, out.coeff(e) + v);
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (e, v) in rhs.iter() {
            out.set(e, out.coeff(e) - v);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::default();
        for (e, v) in self.iter() {
            out.set(e, s * v);
        }
        out
    }

    /// Exponent shift: multiply by z^k.
    pub fn shift(&self, k: i64) -> Self {
        let mut out = Self::default();
        for (e, v) in self.iter() {
            out.set(e + k, v);
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::default();
        for (e1, v1) in self.iter() {
            for (e2, v2) in rhs.iter() {
                out.set(e1 + e2, out.coeff(e1 + e2) + v1 * v2);
            }
        }
        out
    }

    /// Convolution with support clipped to [-bound, bound].
    pub fn mul_clipped(&self, rhs: &Self, bound: i64) -> Self {
        let mut out = Self::default();
        for (e1, v1) in self.iter() {
            for (e2, v2) in rhs.iter() {
                let e = e1 + e2;
                if e.abs() <= bound {
                    out.set(e, out.coeff(e) + v1 * v2);
                }
            }
        }
        out
    }

    /// Coefficient-wise conjugation: f(z) = sum c_e z^e maps to
    /// sum conj(c_e) z^e, so that fbar(conj z) = conj(f(z)).
    pub fn conj_coeffs(&self) -> Self {
        let mut out = Self::default();
        for (e, v) in self.iter() {
            out.set(e, v.conj());
        }
        out
    }

    /// Substitute z -> 1/z: exponents negate.
    pub fn invert_z(&self) -> Self {
        let mut out = Self::default();
        for (e, v) in self.iter() {
            out.set(-e, v);
        }
        out
    }

    /// The involution f*(z) = z^{-1} fbar(z^{-1}): coefficient c_e moves to
    /// conj(c_e) at exponent -e-1. Applying it twice is the identity.
    pub fn star(&self) -> Self {
        let mut out = Self::default();
        for (e, v) in self.iter() {
            out.set(-e - 1, v.conj());
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Sup over the union support of the coefficient difference.
    pub fn sup_diff(&self, rhs: &Self) -> f64 {
        let mut d = 0.0_f64;
        for (e, v) in self.iter() {
            d = d.max((v - rhs.coeff(e)).norm());
        }
        for (e, v) in rhs.iter() {
            d = d.max((v - self.coeff(e)).norm());
        }
        d
    }

    /// Drop coefficients of magnitude below eps.
    pub fn prune(&self, eps: f64) -> Self {
        let mut out = Self::default();
        for (e, v) in self.iter() {
            if v.norm() >= eps {
                out.set(e, v);
            }
        }
        out
    }
}

/// Annulus R- < |z| < R+ on which the Fourier series of the measure
/// converges. Degenerates to the punctured plane for entire-type weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub r_minus: f64,
    pub r_plus: f64,
}

impl Annulus {
    pub fn punctured_plane() -> Self {
        Self {
            r_minus: 0.0,
            r_plus: f64::INFINITY,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let m = z.norm();
        self.r_minus < m && m < self.r_plus
    }

    fn check(&self, z: Complex64) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::OutsideAnnulus {
                modulus: z.norm(),
                inner: self.r_minus,
                outer: self.r_plus,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BaseKind {
    /// dmu = dtheta; c_n = delta_{n,0}.
    Lebesgue,
    /// Weight 1 + a cos(theta), |a| < 1; c_0 = 1, c_{+-1} = a/2.
    TrigPoly { a: f64 },
    /// Weight e + e^{cos theta} cos(sin theta); c_0 = e + 1 and
    /// c_n = 1/(2 |n|!) otherwise. F(z) = e + (e^z + e^{1/z})/2.
    ExpCos,
    /// Finite Fourier table; the caller owns quasi-definiteness.
    Custom { coeffs: BTreeMap<i64, Complex64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Decoration {
    /// Multiply the weight by f(z), z on the circle.
    Poly(LaurentPoly),
    /// Multiply by 1/(1 - z/w), |w| > 1. Shrinks R+ to |w|.
    GeometricOuter { w: Complex64 },
    /// Multiply by 1/(1 - w/z), |w| < 1. Grows R- to |w|.
    GeometricInner { w: Complex64 },
    /// Multiply by exp(sum_{j>=1} t1_j z^j - t2_j z^{-j}).
    ExpFlow {
        t1: Vec<Complex64>,
        t2: Vec<Complex64>,
    },
}

impl Decoration {
    /// Laurent coefficients of the factor, clipped to [-bound, bound].
    fn series(&self, bound: i64) -> Result<LaurentPoly> {
        match self {
            Decoration::Poly(p) => {
                let lo = p.min_exp().unwrap_or(0);
                let hi = p.max_exp().unwrap_or(0);
                if lo < -bound || hi > bound {
                    let index = if hi > bound { hi } else { lo };
                    return Err(Error::TruncationExceeded { index, bound });
                }
                Ok(p.clone())
            }
            Decoration::GeometricOuter { w } => {
                let mut p = LaurentPoly::zero();
                let mut term = c(1.0, 0.0);
                for k in 0..=bound {
                    p.set(k, term);
                    term /= *w;
                }
                Ok(p)
            }
            Decoration::GeometricInner { w } => {
                let mut p = LaurentPoly::zero();
                let mut term = c(1.0, 0.0);
                for k in 0..=bound {
                    p.set(-k, term);
                    term *= *w;
                }
                Ok(p)
            }
            Decoration::ExpFlow { t1, t2 } => {
                let mut exponent = LaurentPoly::zero();
                for (i, &v) in t1.iter().enumerate() {
                    exponent.set(i as i64 + 1, v);
                }
                for (i, &v) in t2.iter().enumerate() {
                    exponent.set(-(i as i64 + 1), exponent.coeff(-(i as i64 + 1)) - v);
                }
                // exp(P) by the power series; window clipping is safe here
                // because the k-th term carries 1/k!.
                let mut sum = LaurentPoly::one();
                let mut term = LaurentPoly::one();
                for k in 1..400 {
                    term = term
                        .mul_clipped(&exponent, bound)
                        .scale(c(1.0 / k as f64, 0.0));
                    if term.norm_inf() < 1e-18 {
                        break;
                    }
                    sum = sum.add(&term);
                }
                Ok(sum)
            }
        }
    }

    /// Exact pointwise value at z on the unit circle.
    fn value(&self, z: Complex64) -> Complex64 {
        let one = c(1.0, 0.0);
        match self {
            Decoration::Poly(p) => p.eval(z),
            Decoration::GeometricOuter { w } => one / (one - z / w),
            Decoration::GeometricInner { w } => one / (one - w / z),
            Decoration::ExpFlow { t1, t2 } => {
                let mut p = c(0.0, 0.0);
                for (i, &v) in t1.iter().enumerate() {
                    p += v * z.powi(i as i32 + 1);
                }
                for (i, &v) in t2.iter().enumerate() {
                    p -= v * z.powi(-(i as i32 + 1));
                }
                p.exp()
            }
        }
    }
}

/// A (possibly complex) measure w(theta) dtheta on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    base: BaseKind,
    decorations: Vec<Decoration>,
    bound: i64,
    annulus: Annulus,
    /// Combined Laurent series of all decorations on [-bound, bound];
    /// `one` when no decorations are present.
    factor: LaurentPoly,
}

impl Measure {
    fn new(base: BaseKind) -> Self {
        Self {
            base,
            decorations: Vec::new(),
            bound: DEFAULT_TRUNCATION_BOUND,
            annulus: Annulus::punctured_plane(),
            factor: LaurentPoly::one(),
        }
    }

    pub fn lebesgue() -> Self {
        Self::new(BaseKind::Lebesgue)
    }

    /// Weight 1 + a cos(theta); positive for |a| < 1.
    pub fn trig_poly(a: f64) -> Result<Self> {
        if !a.is_finite() || a.abs() >= 1.0 {
            return Err(Error::NotPositiveMeasure);
        }
        Ok(Self::new(BaseKind::TrigPoly { a }))
    }

    pub fn exp_cos() -> Self {
        Self::new(BaseKind::ExpCos)
    }

    pub fn custom(coeffs: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        Self::new(BaseKind::Custom {
            coeffs: coeffs.into_iter().filter(|(_, v)| v.norm() != 0.0).collect(),
        })
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn set_bound(&mut self, bound: i64) -> Result<()> {
        self.bound = bound;
        self.rebuild_factor()
    }

    pub fn annulus(&self) -> Annulus {
        self.annulus
    }

    /// True when the weight is known real and positive on the circle:
    /// a positive base, no decorations. Decorated measures are treated as
    /// quasi-definite even when a particular stack happens to stay positive.
    pub fn is_positive(&self) -> bool {
        self.decorations.is_empty()
            && match &self.base {
                BaseKind::Lebesgue | BaseKind::TrigPoly { .. } | BaseKind::ExpCos => true,
                BaseKind::Custom { .. } => false,
            }
    }

    fn base_moment(&self, n: i64) -> Complex64 {
        match &self.base {
            BaseKind::Lebesgue => {
                if n == 0 {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }
            BaseKind::TrigPoly { a } => match n {
                0 => c(1.0, 0.0),
                1 | -1 => c(a / 2.0, 0.0),
                _ => c(0.0, 0.0),
            },
            BaseKind::ExpCos => {
                if n == 0 {
                    c(std::f64::consts::E + 1.0, 0.0)
                } else {
                    let m = n.unsigned_abs();
                    let mut fact = 1.0_f64;
                    for k in 2..=m {
                        fact *= k as f64;
                    }
                    c(0.5 / fact, 0.0)
                }
            }
            BaseKind::Custom { coeffs } => {
                coeffs.get(&n).copied().unwrap_or_else(|| c(0.0, 0.0))
            }
        }
    }

    fn base_density(&self, theta: f64) -> Complex64 {
        match &self.base {
            BaseKind::Lebesgue => c(1.0, 0.0),
            BaseKind::TrigPoly { a } => c(1.0 + a * theta.cos(), 0.0),
            BaseKind::ExpCos => c(
                std::f64::consts::E + theta.cos().exp() * theta.sin().cos(),
                0.0,
            ),
            BaseKind::Custom { coeffs } => {
                let z = Complex64::from_polar(1.0, theta);
                coeffs.iter().map(|(&e, &v)| v * z.powi(e as i32)).sum()
            }
        }
    }

    /// Fourier coefficient c_n = (1/2pi) integral e^{-i n theta} dmu(theta).
    pub fn moment(&self, n: i64) -> Result<Complex64> {
        if n.abs() > self.bound {
            return Err(Error::TruncationExceeded {
                index: n,
                bound: self.bound,
            });
        }
        if self.decorations.is_empty() {
            return Ok(self.base_moment(n));
        }
        // Multiplying the weight by f convolves the coefficients.
        let mut out = c(0.0, 0.0);
        for (m, fm) in self.factor.iter() {
            out += fm * self.base_moment(n - m);
        }
        Ok(out)
    }

    /// Weight value w(theta); complex in general once decorated.
    pub fn density(&self, theta: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, theta);
        let mut w = self.base_density(theta);
        for d in &self.decorations {
            w *= d.value(z);
        }
        w
    }

    /// Uniform nodes z_k = e^{2 pi i k / n} with weights 2 pi w(theta_k)/n,
    /// so that integral f dmu ~ sum_k weight_k f(z_k). Trapezoid on the
    /// circle: spectrally accurate for smooth weights.
    pub fn quadrature(&self, n: usize) -> Vec<(Complex64, Complex64)> {
        (0..n)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / n as f64;
                let z = Complex64::from_polar(1.0, theta);
                (z, self.density(theta) * c(2.0 * PI / n as f64, 0.0))
            })
            .collect()
    }

    /// Moment by quadrature; the independent oracle for `moment`.
    pub fn moment_quadrature(&self, n: i64, nodes: usize) -> Complex64 {
        let mut s = c(0.0, 0.0);
        for (z, w) in self.quadrature(nodes) {
            s += z.powi(-n as i32) * w;
        }
        s / c(2.0 * PI, 0.0)
    }

    fn moment_unchecked(&self, n: i64) -> Complex64 {
        if n.abs() > self.bound {
            return c(0.0, 0.0);
        }
        self.moment(n).expect("bounded index")
    }

    /// F(z) = sum_n c_n z^n over the truncation window; defined on the
    /// annulus of the measure.
    pub fn fourier_f(&self, z: Complex64) -> Result<Complex64> {
        self.annulus.check(z)?;
        Ok(self.fourier_window(-self.bound, self.bound, z, false))
    }

    /// Fbar(z) = sum_n conj(c_n) z^n.
    pub fn fourier_f_bar(&self, z: Complex64) -> Result<Complex64> {
        self.annulus.check(z)?;
        Ok(self.fourier_window(-self.bound, self.bound, z, true))
    }

    /// F+_k(v) = sum_{n >= -k} c_n v^n; needs |v| < R+.
    pub fn fourier_plus(&self, k: i64, v: Complex64) -> Result<Complex64> {
        if v.norm() >= self.annulus.r_plus {
            return Err(Error::OutsideAnnulus {
                modulus: v.norm(),
                inner: 0.0,
                outer: self.annulus.r_plus,
            });
        }
        Ok(self.fourier_window(-k, self.bound, v, false))
    }

    /// F-_k(v) = sum_{n < -k} c_n v^n; needs |v| > R-.
    pub fn fourier_minus(&self, k: i64, v: Complex64) -> Result<Complex64> {
        if v.norm() <= self.annulus.r_minus {
            return Err(Error::OutsideAnnulus {
                modulus: v.norm(),
                inner: self.annulus.r_minus,
                outer: f64::INFINITY,
            });
        }
        Ok(self.fourier_window(-self.bound, -k - 1, v, false))
    }

    /// F+ with conjugated coefficients.
    pub fn fourier_plus_bar(&self, k: i64, v: Complex64) -> Result<Complex64> {
        if v.norm() >= self.annulus.r_plus {
            return Err(Error::OutsideAnnulus {
                modulus: v.norm(),
                inner: 0.0,
                outer: self.annulus.r_plus,
            });
        }
        Ok(self.fourier_window(-k, self.bound, v, true))
    }

    /// F- with conjugated coefficients.
    pub fn fourier_minus_bar(&self, k: i64, v: Complex64) -> Result<Complex64> {
        if v.norm() <= self.annulus.r_minus {
            return Err(Error::OutsideAnnulus {
                modulus: v.norm(),
                inner: self.annulus.r_minus,
                outer: f64::INFINITY,
            });
        }
        Ok(self.fourier_window(-self.bound, -k - 1, v, true))
    }

    fn fourier_window(&self, lo: i64, hi: i64, v: Complex64, conj: bool) -> Complex64 {
        let lo = lo.max(-self.bound);
        let hi = hi.min(self.bound);
        let mut s = c(0.0, 0.0);
        for n in lo..=hi {
            let mut cn = self.moment_unchecked(n);
            if conj {
                cn = cn.conj();
            }
            if cn.norm() != 0.0 {
                s += cn * v.powi(n as i32);
            }
        }
        s
    }

    fn push_decoration(&mut self, d: Decoration) -> Result<()> {
        match &d {
            Decoration::GeometricOuter { w } => {
                if w.norm() <= 1.0 {
                    return Err(Error::OutsideRegion(
                        "outer geometric factor needs |w| > 1".into(),
                    ));
                }
                self.annulus.r_plus = self.annulus.r_plus.min(w.norm());
            }
            Decoration::GeometricInner { w } => {
                if w.norm() >= 1.0 {
                    return Err(Error::OutsideRegion(
                        "inner geometric factor needs |w| < 1".into(),
                    ));
                }
                self.annulus.r_minus = self.annulus.r_minus.max(w.norm());
            }
            _ => {}
        }
        self.decorations.push(d);
        self.rebuild_factor()
    }

    fn rebuild_factor(&mut self) -> Result<()> {
        let mut f = LaurentPoly::one();
        for d in &self.decorations {
            f = f.mul_clipped(&d.series(self.bound)?, self.bound);
        }
        self.factor = f;
        Ok(())
    }

    /// Multiply the weight by the Laurent polynomial f(z).
    pub fn decorate_poly(&mut self, f: LaurentPoly) -> Result<()> {
        self.push_decoration(Decoration::Poly(f))
    }

    /// Multiply the weight by 1/(1 - z/w), |w| > 1.
    pub fn decorate_geometric_outer(&mut self, w: Complex64) -> Result<()> {
        self.push_decoration(Decoration::GeometricOuter { w })
    }

    /// Multiply the weight by 1/(1 - w/z), |w| < 1.
    pub fn decorate_geometric_inner(&mut self, w: Complex64) -> Result<()> {
        self.push_decoration(Decoration::GeometricInner { w })
    }

    /// Deformed copy with the flow factor exp(sum t1_j z^j - t2_j z^{-j}).
    pub fn with_exp_flow(&self, t1: &[Complex64], t2: &[Complex64]) -> Result<Self> {
        let mut m = self.clone();
        m.push_decoration(Decoration::ExpFlow {
            t1: t1.to_vec(),
            t2: t2.to_vec(),
        })?;
        Ok(m)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MeasureJson =
            serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
        spec.build()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MeasureJson::from_measure(self)).expect("serializable")
    }
}

fn coeffs_to_json(p: impl Iterator<Item = (i64, Complex64)>) -> BTreeMap<String, [f64; 2]> {
    p.map(|(e, v)| (e.to_string(), [v.re, v.im])).collect()
}

fn coeffs_from_json(m: &BTreeMap<String, [f64; 2]>) -> Result<Vec<(i64, Complex64)>> {
    m.iter()
        .map(|(k, v)| {
            let e: i64 = k
                .parse()
                .map_err(|_| Error::ParseError(format!("bad exponent key {k:?}")))?;
            Ok((e, c(v[0], v[1])))
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum DecorationJson {
    Poly {
        coeffs: BTreeMap<String, [f64; 2]>,
    },
    GeometricOuter {
        w: [f64; 2],
    },
    GeometricInner {
        w: [f64; 2],
    },
    ExpFlow {
        #[serde(default)]
        t1: Vec<[f64; 2]>,
        #[serde(default)]
        t2: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasureJson {
    kind: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    coeffs: BTreeMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    decorations: Vec<DecorationJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bound: Option<i64>,
}

impl MeasureJson {
    fn build(&self) -> Result<Measure> {
        let mut m = match self.kind.as_str() {
            "lebesgue" => Measure::lebesgue(),
            "trig_poly" | "trig_poly_weight" => {
                let a = *self
                    .params
                    .get("a")
                    .ok_or_else(|| Error::ParseError("trig_poly needs params.a".into()))?;
                Measure::trig_poly(a)?
            }
            "exp_cos" | "exp_cos_weight" => Measure::exp_cos(),
            "custom" | "fourier_table" => Measure::custom(coeffs_from_json(&self.coeffs)?),
            other => {
                return Err(Error::ParseError(format!("unknown measure kind {other:?}")))
            }
        };
        if let Some(b) = self.bound {
            if b < 1 {
                return Err(Error::ParseError("bound must be >= 1".into()));
            }
            m.set_bound(b)?;
        }
        for d in &self.decorations {
            match d {
                DecorationJson::Poly { coeffs } => {
                    m.decorate_poly(LaurentPoly::from_pairs(coeffs_from_json(coeffs)?))?
                }
                DecorationJson::GeometricOuter { w } => {
                    m.decorate_geometric_outer(c(w[0], w[1]))?
                }
                DecorationJson::GeometricInner { w } => {
                    m.decorate_geometric_inner(c(w[0], w[1]))?
                }
                DecorationJson::ExpFlow { t1, t2 } => {
                    let t1: Vec<Complex64> = t1.iter().map(|v| c(v[0], v[1])).collect();
                    let t2: Vec<Complex64> = t2.iter().map(|v| c(v[0], v[1])).collect();
                    m = m.with_exp_flow(&t1, &t2)?;
                }
            }
        }
        Ok(m)
    }

    fn from_measure(m: &Measure) -> Self {
        let (kind, coeffs, params) = match &m.base {
            BaseKind::Lebesgue => ("lebesgue", BTreeMap::new(), BTreeMap::new()),
            BaseKind::TrigPoly { a } => (
                "trig_poly_weight",
                BTreeMap::new(),
                [("a".to_string(), *a)].into_iter().collect(),
            ),
            BaseKind::ExpCos => ("exp_cos_weight", BTreeMap::new(), BTreeMap::new()),
            BaseKind::Custom { coeffs } => (
                "fourier_table",
                coeffs_to_json(coeffs.iter().map(|(&e, &v)| (e, v))),
                BTreeMap::new(),
            ),
        };
        let decorations = m
            .decorations
            .iter()
            .map(|d| match d {
                Decoration::Poly(p) => DecorationJson::Poly {
                    coeffs: coeffs_to_json(p.iter()),
                },
                Decoration::GeometricOuter { w } => DecorationJson::GeometricOuter {
                    w: [w.re, w.im],
                },
                Decoration::GeometricInner { w } => DecorationJson::GeometricInner {
                    w: [w.re, w.im],
                },
                Decoration::ExpFlow { t1, t2 } => DecorationJson::ExpFlow {
                    t1: t1.iter().map(|v| [v.re, v.im]).collect(),
                    t2: t2.iter().map(|v| [v.re, v.im]).collect(),
                },
            })
            .collect();
        Self {
            kind: kind.to_string(),
            coeffs,
            params,
            decorations,
            bound: Some(m.bound),
        }
    }
}

//! Truncated Laurent series and expansions of rational forms about a point
//! of the Riemann sphere.

use serde::{Deserialize, Serialize};

use crate::poly::{C64, ONE, ZERO};
use crate::rational::CRational;

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExtPoint {
    Finite(C64),
    Infinity,
}

impl ExtPoint {
    pub fn finite(&self) -> Option<C64> {
        match self {
            ExtPoint::Finite(z) => Some(*z),
            ExtPoint::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtPoint::Infinity)
    }
}

impl std::fmt::Display for ExtPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtPoint::Finite(z) => write!(f, "{}", crate::fmt_complex(*z)),
            ExtPoint::Infinity => write!(f, "inf"),
        }
    }
}

/// Laurent series `sum_k coeffs[k] t^(min_degree + k)`, known up to
/// `O(t^(min_degree + len))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub min_degree: i32,
    pub coeffs: Vec<C64>,
}

impl Series {
    pub fn new(min_degree: i32, coeffs: Vec<C64>) -> Self {
        Series { min_degree, coeffs }
    }

    pub fn constant(c: C64, len: usize) -> Self {
        let mut v = vec![ZERO; len.max(1)];
        v[0] = c;
        Series::new(0, v)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// One past the highest degree known exactly.
    pub fn precision(&self) -> i32 {
        self.min_degree + self.coeffs.len() as i32
    }

    pub fn coeff(&self, degree: i32) -> C64 {
        let k = degree - self.min_degree;
        if k < 0 {
            ZERO
        } else {
            self.coeffs.get(k as usize).copied().unwrap_or(ZERO)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn scale(&self, s: C64) -> Series {
        Series::new(self.min_degree, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Multiplication by `t^d`.
    pub fn shift(&self, d: i32) -> Series {
        Series::new(self.min_degree + d, self.coeffs.clone())
    }

    /// Drops leading coefficients whose magnitude is at most `tol`.
    pub fn strip(&self, tol: f64) -> Series {
        let k = self
            .coeffs
            .iter()
            .position(|c| c.norm() > tol)
            .unwrap_or(self.coeffs.len());
        if k == self.coeffs.len() {
            return Series::new(self.precision(), Vec::new());
        }
        Series::new(self.min_degree + k as i32, self.coeffs[k..].to_vec())
    }

    pub fn truncate(&self, len: usize) -> Series {
        let mut c = self.coeffs.clone();
        c.truncate(len);
        Series::new(self.min_degree, c)
    }

    pub fn add(&self, other: &Series) -> Series {
        let lo = self.min_degree.min(other.min_degree);
        let hi = self.precision().min(other.precision());
        if hi <= lo {
            return Series::new(hi, Vec::new());
        }
        Series::new(lo, (lo..hi).map(|d| self.coeff(d) + other.coeff(d)).collect())
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.len().min(other.len());
        let mut v = vec![ZERO; n];
        for (i, a) in self.coeffs.iter().take(n).enumerate() {
            for (j, b) in other.coeffs.iter().take(n - i).enumerate() {
                v[i + j] += a * b;
            }
        }
        Series::new(self.min_degree + other.min_degree, v)
    }

    /// Quotient; the divisor's leading stored coefficient must be nonzero.
    pub fn div(&self, other: &Series) -> Series {
        let n = self.len().min(other.len());
        let b0 = other.coeffs[0];
        let mut q = vec![ZERO; n];
        for k in 0..n {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= other.coeffs[j] * q[k - j];
            }
            q[k] = acc / b0;
        }
        Series::new(self.min_degree - other.min_degree, q)
    }

    /// Square root with leading coefficient `root0` (must square to the
    /// leading coefficient); `min_degree` must be even.
    pub fn sqrt_with(&self, root0: C64) -> Series {
        debug_assert!(self.min_degree % 2 == 0);
        let n = self.len();
        let mut s = vec![ZERO; n];
        s[0] = root0;
        for k in 1..n {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s[k] = acc / (root0 * 2.0);
        }
        Series::new(self.min_degree / 2, s)
    }

    /// Substitution `t -> t^k`.
    pub fn spread(&self, k: usize) -> Series {
        let mut v = vec![ZERO; self.len() * k];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[i * k] = *c;
        }
        Series::new(self.min_degree * k as i32, v)
    }

    pub fn eval(&self, t: C64) -> C64 {
        let mut acc = ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc * t.powi(self.min_degree)
    }
}

/// Expansion of the form `r(z) dz` about `center`; at infinity the chart
/// `zeta = 1/z` is used, Jacobian included.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentExpansion {
    pub center: ExtPoint,
    pub min_degree: i32,
    pub coeffs: Vec<C64>,
}

impl LaurentExpansion {
    pub fn from_series(center: ExtPoint, s: Series) -> Self {
        LaurentExpansion {
            center,
            min_degree: s.min_degree,
            coeffs: s.coeffs,
        }
    }

    pub fn pole_order(&self) -> u32 {
        if self.coeffs.is_empty() || self.min_degree >= 0 {
            0
        } else {
            (-self.min_degree) as u32
        }
    }

    pub fn coeff(&self, degree: i32) -> C64 {
        let k = degree - self.min_degree;
        if k < 0 {
            ZERO
        } else {
            self.coeffs.get(k as usize).copied().unwrap_or(ZERO)
        }
    }

    /// Value of the coefficient function at local coordinate `t`.
    pub fn eval(&self, t: C64) -> C64 {
        Series::new(self.min_degree, self.coeffs.clone()).eval(t)
    }
}

/// Expansion of the function `r` about a finite point, in `t = z - p`.
pub fn function_series_at(r: &CRational, p: C64, n_terms: usize) -> Series {
    let extra = r.num().degree().unwrap_or(0) + 2;
    let work = n_terms + extra;
    let num = r.num().shifted(p);
    let num_scale = 1.0 + num.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut num_s = Series::new(0, pad(num, work)).strip(1e-12 * num_scale);
    if num_s.is_empty() {
        return Series::new(0, vec![ZERO; n_terms]);
    }
    num_s = num_s.truncate(work);
    // Denominator is factored: the pole at p contributes t^-m exactly.
    let mut den = Series::constant(r.lead(), work);
    let mut pole_shift = 0i32;
    for &(q, m) in r.poles() {
        if r.same_point(q, p) {
            pole_shift += m as i32;
        } else {
            let lin = Series::new(0, pad(vec![p - q, ONE], work));
            for _ in 0..m {
                den = den.mul(&lin);
            }
        }
    }
    num_s
        .div(&den)
        .shift(-pole_shift)
        .truncate(n_terms)
}

/// Expansion of the function `r(1/zeta)` in `zeta`.
pub fn function_series_at_infinity(r: &CRational, n_terms: usize) -> Series {
    let work = n_terms + 2;
    let dn = match r.num().degree() {
        None => return Series::new(0, vec![ZERO; n_terms]),
        Some(d) => d as i32,
    };
    // N(1/zeta) = zeta^-dn * rev(N)(zeta); each (1/zeta - q) = zeta^-1 (1 - q zeta).
    let num = Series::new(-dn, pad(r.num().reversed(), work));
    let mut den = Series::constant(r.lead(), work);
    let mut dd = 0i32;
    for &(q, m) in r.poles() {
        let lin = Series::new(0, pad(vec![ONE, -q], work));
        for _ in 0..m {
            den = den.mul(&lin);
        }
        dd += m as i32;
    }
    num.div(&den).shift(dd).truncate(n_terms)
}

/// Laurent expansion of the form `r dz` at `p`.
pub fn laurent_at(r: &CRational, p: ExtPoint, n_terms: usize) -> LaurentExpansion {
    let n_terms = n_terms.max(1);
    match p {
        ExtPoint::Finite(z0) => {
            LaurentExpansion::from_series(p, function_series_at(r, z0, n_terms))
        }
        ExtPoint::Infinity => {
            // r(z) dz = -zeta^-2 r(1/zeta) d zeta
            let s = function_series_at_infinity(r, n_terms).scale(-ONE).shift(-2);
            LaurentExpansion::from_series(p, s)
        }
    }
}

fn pad(mut v: Vec<C64>, len: usize) -> Vec<C64> {
    v.resize(len.max(v.len()), ZERO);
    v.truncate(len);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::CPoly;

    #[test]
    fn simple_pole_at_origin() {
        let r = CRational::parse_simple("1/z");
        let l = laurent_at(&r, ExtPoint::Finite(ZERO), 3);
        assert_eq!(l.min_degree, -1);
        assert!((l.coeffs[0] - ONE).norm() < 1e-15);
        assert_eq!(l.pole_order(), 1);
    }

    #[test]
    fn polynomial_forms_at_infinity() {
        let z = CRational::from_poly(CPoly::z());
        assert_eq!(laurent_at(&z, ExtPoint::Infinity, 4).pole_order(), 3);
        let one = CRational::from_poly(CPoly::one());
        assert_eq!(laurent_at(&one, ExtPoint::Infinity, 4).pole_order(), 2);
        let inv2 = CRational::parse_simple("1/z^2");
        assert_eq!(laurent_at(&inv2, ExtPoint::Infinity, 4).pole_order(), 0);
    }

    #[test]
    fn series_sqrt_squares_back() {
        let s = Series::new(0, vec![C64::new(4.0, 0.0), C64::new(1.0, 2.0), C64::new(0.5, 0.0), ZERO]);
        let r = s.sqrt_with(C64::new(2.0, 0.0));
        let back = r.mul(&r);
        for (a, b) in back.coeffs.iter().zip(&s.coeffs) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn resummed_expansion_matches_function_near_pole() {
        let r = CRational::parse_simple("3*z^2/(z^3-1)");
        let p = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let n = 8;
        let l = laurent_at(&r, ExtPoint::Finite(p), n);
        for &h in &[1e-1, 5e-2, 2.5e-2] {
            let t = C64::new(h, 0.5 * h);
            let err = (l.eval(t) - r.eval(p + t).unwrap()).norm();
            // O(|t|^(min_degree + n)) remainder
            assert!(err < 10.0 * t.norm().powi(l.min_degree + n as i32), "h={h} err={err}");
        }
    }
}

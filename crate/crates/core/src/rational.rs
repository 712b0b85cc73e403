//! Rational functions with factored denominators, residues and closed-form
//! antiderivatives.

use crate::error::{Error, Result};
use crate::laurent::{function_series_at, laurent_at, ExtPoint};
use crate::poly::{CPoly, C64, ONE, ZERO};

/// Relative tolerance for deciding that a numerator vanishes at a pole.
const CANCEL_TOL: f64 = 1e-9;

/// `num(z) / (lead * prod (z - p)^m)`.
///
/// Poles are kept explicitly so pole orders are structural; numerator and
/// denominator share no root.
#[derive(Clone, Debug, PartialEq)]
pub struct CRational {
    num: CPoly,
    lead: C64,
    poles: Vec<(C64, u32)>,
}

impl CRational {
    pub fn new(num: CPoly, lead: C64, poles: Vec<(C64, u32)>) -> Result<Self> {
        if lead == ZERO {
            return Err(Error::Invalid("zero denominator".into()));
        }
        let mut r = CRational { num, lead, poles: Vec::new() };
        for (p, m) in poles {
            r.push_pole(p, m);
        }
        r.normalize();
        Ok(r)
    }

    /// Builds `num / den`, isolating the roots of `den` numerically.
    pub fn from_polys(num: CPoly, den: CPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Invalid("zero denominator".into()));
        }
        let roots = den.roots()?;
        Self::new(num, den.leading(), roots)
    }

    pub fn from_poly(p: CPoly) -> Self {
        CRational { num: p, lead: ONE, poles: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::from_poly(CPoly::constant(c))
    }

    pub fn zero() -> Self {
        Self::from_poly(CPoly::zero())
    }

    pub fn num(&self) -> &CPoly {
        &self.num
    }

    pub fn lead(&self) -> C64 {
        self.lead
    }

    pub fn poles(&self) -> &[(C64, u32)] {
        &self.poles
    }

    pub fn den(&self) -> CPoly {
        CPoly::from_roots(self.lead, &self.poles)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Root-coincidence tolerance: `1e-10 * (1 + max |den coefficient|)`.
    pub fn tau_root(&self) -> f64 {
        1e-10 * (1.0 + self.den().max_abs_coeff())
    }

    pub fn same_point(&self, a: C64, b: C64) -> bool {
        (a - b).norm() <= self.tau_root().max(1e-10 * (1.0 + a.norm()))
    }

    fn push_pole(&mut self, p: C64, m: u32) {
        if m == 0 {
            return;
        }
        let tol = 1e-9 * (1.0 + p.norm());
        if let Some(e) = self.poles.iter_mut().find(|(q, _)| (q - p).norm() <= tol) {
            e.1 += m;
        } else {
            self.poles.push((p, m));
        }
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.poles.clear();
            self.lead = ONE;
            return;
        }
        for (p, m) in self.poles.iter_mut() {
            while *m > 0 && self.num.vanishes_at(*p, CANCEL_TOL) {
                self.num = self.num.deflate(*p);
                *m -= 1;
            }
        }
        self.poles.retain(|(_, m)| *m > 0);
    }

    pub fn pole_multiplicity(&self, p: C64) -> u32 {
        self.poles
            .iter()
            .find(|(q, _)| self.same_point(*q, p))
            .map(|(_, m)| *m)
            .unwrap_or(0)
    }

    fn den_eval(&self, z: C64) -> C64 {
        self.poles
            .iter()
            .fold(self.lead, |acc, &(p, m)| acc * (z - p).powu(m))
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let tau = self.tau_root();
        if self.poles.iter().any(|(p, _)| (z - p).norm() <= tau) {
            return Err(Error::PoleHit(z));
        }
        Ok(self.num.eval(z) / self.den_eval(z))
    }

    /// Value and derivative by the quotient rule, `r' = N'/D - r * D'/D`
    /// with `D'/D = sum m / (z - p)`.
    pub fn eval_with_derivative(&self, z: C64) -> Result<(C64, C64)> {
        let v = self.eval(z)?;
        let d = self.den_eval(z);
        let log_d: C64 = self.poles.iter().map(|&(p, m)| m as f64 / (z - p)).sum();
        let dv = self.num.derivative().eval(z) / d - v * log_d;
        Ok((v, dv))
    }

    /// Order of the pole of `r dz` at `p` (0 when holomorphic).
    pub fn form_pole_order(&self, p: ExtPoint) -> u32 {
        match p {
            ExtPoint::Finite(z) => self.pole_multiplicity(z),
            ExtPoint::Infinity => {
                let dn = match self.num.degree() {
                    None => return 0,
                    Some(d) => d as i64,
                };
                let dd: i64 = self.poles.iter().map(|(_, m)| *m as i64).sum();
                (dn - dd + 2).max(0) as u32
            }
        }
    }

    /// Coefficient of `(z - p)^-1`; zero at regular points.
    pub fn residue(&self, p: C64) -> C64 {
        let m = self.pole_multiplicity(p);
        if m == 0 {
            return ZERO;
        }
        function_series_at(self, p, m as usize).coeff(-1)
    }

    pub fn scale(&self, s: C64) -> CRational {
        let mut r = self.clone();
        r.num = r.num.scale(s);
        r.normalize();
        r
    }

    pub fn neg(&self) -> CRational {
        self.scale(-ONE)
    }

    pub fn add(&self, other: &CRational) -> CRational {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        // Common denominator with lcm of the pole multiplicities.
        let mut lcm: Vec<(C64, u32)> = self.poles.clone();
        for &(p, m) in &other.poles {
            match lcm.iter_mut().find(|(q, _)| self.same_point(*q, p)) {
                Some(e) => e.1 = e.1.max(m),
                None => lcm.push((p, m)),
            }
        }
        let cofactor = |r: &CRational| {
            let missing: Vec<(C64, u32)> = lcm
                .iter()
                .map(|&(p, m)| (p, m - r.pole_multiplicity(p)))
                .collect();
            CPoly::from_roots(ONE, &missing)
        };
        let n1 = (&self.num * &cofactor(self)).scale(other.lead);
        let n2 = (&other.num * &cofactor(other)).scale(self.lead);
        let mut r = CRational {
            num: &n1 + &n2,
            lead: self.lead * other.lead,
            poles: lcm,
        };
        r.normalize();
        r
    }

    pub fn sub(&self, other: &CRational) -> CRational {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &CRational) -> CRational {
        let mut r = CRational {
            num: &self.num * &other.num,
            lead: self.lead * other.lead,
            poles: self.poles.clone(),
        };
        for &(p, m) in &other.poles {
            r.push_pole(p, m);
        }
        r.normalize();
        r
    }

    pub fn recip(&self) -> Result<CRational> {
        if self.is_zero() {
            return Err(Error::Invalid("division by the zero function".into()));
        }
        let roots = self.num.roots()?;
        CRational::new(self.den(), self.num.leading(), roots)
    }

    pub fn div(&self, other: &CRational) -> Result<CRational> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn powi(&self, k: i32) -> Result<CRational> {
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let mut acc = CRational::constant(ONE);
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> CRational {
        let p = CPoly::from_roots(ONE, &self.poles);
        let num = &(&self.num.derivative() * &p) - &(&self.num * &p.derivative());
        let mut r = CRational {
            num,
            lead: self.lead,
            poles: self.poles.iter().map(|&(q, m)| (q, 2 * m)).collect(),
        };
        r.normalize();
        r
    }

    /// Partial-fraction decomposition.
    pub fn partial_fractions(&self) -> PartialFractions {
        let den = self.den();
        let (quot, _) = poly_divmod(&self.num, &den);
        let terms = self
            .poles
            .iter()
            .map(|&(p, m)| {
                let s = function_series_at(self, p, m as usize);
                let coeffs = (1..=m as i32).map(|k| s.coeff(-k)).collect();
                PoleTerms { at: p, coeffs }
            })
            .collect();
        PartialFractions { poly: quot, terms }
    }

    /// Rational part `R` and logarithmic terms `(pole, residue)` with
    /// `R' + sum res / (z - p) = self`.
    pub fn antiderivative(&self) -> (CRational, Vec<(C64, C64)>) {
        let pf = self.partial_fractions();
        let anti = pf.antiderivative();
        let mut rational = CRational::from_poly(anti.poly.clone());
        for t in &anti.rational_terms {
            for (k, c) in t.coeffs.iter().enumerate() {
                if *c == ZERO {
                    continue;
                }
                let term = CRational {
                    num: CPoly::constant(*c),
                    lead: ONE,
                    poles: vec![(t.at, k as u32 + 1)],
                };
                rational = rational.add(&term);
            }
        }
        (rational, anti.logs)
    }

    /// Real and imaginary parts of the Laurent coefficients near `p`, used
    /// by callers that want the form expansion directly.
    pub fn laurent(&self, p: ExtPoint, n_terms: usize) -> crate::laurent::LaurentExpansion {
        laurent_at(self, p, n_terms)
    }

    #[cfg(test)]
    pub(crate) fn parse_simple(s: &str) -> CRational {
        crate::expr::parse_rational(s, &Default::default()).unwrap()
    }
}

/// Quotient and remainder of polynomial long division.
pub fn poly_divmod(a: &CPoly, b: &CPoly) -> (CPoly, CPoly) {
    let db = b.degree().expect("division by zero polynomial");
    let lb = b.leading();
    let mut rem = a.coeffs().to_vec();
    if rem.len() <= db {
        return (CPoly::zero(), a.clone());
    }
    let mut q = vec![ZERO; rem.len() - db];
    for k in (db..rem.len()).rev() {
        let c = rem[k] / lb;
        q[k - db] = c;
        for j in 0..=db {
            rem[k - db + j] -= c * b.coeff(j);
        }
    }
    rem.truncate(db);
    (CPoly::new(q), CPoly::new(rem))
}

/// Principal part at one pole: `coeffs[k]` multiplies `(z - at)^-(k+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleTerms {
    pub at: C64,
    pub coeffs: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartialFractions {
    pub poly: CPoly,
    pub terms: Vec<PoleTerms>,
}

impl PartialFractions {
    pub fn eval(&self, z: C64) -> C64 {
        let mut v = self.poly.eval(z);
        for t in &self.terms {
            let u = ONE / (z - t.at);
            let mut pw = u;
            for c in &t.coeffs {
                v += c * pw;
                pw *= u;
            }
        }
        v
    }

    pub fn antiderivative(&self) -> Antiderivative {
        let mut rational_terms = Vec::new();
        let mut logs = Vec::new();
        for t in &self.terms {
            if let Some(&r) = t.coeffs.first() {
                if r != ZERO {
                    logs.push((t.at, r));
                }
            }
            // (z-p)^-(k+1) integrates to -(z-p)^-k / k
            let coeffs: Vec<C64> = t
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| -c / k as f64)
                .collect();
            if coeffs.iter().any(|c| *c != ZERO) {
                rational_terms.push(PoleTerms { at: t.at, coeffs });
            }
        }
        Antiderivative {
            poly: self.poly.integral(),
            rational_terms,
            logs,
        }
    }
}

/// `poly + sum principal parts + sum res * log(z - p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Antiderivative {
    pub poly: CPoly,
    pub rational_terms: Vec<PoleTerms>,
    pub logs: Vec<(C64, C64)>,
}

impl Antiderivative {
    /// Real part of the (principal-branch) antiderivative.
    pub fn eval_re(&self, z: C64) -> f64 {
        let pf = PartialFractions {
            poly: self.poly.clone(),
            terms: self.rational_terms.clone(),
        };
        let mut v = pf.eval(z).re;
        for &(p, r) in &self.logs {
            let d = z - p;
            v += r.re * d.norm().ln() - r.im * d.arg();
        }
        v
    }

    /// Complex antiderivative with principal logarithms.
    pub fn eval(&self, z: C64) -> C64 {
        let pf = PartialFractions {
            poly: self.poly.clone(),
            terms: self.rational_terms.clone(),
        };
        let mut v = pf.eval(z);
        for &(p, r) in &self.logs {
            v += r * (z - p).ln();
        }
        v
    }
}

//! Dense complex polynomials in ascending-degree storage.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Polynomial with coefficients `coeffs[k]` of `z^k`.
///
/// The highest stored coefficient is nonzero; the zero polynomial stores no
/// coefficients and has degree `None`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CPoly {
    coeffs: Vec<C64>,
}

impl CPoly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        CPoly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        CPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    /// The identity polynomial `z`.
    pub fn z() -> Self {
        Self::new(vec![ZERO, ONE])
    }

    /// `c * z^k`.
    pub fn monomial(c: C64, k: usize) -> Self {
        let mut v = vec![ZERO; k + 1];
        v[k] = c;
        Self::new(v)
    }

    /// `(z - root)`.
    pub fn linear(root: C64) -> Self {
        Self::new(vec![-root, ONE])
    }

    pub fn from_roots(lead: C64, roots: &[(C64, u32)]) -> Self {
        let mut p = Self::constant(lead);
        for &(r, m) in roots {
            for _ in 0..m {
                p = &p * &Self::linear(r);
            }
        }
        p
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Sum of `|c_k| |z|^k`, the natural scale for rounding error in `eval`.
    pub fn eval_scale(&self, z: C64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn integral(&self) -> Self {
        let mut v = vec![ZERO];
        v.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Self::new(v)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Coefficients of `p(center + t)` in powers of `t`.
    pub fn shifted(&self, center: C64) -> Vec<C64> {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let hi = c[j + 1];
                c[j] += center * hi;
            }
        }
        c
    }

    /// Reversed coefficients: `z^deg p(1/z)`.
    pub fn reversed(&self) -> Vec<C64> {
        self.coeffs.iter().rev().copied().collect()
    }

    /// Division by `(z - root)`, discarding the remainder.
    pub fn deflate(&self, root: C64) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self::zero();
        }
        let mut q = vec![ZERO; n - 1];
        let mut acc = ZERO;
        for k in (1..n).rev() {
            acc = acc * root + self.coeffs[k];
            q[k - 1] = acc;
        }
        Self::new(q)
    }

    /// Whether `p(z)` vanishes relative to its evaluation scale.
    pub fn vanishes_at(&self, z: C64, rel_tol: f64) -> bool {
        if self.is_zero() {
            return true;
        }
        self.eval(z).norm() <= rel_tol * self.eval_scale(z).max(f64::MIN_POSITIVE)
    }

    /// Roots with multiplicities via companion-matrix eigenvalues and one
    /// Newton polish step; nearby eigenvalues are clustered into multiple
    /// roots.
    pub fn roots(&self) -> Result<Vec<(C64, u32)>> {
        let deg = match self.degree() {
            None => return Err(Error::FactorizationFailure("zero polynomial".into())),
            Some(d) => d,
        };
        if deg == 0 {
            return Ok(Vec::new());
        }
        // Exact zero roots are split off so z^m factors stay structural.
        let zeros = self.coeffs.iter().take_while(|c| **c == ZERO).count();
        let reduced = CPoly::new(self.coeffs[zeros..].to_vec());
        let n = reduced.degree().unwrap_or(0);
        let mut out: Vec<(C64, u32)> = Vec::new();
        if zeros > 0 {
            out.push((ZERO, zeros as u32));
        }
        if n == 0 {
            return Ok(out);
        }
        let lead = reduced.leading();
        let mut comp = DMatrix::<C64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = ONE;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -reduced.coeffs[i] / lead;
        }
        let mut raw = companion_eigenvalues(&comp)?;
        let dp = reduced.derivative();
        let scale = 1.0 + reduced.max_abs_coeff() / lead.norm();
        // Clusters come from multiple roots; their eigenvalues spread by eps^(1/m).
        let cluster_tol = 1e-5 * scale;
        raw.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let mut used = vec![false; raw.len()];
        for i in 0..raw.len() {
            if used[i] {
                continue;
            }
            let mut members = vec![raw[i]];
            used[i] = true;
            for j in i + 1..raw.len() {
                if !used[j] && (raw[j] - raw[i]).norm() < cluster_tol {
                    used[j] = true;
                    members.push(raw[j]);
                }
            }
            let m = members.len() as u32;
            let mut r = members.iter().sum::<C64>() / m as f64;
            if m == 1 {
                let d = dp.eval(r);
                if d != ZERO {
                    r -= reduced.eval(r) / d;
                }
            }
            if !reduced.vanishes_at(r, 1e-6 * (m as f64)) {
                return Err(Error::FactorizationFailure(format!(
                    "residual too large at root {r}"
                )));
            }
            out.push((r, m));
        }
        Ok(out)
    }
}

/// Bounded Schur iteration; an exceptional shift breaks the stall that
/// defective companion matrices (repeated roots) can cause.
fn companion_eigenvalues(comp: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = comp.nrows();
    for shift in [ZERO, C64::new(0.1234, 0.0567), C64::new(-0.31, 0.29)] {
        let m = comp - DMatrix::<C64>::identity(n, n) * shift;
        if let Some(s) = Schur::try_new(m, 1e-15, 2000 * n) {
            if let Some(e) = s.eigenvalues() {
                return Ok(e.iter().map(|x| x + shift).collect());
            }
        }
    }
    Err(Error::FactorizationFailure("Schur iteration did not converge".into()))
}

impl fmt::Display for CPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &CPoly {
    type Output = CPoly;
    fn add(self, rhs: &CPoly) -> CPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        CPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &CPoly {
    type Output = CPoly;
    fn sub(self, rhs: &CPoly) -> CPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        CPoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &CPoly {
    type Output = CPoly;
    fn mul(self, rhs: &CPoly) -> CPoly {
        if self.is_zero() || rhs.is_zero() {
            return CPoly::zero();
        }
        let mut v = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        CPoly::new(v)
    }
}

impl Neg for &CPoly {
    type Output = CPoly;
    fn neg(self) -> CPoly {
        self.scale(-ONE)
    }
}

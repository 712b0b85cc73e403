//! Recursive-descent parser for forms written as rational expressions in
//! `z` (and `w` on hyperelliptic curves).
//!
//! ```text
//! list    := expr (',' expr)*
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/')? unary)*      juxtaposition multiplies
//! unary   := ('+' | '-') unary | power
//! power   := primary ('^' unary)?             exponent: integer constant
//! primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Names: `z`, `w`, `i`, `pi`, bound parameters, and the functions
//! `sqrt`, `root_of_unity(k, j)`, `cis(t)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::laurent::ExtPoint;
use crate::poly::{CPoly, C64, I, ONE};
use crate::rational::CRational;

pub type Bindings = BTreeMap<String, f64>;

/// `a + b / w` on the curve `w^2 = p(z)`; `b` is zero on the sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct FormExpr {
    pub a: CRational,
    pub b: CRational,
}

/// The branch polynomial with its exact roots.
#[derive(Clone, Debug)]
pub struct CurveRoots {
    pub lead: C64,
    pub roots: Vec<C64>,
}

impl CurveRoots {
    fn p(&self) -> CRational {
        let poly = CPoly::from_roots(self.lead, &self.roots.iter().map(|r| (*r, 1)).collect::<Vec<_>>());
        CRational::from_poly(poly)
    }
    fn p_inv(&self) -> CRational {
        CRational::new(CPoly::one(), self.lead, self.roots.iter().map(|r| (*r, 1)).collect())
            .expect("nonzero lead")
    }
}

impl FormExpr {
    fn constant(c: C64) -> Self {
        FormExpr { a: CRational::constant(c), b: CRational::zero() }
    }

    fn as_constant(&self) -> Option<C64> {
        if self.b.is_zero() && self.a.poles().is_empty() && self.a.num().degree().unwrap_or(0) == 0 {
            Some(self.a.num().coeff(0) / self.a.lead())
        } else {
            None
        }
    }

    fn add(&self, o: &FormExpr) -> FormExpr {
        FormExpr { a: self.a.add(&o.a), b: self.b.add(&o.b) }
    }

    fn neg(&self) -> FormExpr {
        FormExpr { a: self.a.neg(), b: self.b.neg() }
    }

    fn mul(&self, o: &FormExpr, curve: Option<&CurveRoots>) -> FormExpr {
        let mut a = self.a.mul(&o.a);
        if !self.b.is_zero() && !o.b.is_zero() {
            let c = curve.expect("w only parses on a curve");
            a = a.add(&self.b.mul(&o.b).mul(&c.p_inv()));
        }
        FormExpr { a, b: self.a.mul(&o.b).add(&self.b.mul(&o.a)) }
    }

    fn recip(&self, curve: Option<&CurveRoots>) -> Result<FormExpr> {
        if self.b.is_zero() {
            return Ok(FormExpr { a: self.a.recip()?, b: CRational::zero() });
        }
        let c = curve.expect("w only parses on a curve");
        // (a - b/w) / (a^2 - b^2/p)
        let norm = self.a.mul(&self.a).sub(&self.b.mul(&self.b).mul(&c.p_inv()));
        let inv = norm.recip()?;
        Ok(FormExpr { a: self.a.mul(&inv), b: self.b.neg().mul(&inv) })
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    bindings: &'a Bindings,
    curve: Option<&'a CurveRoots>,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<FormExpr> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.add(&self.term()?.neg());
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<FormExpr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc.mul(&self.unary()?, self.curve);
            } else if self.eat(b'/') {
                let d = self.unary()?;
                acc = acc.mul(&d.recip(self.curve)?, self.curve);
            } else if matches!(self.peek(), Some(c) if c == b'(' || c.is_ascii_alphanumeric() || c == b'.') {
                acc = acc.mul(&self.power()?, self.curve);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<FormExpr> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<FormExpr> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let e = self.unary()?;
        let k = match e.as_constant() {
            Some(c) if c.im == 0.0 && c.re.fract() == 0.0 && c.re.abs() <= 64.0 => c.re as i32,
            _ => return self.err("exponent must be a small integer constant"),
        };
        let b = if k < 0 { base.recip(self.curve)? } else { base };
        let mut acc = FormExpr::constant(ONE);
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(&b, self.curve);
        }
        Ok(acc)
    }

    fn constant_arg(&mut self) -> Result<C64> {
        let e = self.expr()?;
        match e.as_constant() {
            Some(c) => Ok(c),
            None => self.err("function argument must be constant"),
        }
    }

    fn primary(&mut self) -> Result<FormExpr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
                    let save = self.pos;
                    self.pos += 1;
                    if self.pos < self.src.len() && (self.src[self.pos] == b'-' || self.src[self.pos] == b'+') {
                        self.pos += 1;
                    }
                    if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                            self.pos += 1;
                        }
                    } else {
                        self.pos = save;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match text.parse::<f64>() {
                    Ok(v) => Ok(FormExpr::constant(C64::new(v, 0.0))),
                    Err(_) => self.err(format!("bad number `{text}`")),
                }
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                if self.peek() == Some(b'(') && matches!(name.as_str(), "sqrt" | "cis" | "root_of_unity") {
                    return self.call(&name);
                }
                self.name(&name, start)
            }
            _ => self.err("expected a number, name or '('"),
        }
    }

    fn name(&mut self, name: &str, start: usize) -> Result<FormExpr> {
        match name {
            "z" => Ok(FormExpr { a: CRational::from_poly(CPoly::z()), b: CRational::zero() }),
            "w" => match self.curve {
                Some(c) => Ok(FormExpr { a: CRational::zero(), b: c.p() }),
                None => Err(Error::Parse { pos: start, msg: "`w` is only defined on a hyperelliptic domain".into() }),
            },
            "i" => Ok(FormExpr::constant(I)),
            "pi" => Ok(FormExpr::constant(C64::new(PI, 0.0))),
            _ => match self.bindings.get(name) {
                Some(v) => Ok(FormExpr::constant(C64::new(*v, 0.0))),
                None => Err(Error::UnresolvedParam(name.to_string())),
            },
        }
    }

    fn call(&mut self, name: &str) -> Result<FormExpr> {
        self.pos += 1; // '('
        let mut args = vec![self.constant_arg()?];
        while self.eat(b',') {
            args.push(self.constant_arg()?);
        }
        if !self.eat(b')') {
            return self.err("expected ')'");
        }
        let v = match (name, args.as_slice()) {
            ("sqrt", [x]) => x.sqrt(),
            ("cis", [t]) => C64::from_polar(1.0, t.re),
            ("root_of_unity", [k, j]) => root_of_unity(k.re, j.re),
            _ => return self.err(format!("unknown function `{name}` with {} argument(s)", args.len())),
        };
        Ok(FormExpr::constant(v))
    }
}

/// `exp(2 pi i j / k)`; exact for the axis-aligned cases.
pub fn root_of_unity(k: f64, j: f64) -> C64 {
    let q = (j / k).rem_euclid(1.0);
    match q {
        x if x == 0.0 => ONE,
        x if x == 0.25 => I,
        x if x == 0.5 => -ONE,
        x if x == 0.75 => -I,
        _ => C64::from_polar(1.0, 2.0 * PI * q),
    }
}

fn parse_with(src: &str, bindings: &Bindings, curve: Option<&CurveRoots>) -> Result<FormExpr> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, bindings, curve };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

pub fn parse_form(src: &str, bindings: &Bindings, curve: Option<&CurveRoots>) -> Result<FormExpr> {
    parse_with(src, bindings, curve)
}

pub fn parse_rational(src: &str, bindings: &Bindings) -> Result<CRational> {
    Ok(parse_with(src, bindings, None)?.a)
}

pub fn parse_constant(src: &str, bindings: &Bindings) -> Result<C64> {
    let e = parse_with(src, bindings, None)?;
    e.as_constant().ok_or_else(|| Error::Parse { pos: 0, msg: format!("`{src}` is not a constant") })
}

/// `inf`/`infinity` or a constant expression.
pub fn parse_point(src: &str, bindings: &Bindings) -> Result<ExtPoint> {
    let t = src.trim();
    if t == "inf" || t == "infinity" {
        Ok(ExtPoint::Infinity)
    } else {
        Ok(ExtPoint::Finite(parse_constant(t, bindings)?))
    }
}

/// Splits on commas outside parentheses.
pub fn split_top_level(src: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (k, ch) in src.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(src[start..k].trim());
                start = k + 1;
            }
            _ => {}
        }
    }
    out.push(src[start..].trim());
    out
}

pub fn parse_form_list(src: &str, bindings: &Bindings, curve: Option<&CurveRoots>) -> Result<Vec<FormExpr>> {
    split_top_level(src).into_iter().map(|s| parse_form(s, bindings, curve)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ZERO;

    fn ev(s: &str, z: C64) -> C64 {
        parse_rational(s, &Bindings::new()).unwrap().eval(z).unwrap()
    }

    #[test]
    fn precedence_and_juxtaposition() {
        let z = C64::new(0.5, -0.25);
        assert!((ev("1 + 2*z^2", z) - (1.0 + 2.0 * z * z)).norm() < 1e-14);
        assert!((ev("3z^2/(z^3-1)", z) - 3.0 * z * z / (z.powu(3) - 1.0)).norm() < 1e-13);
        assert!((ev("-z^2", z) + z * z).norm() < 1e-14);
        assert!((ev("i z", z) - I * z).norm() < 1e-14);
        assert!((ev("z^-2", z) - 1.0 / (z * z)).norm() < 1e-13);
    }

    #[test]
    fn parameters_and_functions() {
        let mut b = Bindings::new();
        b.insert("n".into(), 4.0);
        let r = parse_rational("z^(n-2) + sqrt(6)", &b).unwrap();
        let z = C64::new(1.5, 0.0);
        assert!((r.eval(z).unwrap() - (z * z + 6f64.sqrt())).norm() < 1e-13);
        assert_eq!(parse_rational("z^k", &b), Err(Error::UnresolvedParam("k".into())));
        assert_eq!(root_of_unity(4.0, 1.0), I);
    }

    #[test]
    fn w_algebra_on_curve() {
        let curve = CurveRoots { lead: ONE, roots: vec![C64::new(-1.0, 0.0), ZERO, ONE] };
        let e = parse_form("(z+0.5)/w", &Bindings::new(), Some(&curve)).unwrap();
        assert!(e.a.is_zero());
        let z = C64::new(2.0, 0.0);
        assert!((e.b.eval(z).unwrap() - 2.5).norm() < 1e-14);
        // w * w = p(z)
        let e = parse_form("w*w", &Bindings::new(), Some(&curve)).unwrap();
        assert!(e.b.is_zero());
        assert!((e.a.eval(z).unwrap() - 6.0).norm() < 1e-13);
        assert!(parse_form("w", &Bindings::new(), None).is_err());
    }

    #[test]
    fn lists_split_at_top_level() {
        let v = parse_form_list("1, i, 1/(z-root_of_unity(3,1))", &Bindings::new(), None).unwrap();
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn errors_carry_position() {
        match parse_rational("1 + * z", &Bindings::new()) {
            Err(Error::Parse { pos, .. }) => assert!(pos >= 4),
            other => panic!("{other:?}"),
        }
    }
}

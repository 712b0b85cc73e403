//! Domains (punctured sphere or the genus-one curve `w^2 = p(z)`), forms
//! `a dz + b dz/w`, and their expansions in local charts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{CurveRoots, FormExpr};
use crate::laurent::{function_series_at, function_series_at_infinity, ExtPoint, Series};
use crate::poly::{CPoly, C64, I, ONE, ZERO};
use crate::rational::CRational;

/// Placement of the two branch cuts of `w`.
///
/// `Principal`: `w = prod sqrt(z - e_k)` with cuts `(-inf, e1]` and `[e2, e3]`
/// for real roots `e1 < e2 < e3`. `RightCuts`: cuts `[e1, e2]` and `[e3, inf)`;
/// both agree above every root.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutStyle {
    #[default]
    Principal,
    RightCuts,
}

/// `w^2 = lead * prod (z - e_k)` with three distinct finite roots.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    lead: C64,
    roots: Vec<C64>,
    poly: CPoly,
    dpoly: CPoly,
    cut: CutStyle,
    lead_sqrt: C64,
    right_sign: C64,
}

impl Curve {
    pub fn new(lead: C64, mut roots: Vec<C64>, cut: CutStyle) -> Result<Curve> {
        if roots.len() != 3 || lead == ZERO {
            return Err(Error::Invalid("branch polynomial must be a cubic".into()));
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let scale = 1.0 + roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
        for i in 0..3 {
            for j in i + 1..3 {
                if (roots[i] - roots[j]).norm() < 1e-9 * scale {
                    return Err(Error::Invalid("branch polynomial has a repeated root".into()));
                }
            }
        }
        let poly = CPoly::from_roots(lead, &roots.iter().map(|r| (*r, 1)).collect::<Vec<_>>());
        let dpoly = poly.derivative();
        let mut c = Curve { lead, roots, poly, dpoly, cut, lead_sqrt: lead.sqrt(), right_sign: ONE };
        if cut == CutStyle::RightCuts {
            let top = c.roots.iter().map(|r| r.im).fold(f64::MIN, f64::max);
            let zr = c.roots.iter().sum::<C64>() / 3.0 + I * (top.abs() + 2.0 * scale);
            let ratio = c.principal(zr) / c.right_raw(zr);
            c.right_sign = if ratio.re >= 0.0 { ONE } else { -ONE };
        }
        Ok(c)
    }

    pub fn from_poly(p: &CPoly, cut: CutStyle) -> Result<Curve> {
        if p.degree() != Some(3) {
            return Err(Error::Invalid("branch polynomial must be a cubic".into()));
        }
        let roots = p.roots()?;
        if roots.iter().any(|(_, m)| *m != 1) {
            return Err(Error::Invalid("branch polynomial has a repeated root".into()));
        }
        Curve::new(p.leading(), roots.into_iter().map(|(r, _)| r).collect(), cut)
    }

    pub fn lead(&self) -> C64 {
        self.lead
    }

    /// Roots sorted by real part, then imaginary part.
    pub fn roots(&self) -> &[C64] {
        &self.roots
    }

    pub fn poly(&self) -> &CPoly {
        &self.poly
    }

    pub fn cut_style(&self) -> CutStyle {
        self.cut
    }

    pub fn curve_roots(&self) -> CurveRoots {
        CurveRoots { lead: self.lead, roots: self.roots.clone() }
    }

    pub fn p(&self, z: C64) -> C64 {
        self.poly.eval(z)
    }

    pub fn dp(&self, z: C64) -> C64 {
        self.dpoly.eval(z)
    }

    pub fn tau_root(&self) -> f64 {
        1e-10 * (1.0 + self.poly.max_abs_coeff())
    }

    fn principal(&self, z: C64) -> C64 {
        self.roots.iter().fold(self.lead_sqrt, |acc, e| acc * (z - e).sqrt())
    }

    fn right_raw(&self, z: C64) -> C64 {
        // prod (z - e) = -prod (e - z), so one factor of i per three roots.
        self.roots.iter().fold(self.lead_sqrt * I, |acc, e| acc * (e - z).sqrt())
    }

    pub fn branch_point_near(&self, z: C64) -> Option<C64> {
        let tau = self.tau_root();
        self.roots.iter().copied().find(|e| (z - e).norm() <= tau)
    }

    /// The sheet-`+1` branch of `sqrt(p(z))`.
    pub fn w_plus(&self, z: C64) -> Result<C64> {
        if let Some(e) = self.branch_point_near(z) {
            return Err(Error::BranchPoint(e));
        }
        Ok(self.w_plus_unchecked(z))
    }

    /// As [`Curve::w_plus`] without the branch-point guard; for quadrature
    /// nodes of endpoint-substituted integrals.
    pub(crate) fn w_plus_unchecked(&self, z: C64) -> C64 {
        match self.cut {
            CutStyle::Principal => self.principal(z),
            CutStyle::RightCuts => self.right_sign * self.right_raw(z),
        }
    }

    pub fn w(&self, pt: SheetPoint) -> Result<C64> {
        Ok(self.w_plus(pt.z)? * pt.sheet as f64)
    }

    /// Sheet of `(z, w)` for a `w` with `w^2 = p(z)`.
    pub fn sheet_of(&self, z: C64, w: C64) -> Result<i8> {
        let wp = self.w_plus(z)?;
        Ok(if (w - wp).norm() <= (w + wp).norm() { 1 } else { -1 })
    }

    pub fn is_branch_point(&self, p: ExtPoint) -> bool {
        match p {
            ExtPoint::Infinity => true,
            ExtPoint::Finite(z) => self.branch_point_near(z).is_some(),
        }
    }
}

/// Follows `sqrt(p)` continuously along a polyline starting from `w0`,
/// subdividing segments until consecutive values stay close.
pub fn continue_w(curve: &Curve, w0: C64, path: &[C64]) -> Result<C64> {
    let mut w = w0;
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = (b - a).norm();
        let near = curve.roots.iter().map(|e| {
            let t = ((e - a) * (b - a).conj()).re / (len * len).max(1e-300);
            (a + (b - a) * t.clamp(0.0, 1.0) - e).norm()
        });
        let clearance = near.fold(f64::MAX, f64::min).max(1e-6);
        let steps = ((len / (0.1 * clearance)).ceil() as usize).clamp(1, 1 << 22);
        for k in 1..=steps {
            let z = a + (b - a) * (k as f64 / steps as f64);
            let cand = curve.w_plus(z)?;
            w = if (cand - w).norm() <= (cand + w).norm() { cand } else { -cand };
        }
    }
    Ok(w)
}

/// A point on the domain; the sheet is ignored on the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetPoint {
    pub z: C64,
    pub sheet: i8,
}

impl SheetPoint {
    pub fn new(z: C64, sheet: i8) -> Self {
        SheetPoint { z, sheet: if sheet < 0 { -1 } else { 1 } }
    }

    pub fn plain(z: C64) -> Self {
        SheetPoint { z, sheet: 1 }
    }
}

/// An end of the surface. `sheet` is set only for non-branch points of a
/// hyperelliptic domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Puncture {
    pub at: ExtPoint,
    pub sheet: Option<i8>,
}

impl Puncture {
    pub fn point(at: ExtPoint) -> Self {
        Puncture { at, sheet: None }
    }

    pub fn on_sheet(z: C64, sheet: i8) -> Self {
        Puncture { at: ExtPoint::Finite(z), sheet: Some(sheet) }
    }
}

impl std::fmt::Display for Puncture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.sheet {
            None => write!(f, "{}", self.at),
            Some(s) => write!(f, "{}[{}]", self.at, if s > 0 { "+" } else { "-" }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    Sphere,
    Hyperelliptic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    curve: Option<Curve>,
    punctures: Vec<Puncture>,
}

impl Domain {
    pub fn sphere(punctures: Vec<ExtPoint>) -> Result<Domain> {
        let d = Domain { curve: None, punctures: punctures.into_iter().map(Puncture::point).collect() };
        d.check_distinct()?;
        Ok(d)
    }

    pub fn hyperelliptic(curve: Curve, punctures: Vec<Puncture>) -> Result<Domain> {
        let mut out = Vec::with_capacity(punctures.len());
        for p in punctures {
            let q = match p.at {
                ExtPoint::Infinity => Puncture::point(ExtPoint::Infinity),
                ExtPoint::Finite(z) => match curve.branch_point_near(z) {
                    Some(e) => Puncture::point(ExtPoint::Finite(e)),
                    None => match p.sheet {
                        Some(s) => Puncture::on_sheet(z, if s < 0 { -1 } else { 1 }),
                        None => {
                            return Err(Error::Invalid(format!(
                                "puncture at {} needs a sheet",
                                crate::fmt_complex(z)
                            )))
                        }
                    },
                },
            };
            out.push(q);
        }
        let d = Domain { curve: Some(curve), punctures: out };
        d.check_distinct()?;
        Ok(d)
    }

    fn check_distinct(&self) -> Result<()> {
        for (i, a) in self.punctures.iter().enumerate() {
            for b in &self.punctures[i + 1..] {
                let same = match (a.at, b.at) {
                    (ExtPoint::Infinity, ExtPoint::Infinity) => true,
                    (ExtPoint::Finite(x), ExtPoint::Finite(y)) => {
                        (x - y).norm() < 1e-9 * (1.0 + x.norm()) && a.sheet == b.sheet
                    }
                    _ => false,
                };
                if same {
                    return Err(Error::Invalid(format!("duplicate puncture {a}")));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> DomainKind {
        if self.curve.is_some() {
            DomainKind::Hyperelliptic
        } else {
            DomainKind::Sphere
        }
    }

    pub fn genus(&self) -> u32 {
        if self.curve.is_some() {
            1
        } else {
            0
        }
    }

    pub fn curve(&self) -> Option<&Curve> {
        self.curve.as_ref()
    }

    pub fn branch_poly(&self) -> Option<&CPoly> {
        self.curve.as_ref().map(|c| c.poly())
    }

    pub fn punctures(&self) -> &[Puncture] {
        &self.punctures
    }

    /// Punctures plus, on the curve, the finite branch points.
    pub fn special_points(&self) -> Vec<C64> {
        let mut v: Vec<C64> = self.punctures.iter().filter_map(|p| p.at.finite()).collect();
        if let Some(c) = &self.curve {
            for e in c.roots() {
                if !v.iter().any(|x| (x - e).norm() < 1e-12) {
                    v.push(*e);
                }
            }
        }
        v
    }

    pub fn is_puncture(&self, pt: SheetPoint) -> bool {
        let tau = 1e-10 * (1.0 + pt.z.norm());
        self.punctures.iter().any(|p| match p.at {
            ExtPoint::Finite(z) => (z - pt.z).norm() <= tau && p.sheet.map_or(true, |s| s == pt.sheet),
            ExtPoint::Infinity => false,
        })
    }
}

pub fn w_value(d: &Domain, pt: SheetPoint) -> Result<C64> {
    match d.curve() {
        Some(c) => c.w(pt),
        None => Err(Error::Invalid("w is only defined on a hyperelliptic domain".into())),
    }
}

/// `a(z) dz + b(z) dz / w`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeromorphicForm {
    pub a: CRational,
    pub b: CRational,
}

impl From<FormExpr> for MeromorphicForm {
    fn from(e: FormExpr) -> Self {
        MeromorphicForm { a: e.a, b: e.b }
    }
}

impl MeromorphicForm {
    pub fn rational(a: CRational) -> Self {
        MeromorphicForm { a, b: CRational::zero() }
    }

    pub fn zero() -> Self {
        MeromorphicForm { a: CRational::zero(), b: CRational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &MeromorphicForm) -> MeromorphicForm {
        MeromorphicForm { a: self.a.add(&o.a), b: self.b.add(&o.b) }
    }

    pub fn scale(&self, s: C64) -> MeromorphicForm {
        MeromorphicForm { a: self.a.scale(s), b: self.b.scale(s) }
    }

    /// Coefficient of `dz` at a regular point.
    pub fn eval(&self, d: &Domain, pt: SheetPoint) -> Result<C64> {
        let mut v = self.a.eval(pt.z)?;
        if !self.b.is_zero() {
            let w = w_value(d, pt)?;
            v += self.b.eval(pt.z)? / w;
        }
        Ok(v)
    }

    /// Coefficient of `dz` and its `z`-derivative; uses
    /// `(b/w)' = b'/w - b p' / (2 w^3)`.
    pub fn eval_with_derivative(&self, d: &Domain, pt: SheetPoint) -> Result<(C64, C64)> {
        let (mut v, mut dv) = self.a.eval_with_derivative(pt.z)?;
        if !self.b.is_zero() {
            let c = d.curve().ok_or_else(|| Error::Invalid("dz/w term on the sphere".into()))?;
            let w = c.w(pt)?;
            let (b, db) = self.b.eval_with_derivative(pt.z)?;
            v += b / w;
            dv += db / w - b * c.dp(pt.z) / (2.0 * w * w * w);
        }
        Ok((v, dv))
    }

    /// The integrand `phi(t)` with `omega = phi(t) dt` in the local chart at
    /// `p`: `t = z - z0` at regular points, `z = e + t^2` at branch points,
    /// `z = 1/t` at infinity on the sphere and `z = 1/t^2` on the curve.
    pub fn local_series(&self, d: &Domain, p: &Puncture, n_terms: usize) -> Result<Series> {
        let n = n_terms.max(1);
        let s = match (d.curve(), p.at) {
            (None, ExtPoint::Finite(z0)) => function_series_at(&self.a, z0, n),
            (None, ExtPoint::Infinity) => function_series_at_infinity(&self.a, n).scale(-ONE).shift(-2),
            (Some(c), ExtPoint::Infinity) => {
                // dz = -2 t^-3 dt, w = t^-3 sqrt(P(t^2)), P(s) = s^3 p(1/s)
                let work = n / 2 + 4;
                let a_part = function_series_at_infinity(&self.a, work).spread(2).scale(-2.0 * ONE).shift(-3);
                if self.b.is_zero() {
                    a_part
                } else {
                    let rev = c.poly().reversed();
                    let pt = Series::new(0, pad(rev, work)).spread(2);
                    let sq = pt.sqrt_with(c.lead().sqrt());
                    let b_part = function_series_at_infinity(&self.b, work)
                        .spread(2)
                        .div(&sq)
                        .scale(-2.0 * ONE);
                    a_part.add(&b_part)
                }
            }
            (Some(c), ExtPoint::Finite(z0)) => match c.branch_point_near(z0) {
                Some(e) => {
                    // dz = 2t dt, w = t sqrt(q(t^2)), q = p / (z - e)
                    let work = n / 2 + 4;
                    let a_part = function_series_at(&self.a, e, work).spread(2).scale(2.0 * ONE).shift(1);
                    if self.b.is_zero() {
                        a_part
                    } else {
                        let q = c.poly().deflate(e);
                        let qs = Series::new(0, pad(q.shifted(e), work)).spread(2);
                        let sq = qs.sqrt_with(q.eval(e).sqrt());
                        let b_part = function_series_at(&self.b, e, work).spread(2).div(&sq).scale(2.0 * ONE);
                        a_part.add(&b_part)
                    }
                }
                None => {
                    let sheet = p.sheet.unwrap_or(1);
                    let a_part = function_series_at(&self.a, z0, n + 2);
                    if self.b.is_zero() {
                        a_part
                    } else {
                        let w0 = c.w(SheetPoint::new(z0, sheet))?;
                        let ps = Series::new(0, pad(c.poly().shifted(z0), n + 2));
                        let ws = ps.sqrt_with(w0);
                        a_part.add(&function_series_at(&self.b, z0, n + 2).div(&ws))
                    }
                }
            },
        };
        let scale = s.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let s = s.strip(1e-11 * scale.max(1e-300));
        Ok(s.truncate(n))
    }

    pub fn pole_order(&self, d: &Domain, p: &Puncture) -> Result<u32> {
        let s = self.local_series(d, p, 8)?;
        Ok(if s.is_empty() || s.min_degree >= 0 { 0 } else { (-s.min_degree) as u32 })
    }

    pub fn residue(&self, d: &Domain, p: &Puncture) -> Result<C64> {
        let s = self.local_series(d, p, 8)?;
        if s.min_degree > -1 {
            return Ok(ZERO);
        }
        let need = (-1 - s.min_degree + 1) as usize;
        Ok(self.local_series(d, p, need.max(1) + 2)?.coeff(-1))
    }
}

fn pad(mut v: Vec<C64>, len: usize) -> Vec<C64> {
    v.resize(len.max(v.len()), ZERO);
    v.truncate(len);
    v
}

pub fn form_pole_order(f: &MeromorphicForm, d: &Domain, p: &Puncture) -> Result<u32> {
    f.pole_order(d, p)
}

/// Domain with an ordered triple of forms; `f = Re int (w1, w2, w3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceData {
    pub domain: Domain,
    pub omega: [MeromorphicForm; 3],
    pub basepoint: SheetPoint,
    pub label: String,
}

impl SurfaceData {
    /// Checks that every form is holomorphic away from the punctures.
    pub fn new(domain: Domain, omega: [MeromorphicForm; 3], basepoint: SheetPoint, label: impl Into<String>) -> Result<Self> {
        let s = SurfaceData { domain, omega, basepoint, label: label.into() };
        s.check_holomorphic()?;
        Ok(s)
    }

    fn check_holomorphic(&self) -> Result<()> {
        let d = &self.domain;
        let mut candidates: Vec<Puncture> = vec![Puncture::point(ExtPoint::Infinity)];
        for f in &self.omega {
            if d.kind() == DomainKind::Sphere && !f.b.is_zero() {
                return Err(Error::Invalid("dz/w term on a sphere domain".into()));
            }
            for (z, _) in f.a.poles().iter().chain(f.b.poles()) {
                match d.curve() {
                    None => candidates.push(Puncture::point(ExtPoint::Finite(*z))),
                    Some(c) if c.branch_point_near(*z).is_some() => {
                        candidates.push(Puncture::point(ExtPoint::Finite(*z)))
                    }
                    Some(_) => {
                        candidates.push(Puncture::on_sheet(*z, 1));
                        candidates.push(Puncture::on_sheet(*z, -1));
                    }
                }
            }
        }
        if let Some(c) = d.curve() {
            for e in c.roots() {
                candidates.push(Puncture::point(ExtPoint::Finite(*e)));
            }
        }
        for cand in candidates {
            if self.is_listed(&cand) {
                continue;
            }
            for (i, f) in self.omega.iter().enumerate() {
                if f.pole_order(d, &cand)? > 0 {
                    return Err(Error::Invalid(format!("form {} has a pole at {cand}, which is not a puncture", i + 1)));
                }
            }
        }
        Ok(())
    }

    fn is_listed(&self, p: &Puncture) -> bool {
        self.domain.punctures().iter().any(|q| match (q.at, p.at) {
            (ExtPoint::Infinity, ExtPoint::Infinity) => true,
            (ExtPoint::Finite(a), ExtPoint::Finite(b)) => {
                (a - b).norm() <= 1e-9 * (1.0 + a.norm()) && (q.sheet.is_none() || q.sheet == p.sheet)
            }
            _ => false,
        })
    }

    pub fn genus(&self) -> u32 {
        self.domain.genus()
    }

    /// Coefficients `phi_k` of `omega_k = phi_k dz`.
    pub fn phi(&self, pt: SheetPoint) -> Result<[C64; 3]> {
        Ok([
            self.omega[0].eval(&self.domain, pt)?,
            self.omega[1].eval(&self.domain, pt)?,
            self.omega[2].eval(&self.domain, pt)?,
        ])
    }

    pub fn phi_with_derivative(&self, pt: SheetPoint) -> Result<([C64; 3], [C64; 3])> {
        let mut v = [ZERO; 3];
        let mut dv = [ZERO; 3];
        for k in 0..3 {
            let (a, b) = self.omega[k].eval_with_derivative(&self.domain, pt)?;
            v[k] = a;
            dv[k] = b;
        }
        Ok((v, dv))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidueEntry {
    pub puncture: String,
    pub form: usize,
    pub residue: C64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidueReport {
    pub entries: Vec<ResidueEntry>,
}

impl ResidueReport {
    pub fn all_real(&self) -> bool {
        self.entries.iter().all(|e| !e.flagged)
    }
}

/// Residue of every form at every puncture; `|Im| > 1e-9` is flagged.
pub fn residues_real_check(s: &SurfaceData) -> Result<ResidueReport> {
    let mut entries = Vec::new();
    for p in s.domain.punctures() {
        for (k, f) in s.omega.iter().enumerate() {
            let r = f.residue(&s.domain, p)?;
            entries.push(ResidueEntry { puncture: p.to_string(), form: k + 1, residue: r, flagged: r.im.abs() > 1e-9 });
        }
    }
    Ok(ResidueReport { entries })
}

//! Periods of forms on cycles and period closing by holomorphic corrections.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::domain::{MeromorphicForm, Puncture, SheetPoint, SurfaceData};
use crate::error::{Error, Result};
use crate::path::integrate_form;
use crate::poly::{C64, I, ZERO};
use crate::quadrature::{integrate_segment, Endpoints, QuadOptions};

/// Flag threshold for a nonzero real period.
pub const PERIOD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CycleKind {
    PunctureLoop { puncture: Puncture },
    /// A loop around the real interval `[a, b]`, collapsed onto it; with
    /// `both_sheets` the two banks are counted, giving `2 int_a^b b dz / w`.
    CollapsedInterval { a: f64, b: f64, both_sheets: bool },
    /// Closed polyline; returns to its start on the same sheet.
    ExplicitPath { points: Vec<SheetPoint> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub label: String,
    #[serde(flatten)]
    pub kind: CycleKind,
    #[serde(default = "one")]
    pub orientation: i8,
}

fn one() -> i8 {
    1
}

impl Cycle {
    pub fn collapsed(label: &str, a: f64, b: f64) -> Cycle {
        Cycle { label: label.into(), kind: CycleKind::CollapsedInterval { a, b, both_sheets: true }, orientation: 1 }
    }

    pub fn puncture_loop(label: &str, p: Puncture) -> Cycle {
        Cycle { label: label.into(), kind: CycleKind::PunctureLoop { puncture: p }, orientation: 1 }
    }

    pub fn circle(label: &str, center: C64, radius: f64, sheet: i8, n: usize) -> Cycle {
        let points = (0..=n)
            .map(|k| SheetPoint::new(center + C64::from_polar(radius, 2.0 * PI * (k % n) as f64 / n as f64), sheet))
            .collect();
        Cycle { label: label.into(), kind: CycleKind::ExplicitPath { points }, orientation: 1 }
    }
}

/// `int_c omega` for a single form.
pub fn period(s: &SurfaceData, f: &MeromorphicForm, c: &Cycle) -> Result<C64> {
    let opts = QuadOptions::default();
    let d = &s.domain;
    let v = match &c.kind {
        CycleKind::PunctureLoop { puncture } => 2.0 * PI * I * f.residue(d, puncture)?,
        CycleKind::ExplicitPath { points } => {
            if points.len() < 2 {
                return Err(Error::Invalid("path needs at least two points".into()));
            }
            let first = points[0];
            let last = *points.last().unwrap();
            if (first.z - last.z).norm() > 1e-12 * (1.0 + first.z.norm()) {
                return Err(Error::Invalid(format!("path `{}` is not closed", c.label)));
            }
            let zs: Vec<C64> = points.iter().map(|p| p.z).collect();
            let r = integrate_form(d.curve(), f, &zs, first.sheet, opts)?;
            if d.curve().is_some() && !f.b.is_zero() && r.end_sign != first.sheet as f64 {
                return Err(Error::Invalid(format!("path `{}` does not close on the curve", c.label)));
            }
            r.value
        }
        CycleKind::CollapsedInterval { a, b, both_sheets } => collapsed(s, f, *a, *b, *both_sheets, opts)?,
    };
    Ok(v * c.orientation as f64)
}

fn collapsed(s: &SurfaceData, f: &MeromorphicForm, a: f64, b: f64, both: bool, opts: QuadOptions) -> Result<C64> {
    let d = &s.domain;
    let curve = d.curve().ok_or_else(|| Error::Invalid("collapsed cycles need a hyperelliptic domain".into()))?;
    let (za, zb) = (C64::new(a, 0.0), C64::new(b, 0.0));
    for (p, _) in f.b.poles() {
        if p.im.abs() < 1e-12 && p.re >= a.min(b) - 1e-12 && p.re <= a.max(b) + 1e-12 {
            return Err(Error::PathThroughPole(*p));
        }
    }
    let mut v = ZERO;
    if !f.b.is_zero() {
        let roots = curve.roots().to_vec();
        // Boundary value from the upper half-plane; the sign is read off
        // slightly above the axis.
        let w_upper = |x: C64| -> Result<C64> {
            let w = curve.w_plus(x)?;
            let gap = roots.iter().map(|e| (x - e).norm()).fold(f64::MAX, f64::min);
            let above = curve.w_plus(x + I * (1e-3 * gap))?;
            Ok(if (w - above).norm() <= (w + above).norm() { w } else { -w })
        };
        let ends = Endpoints { sqrt_start: curve.branch_point_near(za).is_some(), sqrt_end: curve.branch_point_near(zb).is_some() };
        let one_side = integrate_segment(|z| Ok(f.b.eval(z)? / w_upper(C64::new(z.re, 0.0))?), za, zb, ends, opts)?;
        v += one_side * if both { 2.0 } else { 1.0 };
    }
    if both {
        // The loop runs clockwise for this sign convention.
        for (p, _) in f.a.poles() {
            if p.im.abs() < 1e-12 && p.re >= a.min(b) - 1e-12 && p.re <= a.max(b) + 1e-12 {
                v -= 2.0 * PI * I * f.a.residue(*p);
            }
        }
    }
    Ok(v)
}

pub fn real_period(s: &SurfaceData, form_index: usize, c: &Cycle) -> Result<f64> {
    Ok(period(s, &s.omega[form_index], c)?.re)
}

/// `lambda` enters form `form` as `lambda * generator`; its period on
/// `cycles[target_cycle]` is driven to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeParam {
    pub name: String,
    pub form: usize,
    pub generator: MeromorphicForm,
    pub target_cycle: usize,
    pub bracket: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodProblem {
    pub surface: SurfaceData,
    pub free: Vec<FreeParam>,
    pub cycles: Vec<Cycle>,
}

impl PeriodProblem {
    /// Surface with the corrections `lambda_i * generator_i` added.
    pub fn apply(&self, lambdas: &[f64]) -> SurfaceData {
        let mut s = self.surface.clone();
        for (p, l) in self.free.iter().zip(lambdas) {
            s.omega[p.form] = s.omega[p.form].add(&p.generator.scale(C64::new(*l, 0.0)));
        }
        s
    }

    fn target_period(&self, i: usize, lambda: f64) -> Result<f64> {
        let p = &self.free[i];
        let f = self.surface.omega[p.form].add(&p.generator.scale(C64::new(lambda, 0.0)));
        Ok(period(&self.surface, &f, &self.cycles[p.target_cycle])?.re)
    }
}

/// Solves for the free parameters. Parameters of one form are found from a
/// linear system in their generator periods; a singular system falls back
/// to bisection. A root outside the declared bracket is `NoBracket`.
pub fn close_periods(p: &PeriodProblem) -> Result<Vec<f64>> {
    let mut lambdas = vec![0.0; p.free.len()];
    for form in 0..3 {
        let idx: Vec<usize> = (0..p.free.len()).filter(|i| p.free[*i].form == form).collect();
        if idx.is_empty() {
            continue;
        }
        let n = idx.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for (r, &i) in idx.iter().enumerate() {
            let cyc = &p.cycles[p.free[i].target_cycle];
            rhs[r] = -period(&p.surface, &p.surface.omega[form], cyc)?.re;
            for (c, &j) in idx.iter().enumerate() {
                m[(r, c)] = period(&p.surface, &p.free[j].generator, cyc)?.re;
            }
        }
        let scale = m.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let solved = if scale > 0.0 && m.clone().lu().determinant().abs() > 1e-12 * scale.powi(n as i32) {
            m.lu().solve(&rhs)
        } else {
            None
        };
        match solved {
            Some(x) => {
                for (r, &i) in idx.iter().enumerate() {
                    let (lo, hi) = p.free[i].bracket;
                    if x[r] < lo || x[r] > hi {
                        return Err(Error::NoBracket(lo, hi));
                    }
                    lambdas[i] = x[r];
                }
            }
            None => {
                for &i in &idx {
                    lambdas[i] = bisect_param(p, i, 1e-12)?;
                }
            }
        }
    }
    Ok(lambdas)
}

/// Bisection for parameter `i` alone on its bracket.
pub fn bisect_param(p: &PeriodProblem, i: usize, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = p.free[i].bracket;
    let mut f_lo = p.target_period(i, lo)?;
    let f_hi = p.target_period(i, hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBracket(lo, hi));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = p.target_period(i, mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodRow {
    pub cycle: String,
    pub form: usize,
    pub re: f64,
    pub im: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodReport {
    pub rows: Vec<PeriodRow>,
}

impl PeriodReport {
    pub fn closed(&self) -> bool {
        self.rows.iter().all(|r| !r.flagged)
    }

    pub fn max_abs_re(&self) -> f64 {
        self.rows.iter().map(|r| r.re.abs()).fold(0.0, f64::max)
    }
}

/// Periods on the given basis cycles and on a loop around every puncture.
pub fn period_report(s: &SurfaceData, basis: &[Cycle]) -> Result<PeriodReport> {
    let mut cycles: Vec<Cycle> = basis.to_vec();
    for p in s.domain.punctures() {
        cycles.push(Cycle::puncture_loop(&format!("loop {p}"), *p));
    }
    let mut rows = Vec::new();
    for c in &cycles {
        for k in 0..3 {
            let v = period(s, &s.omega[k], c)?;
            rows.push(PeriodRow { cycle: c.label.clone(), form: k + 1, re: v.re, im: v.im, flagged: v.re.abs() > PERIOD_TOL });
        }
    }
    Ok(PeriodReport { rows })
}

//! Evaluation of `f = Re int Omega`, its jets, normal, metric, and the
//! integrated curvature.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::domain::{SheetPoint, SurfaceData};
use crate::error::{Error, Result};
use crate::laurent::ExtPoint;
use crate::path::{distance_to_polyline, integrate_b_over_w, integrate_form};
use crate::poly::{C64, I, ZERO};
use crate::quadrature::{gauss_legendre, gk15, integrate, QuadOptions};
use crate::rational::Antiderivative;

pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Jet {
    pub f: Vec3,
    pub phi: [C64; 3],
    pub dphi: [C64; 3],
}

impl Jet {
    pub fn fx(&self) -> Vec3 {
        self.phi.map(|p| p.re)
    }
    pub fn fy(&self) -> Vec3 {
        self.phi.map(|p| -p.im)
    }
    pub fn fxx(&self) -> Vec3 {
        self.dphi.map(|p| p.re)
    }
    pub fn fxy(&self) -> Vec3 {
        self.dphi.map(|p| -p.im)
    }
    pub fn fyy(&self) -> Vec3 {
        self.dphi.map(|p| -p.re)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricSample {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub k: f64,
    pub da: f64,
}

/// `f_x x f_y = Im(phi2 conj(phi3), -phi1 conj(phi3), phi1 conj(phi2))`.
pub fn normal_from_phi(phi: &[C64; 3]) -> Vec3 {
    [
        (phi[1] * phi[2].conj()).im,
        -(phi[0] * phi[2].conj()).im,
        (phi[0] * phi[1].conj()).im,
    ]
}

fn tau_reg(phi: &[C64; 3]) -> f64 {
    let s: f64 = phi.iter().map(|p| p.norm_sqr()).sum();
    1e-12 * s
}

/// Evaluates `f` with closed-form antiderivatives for the `dz` parts and
/// path quadrature for the `dz/w` parts.
///
/// On the curve the path starts at the smallest branch point, where `f` is
/// normalized so that the `dz/w` contribution vanishes.
pub struct Evaluator<'a> {
    pub surface: &'a SurfaceData,
    anti: [Antiderivative; 3],
    opts: QuadOptions,
}

impl<'a> Evaluator<'a> {
    pub fn new(surface: &'a SurfaceData) -> Self {
        let anti = [0, 1, 2].map(|k| surface.omega[k].a.partial_fractions().antiderivative());
        Evaluator { surface, anti, opts: QuadOptions::default() }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.opts.tol = tol;
        self
    }

    fn check_point(&self, pt: SheetPoint) -> Result<()> {
        for f in &self.surface.omega {
            for (p, _) in f.a.poles().iter().chain(f.b.poles()) {
                if (pt.z - p).norm() <= 1e-10 * (1.0 + p.norm()) {
                    return Err(Error::PathThroughPole(pt.z));
                }
            }
        }
        Ok(())
    }

    fn g1_path(&self, z: C64) -> Result<Vec<C64>> {
        let c = self.surface.domain.curve().unwrap();
        let e = c.roots()[0];
        let scale = 1.0 + c.roots().iter().map(|r| (r - e).norm()).fold(0.0, f64::max);
        let poles: Vec<C64> = self.surface.omega.iter().flat_map(|f| f.b.poles().iter().map(|(p, _)| *p)).collect();
        let base_h = if z.im.abs() > 1e-9 * scale { z.im } else { 0.5 * scale };
        for attempt in 0..8 {
            let h = base_h * (1.0 + 0.137 * attempt as f64);
            let mut pts = vec![e, e + I * h, C64::new(z.re, h), z];
            pts.dedup_by(|a, b| (*a - *b).norm() < 1e-15 * scale);
            let clear = poles.iter().all(|p| distance_to_polyline(*p, &pts) > 1e-6 * scale);
            if clear {
                return Ok(pts);
            }
        }
        Err(Error::PathThroughPole(z))
    }

    pub fn evaluate(&self, pt: SheetPoint) -> Result<Vec3> {
        self.check_point(pt)?;
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = self.anti[k].eval_re(pt.z);
        }
        if let Some(c) = self.surface.domain.curve() {
            if self.surface.omega.iter().any(|f| !f.b.is_zero()) {
                if c.branch_point_near(pt.z) == Some(c.roots()[0]) {
                    return Ok(out);
                }
                let path = self.g1_path(pt.z)?;
                for k in 0..3 {
                    let b = &self.surface.omega[k].b;
                    if b.is_zero() {
                        continue;
                    }
                    let r = integrate_b_over_w(c, b, &path, 1.0, self.opts)?;
                    let s = if r.end_sign == pt.sheet as f64 { 1.0 } else { -1.0 };
                    out[k] += s * r.value.re;
                }
            }
        }
        Ok(out)
    }

    pub fn jet(&self, pt: SheetPoint) -> Result<Jet> {
        let (phi, dphi) = self.surface.phi_with_derivative(pt)?;
        Ok(Jet { f: self.evaluate(pt)?, phi, dphi })
    }

    /// Values of `f` at the vertices of a polyline, integrating from the
    /// first vertex with `w` continued along the way.
    pub fn evaluate_along(&self, path: &[SheetPoint]) -> Result<Vec<Vec3>> {
        let mut cur = self.evaluate(path[0])?;
        let mut sheet = path[0].sheet;
        let mut out = vec![cur];
        let curve = self.surface.domain.curve();
        for seg in path.windows(2) {
            let pts = [seg[0].z, seg[1].z];
            let mut end = sheet as f64;
            for k in 0..3 {
                let r = integrate_form(curve, &self.surface.omega[k], &pts, sheet, self.opts)?;
                cur[k] += r.value.re;
                if !self.surface.omega[k].b.is_zero() {
                    end = r.end_sign;
                }
            }
            if curve.is_some() {
                let c = curve.unwrap();
                let crossing = crate::path::trace_pieces(c, &pts, sheet as f64)?;
                end = crossing.last().map(|p| p.sign).unwrap_or(end);
            }
            sheet = if end < 0.0 { -1 } else { 1 };
            out.push(cur);
        }
        Ok(out)
    }
}

pub fn evaluate(s: &SurfaceData, pt: SheetPoint) -> Result<Vec3> {
    Evaluator::new(s).evaluate(pt)
}

pub fn jet(s: &SurfaceData, pt: SheetPoint) -> Result<Jet> {
    Evaluator::new(s).jet(pt)
}

pub fn normal(s: &SurfaceData, pt: SheetPoint) -> Result<Vec3> {
    Ok(normal_from_phi(&s.phi(pt)?))
}

pub fn metric_sample(s: &SurfaceData, pt: SheetPoint) -> Result<MetricSample> {
    let (phi, dphi) = s.phi_with_derivative(pt)?;
    metric_from_phi(&phi, &dphi, pt.z)
}

pub fn metric_from_phi(phi: &[C64; 3], dphi: &[C64; 3], z: C64) -> Result<MetricSample> {
    let jet = Jet { f: [0.0; 3], phi: *phi, dphi: *dphi };
    let (fx, fy) = (jet.fx(), jet.fy());
    let nv = normal_from_phi(phi);
    let nn = norm(nv);
    if nn <= tau_reg(phi) {
        return Err(Error::SingularPoint(z));
    }
    let un = nv.map(|x| x / nn);
    let (e, f, g) = (dot(fx, fx), dot(fx, fy), dot(fy, fy));
    let (l, m, n) = (dot(jet.fxx(), un), dot(jet.fxy(), un), dot(jet.fyy(), un));
    let det = e * g - f * f;
    Ok(MetricSample { e, f, g, l, m, n, k: (l * n - m * m) / det, da: det.max(0.0).sqrt() })
}

/// `K dA / (dx dy) = -((f_xx . n)^2 + (f_xy . n)^2) / |n|^3`, or `None` at
/// singular points.
pub fn curvature_density(phi: &[C64; 3], dphi: &[C64; 3]) -> Option<f64> {
    let nv = normal_from_phi(phi);
    let nn2 = dot(nv, nv);
    let nn = nn2.sqrt();
    if !(nn > tau_reg(phi)) {
        return None;
    }
    let a = dot(dphi.map(|p| p.re), nv);
    let b = dot(dphi.map(|p| -p.im), nv);
    Some(-(a * a + b * b) / (nn2 * nn))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureOptions {
    /// Inner and outer radii of every polar grid.
    pub r_min: f64,
    pub r_max: f64,
    /// Gauss–Legendre panels per unit of `log r` at the first level.
    pub panels_per_unit: f64,
    pub n_theta: usize,
    /// Relative change between refinements that stops the iteration.
    pub tol: f64,
    pub max_levels: usize,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        CurvatureOptions { r_min: 1e-7, r_max: 1e7, panels_per_unit: 1.0, n_theta: 16, tol: 1e-4, max_levels: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureResult {
    pub value: f64,
    pub estimates: Vec<f64>,
    pub singular_samples: usize,
    pub converged: bool,
}

/// `int K dA` over the truncated domain, summed over both sheets on the
/// curve. A partition of unity splits the domain into pieces centred at the
/// special points plus one origin-centred piece for infinity; each piece is
/// integrated on a polar grid in `(log r, theta)`.
pub fn integrate_curvature(s: &SurfaceData, opts: &CurvatureOptions) -> Result<CurvatureResult> {
    let centres = s.domain.special_points();
    let spread = centres.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let r_inf = 1.0 + 2.0 * spread;
    let w_inf = r_inf.powi(-4);
    let sheets: &[i8] = if s.domain.curve().is_some() { &[1, -1] } else { &[1] };
    let mut estimates = Vec::new();
    let mut singular = 0usize;
    let mut converged = false;
    let mut level_panels = opts.panels_per_unit;
    let mut n_theta = opts.n_theta;
    for _ in 0..opts.max_levels {
        let (v, sing) = curvature_pass(s, &centres, w_inf, sheets, opts, level_panels, n_theta);
        estimates.push(v);
        singular = sing;
        if estimates.len() >= 2 {
            let prev = estimates[estimates.len() - 2];
            if (v - prev).abs() <= opts.tol * v.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        level_panels *= 2.0;
        n_theta *= 2;
    }
    Ok(CurvatureResult { value: *estimates.last().unwrap(), estimates, singular_samples: singular, converged })
}

fn curvature_pass(
    s: &SurfaceData,
    centres: &[C64],
    w_inf: f64,
    sheets: &[i8],
    opts: &CurvatureOptions,
    panels_per_unit: f64,
    n_theta: usize,
) -> (f64, usize) {
    let (gx, gw) = gauss_legendre(8);
    let (s0, s1) = (opts.r_min.ln(), opts.r_max.ln());
    let n_panels = ((s1 - s0) * panels_per_unit).ceil() as usize;
    let h = (s1 - s0) / n_panels as f64;
    let mut nodes = Vec::with_capacity(n_panels * 8);
    for p in 0..n_panels {
        let a = s0 + h * p as f64;
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push((a + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    // Piece index: centres, then infinity.
    let pieces: Vec<Option<C64>> = centres.iter().map(|c| Some(*c)).chain(std::iter::once(None)).collect();
    let weight = |z: C64| -> (Vec<f64>, f64) {
        let ws: Vec<f64> = centres.iter().map(|c| (z - c).norm_sqr().powi(-2)).collect();
        let total = ws.iter().sum::<f64>() + w_inf;
        (ws, total)
    };
    let jobs: Vec<(usize, usize)> = (0..pieces.len()).flat_map(|p| (0..nodes.len()).map(move |k| (p, k))).collect();
    let (sum, sing) = jobs
        .par_iter()
        .map(|&(pi, k)| {
            let (sv, sw) = nodes[k];
            let r = sv.exp();
            let centre = pieces[pi].unwrap_or(ZERO);
            let mut sing = 0usize;
            // Ends can concentrate curvature in a sector of width O(r); adapt in theta.
            let mut ring = |th: f64| -> Result<C64> {
                let z = centre + C64::from_polar(r, th);
                let (ws, total) = weight(z);
                let chi = match pieces[pi] {
                    Some(_) => ws[pi] / total,
                    None => w_inf / total,
                };
                if !(chi > 1e-300) || !chi.is_finite() {
                    return Ok(ZERO);
                }
                let mut acc = 0.0;
                for &sh in sheets {
                    match s.phi_with_derivative(SheetPoint::new(z, sh)) {
                        Ok((phi, dphi)) => match curvature_density(&phi, &dphi) {
                            Some(kd) if kd.is_finite() => acc += chi * kd,
                            _ => sing += 1,
                        },
                        Err(_) => sing += 1,
                    }
                }
                Ok(C64::new(acc, 0.0))
            };
            let q = QuadOptions { tol: 1e-9, max_depth: 30, max_intervals: 400 };
            let dth = 2.0 * PI / n_theta as f64;
            let mut acc = 0.0;
            for j in 0..n_theta {
                let (a, b) = (dth * j as f64, dth * (j + 1) as f64);
                acc += match integrate(&mut ring, a, b, q) {
                    Ok(v) => v.re,
                    Err(_) => gk15(&mut ring, a, b).map(|(v, _)| v.re).unwrap_or(0.0),
                };
            }
            (acc * r * r * sw, sing)
        })
        .reduce(|| (0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1));
    (sum, sing)
}

/// Image distance helper used by the scans.
pub fn image_distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

pub fn is_finite_point(p: &ExtPoint) -> bool {
    matches!(p, ExtPoint::Finite(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, MeromorphicForm};
    use crate::expr::{parse_rational, Bindings};

    fn sphere(forms: [&str; 3], punctures: Vec<ExtPoint>) -> SurfaceData {
        let f = |s: &str| MeromorphicForm::rational(parse_rational(s, &Bindings::new()).unwrap());
        SurfaceData::new(Domain::sphere(punctures).unwrap(), [f(forms[0]), f(forms[1]), f(forms[2])], SheetPoint::plain(ZERO), "t").unwrap()
    }

    #[test]
    fn paraboloid_closed_form() {
        let s = sphere(["1", "i", "z"], vec![ExtPoint::Infinity]);
        let (x, y) = (0.7, -1.3);
        let f = evaluate(&s, SheetPoint::plain(C64::new(x, y))).unwrap();
        let want = [x, -y, (x * x - y * y) / 2.0];
        for k in 0..3 {
            assert!((f[k] - want[k]).abs() < 1e-13);
        }
        assert_eq!(normal(&s, SheetPoint::plain(ZERO)).unwrap(), [0.0, 0.0, -1.0]);
        let m = metric_sample(&s, SheetPoint::plain(ZERO)).unwrap();
        assert!((m.k + 1.0).abs() < 1e-14);
    }

    #[test]
    fn log_end_height() {
        let s = sphere(["1", "i", "1/z"], vec![ExtPoint::Finite(ZERO), ExtPoint::Infinity]);
        let z = C64::new(0.3, 2.0);
        assert!((evaluate(&s, SheetPoint::plain(z)).unwrap()[2] - z.norm().ln()).abs() < 1e-13);
        assert!(matches!(evaluate(&s, SheetPoint::plain(ZERO)), Err(Error::PathThroughPole(_))));
    }

    #[test]
    fn plane_is_flat_and_paraboloid_has_minus_two_pi() {
        let plane = sphere(["1", "i", "0"], vec![ExtPoint::Infinity]);
        let r = integrate_curvature(&plane, &CurvatureOptions::default()).unwrap();
        assert!(r.value.abs() < 1e-12);
        let s = sphere(["1", "i", "z"], vec![ExtPoint::Infinity]);
        let r = integrate_curvature(&s, &CurvatureOptions::default()).unwrap();
        assert!((r.value + 2.0 * PI).abs() < 0.01 * 2.0 * PI, "{r:?}");
    }
}

//! Numerical evidence for regularity, embeddedness, properness and symmetry.
//!
//! Witnesses are definitive after refinement; empty scans only say that
//! nothing was found at the given resolution.

use nalgebra::{Matrix3, SMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::bvh::{tri_tri_intersect, Bvh};
use crate::domain::{Puncture, SheetPoint, SurfaceData};
use crate::error::{Error, Result};
use crate::eval::{norm, normal_from_phi, sub, Evaluator, Vec3};
use crate::fmt_complex;
use crate::laurent::ExtPoint;
use crate::mesh::{parameter_layout, MeshOptions, TriMesh};
use crate::poly::C64;

pub const DEFAULT_MAX_WITNESSES: usize = 64;
/// Relative residual below which a refined coincidence counts as exact.
pub const COINCIDENCE_TOL: f64 = 1e-10;
/// Normalized `|f_x x f_y|` below which a refined point counts as singular.
pub const SINGULAR_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    SelfIntersection { p1: SheetPoint, p2: SheetPoint, distance: f64 },
    BoundedEscape { puncture: String, path: Vec<SheetPoint>, bound: f64, cutoff: f64 },
    SingularPoint { pt: SheetPoint, residual: f64 },
    CoincidentPair { p1: SheetPoint, p2: SheetPoint, distance: f64 },
}

fn fmt_pt(p: &SheetPoint) -> String {
    format!("{}[{}]", fmt_complex(p.z), if p.sheet > 0 { "+" } else { "-" })
}

impl Witness {
    pub fn kind(&self) -> &'static str {
        match self {
            Witness::SelfIntersection { .. } => "self_intersection",
            Witness::BoundedEscape { .. } => "bounded_escape",
            Witness::SingularPoint { .. } => "singular_point",
            Witness::CoincidentPair { .. } => "coincident_pair",
        }
    }

    /// One line: kind, parameters, image distance.
    pub fn to_line(&self) -> String {
        match self {
            Witness::SelfIntersection { p1, p2, distance } | Witness::CoincidentPair { p1, p2, distance } => {
                format!("{} p1={} p2={} distance={:.3e}", self.kind(), fmt_pt(p1), fmt_pt(p2), distance)
            }
            Witness::BoundedEscape { puncture, path, bound, cutoff } => {
                let last = path.last().map(fmt_pt).unwrap_or_default();
                format!("{} puncture={} samples={} last={} bound={:.6e} cutoff={:.3e}", self.kind(), puncture, path.len(), last, bound, cutoff)
            }
            Witness::SingularPoint { pt, residual } => format!("{} p={} distance={:.3e}", self.kind(), fmt_pt(pt), residual),
        }
    }
}

pub fn witness_report(ws: &[Witness]) -> String {
    ws.iter().map(|w| w.to_line() + "\n").collect()
}

/// Re-evaluates a witness; `tol` is relative to the image scale.
pub fn verify_witness(s: &SurfaceData, w: &Witness, tol: f64) -> Result<bool> {
    let ev = Evaluator::new(s);
    Ok(match w {
        Witness::SelfIntersection { p1, p2, .. } | Witness::CoincidentPair { p1, p2, .. } => {
            let (a, b) = (ev.evaluate(*p1)?, ev.evaluate(*p2)?);
            norm(sub(a, b)) <= tol * (1.0 + norm(a))
        }
        Witness::SingularPoint { pt, .. } => singular_ratio(s, *pt).map(|q| q <= tol).unwrap_or(false),
        Witness::BoundedEscape { path, bound, .. } => {
            let mut ok = true;
            for p in path {
                ok &= norm(ev.evaluate(*p)?) <= bound * (1.0 + tol) + tol;
            }
            ok
        }
    })
}

/// `|f_x x f_y|` over the largest product `|phi_i| |phi_j|`.
pub fn singular_ratio(s: &SurfaceData, pt: SheetPoint) -> Result<f64> {
    let phi = s.phi(pt)?;
    let a = phi.map(|p| p.norm());
    let scale = (a[0] * a[1]).max(a[0] * a[2]).max(a[1] * a[2]);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(norm(normal_from_phi(&phi)) / scale)
}

fn vertex_neighbours(m: &TriMesh) -> Vec<Vec<usize>> {
    let mut nb = vec![Vec::new(); m.sources.len()];
    for t in &m.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            nb[a].push(b);
            nb[b].push(a);
        }
    }
    for v in &mut nb {
        v.sort_unstable();
        v.dedup();
    }
    nb
}

fn patch_of(m: &TriMesh, v: usize) -> Option<(C64, f64, f64)> {
    // Patches own contiguous vertex blocks in layout order.
    let z = m.sources[v];
    m.patches
        .iter()
        .find(|p| {
            let r = (z.z - p.center).norm();
            p.sheet == z.sheet && r >= p.r_inner * (1.0 - 1e-9) && r <= p.r_outer * (1.0 + 1e-9)
        })
        .map(|p| (p.center, p.r_inner, p.r_outer))
}

/// Parameter region covered by a layout: refined points must stay inside it.
struct Covered {
    r_max: f64,
    holes: Vec<(C64, f64)>,
}

impl Covered {
    fn of(s: &SurfaceData, sources: &[SheetPoint]) -> Covered {
        let r_max = sources.iter().map(|p| p.z.norm()).fold(0.0, f64::max);
        let holes = s
            .domain
            .special_points()
            .into_iter()
            .map(|c| (c, sources.iter().map(|p| (p.z - c).norm()).fold(f64::INFINITY, f64::min)))
            .collect();
        Covered { r_max, holes }
    }

    fn contains(&self, z: C64) -> bool {
        z.norm() <= 1.5 * self.r_max && self.holes.iter().all(|(c, r)| (z - c).norm() >= 0.5 * r)
    }
}

/// Samples the normalized normal length on the layout grid and refines the
/// local minima with a compass search.
pub fn regularity_scan(s: &SurfaceData, opts: &MeshOptions, max_witnesses: usize) -> Result<Vec<Witness>> {
    let lay = parameter_layout(s, opts)?;
    let q: Vec<Option<f64>> = lay.sources.par_iter().map(|p| singular_ratio(s, *p).ok()).collect();
    let nb = vertex_neighbours(&lay);
    let mut cands: Vec<usize> = (0..lay.sources.len())
        .filter(|&v| match q[v] {
            Some(qv) if qv < 1e-2 => nb[v].iter().all(|&u| q[u].map(|qu| qv <= qu).unwrap_or(true)),
            _ => false,
        })
        .collect();
    cands.sort_by(|a, b| q[*a].unwrap().total_cmp(&q[*b].unwrap()));
    cands.truncate(8 * max_witnesses.max(1));
    let cov = Covered::of(s, &lay.sources);
    let refined: Vec<Option<(SheetPoint, f64)>> = cands
        .par_iter()
        .map(|&v| {
            let step0 = nb[v].iter().map(|&u| (lay.sources[u].z - lay.sources[v].z).norm()).fold(f64::INFINITY, f64::min);
            let bounds = patch_of(&lay, v);
            compass_minimize(s, lay.sources[v], q[v].unwrap(), 0.5 * step0, bounds).filter(|(p, _)| cov.contains(p.z))
        })
        .collect();
    let mut found: Vec<(SheetPoint, f64)> = refined.into_iter().flatten().filter(|(_, r)| *r <= SINGULAR_TOL).collect();
    found.sort_by(|a, b| (a.0.sheet, a.0.z.re, a.0.z.im).partial_cmp(&(b.0.sheet, b.0.z.re, b.0.z.im)).unwrap());
    let mut out: Vec<Witness> = Vec::new();
    for (pt, r) in found {
        let dup = out.iter().any(|w| match w {
            Witness::SingularPoint { pt: p, .. } => p.sheet == pt.sheet && (p.z - pt.z).norm() <= 1e-6 * (1.0 + pt.z.norm()),
            _ => false,
        });
        if !dup && out.len() < max_witnesses {
            out.push(Witness::SingularPoint { pt, residual: r });
        }
    }
    Ok(out)
}

fn compass_minimize(s: &SurfaceData, start: SheetPoint, q0: f64, step0: f64, bounds: Option<(C64, f64, f64)>) -> Option<(SheetPoint, f64)> {
    let inside = |z: C64| match bounds {
        Some((c, lo, hi)) => {
            let r = (z - c).norm();
            r >= lo && r <= hi
        }
        None => true,
    };
    let (mut p, mut qp, mut step) = (start, q0, step0);
    let dirs = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
    let mut iters = 0;
    while step > 1e-13 * (1.0 + p.z.norm()) && qp > 1e-15 && iters < 2000 {
        iters += 1;
        let mut moved = false;
        for d in dirs {
            let z = p.z + d * step;
            if !inside(z) {
                continue;
            }
            let cand = SheetPoint::new(z, p.sheet);
            if let Ok(qc) = singular_ratio(s, cand) {
                if qc < qp {
                    p = cand;
                    qp = qc;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    // A minimum pinned to the patch boundary is not a critical point.
    if let Some((c, lo, hi)) = bounds {
        let r = (p.z - c).norm();
        let margin = 1e-6 * (hi - lo);
        if r <= lo + margin || r >= hi - margin {
            return None;
        }
    }
    Some((p, qp))
}

/// Parameter-space size of a triangle.
fn param_edge(m: &TriMesh, t: [usize; 3]) -> f64 {
    let z = t.map(|v| m.sources[v].z);
    (z[0] - z[1]).norm().max((z[1] - z[2]).norm()).max((z[2] - z[0]).norm())
}

/// Whether two parameter points are the same neighbourhood of the surface.
fn near_in_domain(s: &SurfaceData, a: SheetPoint, b: SheetPoint, radius: f64) -> bool {
    if (a.z - b.z).norm() > radius {
        return false;
    }
    match s.domain.curve() {
        None => true,
        Some(c) => match (c.w(a), c.w(b)) {
            (Ok(wa), Ok(wb)) => (wa - wb).norm() <= (wa + wb).norm(),
            _ => true,
        },
    }
}

/// BVH triangle-pair tests excluding pairs that share a vertex or lie in the
/// same parameter neighbourhood; hits are refined to exact coincidences.
pub fn self_intersection_scan(s: &SurfaceData, m: &TriMesh, max_witnesses: usize) -> Result<Vec<Witness>> {
    let diag = m.bbox_diagonal();
    if m.triangles.is_empty() {
        return Ok(Vec::new());
    }
    let eps = 1e-12 * diag;
    let bvh = Bvh::build(m);
    let pairs = bvh.overlapping_pairs(eps);
    let hits: Vec<(usize, usize)> = pairs
        .par_iter()
        .copied()
        .filter(|&(i, j)| {
            let (ta, tb) = (m.triangles[i], m.triangles[j]);
            if ta.iter().any(|v| tb.contains(v)) {
                return false;
            }
            let r = 3.0 * (param_edge(m, ta) + param_edge(m, tb));
            if near_in_domain(s, m.sources[ta[0]], m.sources[tb[0]], r) {
                return false;
            }
            tri_tri_intersect(ta.map(|v| m.vertices[v]), tb.map(|v| m.vertices[v]), eps)
        })
        .collect();
    let budget = 8 * max_witnesses.max(1);
    let stride = (hits.len() / budget).max(1);
    let picked: Vec<(usize, usize)> = hits.iter().copied().step_by(stride).take(budget).collect();
    let cov = Covered::of(s, &m.sources);
    let refined: Vec<Option<(SheetPoint, SheetPoint, f64)>> = picked
        .par_iter()
        .map(|&(i, j)| {
            let (ta, tb) = (m.triangles[i], m.triangles[j]);
            let ca = centroid(m, ta);
            let cb = centroid(m, tb);
            let sep = 0.5 * (param_edge(m, ta) + param_edge(m, tb));
            refine_pair(s, ca, cb).filter(|(p1, p2, _)| cov.contains(p1.z) && cov.contains(p2.z) && !near_in_domain(s, *p1, *p2, sep))
        })
        .collect();
    Ok(dedupe_pairs(refined.into_iter().flatten().collect(), max_witnesses, false))
}

fn centroid(m: &TriMesh, t: [usize; 3]) -> SheetPoint {
    let z = (m.sources[t[0]].z + m.sources[t[1]].z + m.sources[t[2]].z) / 3.0;
    SheetPoint::new(z, m.sources[t[0]].sheet)
}

fn dedupe_pairs(mut v: Vec<(SheetPoint, SheetPoint, f64)>, max: usize, coincident: bool) -> Vec<Witness> {
    for (a, b, _) in v.iter_mut() {
        if (b.sheet, b.z.re, b.z.im) < (a.sheet, a.z.re, a.z.im) {
            std::mem::swap(a, b);
        }
    }
    v.sort_by(|x, y| (x.0.sheet, x.0.z.re, x.0.z.im).partial_cmp(&(y.0.sheet, y.0.z.re, y.0.z.im)).unwrap());
    let mut out: Vec<(SheetPoint, SheetPoint, f64)> = Vec::new();
    for (a, b, d) in v {
        let tol = 1e-6 * (1.0 + a.z.norm());
        if out.iter().any(|(p, _, _)| p.sheet == a.sheet && (p.z - a.z).norm() <= tol) {
            continue;
        }
        if out.len() < max {
            out.push((a, b, d));
        }
    }
    out.into_iter()
        .map(|(p1, p2, distance)| {
            if coincident {
                Witness::CoincidentPair { p1, p2, distance }
            } else {
                Witness::SelfIntersection { p1, p2, distance }
            }
        })
        .collect()
}

fn jet_xy(ev: &Evaluator, p: SheetPoint) -> Option<(Vec3, Vec3, Vec3)> {
    let j = ev.jet(p).ok()?;
    Some((j.f, j.fx(), j.fy()))
}

/// Minimum-norm Gauss-Newton on `f(p1) - f(p2) = 0` in four real unknowns.
fn refine_pair(s: &SurfaceData, a: SheetPoint, b: SheetPoint) -> Option<(SheetPoint, SheetPoint, f64)> {
    let ev = Evaluator::new(s);
    let (mut p1, mut p2) = (a, b);
    let (mut f1, mut fx1, mut fy1) = jet_xy(&ev, p1)?;
    let (mut f2, mut fx2, mut fy2) = jet_xy(&ev, p2)?;
    let mut res = norm(sub(f1, f2));
    for _ in 0..40 {
        if res <= COINCIDENCE_TOL * (1.0 + norm(f1)) {
            return Some((p1, p2, res));
        }
        let mut j = SMatrix::<f64, 3, 4>::zeros();
        for k in 0..3 {
            j[(k, 0)] = fx1[k];
            j[(k, 1)] = fy1[k];
            j[(k, 2)] = -fx2[k];
            j[(k, 3)] = -fy2[k];
        }
        let r = Vector3::from(sub(f1, f2));
        let jjt: Matrix3<f64> = j * j.transpose();
        let y = jjt.try_inverse().map(|inv| inv * r).or_else(|| jjt.pseudo_inverse(1e-14).ok().map(|pinv| pinv * r))?;
        let delta = -(j.transpose() * y);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let q1 = SheetPoint::new(p1.z + C64::new(t * delta[0], t * delta[1]), p1.sheet);
            let q2 = SheetPoint::new(p2.z + C64::new(t * delta[2], t * delta[3]), p2.sheet);
            if let (Some(n1), Some(n2)) = (jet_xy(&ev, q1), jet_xy(&ev, q2)) {
                let rn = norm(sub(n1.0, n2.0));
                if rn < res {
                    p1 = q1;
                    p2 = q2;
                    (f1, fx1, fy1) = n1;
                    (f2, fx2, fy2) = n2;
                    res = rn;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (res <= COINCIDENCE_TOL * (1.0 + norm(f1))).then_some((p1, p2, res))
}

/// Spatial hashing of vertex images; close images with distant parameters
/// are refined by minimum-norm Newton on both points.
pub fn injectivity_witness_search(s: &SurfaceData, m: &TriMesh, max_witnesses: usize) -> Result<Vec<Witness>> {
    let nv = m.vertices.len();
    if nv == 0 {
        return Ok(Vec::new());
    }
    let nb = vertex_neighbours(m);
    let img_edge: Vec<f64> = (0..nv)
        .map(|v| nb[v].iter().map(|&u| norm(sub(m.vertices[u], m.vertices[v]))).fold(0.0, f64::max))
        .collect();
    let par_edge: Vec<f64> = (0..nv)
        .map(|v| nb[v].iter().map(|&u| (m.sources[u].z - m.sources[v].z).norm()).fold(0.0, f64::max))
        .collect();
    let mut sorted = img_edge.iter().copied().filter(|e| *e > 0.0).collect::<Vec<_>>();
    sorted.sort_by(f64::total_cmp);
    let cell = sorted.get(sorted.len() / 2).copied().unwrap_or(1.0).max(1e-300);
    let key = |p: Vec3| -> (i64, i64, i64) { ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64, (p[2] / cell).floor() as i64) };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for v in 0..nv {
        grid.entry(key(m.vertices[v])).or_default().push(v);
    }
    let cands: Vec<(usize, usize)> = (0..nv)
        .into_par_iter()
        .flat_map_iter(|v| {
            let (kx, ky, kz) = key(m.vertices[v]);
            let mut out = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(bucket) = grid.get(&(kx + dx, ky + dy, kz + dz)) {
                            for &u in bucket {
                                if u <= v {
                                    continue;
                                }
                                let d = norm(sub(m.vertices[u], m.vertices[v]));
                                let h = img_edge[u].max(img_edge[v]);
                                if d > h {
                                    continue;
                                }
                                let r = 3.0 * (par_edge[u] + par_edge[v]);
                                if !near_in_domain(s, m.sources[u], m.sources[v], r) {
                                    out.push((v, u));
                                }
                            }
                        }
                    }
                }
            }
            out.into_iter()
        })
        .collect();
    let mut cands = cands;
    cands.sort_unstable();
    let budget = 8 * max_witnesses.max(1);
    let stride = (cands.len() / budget).max(1);
    let picked: Vec<(usize, usize)> = cands.iter().copied().step_by(stride).take(budget).collect();
    let cov = Covered::of(s, &m.sources);
    let refined: Vec<Option<(SheetPoint, SheetPoint, f64)>> = picked
        .par_iter()
        .map(|&(v, u)| {
            let (p1, p2) = (m.sources[v], m.sources[u]);
            let sep = 2.0 * (par_edge[u] + par_edge[v]);
            refine_pair(s, p1, p2).filter(|(a, b, _)| cov.contains(a.z) && cov.contains(b.z) && !near_in_domain(s, *a, *b, sep))
        })
        .collect();
    Ok(dedupe_pairs(refined.into_iter().flatten().collect(), max_witnesses, true))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub n_circles: usize,
    pub n_theta: usize,
    /// Starting radius as a fraction of the distance to the nearest other
    /// special point.
    pub start_fraction: f64,
    /// Radius reached at a finite puncture.
    pub finite_cutoff: f64,
    /// Growth factor of the radius at infinity.
    pub infinite_span: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { n_circles: 25, n_theta: 512, start_fraction: 0.25, finite_cutoff: 1e-8, infinite_span: 100.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ProbeOutcome {
    BoundedEscape { witness: Witness },
    Escapes { min_norms: Vec<f64> },
}

impl ProbeOutcome {
    pub fn is_bounded(&self) -> bool {
        matches!(self, ProbeOutcome::BoundedEscape { .. })
    }
}

/// Minimum of `|f|` over shrinking circles about the puncture, with sign
/// changes of each coordinate bisected for zeros.
pub fn properness_probe(s: &SurfaceData, p: &Puncture, opts: &ProbeOptions) -> Result<ProbeOutcome> {
    let ev = Evaluator::new(s);
    let specials = s.domain.special_points();
    let sheets: Vec<i8> = match (s.domain.curve(), p.sheet) {
        (None, _) => vec![1],
        (Some(_), Some(sh)) => vec![sh],
        (Some(_), None) => vec![1, -1],
    };
    let (center, radii): (Option<C64>, Vec<f64>) = match p.at {
        ExtPoint::Finite(c) => {
            let gap = specials.iter().filter(|q| (*q - c).norm() > 1e-12).map(|q| (q - c).norm()).fold(1.0, f64::min);
            let r0 = opts.start_fraction * gap;
            // |f| ~ r^(1-d): keep the angular rounding error of |f| below 1e-6.
            let d = crate::ends::raw_type(s, p)?[2];
            let r1 = if d >= 2 { opts.finite_cutoff.max(1e-10f64.powf(1.0 / (d - 1) as f64)) } else { opts.finite_cutoff };
            (Some(c), geometric(r0, r1, opts.n_circles))
        }
        ExtPoint::Infinity => {
            let spread = specials.iter().map(|q| q.norm()).fold(0.0, f64::max);
            let r0 = 2.0 * (1.0 + spread);
            (None, geometric(r0, r0 * opts.infinite_span, opts.n_circles))
        }
    };
    let at = |r: f64, th: f64, sh: i8| -> SheetPoint {
        let z = match center {
            Some(c) => c + C64::from_polar(r, th),
            None => C64::from_polar(r, th),
        };
        SheetPoint::new(z, sh)
    };
    let mut mins = Vec::new();
    let mut path = Vec::new();
    for &r in &radii {
        let mut best = (f64::INFINITY, at(r, 0.0, sheets[0]));
        for &sh in &sheets {
            let n = opts.n_theta;
            let th = |j: usize| 2.0 * std::f64::consts::PI * (j as f64 + 0.25) / n as f64;
            let vals: Vec<Option<Vec3>> = (0..n).into_par_iter().map(|j| ev.evaluate(at(r, th(j), sh)).ok()).collect();
            for j in 0..n {
                let Some(fj) = vals[j] else { continue };
                if norm(fj) < best.0 {
                    best = (norm(fj), at(r, th(j), sh));
                }
                let Some(fk) = vals[(j + 1) % n] else { continue };
                for c in 0..3 {
                    if fj[c] == 0.0 || fj[c].signum() != fk[c].signum() {
                        let (mut lo, mut hi) = (th(j), th(j) + 2.0 * std::f64::consts::PI / n as f64);
                        let mut flo = fj[c];
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            let Ok(fm) = ev.evaluate(at(r, mid, sh)) else { break };
                            if fm[c].signum() == flo.signum() {
                                lo = mid;
                                flo = fm[c];
                            } else {
                                hi = mid;
                            }
                        }
                        let pt = at(r, 0.5 * (lo + hi), sh);
                        if let Ok(fm) = ev.evaluate(pt) {
                            if norm(fm) < best.0 {
                                best = (norm(fm), pt);
                            }
                        }
                    }
                }
            }
        }
        mins.push(best.0);
        path.push(best.1);
    }
    Ok(classify_probe(p.to_string(), mins, path, *radii.last().unwrap()))
}

fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64)).collect()
}

fn classify_probe(label: String, mins: Vec<f64>, path: Vec<SheetPoint>, cutoff: f64) -> ProbeOutcome {
    let first = mins[0];
    let last = *mins.last().unwrap();
    if last.is_finite() && last <= first + 0.5 * (1.0 + first) {
        let bound = mins.iter().copied().fold(0.0, f64::max);
        ProbeOutcome::BoundedEscape { witness: Witness::BoundedEscape { puncture: label, path, bound, cutoff } }
    } else {
        ProbeOutcome::Escapes { min_norms: mins }
    }
}

/// `|f|` along a prescribed curve heading into a puncture.
pub fn probe_along(s: &SurfaceData, label: &str, pts: &[SheetPoint]) -> Result<ProbeOutcome> {
    let ev = Evaluator::new(s);
    let mut mins = Vec::with_capacity(pts.len());
    for p in pts {
        mins.push(norm(ev.evaluate(*p)?));
    }
    let cutoff = pts.last().map(|p| p.z.norm()).unwrap_or(0.0);
    Ok(classify_probe(label.to_string(), mins, pts.to_vec(), cutoff))
}

/// The curve `x = (-1)^n / y^(2n-1)`, `y` from `y0` to `y1`.
pub fn escape_curve_24n(n: u32, y0: f64, y1: f64, count: usize) -> Vec<SheetPoint> {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    geometric(y0, y1, count)
        .into_iter()
        .map(|y| SheetPoint::plain(C64::new(sign / y.powi(2 * n as i32 - 1), y)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum DomainMap {
    /// `z -> conj(z)`, sheet kept: `(z, w) -> (conj z, conj w)` on the curve.
    Conj,
    /// `z -> 1/conj(z)`.
    InvConj,
    /// `z -> e^{2 pi i / k} z`.
    Rotate { k: u32 },
    /// `(z, w) -> (z, -w)`.
    SheetSwap,
    /// `(z, w) -> (conj z, -conj w)`.
    ConjSheetSwap,
}

impl DomainMap {
    pub fn apply(&self, p: SheetPoint) -> SheetPoint {
        match *self {
            DomainMap::Conj => SheetPoint::new(p.z.conj(), p.sheet),
            DomainMap::InvConj => SheetPoint::new(C64::new(1.0, 0.0) / p.z.conj(), p.sheet),
            DomainMap::Rotate { k } => SheetPoint::new(p.z * C64::from_polar(1.0, 2.0 * std::f64::consts::PI / k as f64), p.sheet),
            DomainMap::SheetSwap => SheetPoint::new(p.z, -p.sheet),
            DomainMap::ConjSheetSwap => SheetPoint::new(p.z.conj(), -p.sheet),
        }
    }
}

/// `f(domain_map(p)) = linear * f(p) + translation`; a missing translation
/// is fitted from the samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryDescriptor {
    pub name: String,
    pub domain_map: DomainMap,
    pub linear: [[f64; 3]; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<Vec3>,
}

impl SymmetryDescriptor {
    /// Reflection flipping coordinate `axis`.
    pub fn reflection(name: &str, domain_map: DomainMap, axis: usize) -> Self {
        let mut linear = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        linear[axis][axis] = -1.0;
        SymmetryDescriptor { name: name.into(), domain_map, linear, translation: None }
    }

    /// Rotation by `2 pi / k` about the `x3` axis.
    pub fn rotation_x3(name: &str, k: u32) -> Self {
        let a = 2.0 * std::f64::consts::PI / k as f64;
        let (s, c) = a.sin_cos();
        SymmetryDescriptor {
            name: name.into(),
            domain_map: DomainMap::Rotate { k },
            linear: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            translation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub name: String,
    pub pass: bool,
    pub max_deviation: f64,
    pub translation: Vec3,
}

pub const SYMMETRY_TOL: f64 = 1e-8;

pub fn check_symmetry(s: &SurfaceData, d: &SymmetryDescriptor, samples: &[SheetPoint]) -> Result<SymmetryReport> {
    if samples.is_empty() {
        return Err(Error::Invalid("no symmetry samples".into()));
    }
    let ev = Evaluator::new(s);
    let pairs: Vec<(Vec3, Vec3)> = samples
        .par_iter()
        .map(|p| {
            let a = ev.evaluate(*p)?;
            let b = ev.evaluate(d.domain_map.apply(*p))?;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let apply = |v: Vec3| -> Vec3 {
        let l = &d.linear;
        [0, 1, 2].map(|i| l[i][0] * v[0] + l[i][1] * v[1] + l[i][2] * v[2])
    };
    let translation = match d.translation {
        Some(t) => t,
        None => {
            let mut t = [0.0; 3];
            for (a, b) in &pairs {
                let la = apply(*a);
                for k in 0..3 {
                    t[k] += (b[k] - la[k]) / pairs.len() as f64;
                }
            }
            t
        }
    };
    let mut max_dev: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (a, b) in &pairs {
        let la = apply(*a);
        let dev = norm([b[0] - la[0] - translation[0], b[1] - la[1] - translation[1], b[2] - la[2] - translation[2]]);
        max_dev = max_dev.max(dev);
        scale = scale.max(norm(*a));
    }
    Ok(SymmetryReport { name: d.name.clone(), pass: max_dev < SYMMETRY_TOL * scale, max_deviation: max_dev, translation })
}

/// Deterministic sample points away from the special points.
pub fn symmetry_samples(s: &SurfaceData, n: usize) -> Vec<SheetPoint> {
    let specials = s.domain.special_points();
    let spread = specials.iter().map(|q| q.norm()).fold(1.0, f64::max);
    let sheets: Vec<i8> = if s.domain.curve().is_some() { vec![1, -1] } else { vec![1] };
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut out = Vec::with_capacity(n);
    let mut k = 0usize;
    while out.len() < n && k < 50 * n + 100 {
        k += 1;
        let u = (k as f64 * golden).fract();
        let v = (k as f64 * golden * golden + 0.3).fract();
        let r = spread * (0.15 + 1.6 * u);
        let z = C64::from_polar(r, 2.0 * std::f64::consts::PI * v + 0.1);
        if z.im.abs() < 1e-3 * spread || specials.iter().any(|q| (z - q).norm() < 0.05 * spread) {
            continue;
        }
        out.push(SheetPoint::new(z, sheets[k % sheets.len()]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, MeromorphicForm};
    use crate::expr::{parse_rational, Bindings};
    use crate::mesh::{build_mesh, MeshRegion};

    fn sphere(forms: [&str; 3], punctures: Vec<ExtPoint>) -> SurfaceData {
        let f = |s: &str| MeromorphicForm::rational(parse_rational(s, &Bindings::new()).unwrap());
        SurfaceData::new(Domain::sphere(punctures).unwrap(), [f(forms[0]), f(forms[1]), f(forms[2])], SheetPoint::plain(C64::new(0.3, 0.1)), "t").unwrap()
    }

    fn z0() -> ExtPoint {
        ExtPoint::Finite(C64::new(0.0, 0.0))
    }

    #[test]
    fn singular_line_when_c_vanishes() {
        let opts = MeshOptions { region: MeshRegion { r_min: 1e-2, r_max: 0.5 }, density: 4 };
        let bad = sphere(["1", "z", "1/z"], vec![z0(), ExtPoint::Infinity]);
        let ws = regularity_scan(&bad, &opts, 16).unwrap();
        assert!(!ws.is_empty());
        for w in &ws {
            let Witness::SingularPoint { pt, .. } = w else { panic!() };
            assert!(pt.z.im.abs() < 1e-6);
        }
        let good = sphere(["1", "z+i z^3", "1/z"], vec![z0(), ExtPoint::Infinity]);
        assert!(regularity_scan(&good, &opts, 16).unwrap().is_empty());
    }

    #[test]
    fn paraboloid_is_clean() {
        let s = sphere(["1", "i", "z"], vec![ExtPoint::Infinity]);
        let m = build_mesh(&s, &MeshOptions { region: MeshRegion { r_min: 1e-2, r_max: 10.0 }, density: 4 }).unwrap();
        assert!(self_intersection_scan(&s, &m, 16).unwrap().is_empty());
        assert!(injectivity_witness_search(&s, &m, 16).unwrap().is_empty());
        let sym = SymmetryDescriptor::reflection("conj", DomainMap::Conj, 1);
        let rep = check_symmetry(&s, &sym, &symmetry_samples(&s, 40)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn bad_variant_pairs_on_imaginary_axis() {
        let s = sphere(["1", "1/z", "1/z^2+i z"], vec![z0(), ExtPoint::Infinity]);
        let m = build_mesh(&s, &MeshOptions { region: MeshRegion { r_min: 1e-2, r_max: 1.0 }, density: 8 }).unwrap();
        let ws = injectivity_witness_search(&s, &m, 16).unwrap();
        assert!(!ws.is_empty());
        for w in &ws {
            let Witness::CoincidentPair { p1, p2, .. } = w else { panic!() };
            assert!((p1.z + p2.z).norm() < 1e-6 * (1.0 + p1.z.norm()), "{}", w.to_line());
            assert!(verify_witness(&s, w, 1e-8).unwrap());
        }
    }

    #[test]
    fn bounded_and_escaping_ends() {
        let s = sphere(["1", "i", "1/z^2+1/z"], vec![z0(), ExtPoint::Infinity]);
        let out = properness_probe(&s, &Puncture::point(z0()), &ProbeOptions::default()).unwrap();
        assert!(out.is_bounded(), "{out:?}");
        let horn = sphere(["1/z", "1", "i+z"], vec![z0(), ExtPoint::Infinity]);
        let out = properness_probe(&horn, &Puncture::point(z0()), &ProbeOptions::default()).unwrap();
        assert!(!out.is_bounded());
        let e = sphere(["1", "z^2", "z^4+i"], vec![ExtPoint::Infinity]);
        let out = probe_along(&e, "inf", &escape_curve_24n(2, 2.0, 50.0, 20)).unwrap();
        assert!(out.is_bounded(), "{out:?}");
    }
}

//! Triangulated images of a surface over exponential-polar patches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use crate::domain::{SheetPoint, SurfaceData};
use crate::error::{Error, Result};
use crate::eval::{cross, norm, normal, sub, Evaluator, Vec3};
use crate::laurent::ExtPoint;
use crate::poly::{C64, ZERO};

/// Parameter-space region: punctures are excised to radius `r_min`, the
/// plane is truncated at `|z| = r_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshRegion {
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for MeshRegion {
    fn default() -> Self {
        MeshRegion { r_min: 1e-2, r_max: 1e2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions {
    pub region: MeshRegion,
    /// Rings per unit of log-radius; the angular count is about `2π·density`.
    pub density: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions { region: MeshRegion::default(), density: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Patch {
    pub center: C64,
    pub sheet: i8,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Range into `TriMesh::triangles`.
    pub first_triangle: usize,
    pub n_triangles: usize,
}

#[derive(Clone, Debug, Default)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub sources: Vec<SheetPoint>,
    pub normals: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub patches: Vec<Patch>,
}

impl TriMesh {
    pub fn bbox(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let (lo, hi) = self.bbox();
        norm(sub(hi, lo))
    }

    pub fn triangle_area(&self, t: [usize; 3]) -> f64 {
        let [a, b, c] = t.map(|i| self.vertices[i]);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    /// Boundary edges chained into closed loops of vertex indices.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut edges: Vec<(usize, usize)> = count.into_iter().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect();
        edges.sort_unstable();
        for &(a, b) in &edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut used: HashMap<(usize, usize), bool> = edges.iter().map(|e| (*e, false)).collect();
        let mut loops = Vec::new();
        for &(a, b) in &edges {
            if used[&(a, b)] {
                continue;
            }
            used.insert((a, b), true);
            let mut lp = vec![a, b];
            let mut cur = b;
            while cur != a {
                let next = adj[&cur].iter().copied().find(|&n| !used[&(cur.min(n), cur.max(n))]);
                match next {
                    Some(n) => {
                        used.insert((cur.min(n), cur.max(n)), true);
                        if n != a {
                            lp.push(n);
                        }
                        cur = n;
                    }
                    None => break,
                }
            }
            loops.push(lp);
        }
        loops
    }

    /// Wavefront OBJ with 9 significant digits and 1-indexed faces.
    pub fn write_obj<W: Write>(&self, mut out: W, with_normals: bool) -> io::Result<()> {
        out.write_all(self.obj_string(with_normals).as_bytes())
    }

    pub fn obj_string(&self, with_normals: bool) -> String {
        let mut s = String::with_capacity(self.vertices.len() * 48 + self.triangles.len() * 24);
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", sig9(v[0]), sig9(v[1]), sig9(v[2]));
        }
        if with_normals {
            for n in &self.normals {
                let _ = writeln!(s, "vn {} {} {}", sig9(n[0]), sig9(n[1]), sig9(n[2]));
            }
        }
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| i + 1);
            if with_normals {
                let _ = writeln!(s, "f {a}//{a} {b}//{b} {c}//{c}");
            } else {
                let _ = writeln!(s, "f {a} {b} {c}");
            }
        }
        s
    }
}

/// Nine significant digits, plain decimal where reasonable.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { format!("{x}") };
    }
    let mag = x.abs().log10().floor() as i32;
    let mut s = if (-5..=11).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    };
    if s.contains('.') && !s.contains('e') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

struct PatchSpec {
    center: C64,
    r_inner: f64,
    r_outer: f64,
    fan: bool,
}

/// Parameter grid without images: a log-polar grid about the origin plus
/// annuli about the other finite special points, on both sheets in genus 1.
pub fn parameter_layout(s: &SurfaceData, opts: &MeshOptions) -> Result<TriMesh> {
    let MeshRegion { r_min, r_max } = opts.region;
    if !(r_min > 0.0 && r_max > r_min) || opts.density == 0 {
        return Err(Error::Invalid(format!("bad mesh region r_min={r_min} r_max={r_max} density={}", opts.density)));
    }
    let d = &s.domain;
    let specials = d.special_points();
    let origin_special = specials.iter().any(|p| p.norm() < 1e-14);
    let others: Vec<C64> = specials.iter().copied().filter(|p| p.norm() >= 1e-14).collect();
    let mut specs = Vec::new();
    let main_inner = if origin_special { r_min } else { r_min.min(1e-3) };
    specs.push(PatchSpec { center: ZERO, r_inner: main_inner, r_outer: r_max, fan: !origin_special });
    let mut holes = Vec::new();
    for (i, p) in others.iter().enumerate() {
        let mut gap = p.norm();
        for (j, q) in others.iter().enumerate() {
            if i != j {
                gap = gap.min((p - q).norm());
            }
        }
        let rho = (0.45 * gap).min(1.0);
        holes.push((*p, rho));
        if rho > 1.5 * r_min {
            specs.push(PatchSpec { center: *p, r_inner: r_min, r_outer: rho, fan: false });
        }
    }
    let sheets: Vec<i8> = if d.curve().is_some() { vec![1, -1] } else { vec![1] };
    let n_theta = ((2.0 * std::f64::consts::PI * opts.density as f64).round() as usize).max(12);

    let mut mesh = TriMesh::default();
    for &sheet in &sheets {
        for (pi, spec) in specs.iter().enumerate() {
            let n_r = ((spec.r_outer / spec.r_inner).ln() * opts.density as f64).ceil().max(1.0) as usize + 1;
            let base = mesh.sources.len();
            let mut pts = Vec::with_capacity(n_r * n_theta + 1);
            for i in 0..n_r {
                let rho = spec.r_inner * (spec.r_outer / spec.r_inner).powf(i as f64 / (n_r - 1) as f64);
                for j in 0..n_theta {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64;
                    pts.push(SheetPoint::new(spec.center + C64::from_polar(rho, th), sheet));
                }
            }
            if spec.fan {
                pts.push(SheetPoint::new(spec.center, sheet));
            }
            let mut tris = Vec::new();
            let idx = |i: usize, j: usize| base + i * n_theta + (j % n_theta);
            for i in 0..n_r - 1 {
                for j in 0..n_theta {
                    tris.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                    tris.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
                }
            }
            if spec.fan {
                let c = base + n_r * n_theta;
                for j in 0..n_theta {
                    tris.push([c, idx(0, j + 1), idx(0, j)]);
                }
            }
            // The main grid must leave room for the annuli.
            if pi == 0 {
                tris.retain(|t| {
                    t.iter().all(|&v| {
                        let z = pts[v - base].z;
                        holes.iter().all(|(p, rho)| (z - p).norm() > *rho)
                    })
                });
            }
            let first = mesh.triangles.len();
            mesh.sources.extend(pts);
            mesh.triangles.extend(tris);
            mesh.patches.push(Patch {
                center: spec.center,
                sheet,
                r_inner: spec.r_inner,
                r_outer: spec.r_outer,
                first_triangle: first,
                n_triangles: mesh.triangles.len() - first,
            });
        }
    }

    Ok(mesh)
}

/// Evaluates the layout and drops triangles that cross a branch cut or
/// degenerate under `f`.
pub fn build_mesh(s: &SurfaceData, opts: &MeshOptions) -> Result<TriMesh> {
    let d = &s.domain;
    let mut mesh = parameter_layout(s, opts)?;
    let ev = Evaluator::new(s);
    let images: Vec<Option<Vec3>> = mesh
        .sources
        .par_iter()
        .map(|pt| ev.evaluate(*pt).ok().filter(|v| v.iter().all(|c| c.is_finite())))
        .collect();
    let normals: Vec<Vec3> = mesh.sources.par_iter().map(|pt| normal(s, *pt).unwrap_or([0.0; 3])).collect();
    let ws: Vec<Option<C64>> = match d.curve() {
        Some(c) => mesh.sources.iter().map(|pt| c.w(*pt).ok()).collect(),
        None => vec![None; mesh.sources.len()],
    };
    compact(&mut mesh, &images, normals, &ws);
    let mut kept = Vec::with_capacity(mesh.triangles.len());
    let mut ranges = Vec::new();
    for p in &mesh.patches {
        let first = kept.len();
        for t in &mesh.triangles[p.first_triangle..p.first_triangle + p.n_triangles] {
            // Degenerate relative to the triangle's own size.
            let e2 = (0..3).map(|k| { let d = crate::eval::sub(mesh.vertices[t[k]], mesh.vertices[t[(k + 1) % 3]]); crate::eval::dot(d, d) }).fold(0.0, f64::max);
            if mesh.triangle_area(*t) > 1e-12 * e2 {
                kept.push(*t);
            }
        }
        ranges.push((first, kept.len() - first));
    }
    for (p, (f, n)) in mesh.patches.iter_mut().zip(ranges) {
        p.first_triangle = f;
        p.n_triangles = n;
    }
    mesh.triangles = kept;
    Ok(mesh)
}

/// Drops vertices without an image and triangles that cross a branch cut,
/// then renumbers.
fn compact(mesh: &mut TriMesh, images: &[Option<Vec3>], normals: Vec<Vec3>, ws: &[Option<C64>]) {
    let crosses_cut = |a: usize, b: usize| match (ws[a], ws[b]) {
        (Some(x), Some(y)) => (x - y).norm() > (x + y).norm(),
        _ => false,
    };
    let mut new_tris = Vec::with_capacity(mesh.triangles.len());
    let mut new_ranges = Vec::new();
    for p in &mesh.patches {
        let first = new_tris.len();
        for t in &mesh.triangles[p.first_triangle..p.first_triangle + p.n_triangles] {
            if t.iter().any(|&v| images[v].is_none()) {
                continue;
            }
            if crosses_cut(t[0], t[1]) || crosses_cut(t[1], t[2]) || crosses_cut(t[2], t[0]) {
                continue;
            }
            new_tris.push(*t);
        }
        new_ranges.push((first, new_tris.len() - first));
    }
    let mut used = vec![false; images.len()];
    for t in &new_tris {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; images.len()];
    let (mut verts, mut srcs, mut nrms) = (Vec::new(), Vec::new(), Vec::new());
    for v in 0..images.len() {
        if used[v] {
            remap[v] = verts.len();
            verts.push(images[v].unwrap());
            srcs.push(mesh.sources[v]);
            nrms.push(normals[v]);
        }
    }
    for t in &mut new_tris {
        *t = t.map(|v| remap[v]);
    }
    mesh.vertices = verts;
    mesh.sources = srcs;
    mesh.normals = nrms;
    mesh.triangles = new_tris;
    for (p, (f, n)) in mesh.patches.iter_mut().zip(new_ranges) {
        p.first_triangle = f;
        p.n_triangles = n;
    }
}

/// Boundary loops that hug a puncture: every vertex within `2·r_min` of a
/// finite puncture, or beyond `r_max/2` for the puncture at infinity.
pub fn puncture_loops(s: &SurfaceData, m: &TriMesh, region: &MeshRegion) -> usize {
    let punct: Vec<ExtPoint> = s.domain.punctures().iter().map(|p| p.at).collect();
    m.boundary_loops()
        .iter()
        .filter(|lp| {
            punct.iter().any(|p| match p {
                ExtPoint::Finite(c) => lp.iter().all(|&v| (m.sources[v].z - c).norm() <= 2.0 * region.r_min),
                ExtPoint::Infinity => lp.iter().all(|&v| m.sources[v].z.norm() >= 0.5 * region.r_max),
            })
        })
        .count()
}

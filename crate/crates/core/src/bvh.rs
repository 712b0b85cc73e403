//! Axis-aligned bounding-box tree over mesh triangles and an exact
//! triangle-triangle intersection predicate.

use rayon::prelude::*;

use crate::eval::{cross, dot, sub, Vec3};
use crate::mesh::TriMesh;

pub const LEAF_SIZE: usize = 8;

#[derive(Clone, Copy, Debug)]
pub struct Aabb {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb { lo: [f64::INFINITY; 3], hi: [f64::NEG_INFINITY; 3] }
    }
    fn grow(&mut self, p: Vec3) {
        for k in 0..3 {
            self.lo[k] = self.lo[k].min(p[k]);
            self.hi[k] = self.hi[k].max(p[k]);
        }
    }
    fn merge(&mut self, o: &Aabb) {
        self.grow(o.lo);
        self.grow(o.hi);
    }
    pub fn overlaps(&self, o: &Aabb, eps: f64) -> bool {
        (0..3).all(|k| self.lo[k] <= o.hi[k] + eps && o.lo[k] <= self.hi[k] + eps)
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bbox: Aabb, start: usize, end: usize },
    Inner { bbox: Aabb, left: usize, right: usize },
}

impl Node {
    fn bbox(&self) -> &Aabb {
        match self {
            Node::Leaf { bbox, .. } | Node::Inner { bbox, .. } => bbox,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle indices in leaf order.
    order: Vec<usize>,
    boxes: Vec<Aabb>,
}

fn tri_box(m: &TriMesh, t: usize) -> Aabb {
    let mut b = Aabb::empty();
    for &v in &m.triangles[t] {
        b.grow(m.vertices[v]);
    }
    b
}

impl Bvh {
    pub fn build(m: &TriMesh) -> Bvh {
        let boxes: Vec<Aabb> = (0..m.triangles.len()).map(|t| tri_box(m, t)).collect();
        let centroids: Vec<Vec3> = boxes.iter().map(|b| [0.5 * (b.lo[0] + b.hi[0]), 0.5 * (b.lo[1] + b.hi[1]), 0.5 * (b.lo[2] + b.hi[2])]).collect();
        let mut order: Vec<usize> = (0..boxes.len()).collect();
        let mut nodes = Vec::new();
        if !order.is_empty() {
            let n = order.len();
            build_rec(&mut nodes, &mut order, 0, n, &boxes, &centroids);
        }
        Bvh { nodes, order, boxes }
    }

    /// Pairs `(i, j)`, `i < j`, of triangles whose boxes overlap, sorted.
    pub fn overlapping_pairs(&self, eps: f64) -> Vec<(usize, usize)> {
        if self.nodes.is_empty() {
            return Vec::new();
        }
        let mut pairs: Vec<(usize, usize)> = (0..self.boxes.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut out = Vec::new();
                let mut stack = vec![0usize];
                while let Some(n) = stack.pop() {
                    let node = &self.nodes[n];
                    if !node.bbox().overlaps(&self.boxes[i], eps) {
                        continue;
                    }
                    match node {
                        Node::Leaf { start, end, .. } => {
                            for &j in &self.order[*start..*end] {
                                if j > i && self.boxes[j].overlaps(&self.boxes[i], eps) {
                                    out.push((i, j));
                                }
                            }
                        }
                        Node::Inner { left, right, .. } => {
                            stack.push(*left);
                            stack.push(*right);
                        }
                    }
                }
                out
            })
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

fn build_rec(nodes: &mut Vec<Node>, order: &mut [usize], start: usize, end: usize, boxes: &[Aabb], cents: &[Vec3]) -> usize {
    let mut bbox = Aabb::empty();
    for &t in &order[start..end] {
        bbox.merge(&boxes[t]);
    }
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bbox, start, end });
        return id;
    }
    nodes.push(Node::Leaf { bbox, start, end });
    let ext = [bbox.hi[0] - bbox.lo[0], bbox.hi[1] - bbox.lo[1], bbox.hi[2] - bbox.lo[2]];
    let axis = (0..3).max_by(|&a, &b| ext[a].partial_cmp(&ext[b]).unwrap()).unwrap();
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| cents[a][axis].total_cmp(&cents[b][axis]));
    let left = build_rec(nodes, order, start, mid, boxes, cents);
    let right = build_rec(nodes, order, mid, end, boxes, cents);
    nodes[id] = Node::Inner { bbox, left, right };
    id
}

/// Möller's interval test; `eps` absorbs rounding near zero distances.
pub fn tri_tri_intersect(a: [Vec3; 3], b: [Vec3; 3], eps: f64) -> bool {
    let n2 = cross(sub(b[1], b[0]), sub(b[2], b[0]));
    let d2 = -dot(n2, b[0]);
    let da = a.map(|p| snap(dot(n2, p) + d2, eps * norm3(n2)));
    if same_sign_nonzero(da) {
        return false;
    }
    let n1 = cross(sub(a[1], a[0]), sub(a[2], a[0]));
    let d1 = -dot(n1, a[0]);
    let db = b.map(|p| snap(dot(n1, p) + d1, eps * norm3(n1)));
    if same_sign_nonzero(db) {
        return false;
    }
    if da.iter().all(|v| *v == 0.0) {
        return coplanar(a, b, n1);
    }
    let dir = cross(n1, n2);
    let axis = (0..3).max_by(|&i, &j| dir[i].abs().total_cmp(&dir[j].abs())).unwrap();
    let pa = a.map(|p| p[axis]);
    let pb = b.map(|p| p[axis]);
    let (Some(ia), Some(ib)) = (interval(pa, da), interval(pb, db)) else {
        return false;
    };
    ia.0 <= ib.1 + eps && ib.0 <= ia.1 + eps
}

fn norm3(v: Vec3) -> f64 {
    dot(v, v).sqrt()
}

fn snap(x: f64, tol: f64) -> f64 {
    if x.abs() <= tol {
        0.0
    } else {
        x
    }
}

fn same_sign_nonzero(d: [f64; 3]) -> bool {
    (d[0] > 0.0 && d[1] > 0.0 && d[2] > 0.0) || (d[0] < 0.0 && d[1] < 0.0 && d[2] < 0.0)
}

/// Segment of the line of intersection covered by one triangle.
fn interval(p: [f64; 3], d: [f64; 3]) -> Option<(f64, f64)> {
    let mut ts = Vec::with_capacity(3);
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        if d[i] == 0.0 {
            ts.push(p[i]);
        }
        if (d[i] > 0.0 && d[j] < 0.0) || (d[i] < 0.0 && d[j] > 0.0) {
            ts.push(p[i] + (p[j] - p[i]) * d[i] / (d[i] - d[j]));
        }
    }
    if ts.is_empty() {
        return None;
    }
    let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

fn coplanar(a: [Vec3; 3], b: [Vec3; 3], n: Vec3) -> bool {
    let k = (0..3).max_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs())).unwrap();
    let (u, v) = match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let a2 = a.map(|p| [p[u], p[v]]);
    let b2 = b.map(|p| [p[u], p[v]]);
    for i in 0..3 {
        for j in 0..3 {
            if segments_cross(a2[i], a2[(i + 1) % 3], b2[j], b2[(j + 1) % 3]) {
                return true;
            }
        }
    }
    inside(a2[0], b2) || inside(b2[0], a2)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(p: [f64; 2], q: [f64; 2], r: [f64; 2], s: [f64; 2]) -> bool {
    let (o1, o2) = (orient(p, q, r), orient(p, q, s));
    let (o3, o4) = (orient(r, s, p), orient(r, s, q));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn inside(p: [f64; 2], t: [[f64; 2]; 3]) -> bool {
    let s = [orient(t[0], t[1], p), orient(t[1], t[2], p), orient(t[2], t[0], p)];
    s.iter().all(|v| *v >= 0.0) || s.iter().all(|v| *v <= 0.0)
}

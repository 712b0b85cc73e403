//! Integration of forms along polylines on the curve, with `w` continued
//! across branch cuts.

use crate::domain::{Curve, MeromorphicForm};
use crate::error::{Error, Result};
use crate::poly::{C64, ZERO};
use crate::quadrature::{integrate_segment, Endpoints, QuadOptions};

/// Sub-segment on which `w = sign * w_plus`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub za: C64,
    pub zb: C64,
    pub sign: f64,
}

fn nearer(x: C64, target: C64) -> bool {
    (x - target).norm() <= (x + target).norm()
}

/// Splits the polyline where the `w_plus` branch jumps. `sign0` is the sign
/// just after the first vertex; the first and last vertices may be branch
/// points.
pub fn trace_pieces(curve: &Curve, pts: &[C64], sign0: f64) -> Result<Vec<Piece>> {
    let mut out = Vec::new();
    let mut sign = sign0;
    let roots = curve.roots().to_vec();
    for (si, seg) in pts.windows(2).enumerate() {
        let (a, b) = (seg[0], seg[1]);
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            continue;
        }
        let z_at = |t: f64| a + d * t;
        // Branch points at the ends of the whole path are sampled around.
        let off = (10.0 * curve.tau_root() / len).max(1e-9);
        let t_lo = if si == 0 && curve.branch_point_near(a).is_some() { off } else { 0.0 };
        let t_hi = if si + 2 == pts.len() && curve.branch_point_near(b).is_some() { 1.0 - off } else { 1.0 };
        let clearance = |z: C64| roots.iter().map(|e| (z - e).norm()).fold(f64::MAX, f64::min);
        let min_dt = (t_hi - t_lo) / (1 << 16) as f64;
        let max_dt = (t_hi - t_lo) / 32.0;
        let mut start = a;
        let mut t_prev = t_lo;
        let mut w_prev = curve.w_plus(z_at(t_prev))?;
        while t_prev < t_hi {
            // Step proportional to the distance from the roots.
            let dt = (0.05 * clearance(z_at(t_prev)) / len).clamp(min_dt, max_dt);
            let t = (t_prev + dt).min(t_hi);
            let w = curve.w_plus(z_at(t))?;
            if !nearer(w, w_prev) {
                // Bisect for the jump of w_plus.
                let (mut lo, mut hi) = (t_prev, t);
                let mut w_lo = w_prev;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let wm = curve.w_plus(z_at(mid))?;
                    if nearer(wm, w_lo) {
                        lo = mid;
                        w_lo = wm;
                    } else {
                        hi = mid;
                    }
                }
                let cut = z_at(0.5 * (lo + hi));
                out.push(Piece { za: start, zb: cut, sign });
                sign = -sign;
                start = cut;
            }
            t_prev = t;
            w_prev = w;
        }
        out.push(Piece { za: start, zb: b, sign });
    }
    Ok(out)
}

/// Result of integrating along a polyline on the curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathIntegral {
    pub value: C64,
    /// Sign with `w = sign * w_plus` at the end of the path.
    pub end_sign: f64,
}

/// `int b dz / w` with `w = sign0 * w_plus` at the start.
pub fn integrate_b_over_w(curve: &Curve, b: &crate::rational::CRational, pts: &[C64], sign0: f64, opts: QuadOptions) -> Result<PathIntegral> {
    let pieces = trace_pieces(curve, pts, sign0)?;
    let end_sign = pieces.last().map(|p| p.sign).unwrap_or(sign0);
    if b.is_zero() {
        return Ok(PathIntegral { value: ZERO, end_sign });
    }
    let first = pts[0];
    let last = *pts.last().unwrap();
    let start_branch = curve.branch_point_near(first).is_some();
    let end_branch = curve.branch_point_near(last).is_some();
    let mut acc = ZERO;
    let np = pieces.len();
    for (k, p) in pieces.iter().enumerate() {
        let ends = Endpoints { sqrt_start: start_branch && k == 0, sqrt_end: end_branch && k + 1 == np };
        let sign = p.sign;
        let v = integrate_segment(
            |z| {
                let bz = b.eval(z).map_err(|_| Error::PathThroughPole(z))?;
                Ok(bz / (curve.w_plus_unchecked(z) * sign))
            },
            p.za,
            p.zb,
            ends,
            opts,
        )?;
        acc += v;
    }
    Ok(PathIntegral { value: acc, end_sign })
}

/// `int a dz` along the polyline, by quadrature.
pub fn integrate_a(a: &crate::rational::CRational, pts: &[C64], opts: QuadOptions) -> Result<C64> {
    let mut acc = ZERO;
    for seg in pts.windows(2) {
        acc += integrate_segment(|z| a.eval(z).map_err(|_| Error::PathThroughPole(z)), seg[0], seg[1], Endpoints::default(), opts)?;
    }
    Ok(acc)
}

/// `int omega` along a polyline starting on sheet `sheet0`.
pub fn integrate_form(curve: Option<&Curve>, f: &MeromorphicForm, pts: &[C64], sheet0: i8, opts: QuadOptions) -> Result<PathIntegral> {
    let a = integrate_a(&f.a, pts, opts)?;
    match curve {
        None => Ok(PathIntegral { value: a, end_sign: 1.0 }),
        Some(c) => {
            let r = integrate_b_over_w(c, &f.b, pts, sheet0 as f64, opts)?;
            Ok(PathIntegral { value: a + r.value, end_sign: r.end_sign })
        }
    }
}

/// Minimum distance from `p` to the polyline.
pub fn distance_to_polyline(p: C64, pts: &[C64]) -> f64 {
    pts.windows(2)
        .map(|s| {
            let d = s[1] - s[0];
            let l2 = d.norm_sqr();
            let t = if l2 == 0.0 { 0.0 } else { (((p - s[0]) * d.conj()).re / l2).clamp(0.0, 1.0) };
            (s[0] + d * t - p).norm()
        })
        .fold(f64::MAX, f64::min)
}

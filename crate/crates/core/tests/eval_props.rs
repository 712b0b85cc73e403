use std::sync::OnceLock;

use harmonic_core::catalog::Catalog;
use harmonic_core::domain::{SheetPoint, SurfaceData};
use harmonic_core::eval::{dot, metric_sample, normal, Evaluator};
use harmonic_core::expr::Bindings;
use harmonic_core::C64;
use proptest::prelude::*;

/// Surfaces with closed real periods, spheres and tori.
fn surfaces() -> &'static [SurfaceData] {
    static S: OnceLock<Vec<SurfaceData>> = OnceLock::new();
    S.get_or_init(|| {
        let cat = Catalog::builtin();
        let pick = |id: &str, b: &[(&str, f64)]| {
            let b: Bindings = b.iter().map(|(k, v)| (k.to_string(), *v)).collect();
            cat.fixture(id).unwrap().instantiate_pinned(&b).unwrap().surface
        };
        vec![
            pick("hyperbolic-paraboloid", &[]),
            pick("catenoid", &[]),
            pick("sec4-four-horn", &[]),
            pick("sec3.1-end-232n", &[("n", 2.0)]),
            pick("sec5.3-sphere-22n", &[("n", 3.0)]),
            pick("sec5.6-sphere-012", &[("k", 4.0)]),
            pick("sec5.1-torus", &[]),
            pick("sec5.2-torus", &[]),
        ]
    })
}

fn clearance(s: &SurfaceData, z: C64) -> f64 {
    s.domain.special_points().iter().map(|p| (z - p).norm()).fold(f64::MAX, f64::min)
}

/// True when `w_plus` is continuous over the disk of radius `r` about `z`,
/// so a sheet label means the same thing throughout.
fn sheet_stable(s: &SurfaceData, z: C64, r: f64) -> bool {
    let Some(c) = s.domain.curve() else { return true };
    let w0 = c.w_plus(z).unwrap();
    (0..16).all(|k| {
        let w = c.w_plus(z + C64::from_polar(r, k as f64 * std::f64::consts::TAU / 16.0)).unwrap();
        (w - w0).norm() < (w + w0).norm()
    })
}

fn point() -> impl Strategy<Value = (usize, C64, i8)> {
    (0..8usize, -2.5..2.5f64, -2.5..2.5f64, prop::bool::ANY).prop_map(|(k, x, y, up)| (k, C64::new(x, y), if up { 1 } else { -1 }))
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(800))]

    #[test]
    fn gradient_matches_finite_differences((k, z, sheet) in point()) {
        let s = &surfaces()[k];
        prop_assume!(clearance(s, z) > 0.25 && sheet_stable(s, z, 1e-3));
        let ev = Evaluator::new(s);
        let pt = |d: C64| SheetPoint::new(z + d, sheet);
        let h = 1e-5;
        let jet = ev.jet(pt(C64::new(0.0, 0.0))).unwrap();
        let (xp, xm) = (ev.evaluate(pt(C64::new(h, 0.0))).unwrap(), ev.evaluate(pt(C64::new(-h, 0.0))).unwrap());
        let (yp, ym) = (ev.evaluate(pt(C64::new(0.0, h))).unwrap(), ev.evaluate(pt(C64::new(0.0, -h))).unwrap());
        let scale = 1.0 + jet.phi.iter().map(|p| p.norm()).fold(0.0, f64::max) + jet.f.iter().map(|v| v.abs()).fold(0.0, f64::max) * 1e-4;
        for i in 0..3 {
            let fx = (xp[i] - xm[i]) / (2.0 * h);
            let fy = (yp[i] - ym[i]) / (2.0 * h);
            prop_assert!(rel(fx, jet.fx()[i], scale) < 1e-7, "{} f_x[{i}] {fx} vs {}", s.label, jet.fx()[i]);
            prop_assert!(rel(fy, jet.fy()[i], scale) < 1e-7, "{} f_y[{i}] {fy} vs {}", s.label, jet.fy()[i]);
        }
    }

    #[test]
    fn second_derivatives_are_harmonic((k, z, sheet) in point()) {
        let s = &surfaces()[k];
        prop_assume!(clearance(s, z) > 0.25 && sheet_stable(s, z, 1e-3));
        let ev = Evaluator::new(s);
        let jet = ev.jet(SheetPoint::new(z, sheet)).unwrap();
        for i in 0..3 {
            prop_assert!((jet.fxx()[i] + jet.fyy()[i]).abs() < 1e-9);
        }
        // phi' agrees with a difference quotient of phi, so the identity is
        // about the true second derivatives.
        let h = 1e-5;
        let p = |d: f64| s.phi(SheetPoint::new(z + d, sheet)).unwrap();
        let (pp, pm) = (p(h), p(-h));
        let scale = 1.0 + jet.dphi.iter().chain(jet.phi.iter()).map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..3 {
            let fd = (pp[i] - pm[i]) / (2.0 * h);
            prop_assert!((fd - jet.dphi[i]).norm() < 1e-7 * scale, "{} phi'[{i}] {fd} vs {}", s.label, jet.dphi[i]);
        }
    }

    #[test]
    fn lagrange_identity((k, z, sheet) in point()) {
        let s = &surfaces()[k];
        prop_assume!(clearance(s, z) > 0.05);
        let pt = SheetPoint::new(z, sheet);
        let m = metric_sample(s, pt).unwrap();
        let n = normal(s, pt).unwrap();
        let lhs = dot(n, n);
        let rhs = m.e * m.g - m.f * m.f;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (m.e * m.g).max(1e-300), "{} {lhs} vs {rhs}", s.label);
    }
}

fn segment_clearance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let t = (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (a + d * t - p).norm()
}

fn inside(p: C64, tri: &[C64; 3]) -> bool {
    let side = |a: C64, b: C64| ((b - a).conj() * (p - a)).im;
    let s = [side(tri[0], tri[1]), side(tri[1], tri[2]), side(tri[2], tri[0])];
    s.iter().all(|v| *v > 0.0) || s.iter().all(|v| *v < 0.0)
}

fn vertex() -> impl Strategy<Value = C64> {
    (-2.5..2.5f64, -2.5..2.5f64).prop_map(|(x, y)| C64::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Integrating around a closed triangle returns to the value at the
    /// start, on the sheet reached after the loop.
    #[test]
    fn loops_return_to_the_start(k in 0..8usize, a in vertex(), b in vertex(), c in vertex(), up in prop::bool::ANY) {
        let s = &surfaces()[k];
        let tri = [a, b, c];
        let specials = s.domain.special_points();
        let area = ((b - a).conj() * (c - a)).im.abs();
        prop_assume!(area > 0.1);
        prop_assume!(specials.iter().all(|p| (0..3).all(|i| segment_clearance(*p, tri[i], tri[(i + 1) % 3]) > 0.1)));
        let sheet: i8 = if up { 1 } else { -1 };
        let flips = s.domain.curve().map(|cv| cv.roots().iter().filter(|e| inside(**e, &tri)).count() % 2 == 1).unwrap_or(false);
        let ev = Evaluator::new(s);
        let path = [a, b, c, a].map(|z| SheetPoint::new(z, sheet));
        let vals = ev.evaluate_along(&path).unwrap();
        let end = *vals.last().unwrap();
        let want = ev.evaluate(SheetPoint::new(a, if flips { -sheet } else { sheet })).unwrap();
        let scale = 1.0 + want.iter().chain(vals[0].iter()).map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..3 {
            prop_assert!((end[i] - want[i]).abs() < 1e-8 * scale, "{} component {i}: {} vs {}", s.label, end[i], want[i]);
        }
    }
}

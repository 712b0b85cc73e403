//! Globally adaptive 15-point Gauss–Kronrod quadrature for complex-valued
//! integrands, with square-root substitutions for `(x - a)^(-1/2)` endpoints.

use crate::error::{Error, Result};
use crate::poly::{C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    /// Target for the error estimate, relative to `max(1, |I|)`.
    pub tol: f64,
    pub max_depth: u32,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { tol: 1e-10, max_depth: 40, max_intervals: 20_000 }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod panel: Kronrod value and `|K - G|`.
pub fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(C64, f64)>
where
    F: FnMut(f64) -> Result<C64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x)? + f(c + x)?;
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    Ok((k * h, ((k - g) * h).norm()))
}

struct Panel {
    a: f64,
    b: f64,
    value: C64,
    err: f64,
    depth: u32,
}

/// `int_a^b f(x) dx`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<C64>
where
    F: FnMut(f64) -> Result<C64>,
{
    if a == b {
        return Ok(ZERO);
    }
    let (v, e) = gk15(&mut f, a, b)?;
    let mut panels = vec![Panel { a, b, value: v, err: e, depth: 0 }];
    loop {
        let total: C64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        if err <= opts.tol * total.norm().max(1.0) {
            return Ok(total);
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .unwrap();
        let p = panels.swap_remove(worst);
        if p.depth >= opts.max_depth || panels.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonConvergence { a: C64::new(a, 0.0), b: C64::new(b, 0.0), err });
        }
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&mut f, p.a, m)?;
        let (v2, e2) = gk15(&mut f, m, p.b)?;
        panels.push(Panel { a: p.a, b: m, value: v1, err: e1, depth: p.depth + 1 });
        panels.push(Panel { a: m, b: p.b, value: v2, err: e2, depth: p.depth + 1 });
    }
}

/// Endpoint behaviour of a segment integrand.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Endpoints {
    pub sqrt_start: bool,
    pub sqrt_end: bool,
}

/// `int f(z) dz` along the straight segment from `za` to `zb`.
pub fn integrate_segment<F>(mut f: F, za: C64, zb: C64, ends: Endpoints, opts: QuadOptions) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    segment_dyn(&mut f, za, zb, ends, opts)
}

fn segment_dyn(f: &mut dyn FnMut(C64) -> Result<C64>, za: C64, zb: C64, ends: Endpoints, opts: QuadOptions) -> Result<C64> {
    let d = zb - za;
    let relabel = |e: Error| match e {
        Error::QuadratureNonConvergence { err, .. } => Error::QuadratureNonConvergence { a: za, b: zb, err },
        other => other,
    };
    let r = match (ends.sqrt_start, ends.sqrt_end) {
        (false, false) => integrate(|t| Ok(f(za + d * t)? * d), 0.0, 1.0, opts),
        (true, false) => integrate(
            |u| if u == 0.0 { Ok(ZERO) } else { Ok(f(za + d * (u * u))? * d * (2.0 * u)) },
            0.0,
            1.0,
            opts,
        ),
        (false, true) => integrate(
            |u| if u == 0.0 { Ok(ZERO) } else { Ok(f(zb - d * (u * u))? * d * (2.0 * u)) },
            0.0,
            1.0,
            opts,
        ),
        (true, true) => {
            let m = za + d * 0.5;
            let first = segment_dyn(f, za, m, Endpoints { sqrt_start: true, sqrt_end: false }, opts)?;
            let second = segment_dyn(f, m, zb, Endpoints { sqrt_start: false, sqrt_end: true }, opts)?;
            Ok(first + second)
        }
    };
    r.map_err(relabel)
}

/// `int f dz` along a polyline; `sqrt_first`/`sqrt_last` mark branch-point
/// endpoints of the whole path.
pub fn integrate_polyline<F>(mut f: F, pts: &[C64], sqrt_first: bool, sqrt_last: bool, opts: QuadOptions) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    let mut acc = ZERO;
    let n = pts.len();
    for k in 0..n.saturating_sub(1) {
        let ends = Endpoints { sqrt_start: sqrt_first && k == 0, sqrt_end: sqrt_last && k + 2 == n };
        if pts[k] != pts[k + 1] {
            acc += integrate_segment(&mut f, pts[k], pts[k + 1], ends, opts)?;
        }
    }
    Ok(acc)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::I;

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(8);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| Ok(C64::new(x.powi(7), x)), 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((v - C64::new(32.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_endpoint() {
        // int_0^1 dx / sqrt(x) = 2
        let v = integrate_segment(
            |z| Ok(1.0 / z.sqrt()),
            ZERO,
            C64::new(1.0, 0.0),
            Endpoints { sqrt_start: true, sqrt_end: false },
            QuadOptions::default(),
        )
        .unwrap();
        assert!((v - 2.0).norm() < 1e-12);
        // int_0^1 dx / sqrt(x (1 - x)) = pi
        let v = integrate_segment(
            |z| Ok(1.0 / (z * (1.0 - z)).sqrt()),
            ZERO,
            C64::new(1.0, 0.0),
            Endpoints { sqrt_start: true, sqrt_end: true },
            QuadOptions::default(),
        )
        .unwrap();
        assert!((v - std::f64::consts::PI).norm() < 1e-11);
    }

    #[test]
    fn closed_contour_picks_residue() {
        let n = 32;
        let pts: Vec<C64> = (0..=n).map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64)).collect();
        let v = integrate_polyline(|z| Ok(1.0 / z), &pts, false, false, QuadOptions::default()).unwrap();
        assert!((v - 2.0 * std::f64::consts::PI * I).norm() < 1e-10);
    }

    #[test]
    fn non_integrable_reports_failure() {
        let r = integrate(|x| Ok(C64::new(1.0 / x, 0.0)), 0.0, 1.0, QuadOptions { max_depth: 12, ..Default::default() });
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }
}

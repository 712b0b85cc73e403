//! End types, their reduction under real linear changes of the form triple,
//! admissibility verdicts and the total-curvature budget.

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::domain::{Puncture, SurfaceData};
use crate::error::{Error, Result};
use crate::laurent::Series;
use crate::poly::{C64, ZERO};

/// Relative tolerance for real dependence of two complex numbers.
pub const DEPENDENCE_TOL: f64 = 1e-9;

/// Terms kept per form when classifying an end.
const END_TERMS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EndType {
    /// Pole orders of the original forms, sorted ascending.
    pub raw: [u32; 3],
    /// Pole orders after reduction, sorted ascending.
    pub reduced: [u32; 3],
    /// Pole orders of the reduced forms in form order.
    pub per_form: [u32; 3],
    /// Rows give the reduced forms as real combinations of the originals.
    pub reducing_transform: [[f64; 3]; 3],
    pub order: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    NeverProper,
    NeverEmbedded,
    KnownEmbeddedFamily,
    Open,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdmissibilityVerdict {
    pub verdict: Verdict,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureBudget {
    pub genus: u32,
    pub end_orders: Vec<u32>,
    /// Total curvature divided by `2 pi`.
    pub total_over_2pi: i64,
    pub total: f64,
}

pub fn dependent(a: C64, b: C64) -> bool {
    (a * b.conj()).im.abs() <= DEPENDENCE_TOL * a.norm() * b.norm()
}

fn order_of(s: &Series, tol: f64) -> u32 {
    s.coeffs
        .iter()
        .enumerate()
        .find(|(_, c)| c.norm() > tol)
        .map(|(k, _)| (-(s.min_degree + k as i32)).max(0) as u32)
        .unwrap_or(0)
}

fn lin(a: &Series, x: f64, b: &Series, y: f64) -> Series {
    a.scale(C64::new(x, 0.0)).add(&b.scale(C64::new(y, 0.0)))
}

/// Pole orders of a triple written in a common local coordinate.
pub fn raw_type_of(series: &[Series; 3]) -> [u32; 3] {
    let tol = series_tol(series);
    let mut v = [order_of(&series[0], tol), order_of(&series[1], tol), order_of(&series[2], tol)];
    v.sort_unstable();
    v
}

fn series_tol(series: &[Series; 3]) -> f64 {
    let scale = series
        .iter()
        .flat_map(|s| s.coeffs.iter())
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    1e-10 * scale.max(1e-300)
}

/// Greedy elimination of real-dependent leading coefficients at each pole
/// order; the result is adapted to the pole-order filtration, hence
/// lexicographically minimal.
pub fn reduce_type(series: &[Series; 3]) -> Result<EndType> {
    let tol = series_tol(series);
    check_independent(series, tol)?;
    let raw = raw_type_of(series);
    let mut cur: Vec<Series> = series.to_vec();
    let mut t = Matrix3::<f64>::identity();
    'outer: loop {
        let orders: Vec<u32> = cur.iter().map(|s| order_of(s, tol)).collect();
        let top = *orders.iter().max().unwrap();
        for level in (1..=top).rev() {
            let at: Vec<usize> = (0..3).filter(|k| orders[*k] == level).collect();
            if at.len() < 2 {
                continue;
            }
            let lead: Vec<C64> = at.iter().map(|k| cur[*k].coeff(-(level as i32))).collect();
            // Largest index first: try to express it through the others.
            for pos in (0..at.len()).rev() {
                let target = at[pos];
                let others: Vec<usize> = (0..at.len()).filter(|p| *p != pos).collect();
                let combo = real_combination(lead[pos], &others.iter().map(|p| lead[*p]).collect::<Vec<_>>());
                if let Some(coef) = combo {
                    let mut next = cur[target].clone();
                    let mut row = t.row(target).into_owned();
                    for (c, p) in coef.iter().zip(&others) {
                        let src = at[*p];
                        next = lin(&next, 1.0, &cur[src], -c);
                        row -= t.row(src) * *c;
                    }
                    // The eliminated coefficient is exactly zero.
                    let idx = (-(level as i32) - next.min_degree) as usize;
                    if idx < next.coeffs.len() {
                        next.coeffs[idx] = ZERO;
                    }
                    let cleaned = next.strip(tol);
                    cur[target] = if cleaned.is_empty() { Series::new(0, vec![ZERO]) } else { cleaned };
                    t.set_row(target, &row);
                    continue 'outer;
                }
            }
        }
        break;
    }
    let per_form = [order_of(&cur[0], tol), order_of(&cur[1], tol), order_of(&cur[2], tol)];
    let mut reduced = per_form;
    reduced.sort_unstable();
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = t[(i, j)];
        }
    }
    Ok(EndType { raw, reduced, per_form, reducing_transform: m, order: reduced[2] })
}

/// Real coefficients `c` with `x = sum c_k y_k`, if any.
fn real_combination(x: C64, ys: &[C64]) -> Option<Vec<f64>> {
    match ys {
        [y] => {
            if dependent(x, *y) && y.norm() > 0.0 {
                let r = if y.re.abs() >= y.im.abs() { x.re / y.re } else { x.im / y.im };
                Some(vec![r])
            } else {
                None
            }
        }
        [y1, y2] => {
            let det = y1.re * y2.im - y1.im * y2.re;
            if det.abs() > DEPENDENCE_TOL * y1.norm() * y2.norm() {
                let a = (x.re * y2.im - x.im * y2.re) / det;
                let b = (y1.re * x.im - y1.im * x.re) / det;
                Some(vec![a, b])
            } else if dependent(x, *y1) && y1.norm() > 0.0 {
                real_combination(x, &[*y1]).map(|c| vec![c[0], 0.0])
            } else if dependent(x, *y2) && y2.norm() > 0.0 {
                real_combination(x, &[*y2]).map(|c| vec![0.0, c[0]])
            } else {
                None
            }
        }
        _ => None,
    }
}

fn check_independent(series: &[Series; 3], tol: f64) -> Result<()> {
    let lo = series.iter().map(|s| s.min_degree).min().unwrap();
    let hi = series.iter().map(|s| s.precision()).min().unwrap();
    if hi <= lo {
        return Err(Error::DegenerateTriple);
    }
    let n = (hi - lo) as usize;
    let mut m = DMatrix::<f64>::zeros(2 * n, 3);
    for (k, s) in series.iter().enumerate() {
        for d in 0..n {
            let c = s.coeff(lo + d as i32);
            m[(2 * d, k)] = c.re;
            m[(2 * d + 1, k)] = c.im;
        }
    }
    let sv = m.singular_values();
    let big = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|v| **v > 1e-9 * big.max(tol)).count();
    if rank < 3 {
        Err(Error::DegenerateTriple)
    } else {
        Ok(())
    }
}

pub fn end_series(s: &SurfaceData, p: &Puncture) -> Result<[Series; 3]> {
    let d = &s.domain;
    Ok([
        s.omega[0].local_series(d, p, END_TERMS)?,
        s.omega[1].local_series(d, p, END_TERMS)?,
        s.omega[2].local_series(d, p, END_TERMS)?,
    ])
}

/// Sorted pole orders of the three forms at `p`.
pub fn raw_type(s: &SurfaceData, p: &Puncture) -> Result<[u32; 3]> {
    Ok(raw_type_of(&end_series(s, p)?))
}

pub fn end_type(s: &SurfaceData, p: &Puncture) -> Result<EndType> {
    reduce_type(&end_series(s, p)?)
}

/// Verdict for a reduced, sorted type.
pub fn admissibility(t: [u32; 3]) -> AdmissibilityVerdict {
    let [a, b, c] = t;
    let v = |verdict, rule: &str| AdmissibilityVerdict { verdict, rule: rule.to_string() };
    if a == 0 && b == 0 && c >= 2 {
        return v(Verdict::NeverProper, "lemma:(0,0,n)-never-proper");
    }
    if b == c && c >= 3 {
        return v(Verdict::NeverEmbedded, "lemma:(k,n,n)-winding");
    }
    let known = match (a, b, c) {
        (0, 0, 1) => Some("order-one:(0,0,1)"),
        (1, 2, 2) => Some("order-two:(1,2,2)-catenoidal"),
        (0, 2, 2) => Some("order-two:(0,2,2)-planar"),
        (0, 1, 2) => Some("order-two:(0,1,2)"),
        (2, 2, n) if n >= 3 => Some("family:(2,2,n)"),
        (1, 2, n) if n >= 3 => Some("family:(1,2,n)"),
        (0, 1, n) if n >= 3 => Some("family:(0,1,n)"),
        (0, 2, 3) => Some("example:(0,2,3)"),
        (2, 3, n) if n >= 4 => Some("family:(2,3,n)"),
        (2, 5, 8) => Some("example:(2,5,8)"),
        (3, 4, 6) => Some("example:(3,4,6)"),
        _ => None,
    };
    match known {
        Some(rule) => v(Verdict::KnownEmbeddedFamily, rule),
        None => v(Verdict::Open, "none"),
    }
}

/// `-2 pi (2g - 2 + sum n^j)`.
pub fn curvature_budget(genus: u32, end_orders: &[u32]) -> CurvatureBudget {
    let sum: i64 = end_orders.iter().map(|n| *n as i64).sum();
    let k = -(2 * genus as i64 - 2 + sum);
    CurvatureBudget {
        genus,
        end_orders: end_orders.to_vec(),
        total_over_2pi: k,
        total: 2.0 * std::f64::consts::PI * k as f64,
    }
}

pub fn total_curvature(s: &SurfaceData) -> Result<CurvatureBudget> {
    let mut orders = Vec::new();
    for p in s.domain.punctures() {
        orders.push(end_type(s, p)?.order);
    }
    Ok(curvature_budget(s.genus(), &orders))
}

pub type EndConfiguration = Vec<[u32; 3]>;

/// Admissible end configurations for the supported curvature budgets.
/// Torus entries keep the per-form notation `(2,2,1)` for the catenoidal end.
pub fn classify_budget(total_over_2pi: i64, genus: u32) -> Result<Vec<EndConfiguration>> {
    Ok(match (total_over_2pi, genus) {
        (-1, 0) => vec![vec![[0, 0, 1], [1, 2, 2]], vec![[2, 2, 3]]],
        (-2, 0) => vec![
            vec![[0, 0, 1], [0, 0, 1], [0, 0, 1], [0, 0, 1]],
            vec![[0, 0, 1], [0, 0, 1], [0, 1, 2]],
            vec![[0, 0, 1], [0, 0, 1], [0, 2, 2]],
            vec![[0, 0, 1], [0, 0, 1], [1, 2, 2]],
            vec![[0, 0, 1], [1, 2, 3]],
            vec![[0, 0, 1], [2, 2, 3]],
            vec![[0, 1, 2], [0, 1, 2]],
            vec![[0, 1, 2], [1, 2, 2]],
            vec![[1, 2, 2], [1, 2, 2]],
            vec![[2, 2, 4]],
            vec![[2, 3, 4]],
        ],
        (-1, 1) | (-2, 1) => Vec::new(),
        (-3, 1) => vec![vec![[0, 0, 1], [2, 2, 1]], vec![[2, 2, 3]]],
        _ => return Err(Error::UnsupportedBudget { total_over_2pi, genus }),
    })
}

/// Sorted copy of a configuration, each tuple sorted and the list ordered.
pub fn canonical_configuration(c: &EndConfiguration) -> EndConfiguration {
    let mut v: Vec<[u32; 3]> = c
        .iter()
        .map(|t| {
            let mut t = *t;
            t.sort_unstable();
            t
        })
        .collect();
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(min: i32, c: &[(f64, f64)]) -> Series {
        let mut v: Vec<C64> = c.iter().map(|(a, b)| C64::new(*a, *b)).collect();
        v.resize(8, ZERO);
        Series::new(min, v)
    }

    #[test]
    fn dependent_leading_terms_are_eliminated() {
        // 1/z^2, 1/z^2 + 1, i/z^2 at 0
        let t = reduce_type(&[
            s(-2, &[(1.0, 0.0)]),
            s(-2, &[(1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]),
            s(-2, &[(0.0, 1.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]),
        ])
        .unwrap();
        assert_eq!(t.raw, [2, 2, 2]);
        assert_eq!(t.reduced, [0, 2, 2]);
        assert_eq!(t.per_form, [2, 0, 2]);
        assert_eq!(t.reducing_transform[1], [-1.0, 1.0, 0.0]);
    }

    #[test]
    fn catenoidal_data_is_already_reduced() {
        let t = reduce_type(&[
            s(-1, &[(1.0, 0.0)]),
            s(-2, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]),
            s(-2, &[(0.0, 1.0), (0.0, 0.0), (1.0, 0.0)]),
        ])
        .unwrap();
        assert_eq!(t.reduced, [1, 2, 2]);
        assert_eq!(t.order, 2);
    }

    #[test]
    fn dependent_triple_is_degenerate() {
        let a = s(-2, &[(1.0, 0.0), (0.0, 2.0)]);
        let b = a.scale(C64::new(3.0, 0.0));
        let c = s(-1, &[(1.0, 0.0)]);
        assert_eq!(reduce_type(&[a, b, c]), Err(Error::DegenerateTriple));
    }

    #[test]
    fn verdicts() {
        assert_eq!(admissibility([0, 0, 2]).verdict, Verdict::NeverProper);
        assert_eq!(admissibility([1, 3, 3]).verdict, Verdict::NeverEmbedded);
        assert_eq!(admissibility([2, 2, 7]).verdict, Verdict::KnownEmbeddedFamily);
        assert_eq!(admissibility([2, 4, 6]).verdict, Verdict::Open);
    }

    #[test]
    fn budgets() {
        assert_eq!(curvature_budget(0, &[3]).total_over_2pi, -1);
        assert_eq!(curvature_budget(1, &[3]).total_over_2pi, -3);
        assert_eq!(curvature_budget(0, &[1; 6]).total_over_2pi, -4);
        assert_eq!(classify_budget(-2, 0).unwrap().len(), 11);
        assert!(classify_budget(-2, 1).unwrap().is_empty());
        assert!(classify_budget(-5, 0).is_err());
        assert!((curvature_budget(0, &[3]).total + 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }
}

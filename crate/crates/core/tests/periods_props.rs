use std::sync::OnceLock;

use harmonic_core::catalog::Catalog;
use harmonic_core::domain::{MeromorphicForm, SheetPoint};
use harmonic_core::expr::Bindings;
use harmonic_core::periods::{period, Cycle, CycleKind, PeriodProblem};
use harmonic_core::C64;
use proptest::prelude::*;

fn problems() -> &'static [PeriodProblem] {
    static P: OnceLock<Vec<PeriodProblem>> = OnceLock::new();
    P.get_or_init(|| {
        let cat = Catalog::builtin();
        ["sec5.1-torus", "sec5.2-torus"].iter().map(|id| cat.fixture(id).unwrap().period_problem(&Bindings::new()).unwrap()).collect()
    })
}

fn re_period(p: &PeriodProblem, f: &MeromorphicForm, c: &Cycle) -> f64 {
    period(&p.surface, f, c).unwrap().re
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn real_periods_are_linear_in_lambda(lambda in -3.0..3.0f64) {
        for p in problems() {
            for fp in &p.free {
                let base = &p.surface.omega[fp.form];
                let sum = base.add(&fp.generator.scale(C64::new(lambda, 0.0)));
                for c in &p.cycles {
                    let lhs = re_period(p, &sum, c);
                    let rhs = re_period(p, base, c) + lambda * re_period(p, &fp.generator, c);
                    let scale = 1.0 + re_period(p, base, c).abs() + re_period(p, &fp.generator, c).abs() * lambda.abs();
                    prop_assert!((lhs - rhs).abs() <= 1e-9 * scale, "{} {}: {lhs} vs {rhs}", fp.name, c.label);
                }
            }
        }
    }
}

/// Collapsed intervals between finite branch points against a circle route
/// enclosing the same interval.
#[test]
fn collapsed_cycles_match_circle_routes() {
    for p in problems() {
        let curve = p.surface.domain.curve().unwrap();
        for c in &p.cycles {
            let CycleKind::CollapsedInterval { a, b, both_sheets: true } = c.kind else { continue };
            let (lo, hi) = (a.min(b), a.max(b));
            if !lo.is_finite() || !hi.is_finite() {
                continue;
            }
            let center = C64::new(0.5 * (lo + hi), 0.0);
            let gap = curve
                .roots()
                .iter()
                .chain(p.surface.omega.iter().flat_map(|f| f.a.poles().iter().chain(f.b.poles()).map(|(q, _)| q)))
                .filter(|e| (*e - center).norm() > 0.5 * (hi - lo) + 1e-9)
                .map(|e| (e - center).norm())
                .fold(f64::MAX, f64::min);
            let radius = 0.5 * (0.5 * (hi - lo) + gap.min(0.5 * (hi - lo) + 1.0));
            let mut circle = Cycle::circle("circle", center, radius, 1, 256);
            if let CycleKind::ExplicitPath { points } = &mut circle.kind {
                // Clockwise, matching the collapsed orientation.
                *points = points.iter().rev().map(|q| SheetPoint::new(q.z, 1)).collect();
            }
            for (k, f) in p.free.iter().map(|fp| &fp.generator).chain(p.surface.omega.iter()).enumerate() {
                let flat = period(&p.surface, f, c).unwrap();
                let round = period(&p.surface, f, &circle).unwrap();
                assert!((flat - round).norm() <= 1e-8 * (1.0 + flat.norm()), "{} form {k}: {flat} vs {round}", c.label);
            }
        }
    }
}

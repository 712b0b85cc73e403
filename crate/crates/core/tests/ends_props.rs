use std::sync::OnceLock;

use harmonic_core::catalog::Catalog;
use harmonic_core::ends::{end_series, reduce_type, total_curvature};
use harmonic_core::laurent::Series;
use harmonic_core::C64;
use proptest::prelude::*;

struct End {
    label: String,
    series: [Series; 3],
}

/// Series triples at every puncture of every catalog representative.
fn ends() -> &'static [End] {
    static ENDS: OnceLock<Vec<End>> = OnceLock::new();
    ENDS.get_or_init(|| {
        let cat = Catalog::builtin();
        let mut out = Vec::new();
        for f in &cat.fixtures {
            for b in f.representative_bindings() {
                let s = f.instantiate_pinned(&b).unwrap().surface;
                for p in s.domain.punctures() {
                    out.push(End { label: format!("{} {b:?} at {p}", f.id), series: end_series(&s, p).unwrap() });
                }
            }
        }
        out
    })
}

fn combine(m: &[[f64; 3]; 3], s: &[Series; 3]) -> [Series; 3] {
    let row = |i: usize| {
        let term = |j: usize| s[j].scale(C64::new(m[i][j], 0.0));
        term(0).add(&term(1)).add(&term(2))
    };
    [row(0), row(1), row(2)]
}

fn det(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn invertible() -> impl Strategy<Value = [[f64; 3]; 3]> {
    prop::array::uniform3(prop::array::uniform3(-1.0..1.0f64)).prop_filter("well conditioned", |m| det(m).abs() > 0.05)
}

#[test]
fn catalog_has_ends() {
    assert!(ends().len() > 50);
}

#[test]
fn reduce_type_is_idempotent() {
    for e in ends() {
        let t = reduce_type(&e.series).unwrap();
        let again = reduce_type(&combine(&t.reducing_transform, &e.series)).unwrap();
        assert_eq!(again.raw, t.reduced, "{}", e.label);
        assert_eq!(again.reduced, t.reduced, "{}", e.label);
        assert_eq!(again.per_form, t.per_form, "{}", e.label);
    }
}

#[test]
fn total_curvature_is_quantized() {
    let cat = Catalog::builtin();
    for f in &cat.fixtures {
        for b in f.representative_bindings() {
            let s = f.instantiate_pinned(&b).unwrap().surface;
            let t = total_curvature(&s).unwrap();
            let q = t.total / (2.0 * std::f64::consts::PI);
            assert!((q - t.total_over_2pi as f64).abs() < 1e-12, "{}", f.id);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn reduced_type_is_invariant_under_real_linear_maps(m in invertible()) {
        for e in ends() {
            let want = reduce_type(&e.series).unwrap().reduced;
            let got = reduce_type(&combine(&m, &e.series)).unwrap().reduced;
            prop_assert_eq!(got, want, "{}", e.label);
        }
    }
}

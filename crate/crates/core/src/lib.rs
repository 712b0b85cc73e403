//! Harmonic surfaces defined by triples of meromorphic 1-forms on the
//! sphere or on a genus-one hyperelliptic curve.

pub mod bvh;
pub mod catalog;
pub mod domain;
pub mod ends;
pub mod error;
pub mod eval;
pub mod expr;
pub mod laurent;
pub mod mesh;
pub mod path;
pub mod periods;
pub mod poly;
pub mod quadrature;
pub mod rational;
pub mod verify;

pub use error::{Error, Result};
pub use laurent::ExtPoint;
pub use poly::{CPoly, C64};
pub use rational::CRational;

/// Short, stable rendering of a complex number.
pub fn fmt_complex(z: C64) -> String {
    let clean = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    let (re, im) = (clean(z.re), clean(z.im));
    if im == 0.0 {
        format!("{re}")
    } else if re == 0.0 {
        format!("{im}i")
    } else if im < 0.0 {
        format!("{re}-{}i", -im)
    } else {
        format!("{re}+{im}i")
    }
}

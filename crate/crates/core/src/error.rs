use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("evaluation point {0} is within tolerance of a pole")]
    PoleHit(Complex64),
    #[error("could not isolate polynomial roots: {0}")]
    FactorizationFailure(String),
    #[error("point {0} is a branch point of the curve")]
    BranchPoint(Complex64),
    #[error("the form triple is real-linearly dependent")]
    DegenerateTriple,
    #[error("adaptive quadrature did not converge on [{a}, {b}] (estimated error {err:e})")]
    QuadratureNonConvergence { a: Complex64, b: Complex64, err: f64 },
    #[error("no sign change of the target period on [{0}, {1}]")]
    NoBracket(f64, f64),
    #[error("integration path passes through the pole at {0}")]
    PathThroughPole(Complex64),
    #[error("singular point at {0}: |f_x x f_y| below regularity threshold")]
    SingularPoint(Complex64),
    #[error("fixture schema error: {0}")]
    Schema(String),
    #[error("unresolved parameter `{0}`")]
    UnresolvedParam(String),
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("no classification table for total curvature {total_over_2pi}*2pi and genus {genus}")]
    UnsupportedBudget { total_over_2pi: i64, genus: u32 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

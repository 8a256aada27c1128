use thiserror::Error;

/// Errors raised by the core library.
///
/// Solver non-convergence is not an error: solvers hand back their best
/// iterate with `converged = false` instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid sizes must be positive (got m={m}, n={n})")]
    EmptyGrid { m: usize, n: usize },

    #[error("table has the wrong shape: expected {expected}, found {found}")]
    TableShape { expected: String, found: String },

    #[error("weight p({i},{j}) = {value} must be zero on the left/bottom boundary lines")]
    BoundaryWeightNonzero { i: usize, j: usize, value: f64 },

    #[error("weight p({i},{j}) = {value} must be strictly positive")]
    NonpositiveInteriorWeight { i: usize, j: usize, value: f64 },

    #[error("index ({i},{j}) out of range for an {m}x{n} grid")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        m: usize,
        n: usize,
    },

    #[error("block index {j} out of range 1..={max}")]
    BlockOutOfRange { j: usize, max: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("lambda must be nonnegative and finite (got {0})")]
    InvalidLambda(f64),

    #[error("t = {t} lies outside the tabulated range [{lo}, {hi}]")]
    TabulatedOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("adaptive quadrature of f on [0, {t}] did not reach tolerance within the depth cap")]
    QuadratureNonconvergent { t: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    JacobiNonconvergent { sweeps: usize },

    #[error("Newton Jacobian is numerically singular at pivot {index}")]
    SingularJacobian { index: usize },

    #[error("mountain-pass endpoint has energy {energy} >= 0")]
    EndpointNotBelowZero { energy: f64 },

    #[error("no endpoint with negative energy found after {doublings} doublings")]
    EndpointSearchFailed { doublings: usize },

    #[error("lambda sweep needs a nonempty ascending list")]
    EmptySweep,

    #[error("lambda values must be ascending (position {index})")]
    UnsortedSweep { index: usize },

    #[error("sum of per-node maxima of F is {sum}; the threshold is undefined")]
    NonpositiveDenominator { sum: f64 },

    #[error("invalid sampling range: {0}")]
    RangeInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(expected: impl ToString, found: impl ToString) -> Error {
    Error::ShapeMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}

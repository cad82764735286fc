use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degree overflow: {k_a} + {k_b} exceeds ambient dimension {n}")]
    DegreeOverflow { k_a: usize, k_b: usize, n: usize },
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("cannot contract a 0-form")]
    ZeroDegreeContraction,
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("finite-difference step {step} exceeds a quarter of the smallest axis extent {limit}")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("point {0:?} lies outside the chart domain")]
    OutsideDomain(Vec<f64>),
    #[error("map is not an immersion at {0:?}")]
    RankDeficient(Vec<f64>),

    #[error("3-form is not definite (lambda = {lambda})")]
    NotDefinite { lambda: f64 },
    #[error("3-form is degenerate (lambda = {lambda} relative to |rho|^4)")]
    Degenerate { lambda: f64 },
    #[error("matrix is not a complex structure (|I^2 + 1| = {0})")]
    NotComplexStructure(f64),
    #[error("4-form is not of type (2,2): off-type fraction {0}")]
    NotType22(f64),
    #[error("field is not closed: residual {0}")]
    NotClosed(f64),
    #[error("d(rho~) has off-(2,2) fraction {fraction} at {point:?}")]
    OffTypeDerivative { fraction: f64, point: Vec<f64> },

    #[error("3-form is not positive (min eigenvalue of b = {min_eigenvalue})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("3-form is degenerate (min/max eigenvalue ratio of b = {ratio})")]
    DegeneratePositive { ratio: f64 },
    #[error("positivity fails at {point:?}: {reason}")]
    PositivityFailure { point: Vec<f64>, reason: String },
    #[error("degenerate frame for splitting")]
    DegenerateFrame,

    #[error("induced structure is not strictly mean-convex (min det = {0})")]
    NotStrictlyMeanConvex(f64),

    #[error("map is not spacelike at {point:?} (min eigenvalue {min_eigenvalue})")]
    NotSpacelike { point: Vec<f64>, min_eigenvalue: f64 },
    #[error("2-forms are pointwise dependent at {0:?}")]
    DependentSigmas(Vec<f64>),
    #[error("sigma matrix has det <= 0 at {0:?}; no orientation-compatible 1-form basis")]
    SigmaOrientation(Vec<f64>),
    #[error("S matrix not symmetric: asymmetry {asymmetry} at {point:?}")]
    NonSymmetricS { asymmetry: f64, point: Vec<f64> },

    #[error("no admissible Newton step preserves spacelikeness (residual {residual})")]
    SpacelikeLost { residual: f64 },
    #[error("maximum iterations reached (residual {residual})")]
    MaxIters { residual: f64 },
    #[error("degenerate boundary metric at {0:?}")]
    DegenerateBoundary(Vec<f64>),
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    #[error("positivity lost: fails at epsilon {failing_epsilon}, last passing {passing_epsilon:?}, margin {margin}")]
    PositivityLost { failing_epsilon: f64, passing_epsilon: Option<f64>, margin: f64 },
    #[error("Omega does not tame rho_t at {point:?} (margin {margin})")]
    OmegaNotTaming { point: Vec<f64>, margin: f64 },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("evaluation domain error: {0}")]
    Domain(String),
    #[error("invalid scenario: {}", .0.join("; "))]
    Scenario(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

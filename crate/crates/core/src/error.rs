use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {dim}: supported range is 1..=3")]
    UnsupportedDimension { dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("supertrace needs a chirality grading, which exists only in even dimension (got {dim})")]
    NoGrading { dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid torus data: {0}")]
    InvalidTorus(String),

    #[error("sampling grid of {resolution} points cannot resolve frequency {frequency}; need at least {needed}")]
    GridTooCoarse { resolution: usize, frequency: i64, needed: usize },

    #[error("map is not unitary: residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    NotUnitary { residual: f64, tolerance: f64 },

    #[error("winding is not an integer: pre-rounding residual {residual:.3e}")]
    NonIntegerWinding { residual: f64 },

    #[error("operation requires a character (diagonal monomial) map")]
    NotACharacter,

    #[error("map file: line {line}: {message}")]
    MapParse { line: usize, message: String },

    #[error("graded kernel dimensions differ: dim K+ = {plus}, dim K- = {minus}")]
    UnequalGrading { plus: usize, minus: usize },

    #[error("boundary kernel is nonempty (dim {dim}) but no Lagrangian subspace was supplied")]
    MissingLagrangian { dim: usize },

    #[error("invalid Lagrangian isometry: {0}")]
    InvalidLagrangian(String),

    #[error("family is not invertible: gap {gap:.3e} near s = {s:.6}")]
    NotInvertible { s: f64, gap: f64 },

    #[error("x-discretization too coarse: degree {degree} below required {required}")]
    DiscretizationTooCoarse { degree: usize, required: usize },

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("eta extrapolation did not converge: error estimate {estimate:.3e} exceeds ceiling {ceiling:.1e}; increase the cutoff or widen the window")]
    NonConvergentEta { estimate: f64, ceiling: f64 },

    #[error("invalid smoothing window: {0}")]
    InvalidWindow(String),

    #[error("unresolved eigenvalue crossing near s = {s:.6} after {depth} refinements; use a finer grid")]
    UnresolvedCrossing { s: f64, depth: usize },

    #[error("ambiguous singular value gap: {below:.3e} vs {above:.3e}")]
    AmbiguousSvdGap { below: f64, above: f64 },

    #[error("Fredholm index unstable under cutoff change: {first} at {cutoff} vs {second} at {cutoff_next}")]
    IndexUnstable { first: i64, cutoff: usize, second: i64, cutoff_next: usize },

    #[error("quadrature error {estimate:.3e} exceeds 1e-6; use a finer grid")]
    Quadrature { estimate: f64 },

    #[error("Toeplitz index {index} does not match the index pairing {pairing:.6}")]
    IndexMismatch { index: i64, pairing: f64 },

    #[error("route disagreement: {0}")]
    RouteDisagreement(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}

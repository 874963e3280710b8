use thiserror::Error;

/// Errors raised by the workbench. Variants map one-to-one onto the failure
/// classes that callers (and the CLI exit codes) distinguish.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("unsupported dimension {0} for this operation")]
    UnsupportedDimension(usize),

    #[error("eigensolver did not converge after {iterations} operator applications (best residual {best_residual:.3e})")]
    Convergence { iterations: usize, best_residual: f64 },

    #[error("mass form is not positive definite")]
    InvalidMass,

    #[error("trial vector has non-positive mass")]
    DegenerateTrial,

    #[error("density family `{family}` is not defined on a {kind} domain")]
    FamilyDomainMismatch { family: String, kind: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid test-function geometry: {0}")]
    InvalidGeometry(String),

    #[error("cheeger method unsupported here: {0}")]
    Unsupported(String),

    #[error("no candidate cut satisfies the half-volume constraint")]
    NoFeasibleCut,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("exterior block of the stiffness is singular")]
    DegenerateExterior,

    #[error("measure cannot be centered: {0}")]
    NoCentering(String),

    #[error("centering iteration stalled with barycenter norm {best_norm:.3e}")]
    CenteringFailure { best_norm: f64 },

    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with the sweep point or stage that produced it.
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

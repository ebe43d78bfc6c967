use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: usize },

    #[error("degenerate triangle {id} (area {area:e})")]
    DegenerateTriangle { id: usize, area: f64 },

    #[error("non-conforming mesh: {0}")]
    NonConforming(String),

    #[error("mesh is not mirror symmetric: {0}")]
    NotSymmetric(String),

    #[error("contrast mu = {0} admits no corner singularity (need mu < -3 or -1/3 < mu < 0)")]
    InadmissibleContrast(f64),

    #[error("transmission matrix is not singular (sigma_min / sigma_max = {0:e})")]
    TransmissionNotSingular(f64),

    #[error("gradient requested at the singular point")]
    SingularPoint,

    #[error("linear system is numerically singular (condition estimate {0:e})")]
    SingularSystem(f64),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("solution has {found} nodal values but the mesh has {expected} vertices (generation {generation})")]
    GenerationMismatch {
        expected: usize,
        found: usize,
        generation: usize,
    },

    #[error("eigensolver failed after {iterations} iterations: {reason}")]
    Eigen { iterations: usize, reason: String },

    #[error("convergence rate needs positive errors and dof counts")]
    InvalidRate,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_level(self, level: usize) -> Error {
        Error::AtLevel {
            level,
            source: Box::new(self),
        }
    }

    /// Strips any level wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLevel { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

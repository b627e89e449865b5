use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent scenario input.
    Config,
    /// The numerics left their domain of validity (exceptional point,
    /// complex spectrum, ill-conditioned metric, overflow).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("scenario document could not be parsed: {0}")]
    Parse(String),

    #[error("unknown Hamiltonian family `{0}`")]
    UnknownFamily(String),

    #[error("model parameter error: {0}")]
    Model(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("schedule for `{name}` can vanish on [{t0}, {t1}]: {reason}")]
    VanishingSchedule {
        name: String,
        t0: f64,
        t1: f64,
        reason: String,
    },

    #[error("parameter path `{0}` does not resolve in the scenario")]
    UnresolvedPath(String),

    #[error("zero coefficient mu[{index}]")]
    ZeroMu { index: usize },

    #[error(
        "exceptional point at t = {t}: left-right overlap {overlap:.3e} of level {level} \
         is below the diagonalizability threshold"
    )]
    ExceptionalPoint { t: f64, level: usize, overlap: f64 },

    #[error("complex spectrum at t = {t}: max |Im E| = {max_imag:.3e}")]
    ComplexSpectrum { t: f64, max_imag: f64 },

    #[error("ambiguous eigenpair matching at t = {t}: {reason}")]
    AmbiguousMatching { t: f64, reason: String },

    #[error("metric is not positive definite: smallest eigenvalue {min_eig:.3e}")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("metric condition number {cond:.3e} at t = {t} exceeds {limit:.1e}")]
    IllConditioned { t: f64, cond: f64, limit: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("analytic mu-only derivative requested but the Hamiltonian is time dependent")]
    InconsistentMode,

    #[error("non-finite value during integration at t = {t}")]
    NonFinite { t: f64 },

    #[error("state has zero metric norm")]
    ZeroNorm,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::MissingKey(_)
            | Error::InvalidValue { .. }
            | Error::Parse(_)
            | Error::UnknownFamily(_)
            | Error::Model(_)
            | Error::DimensionMismatch { .. }
            | Error::VanishingSchedule { .. }
            | Error::UnresolvedPath(_)
            | Error::ZeroMu { .. }
            | Error::InconsistentMode
            | Error::Io(_) => ErrorKind::Config,
            Error::ExceptionalPoint { .. }
            | Error::ComplexSpectrum { .. }
            | Error::AmbiguousMatching { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::IllConditioned { .. }
            | Error::Singular(_)
            | Error::NonFinite { .. }
            | Error::ZeroNorm => ErrorKind::Numerical,
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for numerical ones.
    /// Code 1 is reserved for runs whose checks fail.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
        }
    }

    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidValue {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

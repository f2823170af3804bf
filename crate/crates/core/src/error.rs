use thiserror::Error;

/// Everything a library call can refuse or reject.
///
/// Two broad families matter to callers (and drive the CLI exit codes):
/// *input errors* (malformed specs, inconsistent data: exit 1) and
/// *refusals* (a precondition of the underlying theorem fails and the
/// operation declines to fabricate an answer: exit 2). `is_refusal`
/// distinguishes them.
#[derive(Debug, Error)]
pub enum Error {
    // -- input / validation -------------------------------------------------
    #[error("invalid graph spec: {0}")]
    GraphSpec(String),
    #[error("invalid potential spec: {0}")]
    PotentialSpec(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid base point: {0}")]
    InvalidBasePoint(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    // -- depth bookkeeping --------------------------------------------------
    /// Path too short to determine a Birkhoff sum of the requested length.
    #[error("INSUFFICIENT_DEPTH: {0}")]
    InsufficientDepth(String),
    /// Transfer operator applied to a function of too small a depth.
    #[error("DEPTH_UNDERFLOW: {0}")]
    DepthUnderflow(String),
    /// Measure does not hold the depths a residual check needs.
    #[error("DEPTH_MISMATCH: {0}")]
    DepthMismatch(String),

    // -- refusals (failed theorem preconditions) ----------------------------
    #[error("UNDECIDED: {0}")]
    Undecided(String),
    #[error("WRONG_CASE: {0}")]
    WrongCase(String),
    /// The forward dynamics is compact; no escaping sequence exists.
    #[error("NOT_NONCOMPACT: {0}")]
    NotNoncompact(String),
    /// Fixed-measure construction requires certified negative pressure.
    #[error("NONNEGATIVE_PRESSURE: {0}")]
    NonnegativePressure(String),
    /// Ratio limits disagreed across the tail of the escaping sequence.
    #[error("UNSTABLE_LIMIT: {0}")]
    UnstableLimit(String),
    /// Conformal measures cannot exist: pressure certified positive.
    #[error("PRESSURE_POSITIVE: {0}")]
    PressurePositive(String),
    /// Eigenvalue parameter below the pressure threshold.
    #[error("BELOW_THRESHOLD: {0}")]
    BelowThreshold(String),
    /// Core extension requires zero pressure on the core.
    #[error("PRESSURE_NOT_ZERO: {0}")]
    PressureNotZero(String),
    /// Periodic-orbit sums are empty: no non-wandering vertex to anchor at.
    #[error("EMPTY_NW: {0}")]
    EmptyNw(String),
    /// A series certified divergent for the requested exponent.
    #[error("DIVERGENT: {0}")]
    Divergent(String),
    /// Beam search discarded more weight than the result could certify.
    #[error("BEAM_OVERFLOW: {0}")]
    BeamOverflow(String),
    /// Potential bounds unusable for the KMS bracket (a = 0 or b unbounded).
    #[error("UNBOUNDED_POTENTIAL: {0}")]
    UnboundedPotential(String),
}

impl Error {
    /// True when the error is a refusal of a failed mathematical
    /// precondition rather than bad input.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::Undecided(_)
                | Error::WrongCase(_)
                | Error::NotNoncompact(_)
                | Error::NonnegativePressure(_)
                | Error::UnstableLimit(_)
                | Error::PressurePositive(_)
                | Error::BelowThreshold(_)
                | Error::PressureNotZero(_)
                | Error::EmptyNw(_)
                | Error::Divergent(_)
                | Error::BeamOverflow(_)
                | Error::UnboundedPotential(_)
        )
    }

    /// Stable machine-readable code for reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::GraphSpec(_) => "GRAPH_SPEC",
            Error::PotentialSpec(_) => "POTENTIAL_SPEC",
            Error::InvalidPath(_) => "INVALID_PATH",
            Error::InvalidBasePoint(_) => "INVALID_BASE_POINT",
            Error::Parameter(_) => "PARAMETER",
            Error::Parse(_) => "PARSE",
            Error::Io(_) => "IO",
            Error::InsufficientDepth(_) => "INSUFFICIENT_DEPTH",
            Error::DepthUnderflow(_) => "DEPTH_UNDERFLOW",
            Error::DepthMismatch(_) => "DEPTH_MISMATCH",
            Error::Undecided(_) => "UNDECIDED",
            Error::WrongCase(_) => "WRONG_CASE",
            Error::NotNoncompact(_) => "NOT_NONCOMPACT",
            Error::NonnegativePressure(_) => "NONNEGATIVE_PRESSURE",
            Error::UnstableLimit(_) => "UNSTABLE_LIMIT",
            Error::PressurePositive(_) => "PRESSURE_POSITIVE",
            Error::BelowThreshold(_) => "BELOW_THRESHOLD",
            Error::PressureNotZero(_) => "PRESSURE_NOT_ZERO",
            Error::EmptyNw(_) => "EMPTY_NW",
            Error::Divergent(_) => "DIVERGENT",
            Error::BeamOverflow(_) => "BEAM_OVERFLOW",
            Error::UnboundedPotential(_) => "UNBOUNDED_POTENTIAL",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

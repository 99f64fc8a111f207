use thiserror::Error;

/// Crate-wide error type. Variants map onto the failure modes of the
/// arithmetic, ceiling, flow, stretch and correlation layers; the CLI
/// translates them into process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An exact construction would exceed the configured digit budget.
    #[error("resource limit at level {level} direction {direction}: {detail}")]
    ResourceLimit {
        level: usize,
        direction: usize,
        detail: String,
    },

    /// A query needs more continued-fraction levels than are stored.
    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),

    /// q_n^{(j)} * alpha_j landed on an integer for the rational stand-in.
    #[error("resonant denominator at (j={j}, n={n})")]
    Resonance { j: usize, n: usize },

    /// A hitting-count bracket degenerated to an exact boundary.
    #[error("boundary tie between N={lo} and N={hi}")]
    BoundaryTie { lo: i64, hi: i64 },

    /// m or t fell outside every admissible stretch window.
    #[error("window mismatch: {0}")]
    WindowMismatch(String),

    #[error("unsupported box shape: {0}")]
    UnsupportedShape(String),

    /// theta = t^(-1/4+eps) is not below 1/4, so no good bands exist.
    #[error("infeasible margin: theta={theta} for t={t}")]
    InfeasibleMargin { theta: f64, t: f64 },

    /// A temporal bump escaped the certified stay-in-M_zeta time set.
    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(usize),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

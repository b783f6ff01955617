use thiserror::Error;

/// Errors raised by the simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cutoff {cutoff} too small: truncated tail population {tail:.3e} exceeds 1e-10")]
    CutoffTooSmall { cutoff: usize, tail: f64 },

    #[error("odd cat state is undefined at zero amplitude")]
    DegenerateCat,

    #[error("state shapes do not match: {0:?} vs {1:?}")]
    ShapeMismatch(Vec<usize>, Vec<usize>),

    #[error("operation requires a single-mode state, got {0} modes")]
    MultiModeUnsupported(usize),

    #[error("mode index {index} out of range for a {modes}-mode state")]
    BadModeIndex { index: usize, modes: usize },

    #[error("loss must lie in [0, 1], got {0}")]
    BadLoss(f64),

    #[error("conditioning outcome has probability {0:.3e} (unreachable pattern)")]
    ZeroProbability(f64),

    #[error("degenerate beam-splitter setting: {0}")]
    DegenerateSplit(String),

    #[error("no reflectivity R_A in (0, 1) reaches gain {gain} (R_B = {r_b}, R_E = {r_e})")]
    NoFeasibleRA { gain: f64, r_b: f64, r_e: f64 },

    #[error("unsupported click pattern: {0}")]
    UnsupportedPattern(String),

    #[error("PSK ensemble is linearly dependent (eigenvalue {0:.3e}); USD is undefined")]
    SingularEnsemble(f64),

    #[error("numerical domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state norm deficit {0:.3e} after truncation exceeds tolerance")]
    NormalizationDeficit(f64),

    #[error("coherent-branch state would exceed {limit} branches")]
    TooManyBranches { limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

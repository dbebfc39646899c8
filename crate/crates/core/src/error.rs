use thiserror::Error;

/// Errors produced by the double-dot model and its solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("energy {0} is outside the open band (-2, 2)")]
    EnergyOutOfBand(f64),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("zero vector has no phase rigidity")]
    ZeroVector,

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("eigensolver failed to converge")]
    NumericalFailure,

    #[error("defective decomposition: {0}")]
    DefectiveDecomposition(String),

    #[error("resolvent (E - H_eff) is singular at E = {0}")]
    SingularResolvent(f64),

    #[error("single-level dots have no coupling-independent transmission zeros")]
    NoZeros,

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("critical energy {0} lies outside the band")]
    CriticalOutOfBand(f64),

    #[error("no fixed-point root in band for state {0}")]
    NoRootInBand(usize),

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error("cannot identify the eigenvalue pair at the search seed")]
    AmbiguousPair,

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

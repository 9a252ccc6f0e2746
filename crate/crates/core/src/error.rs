use thiserror::Error;

#[derive(Debug, Error)]
pub enum QmeasError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("negative radicand {0:.3e} below tolerance")]
    NegativeRadicand(f64),

    #[error("model has no pointer labelled {0:?}")]
    MissingPointer(String),

    #[error("pointers {0:?} and {1:?} do not commute")]
    PointersDoNotCommute(String, String),

    #[error("abstract model carries no interaction unitary")]
    NoDynamics,

    #[error("noise pointer has nonzero mean {0:.3e} in the apparatus state")]
    BiasedNoise(f64),

    #[error("invalid tolerances: need 0 < tol_alg <= tol_rel < 1, got {tol_alg}, {tol_rel}")]
    InvalidTolerances { tol_alg: f64, tol_rel: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QmeasError>;

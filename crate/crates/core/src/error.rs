use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid projective point: both homogeneous coordinates vanish")]
    InvalidProjPoint,

    #[error("degenerate group element: |det - 1| = {0:e}")]
    DegenerateElement(f64),

    #[error("binary form has no nonzero coefficient")]
    ZeroForm,

    #[error("truncation order {got} is below the minimum {min}")]
    TruncationTooLow { got: u32, min: u32 },

    #[error("substitution is not invertible at the requested truncation order")]
    NotInvertible,

    #[error("all slice coordinates vanish through order {0}")]
    VanishingSlice(u32),

    #[error("vanishing leading coefficient in slice coordinate")]
    VanishingLead,

    #[error("source field has nonzero mean {0:e}; it is not a Laplacian image")]
    NonzeroMean(f64),

    #[error("grid resolution {got} is below the minimum {min}")]
    GridTooCoarse { got: usize, min: usize },

    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("invalid quasi-homogeneous spec: {0}")]
    InvalidSpec(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("sampling budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

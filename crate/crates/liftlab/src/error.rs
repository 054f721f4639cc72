use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {residual:.3e} exceeds tol {tol:.3e})")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("matrix is indefinite beyond tolerance (eigenvalue {min_eig:.3e} < -{tol:.3e})")]
    IndefiniteBeyondTolerance { min_eig: f64, tol: f64 },

    #[error("operator is not a contraction (norm {norm:.6} > 1 + {tol:.1e})")]
    NotContraction { norm: f64, tol: f64 },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("dimension mismatch: {context}")]
    DimMismatch { context: String },

    #[error(
        "omega is not isometric (residual {residual:.3e}); data set invalid or rank_tol too coarse"
    )]
    OmegaNotIsometric { residual: f64 },

    #[error("omega_B is not isometric (residual {residual:.3e}); truncation too coarse, raise N")]
    OmegaBNotIsometric { residual: f64 },

    #[error("resolvent (I - lambda Z) is singular at lambda = {lambda}")]
    SingularResolvent { lambda: String },

    #[error("realization is not controllable")]
    NotControllable,

    #[error("realization is not isometric")]
    NotIsometric,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(context: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
        }
    }

    pub(crate) fn dim(context: impl Into<String>) -> Self {
        Error::DimMismatch {
            context: context.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M_ij - conj(M_ji)| = {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("no tabulated Hamiltonian for R = {0} Å")]
    UnsupportedDistance(f64),

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid config `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-supplied configuration or input.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::UnsupportedDistance(_) | Error::NotNormalized { .. }
        )
    }
}

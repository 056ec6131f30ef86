use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |H - H\u{2020}| = {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("parameter {name} = {value} outside valid range {range}")]
    ParameterRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("schedule is singular on the interior grid near s = {s}")]
    SingularSchedule { s: f64 },

    #[error("quadrature failed to converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("eigensolver failed to converge (off-diagonal norm {off:.3e})")]
    EigenConvergence { off: f64 },

    #[error("accuracy failure: {what} drift {drift:.3e} exceeds {limit:.3e}; use a finer time grid")]
    Accuracy {
        what: &'static str,
        drift: f64,
        limit: f64,
    },

    #[error("density matrix lost positivity (min eigenvalue {min_eig:.3e})")]
    Positivity { min_eig: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("pulse is not single-lobed: Gaussian fit relative residual {residual:.3e} exceeds 0.1")]
    FitQuality { residual: f64 },

    #[error("unknown reproduction target `{0}`")]
    UnknownTarget(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

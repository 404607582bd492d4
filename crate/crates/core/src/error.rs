use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside model domain [{t_min}, {t_max}]")]
    Domain { t: f64, t_min: f64, t_max: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate classical basis: initial Wronskian is {0:e}")]
    DegenerateBasis(f64),

    #[error("invariant omega = {0} is not positive; swap u and v or negate v")]
    NonPositiveOmega(f64),

    #[error("overdamped regime: w1^2 = {w1_sq} <= gamma^2/4 = {quarter_gamma_sq}")]
    Overdamped { w1_sq: f64, quarter_gamma_sq: f64 },

    #[error("v vanishes near t = {t} on the integration path of the legacy delta")]
    SingularPath { t: f64 },

    #[error("grid too small: support needs [{required_min}, {required_max}], grid covers [{x_min}, {x_max}]")]
    GridTooSmall {
        required_min: f64,
        required_max: f64,
        x_min: f64,
        x_max: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("configuration error at {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

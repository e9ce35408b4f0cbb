use thiserror::Error;

/// Errors raised anywhere in the calibration and pricing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("missing observation: no row for {0}")]
    MissingDay(chrono::NaiveDate),

    #[error("dates not strictly increasing at row {0}")]
    Unordered(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular design matrix in {0} regression")]
    SingularDesign(&'static str),

    #[error("non-mean-reverting fit: lambda_2 = {0} is outside (0, 1)")]
    NonMeanRevertingTrend(f64),

    #[error("volatility fit not mean-reverting: phi_0 = {0} is outside (0, 1)")]
    NonMeanRevertingVol(f64),

    #[error("degenerate regression weights: {0}")]
    DegenerateWeights(&'static str),

    #[error("negative seasonal variance: sigma^2({t}) = {value}")]
    NegativeVariance { t: f64, value: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("gamma support violated: detrended index for year {year} is {value}")]
    GammaSupport { year: i32, value: f64 },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("singular system: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("division hazard: |f(t, x, l0)| = {value:e} at node (t[{t_index}] = {t}, x[{x_index}] = {x})")]
    DivisionHazard {
        t_index: usize,
        x_index: usize,
        t: f64,
        x: f64,
        value: f64,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("unknown manufactured case `{0}` (registered: MMS-0, MMS-1, MMS-2)")]
    UnknownCase(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

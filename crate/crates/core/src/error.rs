use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("kernel singularity: evaluation at z = 0")]
    Singular,

    #[error("invalid input: {0}")]
    Input(String),

    #[error("integration blow-up at t = {t}: {reason}")]
    Blowup { t: f64, reason: String },

    #[error("degenerate flow derivative at tracer node ({i}, {j}): |∂X| = {value:e}")]
    DegenerateDerivative { i: i64, j: i64, value: f64 },

    #[error("{}", format_config_error(.path, *.line, .message))]
    Config {
        path: Option<PathBuf>,
        line: Option<usize>,
        message: String,
    },

    #[error("insufficient memory: finest level needs ~{needed_mb} MiB, limit is {limit_mb} MiB")]
    Memory { needed_mb: u64, limit_mb: u64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn format_config_error(path: &Option<PathBuf>, line: Option<usize>, message: &str) -> String {
    match (path, line) {
        (Some(p), Some(l)) => format!("{}:{}: {}", p.display(), l, message),
        (Some(p), None) => format!("{}: {}", p.display(), message),
        (None, Some(l)) => format!("line {}: {}", l, message),
        (None, None) => message.to_string(),
    }
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: None,
            line,
            message: msg.into(),
        }
    }
}

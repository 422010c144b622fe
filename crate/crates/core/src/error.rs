use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the sensing pipeline.
///
/// The CLI maps [`Error::Config`] to exit code 2 and every data-side failure
/// (parse, format, window, training data) to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}{}: {msg}", record_suffix(*.record))]
    Parse {
        line: usize,
        record: Option<usize>,
        msg: String,
    },

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("window error: {0}")]
    Window(String),

    #[error("degenerate static component: mean |H_s|^2 = {0:e}")]
    DegenerateStatic(f64),

    #[error("synthesis error: {0}")]
    Synthesis(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("model file error: {0}")]
    ModelFile(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn record_suffix(record: Option<usize>) -> String {
    match record {
        Some(r) => format!(" (record {r})"),
        None => String::new(),
    }
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad configuration rather than bad data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

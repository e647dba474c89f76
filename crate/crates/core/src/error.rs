use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A state violated the physical validity conditions (h > 0, rho > 0, p > 0).
    #[error("invalid state{}: {what}", fmt_cell(*.cell))]
    Domain { what: String, cell: Option<usize> },

    #[error("flux scheme failure: {0}")]
    Scheme(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("config error{}: {msg}", fmt_line(*.line))]
    Config { line: Option<usize>, msg: String },

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("inference error: {0}")]
    Inference(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    /// Non-finite values appeared during time stepping.
    #[error("non-finite value at step {step}, cell {cell}, component {component}")]
    NonFinite {
        step: u64,
        cell: usize,
        component: usize,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

fn fmt_cell(cell: Option<usize>) -> String {
    cell.map(|c| format!(" in cell {c}")).unwrap_or_default()
}

fn fmt_line(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

impl Error {
    pub fn domain(what: impl Into<String>) -> Self {
        Error::Domain {
            what: what.into(),
            cell: None,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            msg: msg.into(),
        }
    }

    pub fn config_at(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line: Some(line),
            msg: msg.into(),
        }
    }

    /// Attach a cell index to a domain error that has none yet.
    pub fn at_cell(self, cell: usize) -> Self {
        match self {
            Error::Domain { what, cell: None } => Error::Domain {
                what,
                cell: Some(cell),
            },
            other => other,
        }
    }
}

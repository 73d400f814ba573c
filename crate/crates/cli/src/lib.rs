//! File formats, premise checks and the trial runner behind the `q2mpc` binary.

pub mod check;
pub mod formats;
pub mod trials;

use thiserror::Error;

use q2mpc_core::engine::EngineError;
use q2mpc_core::field::FieldError;
use q2mpc_core::msp::MspError;
use q2mpc_core::simnet::AdversaryError;
use q2mpc_core::structures::StructureError;

pub use formats::ParseError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Msp(#[from] MspError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("premise check failed")]
    CheckFailed,
    #[error("protocol failure: {0}")]
    ProtocolFailure(String),
}

impl CliError {
    /// 2 for unusable input, 3 when the structure or span program does not
    /// meet the protocol's premises, 4 when a run fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. }
            | CliError::Io { .. }
            | CliError::Usage(_)
            | CliError::Adversary(_)
            | CliError::Field(_)
            | CliError::Msp(_) => 2,
            CliError::Structure(_) | CliError::CheckFailed => 3,
            CliError::Engine(e) => match e {
                EngineError::StructureViolation(_)
                | EngineError::NotQ2
                | EngineError::NotRejected
                | EngineError::NoMultiplication
                | EngineError::Structure(_) => 3,
                EngineError::UnassignedInput(_)
                | EngineError::UnknownOwner { .. }
                | EngineError::FieldMismatch { .. } => 2,
                EngineError::TooManyRestarts(_) | EngineError::Protocol(_) => 4,
            },
            CliError::ProtocolFailure(_) => 4,
        }
    }
}

/// Reads `path` and parses it with `parse`.
pub fn load<T>(path: &str, parse: fn(&str) -> Result<T, ParseError>) -> Result<T, CliError> {
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })?;
    parse(&src).map_err(|source| CliError::Parse {
        path: path.to_string(),
        source,
    })
}

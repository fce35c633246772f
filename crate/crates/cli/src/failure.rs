//! Command failures and their exit codes.

use std::fmt;
use std::process::ExitCode;

use elm_metalearn::Error as CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Bad input from the caller: exit code 1.
    Validation,
    /// Something broke while doing the work: exit code 2.
    Runtime,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub error: anyhow::Error,
}

pub type CmdResult<T> = std::result::Result<T, Failure>;

impl Failure {
    pub fn validation(msg: impl fmt::Display) -> Self {
        Failure {
            kind: FailureKind::Validation,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        Failure {
            kind: FailureKind::Runtime,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    /// Prefixes the message, keeping the kind.
    pub fn context(self, ctx: impl fmt::Display) -> Self {
        Failure {
            kind: self.kind,
            error: self.error.context(ctx.to_string()),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self.kind {
            FailureKind::Validation => ExitCode::from(1),
            FailureKind::Runtime => ExitCode::from(2),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let kind = match e {
            CoreError::InvalidArgument(_)
            | CoreError::ConfigHashMismatch { .. }
            | CoreError::Schema(_)
            | CoreError::MissingTarget(_)
            | CoreError::DuplicateName(_) => FailureKind::Validation,
            _ => FailureKind::Runtime,
        };
        // the message already carries the source, so the chain is dropped
        Failure {
            kind,
            error: anyhow::anyhow!("{e}"),
        }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure { kind: FailureKind::Runtime, error: e.into() }
            }
        }
    )*};
}

runtime_from!(std::io::Error, csv::Error, serde_json::Error);

use std::fmt;
use std::process::ExitCode;

use staple_forge_core::corpus::CorpusError;
use staple_forge_core::methods::MethodError;
use staple_forge_core::textproc::BpeError;
use staple_forge_core::translator::TranslatorError;

/// Failure classes of the exit-code contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad input, bad flags, unreadable or unwritable paths.
    Input,
    /// Valid input with nothing to do.
    Empty,
    Internal,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Input,
            message: message.into(),
        }
    }

    pub fn empty(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Empty,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Internal,
            message: message.into(),
        }
    }

    /// Prefixes the message with the path or stage it concerns.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self.kind {
            Kind::Input => 2,
            Kind::Empty => 3,
            Kind::Internal => 1,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<BpeError> for CliError {
    fn from(e: BpeError) -> Self {
        match e {
            BpeError::EmptyCorpus => CliError::empty(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<TranslatorError> for CliError {
    fn from(e: TranslatorError) -> Self {
        match e {
            TranslatorError::EmptyCorpus => CliError::empty(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<MethodError> for CliError {
    fn from(e: MethodError) -> Self {
        match e {
            MethodError::Translator(t) => t.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

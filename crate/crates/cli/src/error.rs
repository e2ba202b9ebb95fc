use std::fmt;

/// Exit status 2 for bad input, 1 for anything that fails while running.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub validation: bool,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            validation: true,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            validation: false,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.validation {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<mnr_core::Error> for CliError {
    fn from(e: mnr_core::Error) -> Self {
        use mnr_core::Error::*;
        let validation = matches!(
            e,
            DimensionMismatch(_)
                | TooFewPoints(_)
                | NegativeUncertainty { .. }
                | NonFinite(_)
                | AmbiguousErrors
                | NotSymmetric { .. }
                | NotPositiveSemiDefinite { .. }
                | DegenerateAbscissa
                | InvalidSpec(_)
                | InvalidConfig(_)
                | CoupledModel
                | Empty(_)
        );
        Self {
            validation,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::runtime(e.to_string())
    }
}

use std::fmt;

use microsynth_core::cart::SynthError;
use microsynth_core::econ::EconError;
use microsynth_core::eval::EvalError;
use microsynth_core::table::TableError;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, config files or specs.
    Config(String),
    /// Unreadable or inconsistent input data.
    Data(String),
    /// Too many synthetic rows could not satisfy a consistency rule.
    Consistency(String),
    /// Some model failed on every dataset.
    Fits(String),
    /// Writing an output failed.
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Consistency(_) => 4,
            CliError::Fits(_) => 5,
            CliError::Output(_) => 1,
        }
    }

    pub fn config(e: impl fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn data(e: impl fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Consistency(m) => write!(f, "consistency abort: {m}"),
            CliError::Fits(m) => write!(f, "model fitting failed: {m}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Config(_) => CliError::config(e),
            SynthError::ConsistencyAbort { .. } => CliError::Consistency(e.to_string()),
            SynthError::Table(TableError::UnknownColumn(_) | TableError::Predicate(_)) => CliError::config(e),
            _ => CliError::data(e),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(_) | EvalError::UnknownFeature(_) => CliError::config(e),
            _ => CliError::data(e),
        }
    }
}

impl From<EconError> for CliError {
    fn from(e: EconError) -> Self {
        match e {
            EconError::Spec(_) => CliError::config(e),
            _ => CliError::data(e),
        }
    }
}

//! Error type and exit-code mapping: 2 for validation problems, 3 for
//! numeric non-convergence.

use repmix_core::mixture::ModelError;
use repmix_core::numerics::NumericsError;
use repmix_core::summaries::SummaryError;

#[derive(Debug)]
pub enum CliError {
    Config(crate::config::ConfigError),
    Load(crate::dataset::LoadError),
    Model(ModelError),
    Summary(SummaryError),
    Serialize(serde_json::Error),
    Write { path: String, source: std::io::Error },
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Load(e) => write!(f, "{e}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Summary(e) => write!(f, "{e}"),
            CliError::Serialize(e) => write!(f, "serialization: {e}"),
            CliError::Write { path, source } => write!(f, "cannot write `{path}`: {source}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<crate::dataset::LoadError> for CliError {
    fn from(e: crate::dataset::LoadError) -> Self {
        CliError::Load(e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Model(e)
    }
}

impl From<SummaryError> for CliError {
    fn from(e: SummaryError) -> Self {
        CliError::Summary(e)
    }
}

impl CliError {
    /// 2 for anything the user can fix in the input, 3 when the numerics
    /// failed to converge.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(ModelError::Numerics(e)) => numeric_exit(e),
            CliError::Summary(SummaryError::Numerics(e)) => numeric_exit(e),
            CliError::Summary(SummaryError::Model(ModelError::Numerics(e))) => numeric_exit(e),
            _ => 2,
        }
    }
}

fn numeric_exit(e: &NumericsError) -> u8 {
    match e {
        NumericsError::QuadratureBudget { .. } | NumericsError::NoBracket { .. } => 3,
        _ => 2,
    }
}

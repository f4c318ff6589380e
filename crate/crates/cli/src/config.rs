//! Resolved analysis configuration shared by all subcommands.

use serde::Serialize;

/// Environment variable that overrides the default vague-component variance.
/// An explicit `--tau2` flag wins over the environment.
pub const TAU2_ENV_VAR: &str = "REPMIX_DEFAULT_TAU2";
const DEFAULT_TAU2: f64 = 2.0;

#[derive(Debug)]
pub enum ConfigError {
    Invalid { field: String, message: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Invalid { field, message } => write!(f, "{field}: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_owned(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    PerReplication,
    Pooled,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Fixed(f64),
    Beta { eta: f64, nu: f64 },
    EmpiricalBayes,
}

/// Settings every analysis shares: the vague component, credibility level,
/// pooling choice, and weight handling.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisConfig {
    pub mu: f64,
    pub tau2: f64,
    pub level: f64,
    pub pooling: Pooling,
    pub round_pooled: bool,
    /// Present only for commands that fix or model the weight directly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_mode: Option<WeightMode>,
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.mu.is_finite() {
            return Err(invalid("--mu", format!("must be finite, got {}", self.mu)));
        }
        if !(self.tau2.is_finite() && self.tau2 > 0.0) {
            return Err(invalid(
                "--tau2",
                format!("must be positive and finite, got {}", self.tau2),
            ));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid(
                "--level",
                format!("must lie strictly inside (0, 1), got {}", self.level),
            ));
        }
        match self.weight_mode {
            Some(WeightMode::Fixed(w)) if !(0.0..=1.0).contains(&w) => {
                Err(invalid("--weight", format!("must lie in [0, 1], got {w}")))
            }
            Some(WeightMode::Beta { eta, nu }) if !(eta > 0.0 && nu > 0.0) => Err(invalid(
                "--eta/--nu",
                format!("shape parameters must be positive, got eta={eta}, nu={nu}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn vague(&self) -> repmix_core::VagueComponent {
        repmix_core::VagueComponent { mu: self.mu, tau2: self.tau2 }
    }
}

/// The τ² default: the environment override when present, 2 otherwise.
pub fn default_tau2() -> Result<f64, ConfigError> {
    match std::env::var(TAU2_ENV_VAR) {
        Ok(raw) => raw.trim().parse::<f64>().map_err(|_| {
            invalid(
                TAU2_ENV_VAR,
                format!("must parse as a number, got `{raw}`"),
            )
        }),
        Err(_) => Ok(DEFAULT_TAU2),
    }
}

/// Pooling choice from the three mutually exclusive flags; `both` is the
/// default.
pub fn pooling_from_flags(pooled: bool, per_rep: bool, both: bool) -> Pooling {
    match (pooled, per_rep, both) {
        (true, _, _) => Pooling::Pooled,
        (_, true, _) => Pooling::PerReplication,
        _ => Pooling::Both,
    }
}

/// The analysis rows selected by the pooling mode: replications in input
/// order, the pooled summary last.
pub fn select_rows(
    set: &repmix_core::ReplicationSet,
    pooling: Pooling,
    round_pooled: bool,
) -> Vec<repmix_core::StudySummary> {
    let pooled = || {
        let p = set.pooled();
        if round_pooled {
            p.rounded(2)
        } else {
            p
        }
    };
    match pooling {
        Pooling::PerReplication => set.replications.clone(),
        Pooling::Pooled => vec![pooled()],
        Pooling::Both => {
            let mut rows = set.replications.clone();
            rows.push(pooled());
            rows
        }
    }
}

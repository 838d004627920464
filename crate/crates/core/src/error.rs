use thiserror::Error;

/// Broken model invariants. These indicate a logic bug, not bad input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("event scheduled in the past: at {at} but clock is {now}")]
    ScheduledInPast { at: f64, now: f64 },
    #[error("staff {staff} asked to serve in role {role} from the wrong queue")]
    RoleQueueMismatch { staff: usize, role: &'static str },
    #[error("staff {staff} is not idle")]
    StaffNotIdle { staff: usize },
    #[error("customer {customer} reached the till without browsing")]
    PayWithoutBrowse { customer: usize },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid run plan: {0}")]
    Plan(String),
    #[error("target {target} outside achievable range [{low}, {high}]")]
    Uncalibratable { target: f64, low: f64, high: f64 },
}

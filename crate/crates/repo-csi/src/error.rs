//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

use crate::stability::Component;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Retry budget exhausted against a remote endpoint.
    #[error("source unavailable: {endpoint} failed after {attempts} attempts (last status: {})",
            .last_status.map(|s| s.to_string()).unwrap_or_else(|| "none".into()))]
    SourceUnavailable {
        endpoint: String,
        attempts: u32,
        last_status: Option<u16>,
    },

    /// The remote rejected our credentials (401/403). Not retried.
    #[error("authentication rejected for {endpoint}; set a token (see --token-env)")]
    AuthRequired { endpoint: String },

    /// 404 from the repository endpoint. Not retried.
    #[error("repository not found: {repo}")]
    RepoNotFound { repo: String },

    /// A fixture file failed schema validation; `detail` names the first offending record.
    #[error("malformed fixture {}: {detail}", .path.display())]
    MalformedFixture { path: PathBuf, detail: String },

    /// A remote endpoint answered 2xx with a body we cannot decode.
    #[error("malformed response from {endpoint}: {detail}")]
    MalformedResponse { endpoint: String, detail: String },

    /// The analysis window contains no complete bin at the requested granularity.
    #[error("analysis window contains no complete bin")]
    EmptyWindow,

    /// Mean bin count is zero, so the coefficient of variation is undefined.
    #[error("mean bin count is zero; coefficient of variation undefined")]
    ZeroMean,

    /// Issue denominator is empty (tracker unused or disabled for this window).
    #[error("no issues in denominator")]
    NoIssues,

    /// Pull request denominator is empty.
    #[error("no pull requests in denominator")]
    NoPulls,

    /// No open issues or pull requests at window end; engagement undefined.
    #[error("no open issues or pull requests at window end")]
    NoOpenItems,

    /// An operation over a sample got an empty slice.
    #[error("empty input")]
    EmptyInput,

    /// A normalizer width must be strictly positive.
    #[error("sigma must be strictly positive, got {sigma}")]
    InvalidSigma { sigma: f64 },

    #[error("invalid weights: {detail}")]
    InvalidWeights { detail: String },

    /// Calibration found no stable repository for this component.
    #[error("empty cohort: no stable repository for component {component}")]
    EmptyCohort { component: Component },

    #[error("invalid scenario: {detail}")]
    InvalidSpec { detail: String },

    /// A report document failed to parse back.
    #[error("malformed analysis document: {detail}")]
    MalformedAnalysis { detail: String },

    #[error("invalid window: end must be strictly after start")]
    InvalidWindow,

    #[error("invalid configuration: {detail}")]
    InvalidConfig { detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

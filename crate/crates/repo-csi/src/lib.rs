//! Composite stability index (CSI) for software repositories.
//!
//! The crate turns raw repository event data (commits, issues, pull
//! requests, comments) into a single weighted index of behavioural
//! stability:
//!
//! 1. [`ingestion`] loads events from fixture files or a REST source with a
//!    24-hour disk cache and exponential-backoff retry.
//! 2. [`metrics`] computes the four component measures over an analysis
//!    window: commit-rate smoothness (coefficient of variation over binned
//!    counts), issue closure, pull-request merging, and contributor
//!    activity, together with robust statistics (median, scaled MAD).
//! 3. [`stability`] classifies each component against published thresholds
//!    under an estimator regime: `original` (daily bins, means, cumulative
//!    denominators) or `revised` (weekly bins, medians, window-bounded
//!    denominators).
//! 4. [`csi`] normalizes each measure through a triangular band and folds
//!    the four into the weighted index.
//! 5. [`calibration`] re-derives normalizer bands from the measures of a
//!    stable cohort (median and 1.4826 × MAD).
//! 6. [`synthgen`] generates deterministic synthetic event sets for testing
//!    and benchmarking.
//! 7. [`analysis`] and [`report`] tie the above into batch runs and
//!    reproducible JSON/CSV documents; [`cli`] exposes them as commands.
//!
//! ```
//! use repo_csi::analysis::{analyze_events, BatchOptions, EvaluationSettings};
//! use repo_csi::synthgen::{generate, ScenarioSpec};
//!
//! let events = generate(&ScenarioSpec::baseline(1)).unwrap();
//! let options = BatchOptions::new(EvaluationSettings::default());
//! let window = options.fixture_window(&events).unwrap();
//! let analysis = analyze_events(&events, window, &EvaluationSettings::default()).unwrap();
//! assert!(analysis.csi.csi >= 0.0 && analysis.csi.csi <= 1.0);
//! ```
//!
//! With the `parallel` feature (default) batches fan out over rayon; the
//! sequential fallback is always available. The `net` feature (default)
//! provides the HTTP source; without it the crate is fixture-only.

pub mod analysis;
pub mod calibration;
pub mod cli;
pub mod csi;
pub mod error;
pub mod events;
pub mod ingestion;
pub mod metrics;
pub mod report;
pub mod stability;
pub mod synthgen;

pub use analysis::{analyze_events, EvaluationSettings, RepoAnalysis};
pub use csi::{
    composite_index, evaluate, triangular_normalize, CsiResult, MissingPolicy, NormalizerParams,
    Weights,
};
pub use error::{Error, Result};
pub use events::{AnalysisWindow, EventSet, RepoRef};
pub use metrics::{compute_metrics, robust_stats, MetricVector};
pub use stability::{classify_all, Component, ComponentVerdict, Regime, StabilityThresholds};

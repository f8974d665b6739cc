//! End-to-end pipeline: events → metrics → verdicts → composite index, plus
//! an order-preserving batch driver. With the `parallel` feature the batch
//! fans out over rayon; otherwise the same API runs sequentially.

use std::collections::BTreeSet;
use std::path::PathBuf;

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::csi::{evaluate, CsiResult, MissingPolicy, NormalizerParams, Weights};
use crate::error::{Error, Result};
use crate::events::{ceil_to_utc_day, AnalysisWindow, EventSet, RepoRef};
use crate::ingestion::{fetch_events, load_fixture, CachePolicy, DataSource, RetryPolicy};
use crate::metrics::{compute_metrics, MetricVector};
use crate::stability::{classify_all, ComponentVerdict, Regime, StabilityThresholds};

/// Days in the default five-year window.
pub const DEFAULT_WINDOW_DAYS: i64 = 5 * 365;

/// Everything that parameterizes the evaluation of one event set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationSettings {
    pub regime: Regime,
    pub thresholds: StabilityThresholds,
    pub params: NormalizerParams,
    pub weights: Weights,
    pub missing_policy: MissingPolicy,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        EvaluationSettings {
            regime: Regime::revised(),
            thresholds: StabilityThresholds::default(),
            params: NormalizerParams::default(),
            weights: Weights::default(),
            missing_policy: MissingPolicy::default(),
        }
    }
}

impl EvaluationSettings {
    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        self.params.validate()?;
        self.weights.validate()
    }
}

/// One repository's full analysis record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoAnalysis {
    pub repo: String,
    pub window: AnalysisWindow,
    pub metrics: MetricVector,
    pub verdicts: Vec<ComponentVerdict>,
    pub csi: CsiResult,
}

/// Runs the metric → classification → index pipeline over one event set.
pub fn analyze_events(
    events: &EventSet,
    window: AnalysisWindow,
    settings: &EvaluationSettings,
) -> Result<RepoAnalysis> {
    let metrics = compute_metrics(events, window, settings.regime);
    let verdicts = classify_all(&metrics, settings.regime, &settings.thresholds);
    let csi = evaluate(
        &metrics,
        &verdicts,
        &settings.params,
        &settings.weights,
        settings.missing_policy,
    )?;
    Ok(RepoAnalysis {
        repo: events.repo.to_string(),
        window,
        metrics,
        verdicts,
        csi,
    })
}

/// Drops every record authored by a name in `excluded` (typically bots).
/// Exclusion happens before window anchoring, so excluded events influence
/// nothing downstream.
pub fn exclude_users(events: &mut EventSet, excluded: &BTreeSet<String>) {
    if excluded.is_empty() {
        return;
    }
    events.commits.retain(|c| !excluded.contains(&c.author));
    events.issues.retain(|i| !excluded.contains(&i.author));
    events.pulls.retain(|p| !excluded.contains(&p.author));
    events.comments.retain(|c| !excluded.contains(&c.author));
}

/// One batch entry: a fixture on disk or a remote repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BatchInput {
    Fixture(PathBuf),
    Remote(RepoRef),
}

impl BatchInput {
    pub fn label(&self) -> String {
        match self {
            BatchInput::Fixture(path) => path.display().to_string(),
            BatchInput::Remote(repo) => repo.to_string(),
        }
    }
}

/// Batch-wide knobs. `window_end = None` anchors fixture windows on their own
/// data (first UTC midnight after the final event) and live windows on the
/// current UTC day, keeping cache keys stable across reruns within a day.
pub struct BatchOptions<'a> {
    pub window_end: Option<DateTime<Utc>>,
    pub window_days: i64,
    pub settings: EvaluationSettings,
    pub source: Option<&'a dyn DataSource>,
    pub cache: CachePolicy,
    pub retry: RetryPolicy,
    pub exclude: BTreeSet<String>,
}

impl<'a> BatchOptions<'a> {
    pub fn new(settings: EvaluationSettings) -> Self {
        BatchOptions {
            window_end: None,
            window_days: DEFAULT_WINDOW_DAYS,
            settings,
            source: None,
            cache: CachePolicy::default(),
            retry: RetryPolicy::default(),
            exclude: BTreeSet::new(),
        }
    }

    /// The window a fixture gets by default: `window_end` when set, else the
    /// first UTC midnight after the fixture's final event.
    pub fn fixture_window(&self, events: &EventSet) -> Result<AnalysisWindow> {
        let end = match self.window_end {
            Some(end) => end,
            // One second past the latest event, rounded up, so the final
            // event sits inside the half-open window.
            None => {
                let anchor = events
                    .latest_timestamp()
                    .unwrap_or(events.metadata.created_at);
                ceil_to_utc_day(anchor + Duration::seconds(1))
            }
        };
        AnalysisWindow::ending_at(end, self.window_days)
    }

    fn live_window(&self) -> Result<AnalysisWindow> {
        let end = match self.window_end {
            Some(end) => end,
            None => {
                let secs = Utc::now().timestamp().div_euclid(86_400) * 86_400;
                Utc.timestamp_opt(secs, 0).unwrap()
            }
        };
        AnalysisWindow::ending_at(end, self.window_days)
    }
}

/// Per-repository outcome; errors stay in the batch instead of aborting it.
pub struct RepoOutcome {
    pub label: String,
    pub result: Result<RepoAnalysis>,
}

fn process_one(input: &BatchInput, options: &BatchOptions) -> Result<RepoAnalysis> {
    match input {
        BatchInput::Fixture(path) => {
            let mut events = load_fixture(path)?;
            exclude_users(&mut events, &options.exclude);
            let window = options.fixture_window(&events)?;
            analyze_events(&events, window, &options.settings)
        }
        BatchInput::Remote(repo) => {
            let source = options.source.ok_or_else(|| Error::InvalidConfig {
                detail: format!("no data source configured for remote repository {repo}"),
            })?;
            let window = options.live_window()?;
            let mut events = fetch_events(repo, window, source, &options.cache, &options.retry)?;
            exclude_users(&mut events, &options.exclude);
            analyze_events(&events, window, &options.settings)
        }
    }
}

/// Analyzes each input, preserving input order in the output regardless of
/// completion order. Runs on rayon when the `parallel` feature is enabled.
pub fn analyze_batch(inputs: &[BatchInput], options: &BatchOptions) -> Vec<RepoOutcome> {
    map_inputs(inputs, |input| RepoOutcome {
        label: input.label(),
        result: process_one(input, options),
    })
}

/// Single-threaded variant of [`analyze_batch`]; available regardless of
/// features so the two can be compared.
pub fn analyze_batch_sequential(inputs: &[BatchInput], options: &BatchOptions) -> Vec<RepoOutcome> {
    inputs
        .iter()
        .map(|input| RepoOutcome {
            label: input.label(),
            result: process_one(input, options),
        })
        .collect()
}

/// Evaluates already-loaded event sets (the benchmark surface: no I/O).
pub fn analyze_all(
    sets: &[(String, EventSet, AnalysisWindow)],
    settings: &EvaluationSettings,
) -> Vec<Result<RepoAnalysis>> {
    map_inputs(sets, |(_, events, window)| {
        analyze_events(events, *window, settings)
    })
}

/// Single-threaded variant of [`analyze_all`].
pub fn analyze_all_sequential(
    sets: &[(String, EventSet, AnalysisWindow)],
    settings: &EvaluationSettings,
) -> Vec<Result<RepoAnalysis>> {
    sets.iter()
        .map(|(_, events, window)| analyze_events(events, *window, settings))
        .collect()
}

#[cfg(feature = "parallel")]
fn map_inputs<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Send + Sync) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_inputs<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Send + Sync) -> Vec<R> {
    items.iter().map(f).collect()
}

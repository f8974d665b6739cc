//! Component metrics over an analysis window: binned commit series, rate
//! metrics for issues and pull requests, activity engagement, and the robust
//! statistics (median / MAD) the calibration flow is built on.
//!
//! Conventions shared by every function here:
//!
//! * windows are half-open `[start, end)` (see [`AnalysisWindow`]); the
//!   cumulative denominator alone counts creation `<= end`;
//! * daily bins are UTC calendar days (a leading partial day before the first
//!   UTC midnight is dropped); weekly bins are 7-day blocks anchored at the
//!   window start; trailing partial bins are dropped;
//! * times are in days (f64, 86 400 s per day);
//! * standard deviation is the population form.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{ceil_to_utc_day, AnalysisWindow, EventSet, IssueRecord, PullRequestRecord};
use crate::stability::{Component, Regime};

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Daily,
    Weekly,
}

impl Granularity {
    pub fn width_seconds(self) -> i64 {
        match self {
            Granularity::Daily => SECONDS_PER_DAY,
            Granularity::Weekly => 7 * SECONDS_PER_DAY,
        }
    }
}

/// Which population the closure/merge ratio divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenominatorMode {
    /// Everything created at or before window end.
    Cumulative,
    /// Only items created within the window.
    Windowed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralTendency {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    pub start: DateTime<Utc>,
    pub count: u64,
}

/// Event counts over contiguous, non-overlapping bins of one granularity.
/// The covered span may be narrower than the window: partial bins at either
/// edge are dropped, so the conservation invariant (sum of counts = number of
/// events) holds over `[origin, origin + n*width)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinnedSeries {
    pub granularity: Granularity,
    pub bins: Vec<Bin>,
}

impl BinnedSeries {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.bins.iter().map(|b| b.count)
    }

    /// Convenience constructor for tests and synthetic series; bin starts are
    /// laid out contiguously from `origin`.
    pub fn from_counts(
        granularity: Granularity,
        origin: DateTime<Utc>,
        counts: impl IntoIterator<Item = u64>,
    ) -> Self {
        let width = chrono::Duration::seconds(granularity.width_seconds());
        let bins = counts
            .into_iter()
            .enumerate()
            .map(|(k, count)| Bin {
                start: origin + width * (k as i32),
                count,
            })
            .collect();
        BinnedSeries { granularity, bins }
    }
}

/// Bins in-window events at the given granularity. Events outside the window
/// or in a dropped partial bin are excluded.
pub fn bin_events(
    timestamps: &[DateTime<Utc>],
    window: AnalysisWindow,
    granularity: Granularity,
) -> BinnedSeries {
    let width = granularity.width_seconds();
    let origin = match granularity {
        Granularity::Daily => ceil_to_utc_day(window.start),
        Granularity::Weekly => window.start,
    };
    let origin_s = origin.timestamp();
    let span = window.end.timestamp() - origin_s;
    let n_bins = if span > 0 { (span / width) as usize } else { 0 };

    let mut series = BinnedSeries::from_counts(granularity, origin, vec![0; n_bins]);
    for &t in timestamps {
        if !window.contains(t) {
            continue;
        }
        let offset = t.timestamp() - origin_s;
        if offset < 0 {
            continue;
        }
        let idx = (offset / width) as usize;
        if idx < n_bins {
            series.bins[idx].count += 1;
        }
    }
    series
}

/// Mean bin count: events per bin-width, averaged over the window.
pub fn commit_frequency(series: &BinnedSeries) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(series.total() as f64 / series.len() as f64)
}

/// Population standard deviation of bin counts divided by their mean.
/// Needs at least two bins; a zero mean means "insufficient activity".
pub fn coefficient_of_variation(series: &BinnedSeries) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::EmptyWindow);
    }
    let n = series.len() as f64;
    let mean = series.total() as f64 / n;
    if mean == 0.0 {
        return Err(Error::ZeroMean);
    }
    let var = series
        .counts()
        .map(|c| {
            let d = c as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(var.sqrt() / mean)
}

/// Output of [`issue_resolution_rate`] / [`pr_merge_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateMetrics {
    /// Closed (merged) count over the selected denominator.
    pub ratio: f64,
    /// Central tendency of resolution (review) time, in days; 0 when nothing
    /// closed (merged) in the window.
    pub time_days: f64,
    /// `ratio * 1 / (1 + time_days)`.
    pub full: f64,
}

fn rate_metrics(
    created: impl Iterator<Item = DateTime<Utc>> + Clone,
    resolved: impl Iterator<Item = (DateTime<Utc>, DateTime<Utc>)>,
    window: AnalysisWindow,
    denom: DenominatorMode,
    tendency: CentralTendency,
    empty_denominator: Error,
) -> Result<RateMetrics> {
    let denominator = match denom {
        DenominatorMode::Cumulative => created.filter(|&t| t <= window.end).count(),
        DenominatorMode::Windowed => created.filter(|&t| window.contains(t)).count(),
    };
    if denominator == 0 {
        return Err(empty_denominator);
    }

    let ages: Vec<f64> = resolved
        .filter(|&(created_at, resolved_at)| {
            window.contains(resolved_at)
                && match denom {
                    DenominatorMode::Cumulative => true,
                    DenominatorMode::Windowed => window.contains(created_at),
                }
        })
        .map(|(created_at, resolved_at)| {
            (resolved_at - created_at).num_seconds() as f64 / SECONDS_PER_DAY as f64
        })
        .collect();

    let ratio = ages.len() as f64 / denominator as f64;
    let time_days = if ages.is_empty() {
        0.0
    } else {
        match tendency {
            CentralTendency::Mean => ages.iter().sum::<f64>() / ages.len() as f64,
            CentralTendency::Median => median_of(ages.clone()),
        }
    };
    Ok(RateMetrics {
        ratio,
        time_days,
        full: ratio / (1.0 + time_days),
    })
}

/// Fraction of issues closed in-window over the selected denominator, with
/// the resolution-time statistic and the full time-discounted value. Under
/// windowed mode the numerator and time sample are restricted to issues also
/// created in-window, which keeps the ratio in [0, 1].
pub fn issue_resolution_rate(
    issues: &[IssueRecord],
    window: AnalysisWindow,
    denom: DenominatorMode,
    tendency: CentralTendency,
) -> Result<RateMetrics> {
    rate_metrics(
        issues.iter().map(|i| i.created_at),
        issues
            .iter()
            .filter_map(|i| i.closed_at.map(|c| (i.created_at, c))),
        window,
        denom,
        tendency,
        Error::NoIssues,
    )
}

/// Symmetric to [`issue_resolution_rate`] with merge in place of closure.
/// A merged PR counts as merged regardless of its closed_at.
pub fn pr_merge_rate(
    pulls: &[PullRequestRecord],
    window: AnalysisWindow,
    denom: DenominatorMode,
    tendency: CentralTendency,
) -> Result<RateMetrics> {
    rate_metrics(
        pulls.iter().map(|p| p.created_at),
        pulls
            .iter()
            .filter_map(|p| p.merged_at.map(|m| (p.created_at, m))),
        window,
        denom,
        tendency,
        Error::NoPulls,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityMetrics {
    /// comments per open item, scaled by the active-user ratio.
    pub engagement: f64,
    /// distinct in-window commenters/committers/PR authors over all authors
    /// ever ingested.
    pub active_user_ratio: f64,
}

/// Distinct users commenting, committing, or opening PRs within the window,
/// over the distinct users of the full ingested history. 0 when the history
/// has no users at all.
pub fn active_user_ratio(events: &EventSet, window: AnalysisWindow) -> f64 {
    let total = events.all_users();
    if total.is_empty() {
        return 0.0;
    }
    let mut active = BTreeSet::new();
    active.extend(
        events
            .comments
            .iter()
            .filter(|c| window.contains(c.timestamp))
            .map(|c| c.author.as_str()),
    );
    active.extend(
        events
            .commits
            .iter()
            .filter(|c| window.contains(c.timestamp))
            .map(|c| c.author.as_str()),
    );
    active.extend(
        events
            .pulls
            .iter()
            .filter(|p| window.contains(p.created_at))
            .map(|p| p.author.as_str()),
    );
    active.len() as f64 / total.len() as f64
}

/// Comments per open item at window end, scaled by the active-user ratio.
/// Open counts are cumulative totals minus cumulative closures/merges, both
/// evaluated at window end (`<= end`).
pub fn activity_engagement(events: &EventSet, window: AnalysisWindow) -> Result<ActivityMetrics> {
    let end = window.end;
    let open_issues = events.issues.iter().filter(|i| i.created_at <= end).count()
        - events
            .issues
            .iter()
            .filter(|i| i.closed_at.is_some_and(|c| c <= end))
            .count();
    let open_pulls = events.pulls.iter().filter(|p| p.created_at <= end).count()
        - events
            .pulls
            .iter()
            .filter(|p| p.merged_at.is_some_and(|m| m <= end))
            .count();
    let open_items = open_issues + open_pulls;
    if open_items == 0 {
        return Err(Error::NoOpenItems);
    }
    let n_comments = events
        .comments
        .iter()
        .filter(|c| window.contains(c.timestamp))
        .count();
    let ratio = active_user_ratio(events, window);
    Ok(ActivityMetrics {
        engagement: (n_comments as f64 / open_items as f64) * ratio,
        active_user_ratio: ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustStats {
    pub median: f64,
    pub mad: f64,
    /// 1.4826 × MAD (normal-consistency scaling).
    pub scaled_mad: f64,
}

pub const MAD_SCALE: f64 = 1.4826;

/// Median by selection (no full sort): for even lengths, the mean of the two
/// middle elements (the upper middle from `select_nth_unstable`, the lower as
/// the max of the left partition).
fn median_of(mut values: Vec<f64>) -> f64 {
    let n = values.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) / 2.0
    }
}

/// Median, median absolute deviation, and scaled MAD of a non-empty sample.
pub fn robust_stats(values: &[f64]) -> Result<RobustStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let median = median_of(values.to_vec());
    let deviations: Vec<f64> = values.iter().map(|v| (v - median).abs()).collect();
    let mad = median_of(deviations);
    Ok(RobustStats {
        median,
        mad,
        scaled_mad: MAD_SCALE * mad,
    })
}

/// All component measures for one repository and window. A component whose
/// inputs don't exist (no issues or tracker disabled, no pulls, no open
/// items, no commit bins) appears in `missing` with its numeric fields
/// zeroed; numeric fields are always finite and non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    /// Commits per bin-width at the regime's granularity (per day under
    /// daily binning, per week under weekly).
    pub c: f64,
    /// Issue closure ratio under the regime's denominator.
    pub i: f64,
    /// PR merge ratio under the regime's denominator.
    pub p: f64,
    /// Activity engagement per Eq-style definition: comments per open item ×
    /// active-user ratio.
    pub a: f64,
    pub cv_daily: f64,
    pub cv_weekly: f64,
    /// `i × 1/(1 + T)` with T the regime's resolution-time statistic.
    pub i_full: f64,
    /// `p × 1/(1 + T)` with T the regime's review-time statistic.
    pub p_full: f64,
    pub mean_resolution_days: f64,
    pub median_resolution_days: f64,
    pub mean_review_days: f64,
    pub median_review_days: f64,
    pub active_user_ratio: f64,
    /// Components whose inputs were absent for this window.
    pub missing: BTreeSet<Component>,
}

/// Assembles the full [`MetricVector`] for one repository. Component-level
/// error modes become `missing` entries rather than hard errors.
pub fn compute_metrics(events: &EventSet, window: AnalysisWindow, regime: Regime) -> MetricVector {
    let commit_times: Vec<DateTime<Utc>> = events.commits.iter().map(|c| c.timestamp).collect();
    let daily = bin_events(&commit_times, window, Granularity::Daily);
    let weekly = bin_events(&commit_times, window, Granularity::Weekly);
    let cv_daily = coefficient_of_variation(&daily).ok();
    let cv_weekly = coefficient_of_variation(&weekly).ok();

    let mut missing = BTreeSet::new();

    let regime_series = match regime.commit_granularity {
        Granularity::Daily => &daily,
        Granularity::Weekly => &weekly,
    };
    let regime_cv = match regime.commit_granularity {
        Granularity::Daily => cv_daily,
        Granularity::Weekly => cv_weekly,
    };
    let c = match (commit_frequency(regime_series), regime_cv) {
        (Ok(c), Some(_)) => c,
        _ => {
            missing.insert(Component::Commit);
            0.0
        }
    };

    let issue_mean =
        issue_resolution_rate(&events.issues, window, regime.denom, CentralTendency::Mean);
    let issue_median = issue_resolution_rate(
        &events.issues,
        window,
        regime.denom,
        CentralTendency::Median,
    );
    let (i, i_full, mean_resolution_days, median_resolution_days) = match (issue_mean, issue_median)
    {
        // A disabled tracker makes the component missing even if stray
        // records are present in the set.
        (Ok(mean), Ok(median)) if events.metadata.has_issues_enabled => {
            let regime_rate = match regime.tendency {
                CentralTendency::Mean => mean,
                CentralTendency::Median => median,
            };
            (
                regime_rate.ratio,
                regime_rate.full,
                mean.time_days,
                median.time_days,
            )
        }
        _ => {
            missing.insert(Component::Issue);
            (0.0, 0.0, 0.0, 0.0)
        }
    };

    let pull_mean = pr_merge_rate(&events.pulls, window, regime.denom, CentralTendency::Mean);
    let pull_median = pr_merge_rate(&events.pulls, window, regime.denom, CentralTendency::Median);
    let (p, p_full, mean_review_days, median_review_days) = match (pull_mean, pull_median) {
        (Ok(mean), Ok(median)) => {
            let regime_rate = match regime.tendency {
                CentralTendency::Mean => mean,
                CentralTendency::Median => median,
            };
            (
                regime_rate.ratio,
                regime_rate.full,
                mean.time_days,
                median.time_days,
            )
        }
        _ => {
            missing.insert(Component::Pull);
            (0.0, 0.0, 0.0, 0.0)
        }
    };

    let user_ratio = active_user_ratio(events, window);
    let a = match activity_engagement(events, window) {
        Ok(m) => m.engagement,
        Err(_) => {
            missing.insert(Component::Activity);
            0.0
        }
    };

    MetricVector {
        c,
        i,
        p,
        a,
        cv_daily: cv_daily.unwrap_or(0.0),
        cv_weekly: cv_weekly.unwrap_or(0.0),
        i_full,
        p_full,
        mean_resolution_days,
        median_resolution_days,
        mean_review_days,
        median_review_days,
        active_user_ratio: user_ratio,
        missing,
    }
}

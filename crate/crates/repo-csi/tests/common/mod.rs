//! Shared test support: a deliberately naive re-implementation of every
//! metric (full sorts, day-by-day scans, explicit filter loops) used as an
//! oracle against the library's optimized paths, plus a scriptable transport
//! and a seed-parameterized scenario family.
//!
//! The oracle favours obviousness over speed on purpose. Where the library
//! computes bin indices with integer division, the oracle walks calendar
//! boundaries with chrono arithmetic; where the library selects medians with
//! `select_nth_unstable`, the oracle sorts the whole sample. Agreement
//! between the two paths is the point.
#![allow(dead_code)]

use std::collections::HashSet;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Days, Duration, NaiveTime, Utc};

use repo_csi::events::{
    AnalysisWindow, CommentRecord, CommitRecord, EventSet, IssueRecord, ParentKind,
    PullRequestRecord, RepoMetadata,
};
use repo_csi::ingestion::{DataSource, SourceResponse};
use repo_csi::metrics::{DenominatorMode, Granularity, MetricVector};
use repo_csi::stability::{Component, Regime};
use repo_csi::synthgen::{CommitProcess, DaysDistribution, LifecycleSpec, ScenarioSpec};

pub fn ts(s: &str) -> DateTime<Utc> {
    s.parse().unwrap()
}

// ---------------------------------------------------------------------------
// Sort-based robust statistics.

pub fn naive_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median by full sort: middle element, or the mean of the two middles.
pub fn naive_median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn naive_mad(values: &[f64]) -> f64 {
    let med = naive_median(values);
    let deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    naive_median(&deviations)
}

/// Population standard deviation over mean; None when undefined.
pub fn naive_cv(counts: &[u64]) -> Option<f64> {
    if counts.len() < 2 {
        return None;
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    if mean == 0.0 {
        return None;
    }
    let var = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    Some(var.sqrt() / mean)
}

// ---------------------------------------------------------------------------
// Calendar-walking binning oracle.

/// First UTC midnight at or after the window start, found by calendar
/// arithmetic rather than integer second rounding.
pub fn naive_daily_origin(window: AnalysisWindow) -> DateTime<Utc> {
    let midnight = window.start.date_naive().and_time(NaiveTime::MIN).and_utc();
    if midnight < window.start {
        (window.start.date_naive() + Days::new(1))
            .and_time(NaiveTime::MIN)
            .and_utc()
    } else {
        midnight
    }
}

/// Walks bin boundaries one step at a time and counts each bin by a linear
/// scan over all timestamps. Partial bins at the tail are never emitted.
pub fn naive_bin_counts(
    times: &[DateTime<Utc>],
    window: AnalysisWindow,
    granularity: Granularity,
) -> Vec<u64> {
    let (origin, step) = match granularity {
        Granularity::Daily => (naive_daily_origin(window), Duration::days(1)),
        Granularity::Weekly => (window.start, Duration::days(7)),
    };
    let mut counts = Vec::new();
    let mut lo = origin;
    while lo + step <= window.end {
        let hi = lo + step;
        counts.push(times.iter().filter(|&&t| lo <= t && t < hi).count() as u64);
        lo = hi;
    }
    counts
}

// ---------------------------------------------------------------------------
// Filter-loop rate oracle.

pub struct NaiveRate {
    pub ratio: f64,
    pub mean_days: f64,
    pub median_days: f64,
}

fn naive_rate(
    items: &[(DateTime<Utc>, Option<DateTime<Utc>>)],
    window: AnalysisWindow,
    windowed: bool,
) -> Option<NaiveRate> {
    let created_in_window = |t: DateTime<Utc>| window.start <= t && t < window.end;
    let mut denominator = 0usize;
    for &(created, _) in items {
        let counted = if windowed {
            created_in_window(created)
        } else {
            created <= window.end
        };
        if counted {
            denominator += 1;
        }
    }
    if denominator == 0 {
        return None;
    }

    let mut ages = Vec::new();
    for &(created, resolved) in items {
        let Some(resolved) = resolved else { continue };
        if !(window.start <= resolved && resolved < window.end) {
            continue;
        }
        if windowed && !created_in_window(created) {
            continue;
        }
        ages.push((resolved - created).num_seconds() as f64 / 86_400.0);
    }
    Some(NaiveRate {
        ratio: ages.len() as f64 / denominator as f64,
        mean_days: if ages.is_empty() {
            0.0
        } else {
            naive_mean(&ages)
        },
        median_days: if ages.is_empty() {
            0.0
        } else {
            naive_median(&ages)
        },
    })
}

pub fn naive_issue_rate(
    issues: &[IssueRecord],
    window: AnalysisWindow,
    windowed: bool,
) -> Option<NaiveRate> {
    let items: Vec<_> = issues.iter().map(|i| (i.created_at, i.closed_at)).collect();
    naive_rate(&items, window, windowed)
}

pub fn naive_pull_rate(
    pulls: &[PullRequestRecord],
    window: AnalysisWindow,
    windowed: bool,
) -> Option<NaiveRate> {
    let items: Vec<_> = pulls.iter().map(|p| (p.created_at, p.merged_at)).collect();
    naive_rate(&items, window, windowed)
}

// ---------------------------------------------------------------------------
// HashSet user accounting and activity oracle.

pub fn naive_active_user_ratio(events: &EventSet, window: AnalysisWindow) -> f64 {
    let mut total: HashSet<&str> = HashSet::new();
    for c in &events.commits {
        total.insert(&c.author);
    }
    for i in &events.issues {
        total.insert(&i.author);
    }
    for p in &events.pulls {
        total.insert(&p.author);
    }
    for c in &events.comments {
        total.insert(&c.author);
    }
    if total.is_empty() {
        return 0.0;
    }
    // Issue reporters are deliberately absent: reporting is not activity.
    let mut active: HashSet<&str> = HashSet::new();
    for c in &events.comments {
        if window.contains(c.timestamp) {
            active.insert(&c.author);
        }
    }
    for c in &events.commits {
        if window.contains(c.timestamp) {
            active.insert(&c.author);
        }
    }
    for p in &events.pulls {
        if window.contains(p.created_at) {
            active.insert(&p.author);
        }
    }
    active.len() as f64 / total.len() as f64
}

/// Comments per open item at window end scaled by the active-user ratio;
/// None when nothing is open.
pub fn naive_engagement(events: &EventSet, window: AnalysisWindow) -> Option<f64> {
    let end = window.end;
    let mut open = 0i64;
    for i in &events.issues {
        if i.created_at <= end {
            open += 1;
        }
        if let Some(c) = i.closed_at {
            if c <= end {
                open -= 1;
            }
        }
    }
    for p in &events.pulls {
        if p.created_at <= end {
            open += 1;
        }
        if let Some(m) = p.merged_at {
            if m <= end {
                open -= 1;
            }
        }
    }
    if open <= 0 {
        return None;
    }
    let comments = events
        .comments
        .iter()
        .filter(|c| window.contains(c.timestamp))
        .count();
    Some(comments as f64 / open as f64 * naive_active_user_ratio(events, window))
}

// ---------------------------------------------------------------------------
// Full metric-vector oracle.

/// Assembles the whole metric vector from the naive parts, mirroring the
/// missing-component rules: no computable commit CV, disabled tracker or no
/// issues, no pulls, or no open items.
pub fn naive_metrics(events: &EventSet, window: AnalysisWindow, regime: Regime) -> MetricVector {
    let times: Vec<DateTime<Utc>> = events.commits.iter().map(|c| c.timestamp).collect();
    let daily = naive_bin_counts(&times, window, Granularity::Daily);
    let weekly = naive_bin_counts(&times, window, Granularity::Weekly);
    let cv_daily = naive_cv(&daily);
    let cv_weekly = naive_cv(&weekly);

    let mut missing = std::collections::BTreeSet::new();

    let (regime_bins, regime_cv) = match regime.commit_granularity {
        Granularity::Daily => (&daily, cv_daily),
        Granularity::Weekly => (&weekly, cv_weekly),
    };
    let c = if !regime_bins.is_empty() && regime_cv.is_some() {
        regime_bins.iter().sum::<u64>() as f64 / regime_bins.len() as f64
    } else {
        missing.insert(Component::Commit);
        0.0
    };

    let windowed = regime.denom == DenominatorMode::Windowed;
    let pick = |r: &NaiveRate| match regime.tendency {
        repo_csi::metrics::CentralTendency::Mean => r.mean_days,
        repo_csi::metrics::CentralTendency::Median => r.median_days,
    };

    let issue = naive_issue_rate(&events.issues, window, windowed);
    let (i, i_full, mean_resolution_days, median_resolution_days) = match issue {
        Some(r) if events.metadata.has_issues_enabled => (
            r.ratio,
            r.ratio / (1.0 + pick(&r)),
            r.mean_days,
            r.median_days,
        ),
        _ => {
            missing.insert(Component::Issue);
            (0.0, 0.0, 0.0, 0.0)
        }
    };

    let pull = naive_pull_rate(&events.pulls, window, windowed);
    let (p, p_full, mean_review_days, median_review_days) = match pull {
        Some(r) => (
            r.ratio,
            r.ratio / (1.0 + pick(&r)),
            r.mean_days,
            r.median_days,
        ),
        None => {
            missing.insert(Component::Pull);
            (0.0, 0.0, 0.0, 0.0)
        }
    };

    let active_user_ratio = naive_active_user_ratio(events, window);
    let a = match naive_engagement(events, window) {
        Some(a) => a,
        None => {
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
        active_user_ratio,
        missing,
    }
}

/// Field-by-field comparison at the given tolerance; missing sets must match
/// exactly. Panics with the scenario context on the first mismatch.
pub fn assert_metrics_match(context: &str, lib: &MetricVector, oracle: &MetricVector, tol: f64) {
    let fields = [
        ("c", lib.c, oracle.c),
        ("i", lib.i, oracle.i),
        ("p", lib.p, oracle.p),
        ("a", lib.a, oracle.a),
        ("cv_daily", lib.cv_daily, oracle.cv_daily),
        ("cv_weekly", lib.cv_weekly, oracle.cv_weekly),
        ("i_full", lib.i_full, oracle.i_full),
        ("p_full", lib.p_full, oracle.p_full),
        (
            "mean_resolution_days",
            lib.mean_resolution_days,
            oracle.mean_resolution_days,
        ),
        (
            "median_resolution_days",
            lib.median_resolution_days,
            oracle.median_resolution_days,
        ),
        (
            "mean_review_days",
            lib.mean_review_days,
            oracle.mean_review_days,
        ),
        (
            "median_review_days",
            lib.median_review_days,
            oracle.median_review_days,
        ),
        (
            "active_user_ratio",
            lib.active_user_ratio,
            oracle.active_user_ratio,
        ),
    ];
    for (name, got, want) in fields {
        assert!(
            (got - want).abs() <= tol,
            "{context}: {name} diverges: library {got}, oracle {want}"
        );
    }
    assert_eq!(
        lib.missing, oracle.missing,
        "{context}: missing sets diverge"
    );
}

// ---------------------------------------------------------------------------
// Seed-parameterized scenario family.

/// 200 distinct shapes from one seed: commit process, lifecycle rates, delay
/// distributions, comment volume, and pool size all vary on different moduli
/// so combinations decorrelate. Every spec validates by construction (delay
/// caps stay far below the shortest duration).
pub fn varied_scenario(seed: u64) -> ScenarioSpec {
    let mut spec = ScenarioSpec::baseline(seed);
    spec.duration_days = 150 + (seed % 7) as u32 * 80; // 150..630
    spec.commit_process = match seed % 4 {
        0 => CommitProcess::Constant {
            per_day: 1 + (seed % 5) as u32,
        },
        1 => CommitProcess::Poisson {
            rate_per_day: 0.4 + (seed % 10) as f64 * 0.8,
        },
        2 => CommitProcess::Bursty {
            base_rate: 0.5,
            burst_rate: 12.0,
            burst_prob: 0.05 + (seed % 4) as f64 * 0.1,
        },
        _ => CommitProcess::Poisson { rate_per_day: 0.0 },
    };
    spec.issues = LifecycleSpec {
        open_rate_per_day: [0.0, 0.2, 0.7, 1.5, 3.0][((seed / 4) % 5) as usize],
        close_ratio: 0.15 + ((seed / 20) % 5) as f64 * 0.2, // 0.15..0.95
        delay: match (seed / 3) % 3 {
            0 => DaysDistribution::Constant {
                days: 1.0 + (seed % 9) as f64,
            },
            1 => DaysDistribution::Uniform {
                min_days: 0.5,
                max_days: 20.0,
            },
            _ => DaysDistribution::Exponential { mean_days: 6.0 },
        },
    };
    spec.pulls = LifecycleSpec {
        open_rate_per_day: [0.0, 0.3, 0.9, 2.0][((seed / 5) % 4) as usize],
        close_ratio: 0.1 + ((seed / 7) % 9) as f64 * 0.1, // 0.1..0.9
        delay: match (seed / 2) % 3 {
            0 => DaysDistribution::Constant {
                days: 0.5 + (seed % 6) as f64,
            },
            1 => DaysDistribution::Uniform {
                min_days: 0.0,
                max_days: 10.0,
            },
            _ => DaysDistribution::Exponential { mean_days: 3.0 },
        },
    };
    spec.comment_rate = ((seed / 11) % 5) as f64; // 0..4 per open item
    spec.user_pool = 5 + (seed % 46) as u32; // 5..50
    spec.active_fraction = 0.1 + ((seed / 13) % 10) as f64 * 0.09; // 0.1..0.91
    spec
}

/// Window variants per seed: the scenario's own span, a late start that
/// leaves pre-window history, or an end extended past the last event.
pub fn varied_window(seed: u64, spec: &ScenarioSpec) -> AnalysisWindow {
    let start = spec.start;
    let end = start + Duration::days(spec.duration_days as i64);
    match seed % 3 {
        0 => AnalysisWindow::new(start, end).unwrap(),
        1 => {
            AnalysisWindow::new(start + Duration::days(spec.duration_days as i64 / 3), end).unwrap()
        }
        _ => AnalysisWindow::new(start, end + Duration::days(60)).unwrap(),
    }
}

// ---------------------------------------------------------------------------
// Hand-built event sets.

pub fn test_metadata() -> RepoMetadata {
    RepoMetadata {
        stars: 20_000,
        forks: 11_000,
        created_at: ts("2009-01-01T00:00:00Z"),
        is_archived: false,
        is_educational: false,
        has_issues_enabled: true,
    }
}

pub fn empty_events(repo: &str) -> EventSet {
    EventSet {
        repo: repo.parse().unwrap(),
        metadata: test_metadata(),
        commits: Vec::new(),
        issues: Vec::new(),
        pulls: Vec::new(),
        comments: Vec::new(),
    }
}

pub fn commit(id: &str, author: &str, at: &str) -> CommitRecord {
    CommitRecord {
        id: id.into(),
        author: author.into(),
        timestamp: ts(at),
    }
}

pub fn issue(id: u64, author: &str, created: &str, closed: Option<&str>) -> IssueRecord {
    IssueRecord {
        id,
        author: author.into(),
        created_at: ts(created),
        closed_at: closed.map(ts),
    }
}

pub fn pull(id: u64, author: &str, created: &str, merged: Option<&str>) -> PullRequestRecord {
    PullRequestRecord {
        id,
        author: author.into(),
        created_at: ts(created),
        merged_at: merged.map(ts),
        closed_at: merged.map(ts),
    }
}

pub fn comment(id: u64, author: &str, at: &str, parent: ParentKind) -> CommentRecord {
    CommentRecord {
        id,
        author: author.into(),
        timestamp: ts(at),
        parent_kind: parent,
    }
}

// ---------------------------------------------------------------------------
// Scriptable transport.

pub const MOCK_REPO: &str = "octo/mock";

/// Serves a small fixed repository over the REST shape. The first
/// `fail_first` transport calls answer 500 before the canned bodies take
/// over, which exercises the retry loop on whichever endpoint is hit first.
pub struct MockSource {
    fail_first: AtomicU32,
    calls: AtomicU32,
    paths: Mutex<Vec<String>>,
}

impl MockSource {
    pub fn new() -> Self {
        Self::failing(0)
    }

    pub fn failing(times: u32) -> Self {
        MockSource {
            fail_first: AtomicU32::new(times),
            calls: AtomicU32::new(0),
            paths: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> u32 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn paths(&self) -> Vec<String> {
        self.paths.lock().unwrap().clone()
    }
}

impl DataSource for MockSource {
    fn get(&self, path: &str, _query: &[(&str, String)]) -> std::io::Result<SourceResponse> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.paths.lock().unwrap().push(path.to_string());
        if self
            .fail_first
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok()
        {
            return Ok(SourceResponse {
                status: 500,
                body: b"upstream sad".to_vec(),
            });
        }
        let body = if path == "/repos/octo/mock" {
            r#"{"stargazers_count": 15000, "forks_count": 12000,
                "created_at": "2012-03-01T00:00:00Z", "archived": false,
                "has_issues": true}"#
                .to_string()
        } else if path == "/repos/octo/mock/commits" {
            r#"[{"sha": "aaa111", "author": {"login": "alice"},
                 "commit": {"author": {"name": "Alice", "date": "2020-06-01T10:00:00Z"}}},
                {"sha": "bbb222", "author": {"login": "bob"},
                 "commit": {"author": {"name": "Bob", "date": "2020-06-08T10:00:00Z"}}}]"#
                .to_string()
        } else if path == "/search/issues" {
            r#"{"items": [
                {"number": 1, "created_at": "2020-02-01T00:00:00Z",
                 "closed_at": "2020-02-11T00:00:00Z", "user": {"login": "carol"}},
                {"number": 2, "created_at": "2020-03-01T00:00:00Z",
                 "closed_at": null, "user": {"login": "carol"}},
                {"number": 3, "created_at": "2020-04-01T00:00:00Z",
                 "closed_at": "2020-04-03T00:00:00Z", "user": {"login": "dave"},
                 "pull_request": {"merged_at": "2020-04-03T00:00:00Z"}}
               ]}"#
            .to_string()
        } else if path == "/repos/octo/mock/issues/comments" {
            r#"[{"id": 501, "user": {"login": "erin"},
                 "created_at": "2020-02-05T00:00:00Z"}]"#
                .to_string()
        } else if path == "/repos/octo/mock/pulls/comments" {
            r#"[{"id": 601, "user": {"login": "frank"},
                 "created_at": "2020-04-02T00:00:00Z"}]"#
                .to_string()
        } else {
            return Ok(SourceResponse {
                status: 404,
                body: b"{}".to_vec(),
            });
        };
        Ok(SourceResponse {
            status: 200,
            body: body.into_bytes(),
        })
    }
}

pub fn mock_window() -> AnalysisWindow {
    AnalysisWindow::new(ts("2019-01-01T00:00:00Z"), ts("2021-01-01T00:00:00Z")).unwrap()
}

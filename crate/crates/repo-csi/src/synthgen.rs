//! Deterministic synthetic repository scenarios: controllable commit
//! processes, issue/PR lifecycles, and comment activity, built for use as a
//! test oracle substrate. Same seed + spec ⇒ byte-identical output on every
//! platform.
//!
//! Determinism notes:
//! * the PRNG is a self-contained SplitMix64 (pure u64 wrapping arithmetic,
//!   no platform-dependent state), one independent stream per section;
//! * close/merge decisions use Bresenham spacing (`floor(k·ratio)`
//!   increments), so realized ratios sit within 1/n of the target rather
//!   than fluctuating like Bernoulli draws;
//! * all timestamps land on a 1-second lattice.
//!
//! Shape notes:
//! * issue and PR creations are spread evenly over the scenario, shrunk at
//!   the tail by the delay distribution's maximum so closures stay strictly
//!   inside the scenario window;
//! * one pre-window "prologue" comment per pool user pins the total user
//!   count at `user_pool`; in-window comments, commits, and PRs cycle the
//!   active subset, while issue reporters cycle the whole pool (reporting is
//!   not an activity signal);
//! * PR ids are offset by 500 000 000 so issue and pull ids never collide.

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{
    CommentRecord, CommitRecord, EventSet, IssueRecord, ParentKind, PullRequestRecord, RepoMetadata,
};

const PR_ID_OFFSET: u64 = 500_000_000;
const MAX_RATE_PER_DAY: f64 = 10_000.0;

// Stream separators (hex digits of pi).
const STREAM_COMMITS: u64 = 0x243F_6A88_85A3_08D3;
const STREAM_ISSUES: u64 = 0x1319_8A2E_0370_7344;
const STREAM_PULLS: u64 = 0xA409_3822_299F_31D0;

/// SplitMix64: tiny, seedable, platform-independent. The output sequence for
/// a given seed is fixed by the constants below and must never change, since
/// generated fixtures are reproduced from (seed, spec) alone.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Knuth's product method; adequate for the per-day rates scenarios use.
fn poisson(rng: &mut SplitMix64, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let l = (-lambda).exp();
    let mut k = 0u64;
    let mut p = 1.0;
    loop {
        k += 1;
        p *= rng.next_f64();
        if p <= l {
            return k - 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CommitProcess {
    /// Exactly `per_day` commits every day, evenly spaced: equal daily bins.
    Constant { per_day: u32 },
    /// Independent Poisson(rate) count each day.
    Poisson { rate_per_day: f64 },
    /// Each day is a burst with probability `burst_prob`; the day's count is
    /// Poisson(burst_rate) on burst days, Poisson(base_rate) otherwise.
    Bursty {
        base_rate: f64,
        burst_rate: f64,
        burst_prob: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DaysDistribution {
    Constant {
        days: f64,
    },
    Uniform {
        min_days: f64,
        max_days: f64,
    },
    /// Exponential with the given mean, truncated at 8× the mean so every
    /// delay has a finite bound the generator can reserve tail room for.
    Exponential {
        mean_days: f64,
    },
}

impl DaysDistribution {
    pub fn max_days(&self) -> f64 {
        match *self {
            DaysDistribution::Constant { days } => days,
            DaysDistribution::Uniform { max_days, .. } => max_days,
            DaysDistribution::Exponential { mean_days } => 8.0 * mean_days,
        }
    }

    fn sample(&self, rng: &mut SplitMix64) -> f64 {
        match *self {
            DaysDistribution::Constant { days } => days,
            DaysDistribution::Uniform { min_days, max_days } => {
                min_days + (max_days - min_days) * rng.next_f64()
            }
            DaysDistribution::Exponential { mean_days } => {
                let draw = -mean_days * (1.0 - rng.next_f64()).ln();
                draw.min(8.0 * mean_days)
            }
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = match *self {
            DaysDistribution::Constant { days } => days.is_finite() && days >= 0.0,
            DaysDistribution::Uniform { min_days, max_days } => {
                min_days.is_finite()
                    && max_days.is_finite()
                    && 0.0 <= min_days
                    && min_days <= max_days
            }
            DaysDistribution::Exponential { mean_days } => {
                mean_days.is_finite() && mean_days >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec {
                detail: format!("{what} delay distribution has invalid parameters: {self:?}"),
            })
        }
    }
}

/// Opening rate, closure (merge) ratio, and resolution (review) delay for
/// issues or pull requests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifecycleSpec {
    pub open_rate_per_day: f64,
    pub close_ratio: f64,
    pub delay: DaysDistribution,
}

impl LifecycleSpec {
    fn validate(&self, what: &str) -> Result<()> {
        if !self.open_rate_per_day.is_finite()
            || self.open_rate_per_day < 0.0
            || self.open_rate_per_day > MAX_RATE_PER_DAY
        {
            return Err(Error::InvalidSpec {
                detail: format!(
                    "{what} open rate must be in [0, {MAX_RATE_PER_DAY}], got {}",
                    self.open_rate_per_day
                ),
            });
        }
        if !self.close_ratio.is_finite() || !(0.0..=1.0).contains(&self.close_ratio) {
            return Err(Error::InvalidSpec {
                detail: format!(
                    "{what} close ratio must be in [0, 1], got {}",
                    self.close_ratio
                ),
            });
        }
        self.delay.validate(what)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub duration_days: u32,
    pub commit_process: CommitProcess,
    pub issues: LifecycleSpec,
    pub pulls: LifecycleSpec,
    /// Comments generated per item open at scenario end.
    pub comment_rate: f64,
    pub user_pool: u32,
    /// Fraction of the pool that comments/commits/opens PRs in-window
    /// (rounded to at least one user).
    pub active_fraction: f64,
    /// Scenario start; events span `[start, start + duration_days)`.
    #[serde(default = "default_start")]
    pub start: DateTime<Utc>,
}

fn default_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap()
}

impl ScenarioSpec {
    /// A small healthy-repo baseline; tests override individual fields.
    pub fn baseline(seed: u64) -> Self {
        ScenarioSpec {
            seed,
            duration_days: 730,
            commit_process: CommitProcess::Poisson { rate_per_day: 3.0 },
            issues: LifecycleSpec {
                open_rate_per_day: 1.0,
                close_ratio: 0.62,
                delay: DaysDistribution::Constant { days: 5.0 },
            },
            pulls: LifecycleSpec {
                open_rate_per_day: 0.8,
                close_ratio: 0.56,
                delay: DaysDistribution::Constant { days: 2.0 },
            },
            comment_rate: 1.5,
            user_pool: 40,
            active_fraction: 0.3,
            start: default_start(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_days == 0 {
            return Err(Error::InvalidSpec {
                detail: "duration_days must be at least 1".into(),
            });
        }
        if self.user_pool == 0 {
            return Err(Error::InvalidSpec {
                detail: "user_pool must be at least 1".into(),
            });
        }
        match self.commit_process {
            CommitProcess::Constant { per_day } => {
                if per_day as i64 > 86_400 {
                    return Err(Error::InvalidSpec {
                        detail: format!(
                            "constant process limited to 86400 commits/day, got {per_day}"
                        ),
                    });
                }
            }
            CommitProcess::Poisson { rate_per_day } => {
                if !rate_per_day.is_finite() || !(0.0..=MAX_RATE_PER_DAY).contains(&rate_per_day) {
                    return Err(Error::InvalidSpec {
                        detail: format!(
                            "poisson rate must be in [0, {MAX_RATE_PER_DAY}], got {rate_per_day}"
                        ),
                    });
                }
            }
            CommitProcess::Bursty {
                base_rate,
                burst_rate,
                burst_prob,
            } => {
                for (name, r) in [("base_rate", base_rate), ("burst_rate", burst_rate)] {
                    if !r.is_finite() || !(0.0..=MAX_RATE_PER_DAY).contains(&r) {
                        return Err(Error::InvalidSpec {
                            detail: format!(
                                "bursty {name} must be in [0, {MAX_RATE_PER_DAY}], got {r}"
                            ),
                        });
                    }
                }
                if !burst_prob.is_finite() || !(0.0..=1.0).contains(&burst_prob) {
                    return Err(Error::InvalidSpec {
                        detail: format!("burst_prob must be in [0, 1], got {burst_prob}"),
                    });
                }
            }
        }
        self.issues.validate("issue")?;
        self.pulls.validate("pull")?;
        if !self.comment_rate.is_finite() || self.comment_rate < 0.0 {
            return Err(Error::InvalidSpec {
                detail: format!(
                    "comment_rate must be non-negative, got {}",
                    self.comment_rate
                ),
            });
        }
        if !self.active_fraction.is_finite() || !(0.0..=1.0).contains(&self.active_fraction) {
            return Err(Error::InvalidSpec {
                detail: format!(
                    "active_fraction must be in [0, 1], got {}",
                    self.active_fraction
                ),
            });
        }
        let duration_secs = self.duration_days as i64 * 86_400;
        for (what, spec) in [("issue", &self.issues), ("pull", &self.pulls)] {
            let cap = (spec.delay.max_days() * 86_400.0).ceil() as i64;
            if spec.open_rate_per_day > 0.0 && cap + 1 >= duration_secs {
                return Err(Error::InvalidSpec {
                    detail: format!(
                        "{what} delays of up to {} days leave no room to open items within {} days",
                        spec.delay.max_days(),
                        self.duration_days
                    ),
                });
            }
        }
        Ok(())
    }
}

struct LifecycleOutput {
    created: Vec<(DateTime<Utc>, Option<DateTime<Utc>>)>,
    closed_count: u64,
}

/// Creations spread evenly over the duration minus the delay cap; every
/// `close_ratio`-th item (Bresenham) closes after a sampled delay.
fn generate_lifecycle(
    spec: &LifecycleSpec,
    start: DateTime<Utc>,
    duration_secs: i64,
    rng: &mut SplitMix64,
) -> LifecycleOutput {
    let n = (spec.open_rate_per_day * duration_secs as f64 / 86_400.0).round() as u64;
    if n == 0 {
        return LifecycleOutput {
            created: Vec::new(),
            closed_count: 0,
        };
    }
    let cap_secs = (spec.delay.max_days() * 86_400.0).ceil() as i64;
    let span = duration_secs - cap_secs - 1;
    debug_assert!(span >= 1, "validated: delays fit in the scenario");

    let mut created = Vec::with_capacity(n as usize);
    let mut closed_count = 0;
    for k in 0..n {
        let t = start + Duration::seconds((k as i128 * span as i128 / n as i128) as i64);
        let closes = ((k + 1) as f64 * spec.close_ratio).floor() as u64
            > (k as f64 * spec.close_ratio).floor() as u64;
        let closed_at = if closes {
            closed_count += 1;
            let delay_days = spec.delay.sample(rng);
            let delay_secs = ((delay_days * 86_400.0).round() as i64).clamp(0, cap_secs);
            Some(t + Duration::seconds(delay_secs))
        } else {
            None
        };
        created.push((t, closed_at));
    }
    LifecycleOutput {
        created,
        closed_count,
    }
}

/// Generates the full event set for a scenario. Deterministic in (seed,
/// spec); output is canonical and satisfies every event-set invariant.
pub fn generate(spec: &ScenarioSpec) -> Result<EventSet> {
    spec.validate()?;

    let start = spec.start;
    let duration_secs = spec.duration_days as i64 * 86_400;
    let pool: Vec<String> = (0..spec.user_pool)
        .map(|k| format!("user-{k:04}"))
        .collect();
    let active_count = ((spec.active_fraction * spec.user_pool as f64).round() as usize)
        .clamp(1, spec.user_pool as usize);
    let active = &pool[..active_count];

    // Prologue: every pool user commented once before the window, so the
    // full-history user count equals the pool size regardless of how much
    // in-window activity the scenario produces.
    let mut comments: Vec<CommentRecord> = pool
        .iter()
        .enumerate()
        .map(|(k, author)| CommentRecord {
            id: k as u64 + 1,
            author: author.clone(),
            timestamp: start - Duration::seconds((spec.user_pool as i64) - k as i64),
            parent_kind: ParentKind::Commit,
        })
        .collect();

    let mut rng_commits = SplitMix64::new(spec.seed ^ STREAM_COMMITS);
    let mut commits = Vec::new();
    for d in 0..spec.duration_days as i64 {
        let day_start = start + Duration::seconds(d * 86_400);
        let count = match spec.commit_process {
            CommitProcess::Constant { per_day } => per_day as u64,
            CommitProcess::Poisson { rate_per_day } => poisson(&mut rng_commits, rate_per_day),
            CommitProcess::Bursty {
                base_rate,
                burst_rate,
                burst_prob,
            } => {
                let rate = if rng_commits.next_f64() < burst_prob {
                    burst_rate
                } else {
                    base_rate
                };
                poisson(&mut rng_commits, rate)
            }
        };
        let spacing = if count > 0 { 86_400 / count as i64 } else { 0 };
        for k in 0..count {
            let idx = commits.len();
            commits.push(CommitRecord {
                id: format!("c{idx:06}"),
                author: active[idx % active_count].clone(),
                timestamp: day_start + Duration::seconds(k as i64 * spacing),
            });
        }
    }

    let mut rng_issues = SplitMix64::new(spec.seed ^ STREAM_ISSUES);
    let issue_out = generate_lifecycle(&spec.issues, start, duration_secs, &mut rng_issues);
    let issues: Vec<IssueRecord> = issue_out
        .created
        .iter()
        .enumerate()
        .map(|(k, &(created_at, closed_at))| IssueRecord {
            id: k as u64 + 1,
            author: pool[k % pool.len()].clone(),
            created_at,
            closed_at,
        })
        .collect();

    let mut rng_pulls = SplitMix64::new(spec.seed ^ STREAM_PULLS);
    let pull_out = generate_lifecycle(&spec.pulls, start, duration_secs, &mut rng_pulls);
    let pulls: Vec<PullRequestRecord> = pull_out
        .created
        .iter()
        .enumerate()
        .map(|(k, &(created_at, merged_at))| PullRequestRecord {
            id: PR_ID_OFFSET + k as u64 + 1,
            author: active[k % active_count].clone(),
            created_at,
            merged_at,
            closed_at: merged_at,
        })
        .collect();

    let open_issues = issues.len() as u64 - issue_out.closed_count;
    let open_pulls = pulls.len() as u64 - pull_out.closed_count;
    let open_items = open_issues + open_pulls;
    let n_comments = (spec.comment_rate * open_items as f64).round() as u64;
    let parent_kinds: Vec<ParentKind> = match (open_issues > 0, open_pulls > 0) {
        (true, true) => vec![ParentKind::Issue, ParentKind::PullRequest],
        (true, false) => vec![ParentKind::Issue],
        (false, true) => vec![ParentKind::PullRequest],
        (false, false) => vec![ParentKind::Commit],
    };
    for j in 0..n_comments {
        comments.push(CommentRecord {
            id: spec.user_pool as u64 + j + 1,
            author: active[j as usize % active_count].clone(),
            timestamp: start
                + Duration::seconds(
                    (j as i128 * duration_secs as i128 / n_comments as i128) as i64,
                ),
            parent_kind: parent_kinds[j as usize % parent_kinds.len()],
        });
    }

    let mut events = EventSet {
        repo: format!("synth/seed-{}", spec.seed).parse()?,
        metadata: RepoMetadata {
            stars: 15_000,
            forks: 12_000,
            created_at: start - Duration::days(3_700),
            is_archived: false,
            is_educational: false,
            has_issues_enabled: spec.issues.open_rate_per_day > 0.0,
        },
        commits,
        issues,
        pulls,
        comments,
    };
    events.canonicalize();
    debug_assert_eq!(events.validate(), Ok(()));
    Ok(events)
}

//! Event-level data model: the records every metric is computed from.
//!
//! All timestamps are `DateTime<Utc>`; fixtures serialize them as RFC 3339
//! strings with a `Z` suffix. Identity rules:
//!
//! | collection | id            | uniqueness            |
//! |------------|---------------|-----------------------|
//! | commits    | string (sha)  | global                |
//! | issues     | integer       | global, disjoint from pulls |
//! | pulls      | integer       | global, disjoint from issues |
//! | comments   | integer       | per `parent_kind`     |
//!
//! Issue and pull ids share one numbering space upstream, hence the mutual
//! disjointness requirement. Comment ids come from two upstream sequences
//! (issue comments, review comments) that may collide numerically.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A repository name in `owner/name` form. Serializes as that single string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RepoRef {
    pub owner: String,
    pub name: String,
}

impl RepoRef {
    pub fn new(owner: impl Into<String>, name: impl Into<String>) -> Result<Self> {
        let owner = owner.into();
        let name = name.into();
        if owner.is_empty() || name.is_empty() || owner.contains('/') || name.contains('/') {
            return Err(Error::InvalidConfig {
                detail: format!("repository must be owner/name, got {owner:?}/{name:?}"),
            });
        }
        Ok(RepoRef { owner, name })
    }
}

impl fmt::Display for RepoRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.owner, self.name)
    }
}

impl FromStr for RepoRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('/') {
            Some((owner, name)) => RepoRef::new(owner, name),
            None => Err(Error::InvalidConfig {
                detail: format!("repository must be owner/name, got {s:?}"),
            }),
        }
    }
}

impl Serialize for RepoRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RepoRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(|e| D::Error::custom(format!("{e}")))
    }
}

/// Repository-level facts used by screening and reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoMetadata {
    pub stars: u64,
    pub forks: u64,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub is_archived: bool,
    /// Operator-supplied; nothing in the REST payload derives it.
    #[serde(default)]
    pub is_educational: bool,
    #[serde(default = "default_true")]
    pub has_issues_enabled: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub id: String,
    pub author: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub id: u64,
    pub author: String,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRequestRecord {
    pub id: u64,
    pub author: String,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merged_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_at: Option<DateTime<Utc>>,
}

impl PullRequestRecord {
    pub fn is_merged(&self) -> bool {
        self.merged_at.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParentKind {
    Issue,
    PullRequest,
    Commit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub id: u64,
    pub author: String,
    pub timestamp: DateTime<Utc>,
    pub parent_kind: ParentKind,
}

/// Everything ingested for one repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSet {
    pub repo: RepoRef,
    pub metadata: RepoMetadata,
    pub commits: Vec<CommitRecord>,
    pub issues: Vec<IssueRecord>,
    pub pulls: Vec<PullRequestRecord>,
    pub comments: Vec<CommentRecord>,
}

impl EventSet {
    /// Checks the identity and ordering invariants. On failure the message
    /// names the first offending record.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let mut commit_ids = BTreeSet::new();
        for c in &self.commits {
            if c.id.is_empty() {
                return Err("commit with empty id".into());
            }
            if !commit_ids.insert(c.id.as_str()) {
                return Err(format!("duplicate commit id {:?}", c.id));
            }
        }
        let mut issue_ids = BTreeSet::new();
        for i in &self.issues {
            if !issue_ids.insert(i.id) {
                return Err(format!("duplicate issue id {}", i.id));
            }
            if let Some(closed) = i.closed_at {
                if closed < i.created_at {
                    return Err(format!("issue {} closed before it was created", i.id));
                }
            }
        }
        let mut pull_ids = BTreeSet::new();
        for p in &self.pulls {
            if !pull_ids.insert(p.id) {
                return Err(format!("duplicate pull id {}", p.id));
            }
            if issue_ids.contains(&p.id) {
                return Err(format!("id {} used by both an issue and a pull", p.id));
            }
            if let Some(merged) = p.merged_at {
                if merged < p.created_at {
                    return Err(format!("pull {} merged before it was created", p.id));
                }
            }
            if let Some(closed) = p.closed_at {
                if closed < p.created_at {
                    return Err(format!("pull {} closed before it was created", p.id));
                }
            }
        }
        let mut comment_ids = BTreeSet::new();
        for c in &self.comments {
            if !comment_ids.insert((c.parent_kind, c.id)) {
                return Err(format!("duplicate comment id {} (same parent kind)", c.id));
            }
        }
        Ok(())
    }

    /// Sorts every collection into canonical order: commits by (timestamp, id),
    /// the rest by id. Serialization after canonicalization is deterministic.
    pub fn canonicalize(&mut self) {
        self.commits
            .sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        self.issues.sort_by_key(|i| i.id);
        self.pulls.sort_by_key(|p| p.id);
        self.comments.sort_by_key(|c| (c.id, c.parent_kind));
    }

    /// Distinct authors over the full ingested history.
    pub fn all_users(&self) -> BTreeSet<&str> {
        let mut users = BTreeSet::new();
        users.extend(self.commits.iter().map(|c| c.author.as_str()));
        users.extend(self.issues.iter().map(|i| i.author.as_str()));
        users.extend(self.pulls.iter().map(|p| p.author.as_str()));
        users.extend(self.comments.iter().map(|c| c.author.as_str()));
        users
    }

    /// Latest timestamp across all records, if any.
    pub fn latest_timestamp(&self) -> Option<DateTime<Utc>> {
        let mut latest: Option<DateTime<Utc>> = None;
        let mut push = |t: DateTime<Utc>| {
            latest = Some(match latest {
                Some(cur) if cur >= t => cur,
                _ => t,
            });
        };
        for c in &self.commits {
            push(c.timestamp);
        }
        for i in &self.issues {
            push(i.created_at);
            if let Some(t) = i.closed_at {
                push(t);
            }
        }
        for p in &self.pulls {
            push(p.created_at);
            if let Some(t) = p.merged_at {
                push(t);
            }
            if let Some(t) = p.closed_at {
                push(t);
            }
        }
        for c in &self.comments {
            push(c.timestamp);
        }
        latest
    }
}

/// Half-open interval `[start, end)`. Event containment, bin layout, and the
/// windowed denominators all use this convention; the one deliberate
/// exception is the cumulative denominator, which counts creation `<= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl AnalysisWindow {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self> {
        if end <= start {
            return Err(Error::InvalidWindow);
        }
        Ok(AnalysisWindow { start, end })
    }

    /// Window of `days` whole days ending at `end`.
    pub fn ending_at(end: DateTime<Utc>, days: i64) -> Result<Self> {
        if days <= 0 {
            return Err(Error::InvalidWindow);
        }
        AnalysisWindow::new(end - Duration::days(days), end)
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }

    pub fn duration_days(&self) -> f64 {
        (self.end - self.start).num_seconds() as f64 / 86_400.0
    }
}

/// First UTC midnight at or after `t`.
pub fn ceil_to_utc_day(t: DateTime<Utc>) -> DateTime<Utc> {
    let secs = t.timestamp();
    let floor = secs.div_euclid(86_400) * 86_400;
    let aligned = if floor == secs && t.timestamp_subsec_nanos() == 0 {
        secs
    } else {
        floor + 86_400
    };
    Utc.timestamp_opt(aligned, 0).unwrap()
}

//! REST-shaped ingestion over a pluggable transport. Paths and payloads are
//! compatible with the public GitHub v3 surface:
//!
//! * `GET /repos/{owner}/{repo}`
//! * `GET /repos/{owner}/{repo}/commits?since=&until=`
//! * `GET /search/issues?q=repo:{owner}/{repo}+created:<=DATE`
//! * `GET /repos/{owner}/{repo}/issues/comments?since=`
//! * `GET /repos/{owner}/{repo}/pulls/comments?since=`
//!
//! Pagination is transparent (`per_page`/`page`, stop on a short page).
//! Records are de-duplicated by id across pages, commits are counted from
//! whatever ref the API serves (default branch), and review comments are
//! ingested alongside conversation comments, tagged by parent kind.

use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::events::{
    AnalysisWindow, CommentRecord, CommitRecord, EventSet, IssueRecord, ParentKind,
    PullRequestRecord, RepoMetadata, RepoRef,
};
use crate::ingestion::cache::{CachePolicy, DiskCache};
use crate::ingestion::retry::{fetch_with_retry, RetryPolicy};
use crate::ingestion::DataSource;

const PAGE_SIZE: u32 = 100;
const MAX_PAGES: u32 = 10_000;
/// GitHub's placeholder for deleted accounts.
const GHOST_USER: &str = "ghost";

fn rfc3339(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// One cached GET: cache hit returns the stored body bytes verbatim;
/// otherwise the endpoint is fetched with retry and stored.
fn cached_get(
    source: &dyn DataSource,
    cache: &CachePolicy,
    retry: &RetryPolicy,
    path: &str,
    query: &[(&str, String)],
    window: AnalysisWindow,
    repo_label: &str,
) -> Result<Vec<u8>> {
    cache.validate()?;
    let mut key = format!("GET {path}?");
    for (k, v) in query {
        key.push_str(k);
        key.push('=');
        key.push_str(v);
        key.push('&');
    }
    key.push_str(&format!(
        "#w={}..{}",
        rfc3339(window.start),
        rfc3339(window.end)
    ));

    let disk = DiskCache::new(cache);
    if let Some(body) = disk.lookup(&key) {
        return Ok(body);
    }
    let body = fetch_with_retry(source, path, query, retry, repo_label)?;
    disk.store(&key, &body)?;
    Ok(body)
}

fn parse<T: for<'de> Deserialize<'de>>(body: &[u8], endpoint: &str) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| Error::MalformedResponse {
        endpoint: endpoint.to_string(),
        detail: e.to_string(),
    })
}

#[derive(Deserialize)]
struct ApiRepo {
    stargazers_count: u64,
    forks_count: u64,
    created_at: DateTime<Utc>,
    #[serde(default)]
    archived: bool,
    #[serde(default = "default_has_issues")]
    has_issues: bool,
}

fn default_has_issues() -> bool {
    true
}

#[derive(Deserialize)]
struct ApiUser {
    login: String,
}

#[derive(Deserialize)]
struct ApiCommit {
    sha: String,
    author: Option<ApiUser>,
    commit: ApiCommitDetail,
}

#[derive(Deserialize)]
struct ApiCommitDetail {
    author: Option<ApiGitSignature>,
    committer: Option<ApiGitSignature>,
}

#[derive(Deserialize)]
struct ApiGitSignature {
    name: Option<String>,
    date: Option<DateTime<Utc>>,
}

#[derive(Deserialize)]
struct ApiSearchPage {
    items: Vec<ApiSearchItem>,
}

#[derive(Deserialize)]
struct ApiSearchItem {
    number: u64,
    created_at: DateTime<Utc>,
    closed_at: Option<DateTime<Utc>>,
    user: Option<ApiUser>,
    pull_request: Option<ApiSearchPrInfo>,
}

#[derive(Deserialize)]
struct ApiSearchPrInfo {
    #[serde(default)]
    merged_at: Option<DateTime<Utc>>,
}

#[derive(Deserialize)]
struct ApiComment {
    id: u64,
    user: Option<ApiUser>,
    created_at: DateTime<Utc>,
}

fn login(user: &Option<ApiUser>) -> String {
    user.as_ref()
        .map(|u| u.login.clone())
        .unwrap_or_else(|| GHOST_USER.to_string())
}

/// Fetches pages of `T` until a short page (or an empty one) appears.
#[allow(clippy::too_many_arguments)]
fn paginate<T: for<'de> Deserialize<'de>>(
    source: &dyn DataSource,
    cache: &CachePolicy,
    retry: &RetryPolicy,
    path: &str,
    base_query: &[(&str, String)],
    window: AnalysisWindow,
    repo_label: &str,
    extract: impl Fn(Vec<u8>) -> Result<Vec<T>>,
) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for page in 1..=MAX_PAGES {
        let mut query: Vec<(&str, String)> = base_query.to_vec();
        query.push(("per_page", PAGE_SIZE.to_string()));
        query.push(("page", page.to_string()));
        let body = cached_get(source, cache, retry, path, &query, window, repo_label)?;
        let items = extract(body)?;
        let n = items.len();
        out.extend(items);
        if n < PAGE_SIZE as usize {
            break;
        }
    }
    Ok(out)
}

/// See [`crate::ingestion::fetch_events`].
pub fn fetch_events_from(
    repo: &RepoRef,
    window: AnalysisWindow,
    source: &dyn DataSource,
    cache: &CachePolicy,
    retry: &RetryPolicy,
) -> Result<EventSet> {
    let label = repo.to_string();
    let repo_path = format!("/repos/{}/{}", repo.owner, repo.name);

    let body = cached_get(source, cache, retry, &repo_path, &[], window, &label)?;
    let api_repo: ApiRepo = parse(&body, &repo_path)?;
    let metadata = RepoMetadata {
        stars: api_repo.stargazers_count,
        forks: api_repo.forks_count,
        created_at: api_repo.created_at,
        is_archived: api_repo.archived,
        is_educational: false,
        has_issues_enabled: api_repo.has_issues,
    };

    let commits_path = format!("{repo_path}/commits");
    let commit_query = [
        ("since", rfc3339(window.start)),
        ("until", rfc3339(window.end)),
    ];
    let api_commits: Vec<ApiCommit> = paginate(
        source,
        cache,
        retry,
        &commits_path,
        &commit_query,
        window,
        &label,
        |body| parse(&body, &commits_path),
    )?;
    let mut commits: BTreeMap<String, CommitRecord> = BTreeMap::new();
    for c in api_commits {
        let signature = c.commit.author.as_ref().or(c.commit.committer.as_ref());
        let Some(timestamp) = signature.and_then(|s| s.date) else {
            return Err(Error::MalformedResponse {
                endpoint: commits_path.clone(),
                detail: format!("commit {} has no author/committer date", c.sha),
            });
        };
        if timestamp > window.end {
            continue;
        }
        let author = c
            .author
            .map(|u| u.login)
            .or_else(|| signature.and_then(|s| s.name.clone()))
            .unwrap_or_else(|| GHOST_USER.to_string());
        commits.entry(c.sha.clone()).or_insert(CommitRecord {
            id: c.sha,
            author,
            timestamp,
        });
    }

    let search_query = [(
        "q",
        format!("repo:{} created:<={}", label, window.end.format("%Y-%m-%d")),
    )];
    let items: Vec<ApiSearchItem> = paginate(
        source,
        cache,
        retry,
        "/search/issues",
        &search_query,
        window,
        &label,
        |body| parse::<ApiSearchPage>(&body, "/search/issues").map(|p| p.items),
    )?;
    let mut issues: BTreeMap<u64, IssueRecord> = BTreeMap::new();
    let mut pulls: BTreeMap<u64, PullRequestRecord> = BTreeMap::new();
    for item in items {
        if item.created_at > window.end {
            continue;
        }
        let author = login(&item.user);
        match item.pull_request {
            Some(pr) => {
                pulls.entry(item.number).or_insert(PullRequestRecord {
                    id: item.number,
                    author,
                    created_at: item.created_at,
                    merged_at: pr.merged_at,
                    closed_at: item.closed_at,
                });
            }
            None => {
                issues.entry(item.number).or_insert(IssueRecord {
                    id: item.number,
                    author,
                    created_at: item.created_at,
                    closed_at: item.closed_at,
                });
            }
        }
    }

    let mut comments: BTreeMap<(ParentKind, u64), CommentRecord> = BTreeMap::new();
    for (endpoint, parent_kind) in [
        (format!("{repo_path}/issues/comments"), ParentKind::Issue),
        (
            format!("{repo_path}/pulls/comments"),
            ParentKind::PullRequest,
        ),
    ] {
        let since_query = [("since", rfc3339(window.start))];
        let api_comments: Vec<ApiComment> = paginate(
            source,
            cache,
            retry,
            &endpoint,
            &since_query,
            window,
            &label,
            |body| parse(&body, &endpoint),
        )?;
        for c in api_comments {
            if c.created_at > window.end {
                continue;
            }
            comments
                .entry((parent_kind, c.id))
                .or_insert(CommentRecord {
                    id: c.id,
                    author: login(&c.user),
                    timestamp: c.created_at,
                    parent_kind,
                });
        }
    }

    let mut events = EventSet {
        repo: repo.clone(),
        metadata,
        commits: commits.into_values().collect(),
        issues: issues.into_values().collect(),
        pulls: pulls.into_values().collect(),
        comments: comments.into_values().collect(),
    };
    events.canonicalize();
    debug_assert_eq!(events.validate(), Ok(()));
    Ok(events)
}

/// HTTP transport over ureq with rustls. Sends a bearer token when given one.
#[cfg(feature = "net")]
pub struct HttpSource {
    agent: ureq::Agent,
    base_url: String,
    token: Option<String>,
}

#[cfg(feature = "net")]
impl HttpSource {
    pub fn new(base_url: impl Into<String>, token: Option<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build();
        HttpSource {
            agent: ureq::Agent::new_with_config(config),
            base_url: base_url.into(),
            token,
        }
    }

    pub fn github(token: Option<String>) -> Self {
        Self::new("https://api.github.com", token)
    }
}

/// Percent-encodes everything outside the RFC 3986 unreserved set.
#[cfg(feature = "net")]
fn percent_encode(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for b in value.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

#[cfg(feature = "net")]
impl DataSource for HttpSource {
    fn get(&self, path: &str, query: &[(&str, String)]) -> std::io::Result<super::SourceResponse> {
        let mut url = format!("{}{}", self.base_url, path);
        for (k, (name, value)) in query.iter().enumerate() {
            url.push(if k == 0 { '?' } else { '&' });
            url.push_str(name);
            url.push('=');
            url.push_str(&percent_encode(value));
        }
        let mut request = self
            .agent
            .get(&url)
            .header("User-Agent", "repo-csi")
            .header("Accept", "application/vnd.github+json");
        if let Some(token) = &self.token {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let response = request.call().map_err(std::io::Error::other)?;
        let status = response.status().as_u16();
        let body = response
            .into_body()
            .read_to_vec()
            .map_err(std::io::Error::other)?;
        Ok(super::SourceResponse { status, body })
    }
}

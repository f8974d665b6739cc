//! Event ingestion: a REST-shaped remote source with disk cache and retry,
//! fixture files for offline runs, and the repository screening rule.

pub mod cache;
pub mod fixture;
pub mod rest;
pub mod retry;
pub mod screen;

use std::io;

use crate::error::Result;
use crate::events::{AnalysisWindow, EventSet, RepoRef};

pub use cache::CachePolicy;
pub use fixture::{load_fixture, save_fixture};
pub use rest::fetch_events_from;
pub use retry::RetryPolicy;
pub use screen::{screen_repository, ScreeningCriterion, ScreeningVerdict};

#[cfg(feature = "net")]
pub use rest::HttpSource;

/// One completed HTTP exchange. Transport-level failures (connect, read) are
/// `io::Error`s and count as retryable, like 5xx statuses.
#[derive(Debug, Clone)]
pub struct SourceResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// A GET-only REST surface. Implementations must be shareable across the
/// batch workers analyzing different repositories.
pub trait DataSource: Send + Sync {
    fn get(&self, path: &str, query: &[(&str, String)]) -> io::Result<SourceResponse>;
}

/// Fetches everything the metrics need for one repository: metadata, commits,
/// issues + pulls, and comments, retaining records created at or before the
/// window end. Each endpoint response is cached under (endpoint, params,
/// window bounds) for the cache TTL.
pub fn fetch_events(
    repo: &RepoRef,
    window: AnalysisWindow,
    source: &dyn DataSource,
    cache: &CachePolicy,
    retry: &RetryPolicy,
) -> Result<EventSet> {
    rest::fetch_events_from(repo, window, source, cache, retry)
}

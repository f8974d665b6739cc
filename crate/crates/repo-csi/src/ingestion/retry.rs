//! Exponential backoff around a single endpoint fetch.

use std::time::Duration;

use crate::error::{Error, Result};
use crate::ingestion::DataSource;

/// `max_retries` counts retries after the initial attempt: the default of 5
/// allows up to 6 requests. Delay before retry k (0-based) is
/// `base_delay × backoff^k`, strictly increasing since backoff > 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub backoff: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            base_delay: Duration::from_millis(500),
            backoff: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.backoff <= 1.0 || !self.backoff.is_finite() {
            return Err(Error::InvalidConfig {
                detail: format!("retry backoff must exceed 1, got {}", self.backoff),
            });
        }
        if self.base_delay.is_zero() {
            return Err(Error::InvalidConfig {
                detail: "retry base delay must be positive".into(),
            });
        }
        Ok(())
    }

    /// Delay before the k-th retry (0-based).
    pub fn delay_for(&self, retry_index: u32) -> Duration {
        self.base_delay
            .mul_f64(self.backoff.powi(retry_index as i32))
    }
}

/// Drives one endpoint to completion: 2xx returns the body; 401/403 and 404
/// fail immediately; anything else (429, 5xx, transport errors) retries with
/// backoff until the budget is spent.
pub(crate) fn fetch_with_retry(
    source: &dyn DataSource,
    path: &str,
    query: &[(&str, String)],
    policy: &RetryPolicy,
    repo_label: &str,
) -> Result<Vec<u8>> {
    policy.validate()?;
    let attempts = policy.max_retries + 1;
    let mut last_status = None;
    for attempt in 0..attempts {
        if attempt > 0 {
            std::thread::sleep(policy.delay_for(attempt - 1));
        }
        match source.get(path, query) {
            Ok(resp) => {
                last_status = Some(resp.status);
                match resp.status {
                    200..=299 => return Ok(resp.body),
                    401 | 403 => {
                        return Err(Error::AuthRequired {
                            endpoint: path.to_string(),
                        })
                    }
                    404 => {
                        return Err(Error::RepoNotFound {
                            repo: repo_label.to_string(),
                        })
                    }
                    _ => {}
                }
            }
            Err(_) => last_status = None,
        }
    }
    Err(Error::SourceUnavailable {
        endpoint: path.to_string(),
        attempts,
        last_status,
    })
}

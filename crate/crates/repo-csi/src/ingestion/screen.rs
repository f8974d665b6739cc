//! Corpus screening: decides whether a repository is eligible for cohort
//! analysis. Thresholds are strict inequalities on popularity and a ten-year
//! maturity requirement; archived and educational repositories are excluded
//! regardless of popularity.

use chrono::{DateTime, Months, Utc};
use serde::{Deserialize, Serialize};

use crate::events::RepoMetadata;

pub const MIN_STARS_EXCLUSIVE: u64 = 10_000;
pub const MIN_FORKS_EXCLUSIVE: u64 = 9_000;
pub const MIN_AGE_MONTHS: u32 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScreeningCriterion {
    Stars,
    Forks,
    Maturity,
    Educational,
    Archived,
}

impl ScreeningCriterion {
    pub fn name(self) -> &'static str {
        match self {
            ScreeningCriterion::Stars => "stars",
            ScreeningCriterion::Forks => "forks",
            ScreeningCriterion::Maturity => "maturity",
            ScreeningCriterion::Educational => "educational",
            ScreeningCriterion::Archived => "archived",
        }
    }
}

impl std::fmt::Display for ScreeningCriterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreeningVerdict {
    pub passed: bool,
    /// Criteria the repository failed, in declaration order. Empty iff `passed`.
    pub failed: Vec<ScreeningCriterion>,
}

/// Applies every criterion against `metadata` as of `now`.
pub fn screen_repository(metadata: &RepoMetadata, now: DateTime<Utc>) -> ScreeningVerdict {
    let mut failed = Vec::new();
    if metadata.stars <= MIN_STARS_EXCLUSIVE {
        failed.push(ScreeningCriterion::Stars);
    }
    if metadata.forks <= MIN_FORKS_EXCLUSIVE {
        failed.push(ScreeningCriterion::Forks);
    }
    // checked_add_months only fails near the datetime domain edge; a creation
    // date that far out is not mature by any reading.
    let mature = metadata
        .created_at
        .checked_add_months(Months::new(MIN_AGE_MONTHS))
        .map(|threshold| threshold <= now)
        .unwrap_or(false);
    if !mature {
        failed.push(ScreeningCriterion::Maturity);
    }
    if metadata.is_educational {
        failed.push(ScreeningCriterion::Educational);
    }
    if metadata.is_archived {
        failed.push(ScreeningCriterion::Archived);
    }
    ScreeningVerdict {
        passed: failed.is_empty(),
        failed,
    }
}

//! Per-component stability classification, in both the original estimator
//! regime (daily bins, means, cumulative denominators) and the revised one
//! (weekly bins, medians, windowed denominators).
//!
//! Every threshold comparison is inclusive. A component whose inputs were
//! absent for the window is reported with a `missing` criterion rather than
//! as a plain failure, so the index layer can apply its missing-component
//! policy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{AnalysisWindow, EventSet};
use crate::metrics::{
    compute_metrics, CentralTendency, DenominatorMode, Granularity, MetricVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Commit,
    Issue,
    Pull,
    Activity,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Commit,
        Component::Issue,
        Component::Pull,
        Component::Activity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Commit => "commit",
            Component::Issue => "issue",
            Component::Pull => "pull",
            Component::Activity => "activity",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classification bounds. Defaults are the published operating points:
/// CV ≤ 0.5; issue ratio ≥ 0.3 with resolution ≤ 14 days; merge ratio ≥ 0.4
/// with review ≤ 5 days; activity ≥ 0.25 with active-user ratio ≥ 0.15.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityThresholds {
    pub alpha_c: f64,
    pub beta_i: f64,
    pub tau_i: f64,
    pub beta_p: f64,
    pub tau_p: f64,
    pub gamma_a: f64,
    pub delta_a: f64,
}

impl Default for StabilityThresholds {
    fn default() -> Self {
        StabilityThresholds {
            alpha_c: 0.5,
            beta_i: 0.3,
            tau_i: 14.0,
            beta_p: 0.4,
            tau_p: 5.0,
            gamma_a: 0.25,
            delta_a: 0.15,
        }
    }
}

impl StabilityThresholds {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha_c", self.alpha_c),
            ("beta_i", self.beta_i),
            ("tau_i", self.tau_i),
            ("beta_p", self.beta_p),
            ("tau_p", self.tau_p),
            ("gamma_a", self.gamma_a),
            ("delta_a", self.delta_a),
        ];
        for (name, v) in fields {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidConfig {
                    detail: format!("threshold {name} must be a positive finite number, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// One estimator choice per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub commit_granularity: Granularity,
    pub tendency: CentralTendency,
    pub denom: DenominatorMode,
}

impl Regime {
    /// Daily bins, means, cumulative denominators.
    pub fn original() -> Self {
        Regime {
            commit_granularity: Granularity::Daily,
            tendency: CentralTendency::Mean,
            denom: DenominatorMode::Cumulative,
        }
    }

    /// Weekly bins, medians, windowed denominators.
    pub fn revised() -> Self {
        Regime {
            commit_granularity: Granularity::Weekly,
            tendency: CentralTendency::Median,
            denom: DenominatorMode::Windowed,
        }
    }

    pub fn preset_name(&self) -> Option<&'static str> {
        if *self == Regime::original() {
            Some("original")
        } else if *self == Regime::revised() {
            Some("revised")
        } else {
            None
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Regime::original()),
            "revised" => Ok(Regime::revised()),
            other => Err(Error::InvalidConfig {
                detail: format!("unknown regime {other:?} (expected original or revised)"),
            }),
        }
    }
}

/// One inequality check inside a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub threshold: f64,
    pub measured: f64,
    pub passed: bool,
}

impl Criterion {
    fn new(name: &str, threshold: f64, measured: f64, passed: bool) -> Self {
        Criterion {
            name: name.to_string(),
            threshold,
            measured,
            passed,
        }
    }
}

pub const MISSING_CRITERION: &str = "missing";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentVerdict {
    pub component: Component,
    pub stable: bool,
    /// The primary measure thresholds and normalizers operate on: CV for
    /// commits, closure ratio for issues, merge ratio for pulls, a for
    /// activity. 0 when the component is missing.
    pub measured: f64,
    pub criteria: Vec<Criterion>,
}

impl ComponentVerdict {
    fn from_criteria(component: Component, measured: f64, criteria: Vec<Criterion>) -> Self {
        ComponentVerdict {
            component,
            stable: criteria.iter().all(|c| c.passed),
            measured,
            criteria,
        }
    }

    /// Verdict for a component whose inputs were absent.
    pub fn missing(component: Component) -> Self {
        ComponentVerdict {
            component,
            stable: false,
            measured: 0.0,
            criteria: vec![Criterion::new(MISSING_CRITERION, 0.0, 0.0, false)],
        }
    }

    pub fn is_missing(&self) -> bool {
        self.criteria.iter().any(|c| c.name == MISSING_CRITERION)
    }
}

/// Stable iff cv ≤ α_c.
pub fn classify_commit(cv: f64, thresholds: &StabilityThresholds) -> ComponentVerdict {
    let criteria = vec![Criterion::new(
        "cv",
        thresholds.alpha_c,
        cv,
        cv <= thresholds.alpha_c,
    )];
    ComponentVerdict::from_criteria(Component::Commit, cv, criteria)
}

/// Stable iff ratio ≥ β_i and time ≤ τ_i.
pub fn classify_issue(
    ratio: f64,
    time_days: f64,
    thresholds: &StabilityThresholds,
) -> ComponentVerdict {
    let criteria = vec![
        Criterion::new(
            "ratio",
            thresholds.beta_i,
            ratio,
            ratio >= thresholds.beta_i,
        ),
        Criterion::new(
            "time_days",
            thresholds.tau_i,
            time_days,
            time_days <= thresholds.tau_i,
        ),
    ];
    ComponentVerdict::from_criteria(Component::Issue, ratio, criteria)
}

/// Stable iff ratio ≥ β_p and time ≤ τ_p.
pub fn classify_pull(
    ratio: f64,
    time_days: f64,
    thresholds: &StabilityThresholds,
) -> ComponentVerdict {
    let criteria = vec![
        Criterion::new(
            "ratio",
            thresholds.beta_p,
            ratio,
            ratio >= thresholds.beta_p,
        ),
        Criterion::new(
            "time_days",
            thresholds.tau_p,
            time_days,
            time_days <= thresholds.tau_p,
        ),
    ];
    ComponentVerdict::from_criteria(Component::Pull, ratio, criteria)
}

/// Stable iff a ≥ γ_a and active_user_ratio ≥ δ_a.
pub fn classify_activity(
    a: f64,
    active_user_ratio: f64,
    thresholds: &StabilityThresholds,
) -> ComponentVerdict {
    let criteria = vec![
        Criterion::new("engagement", thresholds.gamma_a, a, a >= thresholds.gamma_a),
        Criterion::new(
            "active_user_ratio",
            thresholds.delta_a,
            active_user_ratio,
            active_user_ratio >= thresholds.delta_a,
        ),
    ];
    ComponentVerdict::from_criteria(Component::Activity, a, criteria)
}

/// One verdict per component, in `Component::ALL` order. The commit verdict
/// reads cv_daily or cv_weekly per the regime; missing components get the
/// missing verdict. `metrics` must have been computed under `regime`.
pub fn classify_all(
    metrics: &MetricVector,
    regime: Regime,
    thresholds: &StabilityThresholds,
) -> Vec<ComponentVerdict> {
    Component::ALL
        .iter()
        .map(|&component| {
            if metrics.missing.contains(&component) {
                return ComponentVerdict::missing(component);
            }
            match component {
                Component::Commit => {
                    let cv = match regime.commit_granularity {
                        Granularity::Daily => metrics.cv_daily,
                        Granularity::Weekly => metrics.cv_weekly,
                    };
                    classify_commit(cv, thresholds)
                }
                Component::Issue => {
                    let time = match regime.tendency {
                        CentralTendency::Mean => metrics.mean_resolution_days,
                        CentralTendency::Median => metrics.median_resolution_days,
                    };
                    classify_issue(metrics.i, time, thresholds)
                }
                Component::Pull => {
                    let time = match regime.tendency {
                        CentralTendency::Mean => metrics.mean_review_days,
                        CentralTendency::Median => metrics.median_review_days,
                    };
                    classify_pull(metrics.p, time, thresholds)
                }
                Component::Activity => {
                    classify_activity(metrics.a, metrics.active_user_ratio, thresholds)
                }
            }
        })
        .collect()
}

/// One sweep step: metrics and verdicts over a single sub-window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    pub window: AnalysisWindow,
    pub metrics: MetricVector,
    pub verdicts: Vec<ComponentVerdict>,
}

/// Optional per-sub-window mode: evaluates consecutive sub-windows of
/// `sub_days` days covering the window (trailing partial dropped). The
/// default single-evaluation behaviour is `classify_all` over the full
/// window.
pub fn sweep(
    events: &EventSet,
    window: AnalysisWindow,
    sub_days: i64,
    regime: Regime,
    thresholds: &StabilityThresholds,
) -> Result<Vec<SweepStep>> {
    if sub_days <= 0 {
        return Err(Error::InvalidConfig {
            detail: format!("sweep sub-window must be positive, got {sub_days} days"),
        });
    }
    let width = chrono::Duration::days(sub_days);
    let mut steps = Vec::new();
    let mut start = window.start;
    while start + width <= window.end {
        let sub = AnalysisWindow::new(start, start + width)?;
        let metrics = compute_metrics(events, sub, regime);
        let verdicts = classify_all(&metrics, regime, thresholds);
        steps.push(SweepStep {
            window: sub,
            metrics,
            verdicts,
        });
        start += width;
    }
    Ok(steps)
}

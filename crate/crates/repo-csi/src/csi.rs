//! Triangular normalization of component measures and the weighted composite
//! index built from them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricVector;
use crate::stability::{Component, ComponentVerdict};

/// Target and half-width of one component's normalizer band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mu: f64,
    pub sigma: f64,
}

/// Per-component normalizer parameters. Defaults are the published targets:
/// commit (0.25, 0.25), issue (0.40, 0.10), pull (0.50, 0.10),
/// activity (0.35, 0.10).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizerParams {
    pub commit: Band,
    pub issue: Band,
    pub pull: Band,
    pub activity: Band,
}

impl Default for NormalizerParams {
    fn default() -> Self {
        NormalizerParams {
            commit: Band {
                mu: 0.25,
                sigma: 0.25,
            },
            issue: Band {
                mu: 0.40,
                sigma: 0.10,
            },
            pull: Band {
                mu: 0.50,
                sigma: 0.10,
            },
            activity: Band {
                mu: 0.35,
                sigma: 0.10,
            },
        }
    }
}

impl NormalizerParams {
    pub fn band(&self, component: Component) -> Band {
        match component {
            Component::Commit => self.commit,
            Component::Issue => self.issue,
            Component::Pull => self.pull,
            Component::Activity => self.activity,
        }
    }

    pub fn band_mut(&mut self, component: Component) -> &mut Band {
        match component {
            Component::Commit => &mut self.commit,
            Component::Issue => &mut self.issue,
            Component::Pull => &mut self.pull,
            Component::Activity => &mut self.activity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for component in Component::ALL {
            let band = self.band(component);
            if band.sigma <= 0.0 || !band.sigma.is_finite() || !band.mu.is_finite() {
                return Err(Error::InvalidSigma { sigma: band.sigma });
            }
        }
        Ok(())
    }
}

/// Simplex weights over the four components. Default [0.3, 0.25, 0.25, 0.2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Weights {
    pub commit: f64,
    pub issue: f64,
    pub pull: f64,
    pub activity: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            commit: 0.3,
            issue: 0.25,
            pull: 0.25,
            activity: 0.2,
        }
    }
}

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

impl Weights {
    pub fn get(&self, component: Component) -> f64 {
        match component {
            Component::Commit => self.commit,
            Component::Issue => self.issue,
            Component::Pull => self.pull,
            Component::Activity => self.activity,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.commit, self.issue, self.pull, self.activity]
    }

    pub fn validate(&self) -> Result<()> {
        for (component, w) in Component::ALL.iter().zip(self.as_array()) {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidWeights {
                    detail: format!("w_{component} = {w} outside [0, 1]"),
                });
            }
        }
        let sum: f64 = self.as_array().iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights {
                detail: format!("weights sum to {sum}, expected 1"),
            });
        }
        Ok(())
    }
}

/// What a missing component contributes to the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    /// φ = 0 for the missing component (published behaviour).
    #[default]
    Zero,
    /// Additionally report the index over present components with their
    /// weights rescaled to sum 1.
    Renormalize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiResult {
    pub phi_c: f64,
    pub phi_i: f64,
    pub phi_p: f64,
    pub phi_a: f64,
    pub csi: f64,
    pub missing_components: Vec<Component>,
    /// Present only when the policy is renormalize and a component is
    /// actually missing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalized_csi: Option<f64>,
}

/// φ(x) = 1 − |x − μ|/σ inside [μ−σ, μ+σ], 0 outside.
pub fn triangular_normalize(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidSigma { sigma });
    }
    let d = (x - mu).abs();
    if d <= sigma {
        Ok(1.0 - d / sigma)
    } else {
        Ok(0.0)
    }
}

/// w·φ over the four components, in [0, 1] for φ in [0, 1].
pub fn composite_index(phis: [f64; 4], weights: &Weights) -> Result<f64> {
    weights.validate()?;
    Ok(phis
        .iter()
        .zip(weights.as_array())
        .map(|(phi, w)| phi * w)
        .sum())
}

/// Index over the non-missing components only, with their weights rescaled
/// to sum 1; equals the plain index when nothing is missing. 0 when every
/// component is missing.
pub fn renormalized_index(
    phis: [f64; 4],
    weights: &Weights,
    missing: &BTreeSet<Component>,
) -> Result<f64> {
    weights.validate()?;
    let mut weighted = 0.0;
    let mut present_weight = 0.0;
    for (component, (phi, w)) in Component::ALL
        .iter()
        .zip(phis.iter().zip(weights.as_array()))
    {
        if !missing.contains(component) {
            weighted += phi * w;
            present_weight += w;
        }
    }
    if present_weight == 0.0 {
        return Ok(0.0);
    }
    Ok(weighted / present_weight)
}

/// Normalizes the per-component measures (CV for commits, closure ratio for
/// issues, merge ratio for pulls, a for activity) and aggregates them.
/// Missing components score φ = 0; under [`MissingPolicy::Renormalize`] the
/// rescaled index over present components is additionally reported.
pub fn evaluate(
    metrics: &MetricVector,
    verdicts: &[ComponentVerdict],
    params: &NormalizerParams,
    weights: &Weights,
    missing_policy: MissingPolicy,
) -> Result<CsiResult> {
    params.validate()?;

    let missing: BTreeSet<Component> = verdicts
        .iter()
        .filter(|v| v.is_missing())
        .map(|v| v.component)
        .collect();

    // The regime-resolved CV travels on the commit verdict; the other
    // measures are regime-independent fields of the metric vector.
    let commit_measure = verdicts
        .iter()
        .find(|v| v.component == Component::Commit)
        .map(|v| v.measured)
        .unwrap_or(0.0);
    let measures = [commit_measure, metrics.i, metrics.p, metrics.a];

    let mut phis = [0.0; 4];
    for (k, component) in Component::ALL.iter().enumerate() {
        phis[k] = if missing.contains(component) {
            0.0
        } else {
            let band = params.band(*component);
            triangular_normalize(measures[k], band.mu, band.sigma)?
        };
    }

    let csi = composite_index(phis, weights)?;
    let renormalized_csi = if missing_policy == MissingPolicy::Renormalize && !missing.is_empty() {
        Some(renormalized_index(phis, weights, &missing)?)
    } else {
        None
    };

    Ok(CsiResult {
        phi_c: phis[0],
        phi_i: phis[1],
        phi_p: phis[2],
        phi_a: phis[3],
        csi,
        missing_components: missing.into_iter().collect(),
        renormalized_csi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{classify_all, Regime, StabilityThresholds};

    #[test]
    fn published_defaults() {
        let p = NormalizerParams::default();
        assert_eq!((p.commit.mu, p.commit.sigma), (0.25, 0.25));
        assert_eq!((p.issue.mu, p.issue.sigma), (0.40, 0.10));
        assert_eq!((p.pull.mu, p.pull.sigma), (0.50, 0.10));
        assert_eq!((p.activity.mu, p.activity.sigma), (0.35, 0.10));
        let w = Weights::default();
        assert_eq!(w.as_array(), [0.3, 0.25, 0.25, 0.2]);
        assert!(w.validate().is_ok());
    }

    #[test]
    fn triangular_worked_example() {
        // p = 0.55 against the pull band (0.50, 0.10).
        assert!((triangular_normalize(0.55, 0.50, 0.10).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn triangular_apex_and_edges() {
        for band in [
            NormalizerParams::default().commit,
            NormalizerParams::default().issue,
            NormalizerParams::default().pull,
            NormalizerParams::default().activity,
        ] {
            assert_eq!(
                triangular_normalize(band.mu, band.mu, band.sigma).unwrap(),
                1.0
            );
            // Edge abscissas computed in f64 can land a rounding error inside
            // the band (e.g. 0.4 + 0.1); φ is continuous there, so the edge
            // value is zero to well under 1e-12 rather than exactly.
            for edge in [band.mu + band.sigma, band.mu - band.sigma] {
                let phi = triangular_normalize(edge, band.mu, band.sigma).unwrap();
                assert!(phi.abs() < 1e-12, "φ({edge}) = {phi}");
            }
            assert_eq!(
                triangular_normalize(band.mu + 2.0 * band.sigma, band.mu, band.sigma).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn triangular_rejects_bad_sigma() {
        assert!(matches!(
            triangular_normalize(0.5, 0.5, 0.0),
            Err(Error::InvalidSigma { .. })
        ));
        assert!(triangular_normalize(0.5, 0.5, -1.0).is_err());
        assert!(triangular_normalize(0.5, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn issue_band_is_open_interval_030_050() {
        let b = NormalizerParams::default().issue;
        assert_eq!(triangular_normalize(0.30, b.mu, b.sigma).unwrap(), 0.0);
        // 0.50 − 0.40 rounds a hair below σ, so the edge is zero to 1e-12.
        assert!(triangular_normalize(0.50, b.mu, b.sigma).unwrap().abs() < 1e-12);
        assert!(triangular_normalize(0.31, b.mu, b.sigma).unwrap() > 0.0);
        assert!(triangular_normalize(0.49, b.mu, b.sigma).unwrap() > 0.0);
    }

    #[test]
    fn composite_index_examples() {
        let w = Weights::default();
        assert_eq!(composite_index([1.0; 4], &w).unwrap(), 1.0);
        assert_eq!(composite_index([0.0; 4], &w).unwrap(), 0.0);
        let csi = composite_index([1.0, 0.0, 0.5, 0.0], &w).unwrap();
        assert!((csi - 0.425).abs() < 1e-12);
    }

    #[test]
    fn composite_index_rejects_bad_weights() {
        let w = Weights {
            commit: 0.4, // sum 1.1
            ..Weights::default()
        };
        assert!(matches!(
            composite_index([1.0; 4], &w),
            Err(Error::InvalidWeights { .. })
        ));
        let w = Weights {
            commit: 1.5,
            issue: -0.5,
            pull: 0.0,
            activity: 0.0,
        };
        assert!(composite_index([1.0; 4], &w).is_err());
    }

    fn metrics_with(measures: [f64; 4]) -> MetricVector {
        MetricVector {
            c: 1.0,
            i: measures[1],
            p: measures[2],
            a: measures[3],
            cv_daily: measures[0],
            cv_weekly: measures[0],
            i_full: 0.0,
            p_full: 0.0,
            mean_resolution_days: 1.0,
            median_resolution_days: 1.0,
            mean_review_days: 1.0,
            median_review_days: 1.0,
            active_user_ratio: 0.5,
            missing: Default::default(),
        }
    }

    fn evaluate_measures(
        measures: [f64; 4],
        missing: &[Component],
        policy: MissingPolicy,
    ) -> CsiResult {
        let mut metrics = metrics_with(measures);
        metrics.missing.extend(missing.iter().copied());
        let verdicts = classify_all(&metrics, Regime::revised(), &StabilityThresholds::default());
        evaluate(
            &metrics,
            &verdicts,
            &NormalizerParams::default(),
            &Weights::default(),
            policy,
        )
        .unwrap()
    }

    #[test]
    fn measures_at_targets_score_one() {
        let r = evaluate_measures([0.25, 0.40, 0.50, 0.35], &[], MissingPolicy::Zero);
        assert_eq!([r.phi_c, r.phi_i, r.phi_p, r.phi_a], [1.0; 4]);
        assert_eq!(r.csi, 1.0);
        assert!(r.missing_components.is_empty());
        assert!(r.renormalized_csi.is_none());
    }

    #[test]
    fn measures_outside_all_bands_score_zero() {
        let r = evaluate_measures([5.0, 0.9, 0.05, 9.0], &[], MissingPolicy::Zero);
        assert_eq!(r.csi, 0.0);
    }

    #[test]
    fn missing_issue_zero_policy_example() {
        // Other components at their targets: csi = 0.3 + 0 + 0.25 + 0.2.
        let r = evaluate_measures(
            [0.25, 0.0, 0.50, 0.35],
            &[Component::Issue],
            MissingPolicy::Zero,
        );
        assert_eq!(r.phi_i, 0.0);
        assert!((r.csi - 0.75).abs() < 1e-12);
        assert_eq!(r.missing_components, vec![Component::Issue]);
        assert!(r.renormalized_csi.is_none());
    }

    #[test]
    fn renormalize_policy_rescales_present_weights() {
        let r = evaluate_measures(
            [0.25, 0.0, 0.50, 0.35],
            &[Component::Issue],
            MissingPolicy::Renormalize,
        );
        assert!((r.csi - 0.75).abs() < 1e-12);
        // (0.3 + 0.25 + 0.2) / 0.75 = 1.
        assert!((r.renormalized_csi.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn renormalized_equals_csi_when_nothing_missing() {
        let phis = [0.3, 0.7, 0.2, 0.9];
        let w = Weights::default();
        let plain = composite_index(phis, &w).unwrap();
        let renorm = renormalized_index(phis, &w, &BTreeSet::new()).unwrap();
        assert!((plain - renorm).abs() < 1e-12);
    }

    #[test]
    fn renormalized_all_missing_is_zero() {
        let all: BTreeSet<_> = Component::ALL.into_iter().collect();
        assert_eq!(
            renormalized_index([0.0; 4], &Weights::default(), &all).unwrap(),
            0.0
        );
    }

    #[test]
    fn missing_component_phi_zero_even_if_measure_in_band() {
        // Measure 0.0 sits inside the commit band (0.25 ± 0.25), but a
        // missing commit component must still score 0.
        let r = evaluate_measures(
            [0.0, 0.40, 0.50, 0.35],
            &[Component::Commit],
            MissingPolicy::Zero,
        );
        assert_eq!(r.phi_c, 0.0);
    }

    #[test]
    fn evaluate_rejects_invalid_params() {
        let metrics = metrics_with([0.25, 0.4, 0.5, 0.35]);
        let verdicts = classify_all(&metrics, Regime::revised(), &StabilityThresholds::default());
        let mut params = NormalizerParams::default();
        params.pull.sigma = 0.0;
        assert!(evaluate(
            &metrics,
            &verdicts,
            &params,
            &Weights::default(),
            MissingPolicy::Zero
        )
        .is_err());
    }
}

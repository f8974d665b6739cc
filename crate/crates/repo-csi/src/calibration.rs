//! Data-driven normalizer parameters: median and scaled MAD over the
//! component measures of a stable cohort.

use serde::{Deserialize, Serialize};

use crate::csi::NormalizerParams;
use crate::error::{Error, Result};
use crate::metrics::robust_stats;
use crate::stability::{Component, ComponentVerdict};

pub const DEFAULT_SIGMA_FLOOR: f64 = 0.01;

/// One repository's contribution to a calibration cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMeasure {
    pub repo: String,
    pub measure: f64,
    pub verdict: ComponentVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub component: Component,
    pub cohort_size: usize,
    /// Cohort median.
    pub mu: f64,
    /// 1.4826 × cohort MAD.
    pub sigma: f64,
    pub min_value: f64,
    pub max_value: f64,
}

/// Derives (μ, σ) for one component from the measures of repositories whose
/// verdict for that component is stable. Unstable and missing repositories
/// are excluded; an all-excluded input is an `EmptyCohort`.
pub fn calibrate(component: Component, measures: &[CohortMeasure]) -> Result<CalibrationResult> {
    let cohort: Vec<f64> = measures
        .iter()
        .filter(|m| m.verdict.component == component && m.verdict.stable)
        .map(|m| m.measure)
        .collect();
    if cohort.is_empty() {
        return Err(Error::EmptyCohort { component });
    }
    let stats = robust_stats(&cohort)?;
    let min_value = cohort.iter().copied().fold(f64::INFINITY, f64::min);
    let max_value = cohort.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CalibrationResult {
        component,
        cohort_size: cohort.len(),
        mu: stats.median,
        sigma: stats.scaled_mad,
        min_value,
        max_value,
    })
}

/// Overlays calibration results onto base parameters: μ_k ← result.mu,
/// σ_k ← max(result.sigma, sigma_floor). Components without a result keep
/// their base band. Callers must pass sigma_floor > 0; the default floor
/// guards the degenerate constant-cohort case.
pub fn apply_calibration(
    base: &NormalizerParams,
    results: &[CalibrationResult],
    sigma_floor: f64,
) -> NormalizerParams {
    let mut params = *base;
    for r in results {
        let band = params.band_mut(r.component);
        band.mu = r.mu;
        band.sigma = r.sigma.max(sigma_floor);
    }
    params
}

/// Components calibrated from cohort measures. The commit band is never
/// data-calibrated here; it keeps its base value.
pub const CALIBRATED_COMPONENTS: [Component; 3] =
    [Component::Issue, Component::Pull, Component::Activity];

/// One component's slot in a calibration document: a result, or a marker
/// explaining why none could be derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CalibrationEntry {
    Calibrated(CalibrationResult),
    Empty { component: Component, error: String },
}

/// The full calibration output: per-component results (or empty-cohort
/// markers) plus the applied parameter set. The document itself is accepted
/// anywhere a parameter file is, via [`parse_params_document`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDocument {
    pub base: NormalizerParams,
    pub sigma_floor: f64,
    pub components: Vec<CalibrationEntry>,
    /// `base` overlaid with every successful result.
    pub params: NormalizerParams,
}

impl CalibrationDocument {
    pub fn build(base: NormalizerParams, sigma_floor: f64, measures: &[CohortMeasure]) -> Self {
        let mut components = Vec::new();
        let mut results = Vec::new();
        for component in CALIBRATED_COMPONENTS {
            match calibrate(component, measures) {
                Ok(r) => {
                    components.push(CalibrationEntry::Calibrated(r));
                    results.push(r);
                }
                Err(e) => components.push(CalibrationEntry::Empty {
                    component,
                    error: e.to_string(),
                }),
            }
        }
        let params = apply_calibration(&base, &results, sigma_floor);
        CalibrationDocument {
            base,
            sigma_floor,
            components,
            params,
        }
    }

    pub fn calibrated_count(&self) -> usize {
        self.components
            .iter()
            .filter(|e| matches!(e, CalibrationEntry::Calibrated(_)))
            .count()
    }

    pub fn to_json(&self) -> String {
        let mut body = serde_json::to_string_pretty(self).expect("document serialization");
        body.push('\n');
        body
    }
}

/// Parses a parameter file: either a bare [`NormalizerParams`] object
/// (partial objects allowed; absent bands default) or a full calibration
/// document, whose `params` field wins. The document shape is tried first
/// because the permissive bare form would otherwise swallow it.
pub fn parse_params_document(text: &str) -> Result<NormalizerParams> {
    if let Ok(doc) = serde_json::from_str::<CalibrationDocument>(text) {
        return Ok(doc.params);
    }
    serde_json::from_str::<NormalizerParams>(text).map_err(|e| Error::InvalidConfig {
        detail: format!("unparseable normalizer parameters: {e}"),
    })
}

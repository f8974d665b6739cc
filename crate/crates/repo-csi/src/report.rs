//! Report documents. JSON is the canonical form and carries full parameter
//! provenance; CSV is a fixed-column rendering with floats at six decimal
//! places. Per-repository failures stay in the document as error records.

use serde::{Deserialize, Serialize};

use crate::analysis::{EvaluationSettings, RepoAnalysis, RepoOutcome};
use crate::csi::{CsiResult, MissingPolicy, NormalizerParams, Weights};
use crate::error::{Error, Result};
use crate::events::AnalysisWindow;
use crate::metrics::{CentralTendency, MetricVector};
use crate::stability::{Component, ComponentVerdict, Regime, StabilityThresholds};

pub const CSV_HEADER: [&str; 16] = [
    "repo",
    "c",
    "cv_daily",
    "cv_weekly",
    "i_ratio",
    "i_time",
    "p_ratio",
    "p_time",
    "a",
    "active_ratio",
    "phi_c",
    "phi_i",
    "phi_p",
    "phi_a",
    "csi",
    "verdicts",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidConfig {
                detail: format!("unknown output format {other:?} (expected json or csv)"),
            }),
        }
    }
}

/// One repository's slot in the report: either a full analysis or an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoRecord {
    pub repo: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<AnalysisWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<ComponentVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csi: Option<CsiResult>,
}

impl RepoRecord {
    pub fn from_analysis(analysis: RepoAnalysis) -> Self {
        RepoRecord {
            repo: analysis.repo,
            error: None,
            window: Some(analysis.window),
            metrics: Some(analysis.metrics),
            verdicts: analysis.verdicts,
            csi: Some(analysis.csi),
        }
    }

    pub fn from_error(label: String, error: &Error) -> Self {
        RepoRecord {
            repo: label,
            error: Some(error.to_string()),
            window: None,
            metrics: None,
            verdicts: Vec::new(),
            csi: None,
        }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

/// The full analysis document: run parameters plus one record per input, in
/// input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub regime: Regime,
    pub thresholds: StabilityThresholds,
    pub params: NormalizerParams,
    pub weights: Weights,
    pub missing_policy: MissingPolicy,
    pub records: Vec<RepoRecord>,
}

impl AnalysisReport {
    pub fn from_outcomes(settings: &EvaluationSettings, outcomes: Vec<RepoOutcome>) -> Self {
        let records = outcomes
            .into_iter()
            .map(|outcome| match outcome.result {
                Ok(analysis) => RepoRecord::from_analysis(analysis),
                Err(err) => RepoRecord::from_error(outcome.label, &err),
            })
            .collect();
        AnalysisReport {
            regime: settings.regime,
            thresholds: settings.thresholds,
            params: settings.params,
            weights: settings.weights,
            missing_policy: settings.missing_policy,
            records,
        }
    }

    pub fn has_errors(&self) -> bool {
        self.records.iter().any(RepoRecord::is_error)
    }

    /// Canonical serialization: pretty JSON, struct field order, trailing
    /// newline. Identical inputs produce identical bytes.
    pub fn to_json(&self) -> String {
        let mut body = serde_json::to_string_pretty(self).expect("report serialization");
        body.push('\n');
        body
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::MalformedAnalysis {
            detail: e.to_string(),
        })
    }

    /// Fixed-column CSV; one row per record, error rows keep the repo label
    /// and flag the verdict cell. Floats are rendered at six decimal places.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_HEADER).expect("csv header");
        for record in &self.records {
            writer
                .write_record(csv_row(self.regime, record))
                .expect("csv row");
        }
        let bytes = writer.into_inner().expect("csv flush");
        String::from_utf8(bytes).expect("csv is utf-8")
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
        }
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

fn verdict_cell(verdicts: &[ComponentVerdict]) -> String {
    let parts: Vec<String> = verdicts
        .iter()
        .map(|v| {
            let state = if v.is_missing() {
                "missing"
            } else if v.stable {
                "stable"
            } else {
                "unstable"
            };
            format!("{}={state}", v.component)
        })
        .collect();
    parts.join(";")
}

fn csv_row(regime: Regime, record: &RepoRecord) -> Vec<String> {
    let Some(metrics) = &record.metrics else {
        let mut row = vec![record.repo.clone()];
        row.extend((0..14).map(|_| String::new()));
        row.push(format!(
            "error={}",
            record.error.as_deref().unwrap_or("unknown")
        ));
        return row;
    };
    let (i_time, p_time) = match regime.tendency {
        CentralTendency::Mean => (metrics.mean_resolution_days, metrics.mean_review_days),
        CentralTendency::Median => (metrics.median_resolution_days, metrics.median_review_days),
    };
    let csi = record.csi.as_ref().expect("metrics imply csi");
    vec![
        record.repo.clone(),
        fmt6(metrics.c),
        fmt6(metrics.cv_daily),
        fmt6(metrics.cv_weekly),
        fmt6(metrics.i),
        fmt6(i_time),
        fmt6(metrics.p),
        fmt6(p_time),
        fmt6(metrics.a),
        fmt6(metrics.active_user_ratio),
        fmt6(csi.phi_c),
        fmt6(csi.phi_i),
        fmt6(csi.phi_p),
        fmt6(csi.phi_a),
        fmt6(csi.csi),
        verdict_cell(&record.verdicts),
    ]
}

/// Convenience for tests and the CLI: the verdict string for one component,
/// if the record carries it.
pub fn verdict_state(record: &RepoRecord, component: Component) -> Option<&'static str> {
    record
        .verdicts
        .iter()
        .find(|v| v.component == component)
        .map(|v| {
            if v.is_missing() {
                "missing"
            } else if v.stable {
                "stable"
            } else {
                "unstable"
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{analyze_events, BatchOptions};
    use crate::synthgen::{generate, ScenarioSpec};

    fn one_report(seeds: &[u64]) -> AnalysisReport {
        let settings = EvaluationSettings::default();
        let options = BatchOptions::new(settings.clone());
        let outcomes = seeds
            .iter()
            .map(|&seed| {
                let events = generate(&ScenarioSpec::baseline(seed)).unwrap();
                let window = options.fixture_window(&events).unwrap();
                RepoOutcome {
                    label: events.repo.to_string(),
                    result: analyze_events(&events, window, &settings),
                }
            })
            .collect();
        AnalysisReport::from_outcomes(&settings, outcomes)
    }

    #[test]
    fn json_round_trip_preserves_the_document() {
        let report = one_report(&[1, 2]);
        let text = report.to_json();
        let parsed = AnalysisReport::from_json(&text).unwrap();
        assert_eq!(parsed, report);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn json_serialization_is_deterministic() {
        let a = one_report(&[4, 5, 6]).to_json();
        let b = one_report(&[4, 5, 6]).to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_fixed_header_and_one_row_per_record() {
        let report = one_report(&[1, 2, 3]);
        let text = report.to_csv();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn empty_report_renders_header_only_csv() {
        let report = AnalysisReport::from_outcomes(&EvaluationSettings::default(), vec![]);
        let text = report.to_csv();
        assert_eq!(text.trim_end(), CSV_HEADER.join(","));
        assert!(!report.has_errors());
    }

    #[test]
    fn csv_values_match_json_to_six_places() {
        let report = one_report(&[7]);
        let text = report.to_csv();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let row = reader.records().next().unwrap().unwrap();
        let metrics = report.records[0].metrics.as_ref().unwrap();
        let csi = report.records[0].csi.as_ref().unwrap();
        assert_eq!(row[0], report.records[0].repo);
        assert!((row[1].parse::<f64>().unwrap() - metrics.c).abs() < 5e-7);
        assert!((row[4].parse::<f64>().unwrap() - metrics.i).abs() < 5e-7);
        assert!((row[14].parse::<f64>().unwrap() - csi.csi).abs() < 5e-7);
    }

    #[test]
    fn error_records_render_with_empty_numeric_cells() {
        let settings = EvaluationSettings::default();
        let outcomes = vec![RepoOutcome {
            label: "octo/gone".into(),
            result: Err(Error::RepoNotFound {
                repo: "octo/gone".into(),
            }),
        }];
        let report = AnalysisReport::from_outcomes(&settings, outcomes);
        assert!(report.has_errors());
        let text = report.to_csv();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let row = reader.records().next().unwrap().unwrap();
        assert_eq!(&row[0], "octo/gone");
        assert_eq!(&row[1], "");
        assert!(row[15].starts_with("error="));

        // The JSON side keeps the full message.
        let parsed = AnalysisReport::from_json(&report.to_json()).unwrap();
        assert!(parsed.records[0]
            .error
            .as_ref()
            .unwrap()
            .contains("octo/gone"));
    }

    #[test]
    fn verdict_cell_lists_components_in_order() {
        let report = one_report(&[1]);
        let cell = verdict_cell(&report.records[0].verdicts);
        let fields: Vec<_> = cell.split(';').collect();
        assert_eq!(fields.len(), 4);
        assert!(fields[0].starts_with("commit="));
        assert!(fields[1].starts_with("issue="));
        assert!(fields[2].starts_with("pull="));
        assert!(fields[3].starts_with("activity="));
    }

    #[test]
    fn malformed_document_is_reported_as_such() {
        match AnalysisReport::from_json("{\"regime\": 3}").unwrap_err() {
            Error::MalformedAnalysis { .. } => {}
            other => panic!("unexpected: {other}"),
        }
    }
}

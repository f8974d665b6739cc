//! Command-line interface: `analyze`, `calibrate`, `report`, and `config`.
//!
//! Configuration precedence is flags > config file (`--config`, JSON) >
//! built-in defaults. `config` prints the effective merged configuration,
//! which is itself loadable via `--config`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    analyze_batch, analyze_batch_sequential, BatchInput, BatchOptions, EvaluationSettings,
    RepoOutcome,
};
use crate::calibration::{
    parse_params_document, CalibrationDocument, CohortMeasure, CALIBRATED_COMPONENTS,
    DEFAULT_SIGMA_FLOOR,
};
use crate::csi::{MissingPolicy, NormalizerParams, Weights};
use crate::error::{Error, Result};
use crate::ingestion::CachePolicy;
use crate::report::{AnalysisReport, OutputFormat};
use crate::stability::{Component, Regime, StabilityThresholds};

#[derive(Parser)]
#[command(
    name = "repo-csi",
    version,
    about = "Composite stability index for software repositories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze repositories or fixtures and emit a report document
    Analyze(CommonArgs),
    /// Derive normalizer parameters from a cohort of repositories
    Calibrate(CommonArgs),
    /// Re-render an analysis document as JSON or CSV
    Report(ReportArgs),
    /// Print the effective configuration after merging flags and files
    Config(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Repositories as owner/name, or fixture paths (comma-separated or repeated)
    #[arg(long, value_delimiter = ',')]
    repos: Vec<String>,

    /// Fixture files (comma-separated or repeated)
    #[arg(long, value_delimiter = ',')]
    fixtures: Vec<PathBuf>,

    /// Analysis window length in years (365-day years)
    #[arg(long)]
    window_years: Option<f64>,

    /// Window end as an RFC 3339 timestamp; defaults to data-anchored for
    /// fixtures and the current UTC day for remote repositories
    #[arg(long)]
    window_end: Option<DateTime<Utc>>,

    /// Estimator regime: original or revised
    #[arg(long)]
    regime: Option<String>,

    /// Normalizer parameter file (bare params or a calibration document)
    #[arg(long)]
    params: Option<PathBuf>,

    /// Component weights as w_c,w_i,w_p,w_a (must sum to 1)
    #[arg(long)]
    weights: Option<String>,

    /// Missing-component policy: zero or renormalize
    #[arg(long)]
    missing_policy: Option<String>,

    /// Output format: json or csv
    #[arg(long)]
    format: Option<String>,

    /// Response cache directory
    #[arg(long)]
    cache_dir: Option<PathBuf>,

    /// Environment variable holding the API token
    #[arg(long)]
    token_env: Option<String>,

    /// Authors to drop before analysis, e.g. bots (comma-separated or repeated)
    #[arg(long, value_delimiter = ',')]
    exclude_users: Vec<String>,

    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,

    /// Write output to this file instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Lower bound on calibrated sigma values
    #[arg(long)]
    sigma_floor: Option<f64>,

    /// Process the batch on one thread
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Analysis document produced by `analyze` with JSON output
    input: PathBuf,

    #[command(flatten)]
    common: CommonArgs,
}

/// Optional-everything mirror of [`RunConfig`] for `--config` files.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct FileConfig {
    repos: Vec<String>,
    fixtures: Vec<PathBuf>,
    window_years: Option<f64>,
    window_end: Option<DateTime<Utc>>,
    regime: Option<String>,
    thresholds: Option<StabilityThresholds>,
    params: Option<NormalizerParams>,
    weights: Option<Weights>,
    missing_policy: Option<MissingPolicy>,
    format: Option<OutputFormat>,
    cache_dir: Option<PathBuf>,
    token_env: Option<String>,
    exclude_users: Vec<String>,
    sigma_floor: Option<f64>,
    sequential: Option<bool>,
}

/// The fully resolved configuration a command runs under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub repos: Vec<String>,
    pub fixtures: Vec<PathBuf>,
    pub window_years: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_end: Option<DateTime<Utc>>,
    pub regime: String,
    pub thresholds: StabilityThresholds,
    pub params: NormalizerParams,
    pub weights: Weights,
    pub missing_policy: MissingPolicy,
    pub format: OutputFormat,
    pub cache_dir: PathBuf,
    pub token_env: String,
    pub exclude_users: Vec<String>,
    pub sigma_floor: f64,
    pub sequential: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            repos: Vec::new(),
            fixtures: Vec::new(),
            window_years: 5.0,
            window_end: None,
            regime: "revised".to_string(),
            thresholds: StabilityThresholds::default(),
            params: NormalizerParams::default(),
            weights: Weights::default(),
            missing_policy: MissingPolicy::default(),
            format: OutputFormat::Json,
            cache_dir: CachePolicy::default().cache_dir,
            token_env: "GITHUB_TOKEN".to_string(),
            exclude_users: Vec::new(),
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            sequential: false,
        }
    }
}

fn parse_weights(text: &str) -> Result<Weights> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::InvalidConfig {
            detail: format!(
                "--weights needs four comma-separated values, got {}",
                parts.len()
            ),
        });
    }
    let mut values = [0.0f64; 4];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| Error::InvalidConfig {
            detail: format!("unparseable weight {part:?}"),
        })?;
    }
    Ok(Weights {
        commit: values[0],
        issue: values[1],
        pull: values[2],
        activity: values[3],
    })
}

fn parse_missing_policy(text: &str) -> Result<MissingPolicy> {
    match text {
        "zero" => Ok(MissingPolicy::Zero),
        "renormalize" => Ok(MissingPolicy::Renormalize),
        other => Err(Error::InvalidConfig {
            detail: format!("unknown missing policy {other:?} (expected zero or renormalize)"),
        }),
    }
}

impl RunConfig {
    /// Merges flags over an optional config file over defaults.
    fn resolve(args: &CommonArgs) -> Result<RunConfig> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                serde_json::from_str(&text).map_err(|e| Error::InvalidConfig {
                    detail: format!("config file {}: {e}", path.display()),
                })?
            }
            None => FileConfig::default(),
        };
        let defaults = RunConfig::default();

        let params = match &args.params {
            Some(path) => parse_params_document(&fs::read_to_string(path)?)?,
            None => file.params.unwrap_or(defaults.params),
        };
        let weights = match &args.weights {
            Some(text) => parse_weights(text)?,
            None => file.weights.unwrap_or(defaults.weights),
        };
        let missing_policy = match &args.missing_policy {
            Some(text) => parse_missing_policy(text)?,
            None => file.missing_policy.unwrap_or(defaults.missing_policy),
        };
        let format = match &args.format {
            Some(text) => text.parse()?,
            None => file.format.unwrap_or(defaults.format),
        };
        let regime = match &args.regime {
            Some(text) => {
                Regime::from_str(text)?; // fail fast on typos
                text.clone()
            }
            None => file.regime.unwrap_or(defaults.regime),
        };

        let config = RunConfig {
            repos: if args.repos.is_empty() {
                file.repos
            } else {
                args.repos.clone()
            },
            fixtures: if args.fixtures.is_empty() {
                file.fixtures
            } else {
                args.fixtures.clone()
            },
            window_years: args
                .window_years
                .or(file.window_years)
                .unwrap_or(defaults.window_years),
            window_end: args.window_end.or(file.window_end),
            regime,
            thresholds: file.thresholds.unwrap_or(defaults.thresholds),
            params,
            weights,
            missing_policy,
            format,
            cache_dir: args
                .cache_dir
                .clone()
                .or(file.cache_dir)
                .unwrap_or(defaults.cache_dir),
            token_env: args
                .token_env
                .clone()
                .or(file.token_env)
                .unwrap_or(defaults.token_env),
            exclude_users: if args.exclude_users.is_empty() {
                file.exclude_users
            } else {
                args.exclude_users.clone()
            },
            sigma_floor: args
                .sigma_floor
                .or(file.sigma_floor)
                .unwrap_or(defaults.sigma_floor),
            sequential: args.sequential || file.sequential.unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.window_years <= 0.0 || !self.window_years.is_finite() {
            return Err(Error::InvalidConfig {
                detail: format!("window_years must be positive, got {}", self.window_years),
            });
        }
        if self.sigma_floor <= 0.0 || !self.sigma_floor.is_finite() {
            return Err(Error::InvalidConfig {
                detail: format!("sigma_floor must be positive, got {}", self.sigma_floor),
            });
        }
        self.settings()?.validate()
    }

    pub fn window_days(&self) -> i64 {
        (self.window_years * 365.0).round() as i64
    }

    pub fn settings(&self) -> Result<EvaluationSettings> {
        Ok(EvaluationSettings {
            regime: self.regime.parse()?,
            thresholds: self.thresholds,
            params: self.params,
            weights: self.weights,
            missing_policy: self.missing_policy,
        })
    }

    /// Classifies `repos` entries (existing files and .json paths are
    /// fixtures, the rest parse as owner/name) and appends `fixtures`.
    fn batch_inputs(&self) -> Result<(Vec<BatchInput>, bool)> {
        let mut inputs = Vec::new();
        let mut remote = false;
        for entry in &self.repos {
            let as_path = Path::new(entry);
            if as_path.exists() || entry.ends_with(".json") {
                inputs.push(BatchInput::Fixture(as_path.to_path_buf()));
            } else {
                inputs.push(BatchInput::Remote(entry.parse()?));
                remote = true;
            }
        }
        for path in &self.fixtures {
            inputs.push(BatchInput::Fixture(path.clone()));
        }
        Ok((inputs, remote))
    }

    fn to_json(&self) -> String {
        let mut body = serde_json::to_string_pretty(self).expect("config serialization");
        body.push('\n');
        body
    }
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_batch(config: &RunConfig, inputs: &[BatchInput], remote: bool) -> Result<Vec<RepoOutcome>> {
    let settings = config.settings()?;
    let mut options = BatchOptions::new(settings);
    options.window_end = config.window_end;
    options.window_days = config.window_days();
    options.cache = CachePolicy {
        cache_dir: config.cache_dir.clone(),
        ..CachePolicy::default()
    };
    options.exclude = config
        .exclude_users
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>();

    #[cfg(feature = "net")]
    {
        let http = if remote {
            let token = std::env::var(&config.token_env).ok();
            Some(crate::ingestion::HttpSource::github(token))
        } else {
            None
        };
        options.source = http
            .as_ref()
            .map(|s| s as &dyn crate::ingestion::DataSource);
        Ok(dispatch(inputs, &options, config.sequential))
    }
    #[cfg(not(feature = "net"))]
    {
        if remote {
            return Err(Error::InvalidConfig {
                detail: "this build has no network support; pass fixtures instead of remote repositories"
                    .to_string(),
            });
        }
        Ok(dispatch(inputs, &options, config.sequential))
    }
}

fn dispatch(inputs: &[BatchInput], options: &BatchOptions, sequential: bool) -> Vec<RepoOutcome> {
    if sequential {
        analyze_batch_sequential(inputs, options)
    } else {
        analyze_batch(inputs, options)
    }
}

fn cmd_analyze(args: &CommonArgs) -> Result<ExitCode> {
    let config = RunConfig::resolve(args)?;
    let (inputs, remote) = config.batch_inputs()?;
    if inputs.is_empty() {
        return Err(Error::InvalidConfig {
            detail: "nothing to analyze; pass --repos or --fixtures".to_string(),
        });
    }
    let outcomes = run_batch(&config, &inputs, remote)?;
    let report = AnalysisReport::from_outcomes(&config.settings()?, outcomes);
    emit(&report.render(config.format), &args.output)?;
    if report.has_errors() {
        for record in report.records.iter().filter(|r| r.is_error()) {
            eprintln!(
                "warning: {}: {}",
                record.repo,
                record.error.as_deref().unwrap_or("unknown error")
            );
        }
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_calibrate(args: &CommonArgs) -> Result<ExitCode> {
    let config = RunConfig::resolve(args)?;
    let (inputs, remote) = config.batch_inputs()?;
    if inputs.is_empty() {
        return Err(Error::InvalidConfig {
            detail: "nothing to calibrate against; pass --repos or --fixtures".to_string(),
        });
    }
    let outcomes = run_batch(&config, &inputs, remote)?;

    let mut measures = Vec::new();
    for outcome in &outcomes {
        let analysis = match &outcome.result {
            Ok(a) => a,
            Err(e) => {
                eprintln!("warning: {}: {e}", outcome.label);
                continue;
            }
        };
        for component in CALIBRATED_COMPONENTS {
            let measure = match component {
                Component::Issue => analysis.metrics.i,
                Component::Pull => analysis.metrics.p,
                Component::Activity => analysis.metrics.a,
                Component::Commit => unreachable!("commit is never calibrated"),
            };
            let Some(verdict) = analysis.verdicts.iter().find(|v| v.component == component) else {
                continue;
            };
            measures.push(CohortMeasure {
                repo: outcome.label.clone(),
                measure,
                verdict: verdict.clone(),
            });
        }
    }

    let document = CalibrationDocument::build(config.params, config.sigma_floor, &measures);
    emit(&document.to_json(), &args.output)?;
    if document.calibrated_count() == 0 {
        eprintln!("warning: no component could be calibrated (no stable repositories)");
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode> {
    let config = RunConfig::resolve(&args.common)?;
    let text = fs::read_to_string(&args.input)?;
    let report = AnalysisReport::from_json(&text)?;
    emit(&report.render(config.format), &args.common.output)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_config(args: &CommonArgs) -> Result<ExitCode> {
    let config = RunConfig::resolve(args)?;
    emit(&config.to_json(), &args.output)?;
    Ok(ExitCode::SUCCESS)
}

/// Entry point used by the binary. Hard errors print to stderr and exit 2;
/// partial failures (some repositories failed, empty calibration cohorts)
/// exit 1 after emitting what succeeded.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Report(args) => cmd_report(args),
        Command::Config(args) => cmd_config(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

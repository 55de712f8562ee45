//! Dataset parsing and the `quasimean` command implementations.
//!
//! Three subcommands share one envelope: `mean` evaluates named means over a
//! dataset, `chisini` solves a built-in aggregate for its consistent value,
//! and `audit` runs the axiom checks against a named target. Structured
//! output is deterministic for fixed inputs and flags — reports serialize to
//! pretty JSON with no unordered containers — so repeated runs are
//! byte-identical and diffable.
//!
//! Exit codes: 0 success, 2 parse/domain/usage errors, 3 when a Chisini
//! solve finds no root, 4 when `audit --strict` sees a failed axiom.

use std::io::BufRead;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::axioms::{
    self, AggregatorRef, AuditConfig, AuditError, AxiomReport, MedianCounterexample, Tolerances,
};
use crate::chisini::{self, AggregateForm, AggregateSpec, ChisiniError, SolveStatus};
use crate::means::{self, MeanError, MeanName, Sample, SampleError, WeightError, WeightVector};

/// Environment variable consulted for the audit seed when `--seed` is absent.
pub const SEED_ENV_VAR: &str = "QUASIMEAN_SEED";

/// Grid used for the median counterexample attached to `audit --target median`.
const MEDIAN_WITNESS_GRID: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 100.0];
const MEDIAN_WITNESS_MAX_N: usize = 5;

/// Supported dataset encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// `value[,weight]` rows; a header line is skipped when its first field
    /// is not a number.
    Csv,
    /// One JSON object per line: `{"value": v}` or `{"value": v, "weight": w}`.
    JsonLines,
}

/// Output renderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    /// Pretty JSON document; byte-stable for fixed inputs.
    Structured,
    /// Human-readable table.
    Table,
}

/// One parsed dataset row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRow {
    pub value: f64,
    pub weight: Option<f64>,
}

/// Parsed input data. Values are finite, and either every row carries a
/// weight or none does.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub label: Option<String>,
    rows: Vec<DataRow>,
}

impl Dataset {
    pub fn rows(&self) -> &[DataRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    /// All row weights, present only when the dataset is weighted.
    pub fn weights(&self) -> Option<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.weight)
            .collect::<Option<Vec<f64>>>()
    }

    /// The same dataset with any weight column dropped.
    pub fn without_weights(mut self) -> Dataset {
        for row in &mut self.rows {
            row.weight = None;
        }
        self
    }
}

/// Errors surfaced by the command layer.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: weight column must appear on every row or on none")]
    MixedWeights { line: u64 },
    #[error("mean {name}: {source}")]
    Mean { name: String, source: MeanError },
    #[error("--weights was given but the dataset has no weight column")]
    MissingWeightColumn,
    #[error("{what} does not accept weighted data")]
    WeightsUnsupported { what: &'static str },
    #[error("no means requested")]
    NoMeansRequested,
    #[error("no aggregate requested")]
    NoAggregateRequested,
    #[error("{SEED_ENV_VAR} must be an unsigned integer, got {value:?}")]
    BadSeedEnv { value: String },
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Chisini(#[from] ChisiniError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parse a dataset from a reader in the given format.
pub fn parse_dataset(reader: impl BufRead, format: InputFormat) -> Result<Dataset, CliError> {
    match format {
        InputFormat::Csv => parse_csv(reader),
        InputFormat::JsonLines => parse_json_lines(reader),
    }
}

fn push_row(
    rows: &mut Vec<DataRow>,
    expect_weight: &mut Option<bool>,
    line: u64,
    value: f64,
    weight: Option<f64>,
) -> Result<(), CliError> {
    if !value.is_finite() {
        return Err(CliError::Parse {
            line,
            message: format!("value must be finite, got {value}"),
        });
    }
    if let Some(w) = weight {
        if !w.is_finite() {
            return Err(CliError::Parse {
                line,
                message: format!("weight must be finite, got {w}"),
            });
        }
    }
    let has_weight = weight.is_some();
    match *expect_weight {
        None => *expect_weight = Some(has_weight),
        Some(expected) if expected != has_weight => {
            return Err(CliError::MixedWeights { line })
        }
        _ => {}
    }
    rows.push(DataRow { value, weight });
    Ok(())
}

fn parse_csv(reader: impl BufRead) -> Result<Dataset, CliError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut expect_weight = None;
    for (index, record) in csv_reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse {
            line: e
                .position()
                .map(|p| p.line())
                .unwrap_or(index as u64 + 1),
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(index as u64 + 1);
        if record.iter().all(str::is_empty) {
            continue; // blank line
        }
        if record.len() > 2 {
            return Err(CliError::Parse {
                line,
                message: format!("expected 1 or 2 columns, found {}", record.len()),
            });
        }
        let first = &record[0];
        if index == 0 && first.parse::<f64>().is_err() {
            continue; // header row, detected by its non-numeric first field
        }
        let value: f64 = first.parse().map_err(|_| CliError::Parse {
            line,
            message: format!("invalid number {first:?}"),
        })?;
        let weight = match record.get(1) {
            None | Some("") => None,
            Some(raw) => Some(raw.parse::<f64>().map_err(|_| CliError::Parse {
                line,
                message: format!("invalid weight {raw:?}"),
            })?),
        };
        push_row(&mut rows, &mut expect_weight, line, value, weight)?;
    }
    Ok(Dataset { label: None, rows })
}

#[derive(serde::Deserialize)]
struct JsonRow {
    value: f64,
    #[serde(default)]
    weight: Option<f64>,
}

fn parse_json_lines(reader: impl BufRead) -> Result<Dataset, CliError> {
    let mut rows = Vec::new();
    let mut expect_weight = None;
    for (index, line) in reader.lines().enumerate() {
        let line_no = index as u64 + 1;
        let text = line?;
        let trimmed = text.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(trimmed).map_err(|e| CliError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        push_row(&mut rows, &mut expect_weight, line_no, row.value, row.weight)?;
    }
    Ok(Dataset { label: None, rows })
}

/// Effective settings for one command run, echoed into structured output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub means: Vec<String>,
    pub aggregate: Option<String>,
    pub trials: u32,
    pub seed: u64,
    pub renormalize_weights: bool,
    pub strict: bool,
    pub output: OutputFormat,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            means: Vec::new(),
            aggregate: None,
            trials: 500,
            seed: 0,
            renormalize_weights: false,
            strict: false,
            output: OutputFormat::Structured,
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Audit(AuditError::ZeroTrials));
        }
        self.tolerances.validate()?;
        Ok(())
    }
}

/// One computed mean for the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanRecord {
    pub name: String,
    pub value: f64,
    /// Whether the value is internal to the sample range.
    pub internal: bool,
}

enum MeanTarget {
    Named(MeanName),
    Median,
}

impl FromStr for MeanTarget {
    type Err = MeanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "median" {
            Ok(MeanTarget::Median)
        } else {
            s.parse::<MeanName>().map(MeanTarget::Named)
        }
    }
}

/// Evaluate every requested mean over the dataset.
pub fn run_means(dataset: &Dataset, cfg: &RunConfig) -> Result<Vec<MeanRecord>, CliError> {
    cfg.validate()?;
    if cfg.means.is_empty() {
        return Err(CliError::NoMeansRequested);
    }
    let sample = Sample::new(dataset.values())?;
    let weights = match dataset.weights() {
        Some(raw) if cfg.renormalize_weights => Some(WeightVector::renormalized(raw)?),
        Some(raw) => Some(WeightVector::new(raw)?),
        None => None,
    };
    let mut records = Vec::with_capacity(cfg.means.len());
    for name in &cfg.means {
        let target: MeanTarget = name.parse().map_err(|source| CliError::Mean {
            name: name.clone(),
            source,
        })?;
        let value = match (&target, &weights) {
            (MeanTarget::Median, None) => means::median(&sample),
            (MeanTarget::Median, Some(_)) => {
                return Err(CliError::WeightsUnsupported { what: "the median" })
            }
            (MeanTarget::Named(m), None) => {
                means::named_mean(&sample, *m).map_err(|source| CliError::Mean {
                    name: name.clone(),
                    source,
                })?
            }
            (MeanTarget::Named(m), Some(w)) => {
                means::weighted_quasi_mean(&sample, w, m.generator()).map_err(|source| {
                    CliError::Mean {
                        name: name.clone(),
                        source,
                    }
                })?
            }
        };
        records.push(MeanRecord {
            name: name.clone(),
            value,
            internal: means::is_internal(&sample, value),
        });
    }
    Ok(records)
}

/// Chisini solve result for the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChisiniRecord {
    pub aggregate: String,
    pub status: SolveStatus,
    /// Roots ascending.
    pub roots: Vec<f64>,
    /// Per-root internality, parallel to `roots`.
    pub internal: Vec<bool>,
    /// Aggregate value of the dataset; serialized as null when it saturated
    /// past the f64 range.
    pub target: f64,
    /// |diagonal(root) - target| per root; null when the target saturated.
    pub residuals: Vec<f64>,
}

/// Solve a built-in aggregate for its consistent value over the dataset.
pub fn run_chisini(dataset: &Dataset, cfg: &RunConfig) -> Result<ChisiniRecord, CliError> {
    cfg.validate()?;
    let name = cfg
        .aggregate
        .as_deref()
        .ok_or(CliError::NoAggregateRequested)?;
    if dataset.weights().is_some() {
        return Err(CliError::WeightsUnsupported {
            what: "chisini solving",
        });
    }
    let form = AggregateForm::parse_builtin(name)?;
    let sample = Sample::new(dataset.values())?;
    let spec = AggregateSpec::new(form, sample.len())?;
    let solution = chisini::chisini_solve(&spec, &sample)?;
    let residuals = solution
        .roots
        .iter()
        .map(|&root| {
            if solution.target.is_finite() {
                chisini::diagonal(&spec, root, sample.len())
                    .map(|d| (d - solution.target).abs())
                    .unwrap_or(f64::NAN)
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(ChisiniRecord {
        aggregate: name.to_owned(),
        status: solution.status,
        roots: solution.roots,
        internal: solution.internal,
        target: solution.target,
        residuals,
    })
}

/// Audit results plus the exact median witness when applicable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOutput {
    #[serde(flatten)]
    pub report: AxiomReport,
    pub all_pass: bool,
    /// Present only for the median target: an exact associativity
    /// counterexample found by exhaustive search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_counterexample: Option<MedianCounterexample>,
}

/// Run the full axiom audit against a named target.
pub fn run_audit(target: &str, cfg: &RunConfig) -> Result<AuditOutput, CliError> {
    cfg.validate()?;
    let aggregator: AggregatorRef = target.parse()?;
    let audit_cfg = AuditConfig {
        trials: cfg.trials,
        seed: cfg.seed,
        tolerances: cfg.tolerances,
        ..AuditConfig::default()
    };
    let report = axioms::full_audit_with(&aggregator, &audit_cfg);
    let median_counterexample = if matches!(aggregator, AggregatorRef::Median) {
        Some(axioms::find_median_counterexample(
            MEDIAN_WITNESS_MAX_N,
            &MEDIAN_WITNESS_GRID,
        )?)
    } else {
        None
    };
    Ok(AuditOutput {
        all_pass: report.all_pass(),
        report,
        median_counterexample,
    })
}

/// Envelope for structured output: what was analyzed, the results, and the
/// effective configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Document<T: Serialize> {
    pub dataset: Option<String>,
    pub results: T,
    pub config: RunConfig,
}

/// Render a document as pretty JSON with a trailing newline. Serialization
/// is deterministic: all collections are ordered.
pub fn render_structured<T: Serialize>(doc: &Document<T>) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("report types always serialize");
    text.push('\n');
    text
}

pub fn render_means_table(records: &[MeanRecord]) -> String {
    let mut out = format!("{:<16} {:<24} {}\n", "name", "value", "internal");
    for r in records {
        out.push_str(&format!("{:<16} {:<24} {}\n", r.name, r.value, r.internal));
    }
    out
}

pub fn render_chisini_table(record: &ChisiniRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!("aggregate: {}\n", record.aggregate));
    out.push_str(&format!("status:    {}\n", record.status));
    out.push_str(&format!("target:    {}\n", record.target));
    for (i, root) in record.roots.iter().enumerate() {
        out.push_str(&format!(
            "root[{i}]:   {} (internal: {}, residual: {})\n",
            root, record.internal[i], record.residuals[i]
        ));
    }
    if record.roots.is_empty() {
        out.push_str("roots:     none\n");
    }
    out
}

pub fn render_audit_table(output: &AuditOutput) -> String {
    let mut out = format!(
        "target: {}  trials: {}  seed: {}\n",
        output.report.target, output.report.trials, output.report.seed
    );
    for o in &output.report.outcomes {
        out.push_str(&format!(
            "{:<16} {}{}\n",
            o.axiom,
            o.verdict,
            if o.skipped > 0 {
                format!(" ({} skipped)", o.skipped)
            } else {
                String::new()
            }
        ));
    }
    out.push_str(&format!(
        "overall: {}\n",
        if output.all_pass { "pass" } else { "fail" }
    ));
    if let Some(ce) = &output.median_counterexample {
        out.push_str(&format!(
            "counterexample: median{:?} = {} but replacing the first {} values by their median {} gives {}\n",
            ce.sample, ce.lhs, ce.k, ce.block_value, ce.rhs
        ));
    }
    out
}

/// Command-line interface.
#[derive(Debug, Parser)]
#[command(
    name = "quasimean",
    version,
    about = "Quasi-arithmetic means, Chisini-consistent aggregation, and axiom audits"
)]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute one or more means of a dataset.
    Mean {
        /// Comma-separated mean names: arithmetic, quadratic, geometric,
        /// harmonic, power:<alpha>, exponential, median.
        #[arg(long, required = true, value_delimiter = ',')]
        means: Vec<String>,
        /// Use the dataset's weight column (which must then be present).
        #[arg(long)]
        weights: bool,
        /// Rescale weights to sum to one instead of rejecting them.
        #[arg(long)]
        renormalize_weights: bool,
        /// Input encoding.
        #[arg(long, value_enum, default_value_t = InputFormat::Csv)]
        input_format: InputFormat,
        /// Output rendering.
        #[arg(long, value_enum, default_value_t = OutputFormat::Structured)]
        format: OutputFormat,
        /// Dataset label echoed in reports (defaults to the file name).
        #[arg(long)]
        label: Option<String>,
        /// Input file, or `-` for standard input.
        file: String,
    },
    /// Solve a built-in aggregate for its Chisini-consistent value.
    Chisini {
        /// Aggregate name: sum, product, sum-squares, sum-inverses, sum-exp.
        #[arg(long)]
        aggregate: String,
        /// Input encoding.
        #[arg(long, value_enum, default_value_t = InputFormat::Csv)]
        input_format: InputFormat,
        /// Output rendering.
        #[arg(long, value_enum, default_value_t = OutputFormat::Structured)]
        format: OutputFormat,
        /// Dataset label echoed in reports (defaults to the file name).
        #[arg(long)]
        label: Option<String>,
        /// Input file, or `-` for standard input.
        file: String,
    },
    /// Audit an aggregator against the mean axioms.
    Audit {
        /// Target: a mean name or "median".
        #[arg(long)]
        target: String,
        /// Randomized trials per axiom.
        #[arg(long, default_value_t = 500)]
        trials: u32,
        /// RNG seed; falls back to QUASIMEAN_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Exit nonzero when any axiom fails.
        #[arg(long)]
        strict: bool,
        /// Output rendering.
        #[arg(long, value_enum, default_value_t = OutputFormat::Structured)]
        format: OutputFormat,
    },
}

/// A rendered command: text for stdout plus the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandRun {
    pub stdout: String,
    pub exit: u8,
}

fn resolve_seed(cli_seed: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = cli_seed {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| CliError::BadSeedEnv { value: raw }),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(std::env::VarError::NotUnicode(_)) => Err(CliError::BadSeedEnv {
            value: "<non-unicode>".to_owned(),
        }),
    }
}

fn load_dataset(
    path: &str,
    format: InputFormat,
    label: Option<String>,
) -> Result<Dataset, CliError> {
    let mut dataset = if path == "-" {
        parse_dataset(std::io::stdin().lock(), format)?
    } else {
        let file = std::fs::File::open(path)?;
        parse_dataset(std::io::BufReader::new(file), format)?
    };
    dataset.label = label.or_else(|| (path != "-").then(|| path.to_owned()));
    Ok(dataset)
}

/// Execute a parsed command, returning its output and exit code. Errors map
/// to exit code 2 in [`main_entry`].
pub fn execute(args: &Args) -> Result<CommandRun, CliError> {
    match &args.command {
        Command::Mean {
            means,
            weights,
            renormalize_weights,
            input_format,
            format,
            label,
            file,
        } => {
            let dataset = load_dataset(file, *input_format, label.clone())?;
            let dataset = if *weights {
                if dataset.weights().is_none() {
                    return Err(CliError::MissingWeightColumn);
                }
                dataset
            } else {
                dataset.without_weights()
            };
            let cfg = RunConfig {
                means: means.clone(),
                renormalize_weights: *renormalize_weights,
                output: *format,
                ..RunConfig::default()
            };
            let records = run_means(&dataset, &cfg)?;
            let stdout = match format {
                OutputFormat::Structured => render_structured(&Document {
                    dataset: dataset.label.clone(),
                    results: records,
                    config: cfg,
                }),
                OutputFormat::Table => render_means_table(&records),
            };
            Ok(CommandRun { stdout, exit: 0 })
        }
        Command::Chisini {
            aggregate,
            input_format,
            format,
            label,
            file,
        } => {
            let dataset = load_dataset(file, *input_format, label.clone())?;
            let cfg = RunConfig {
                aggregate: Some(aggregate.clone()),
                output: *format,
                ..RunConfig::default()
            };
            let record = run_chisini(&dataset, &cfg)?;
            let exit = if record.status == SolveStatus::None { 3 } else { 0 };
            let stdout = match format {
                OutputFormat::Structured => render_structured(&Document {
                    dataset: dataset.label.clone(),
                    results: record,
                    config: cfg,
                }),
                OutputFormat::Table => render_chisini_table(&record),
            };
            Ok(CommandRun { stdout, exit })
        }
        Command::Audit {
            target,
            trials,
            seed,
            strict,
            format,
        } => {
            let cfg = RunConfig {
                trials: *trials,
                seed: resolve_seed(*seed)?,
                strict: *strict,
                output: *format,
                ..RunConfig::default()
            };
            let output = run_audit(target, &cfg)?;
            let exit = if cfg.strict && !output.all_pass { 4 } else { 0 };
            let stdout = match format {
                OutputFormat::Structured => render_structured(&Document {
                    dataset: None,
                    results: output,
                    config: cfg,
                }),
                OutputFormat::Table => render_audit_table(&output),
            };
            Ok(CommandRun { stdout, exit })
        }
    }
}

/// Binary entry point: parse, execute, print, exit.
pub fn main_entry() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(run) => {
            print!("{}", run.stdout);
            ExitCode::from(run.exit)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

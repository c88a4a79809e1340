//! Batch jobs: one JSON or TOML job specification in, one JSON or CSV
//! result document out.
//!
//! A job names a command and carries a command-specific payload. The payload
//! is validated in full before anything is computed. The result document
//! echoes the payload, lists the tolerances the command used and records the
//! library version; keys are sorted and floats use shortest round-trip
//! formatting, so identical jobs produce identical bytes.
//!
//! Exit codes: `0` success, `1` I/O failure, `2` schema violation, `3` size
//! cap exceeded, `4` numerical contract failed.

mod args;
mod check;
mod payload;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::Error;

pub use args::{main_from_args, Cli};
pub use check::{check_suite, CheckReport, CheckResult, CHECK_GROUPS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_SIZE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Cumulants,
    Convolve,
    BpMap,
    MixedMoment,
    FockOracle,
    LevyMoments,
    Classify,
    ItoSplit,
    Minimal,
    Azema,
    Check,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub command: Command,
    #[serde(default = "empty_object")]
    pub payload: Value,
    /// Standard output when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Adds `elapsed_seconds` to the result. Off by default, since it makes
    /// the output differ from run to run.
    #[serde(default)]
    pub timing: bool,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JobError {
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("numerical contract failed: {0}")]
    Contract(String),
    #[error("{0}")]
    Io(String),
}

impl JobError {
    pub(crate) fn schema(field: impl Into<String>, message: impl ToString) -> Self {
        JobError::Schema {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            JobError::Schema { .. } => EXIT_SCHEMA,
            JobError::Compute(Error::SizeLimit { .. }) => EXIT_SIZE,
            JobError::Compute(Error::RecursionDepth(_)) => EXIT_NUMERICAL,
            JobError::Compute(_) => EXIT_SCHEMA,
            JobError::Contract(_) => EXIT_NUMERICAL,
            JobError::Io(_) => EXIT_IO,
        }
    }
}

fn from_json_value<T: serde::de::DeserializeOwned>(value: Value, root: &str) -> Result<T, JobError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            root.to_string()
        } else if root.is_empty() {
            path
        } else {
            format!("{root}.{path}")
        };
        JobError::schema(field, e.into_inner())
    })
}

impl JobSpec {
    pub fn from_json(text: &str) -> Result<Self, JobError> {
        let value: Value = serde_json::from_str(text).map_err(|e| JobError::schema("spec", e))?;
        Self::from_value(value)
    }

    pub fn from_toml(text: &str) -> Result<Self, JobError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| JobError::schema("spec", e))?;
        let value = serde_json::to_value(table).map_err(|e| JobError::schema("spec", e))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, JobError> {
        if !value.is_object() {
            return Err(JobError::schema("spec", "job specification must be a table"));
        }
        from_json_value(value, "")
    }

    /// Reads a job file; `.toml` files are TOML, everything else JSON.
    pub fn load(path: &Path) -> Result<Self, JobError> {
        let text = read_file(path)?;
        if is_toml(path) {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }
}

pub(crate) fn is_toml(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"))
}

pub(crate) fn read_file(path: &Path) -> Result<String, JobError> {
    std::fs::read_to_string(path).map_err(|e| JobError::Io(format!("cannot read {}: {e}", path.display())))
}

/// Schema of every emitted JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub command: Command,
    pub inputs: Value,
    pub result: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

/// What a command produced before rendering.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Computed {
    pub result: Value,
    pub tolerances: BTreeMap<String, f64>,
    /// Set when the result was computed but violates its contract.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    /// Rendered document; also present when a contract check failed.
    pub document: Option<String>,
    pub message: Option<String>,
}

/// Validates and runs a job without writing anything.
pub fn run(spec: &JobSpec) -> Outcome {
    let start = Instant::now();
    let computed = match payload::dispatch(spec.command, &spec.payload) {
        Ok(c) => c,
        Err(e) => {
            return Outcome {
                exit_code: e.exit_code(),
                document: None,
                message: Some(e.to_string()),
            }
        }
    };
    let doc = ResultDocument {
        command: spec.command,
        inputs: spec.payload.clone(),
        result: computed.result,
        tolerances: computed.tolerances,
        version: crate::VERSION.to_string(),
        elapsed_seconds: spec.timing.then(|| start.elapsed().as_secs_f64()),
    };
    let rendered = match spec.format {
        Format::Json => render_json(&doc),
        Format::Csv => render_csv(&doc),
    };
    match rendered {
        Ok(text) => Outcome {
            exit_code: if computed.failure.is_some() { EXIT_NUMERICAL } else { EXIT_OK },
            document: Some(text),
            message: computed
                .failure
                .map(|f| JobError::Contract(f).to_string()),
        },
        Err(e) => Outcome {
            exit_code: e.exit_code(),
            document: None,
            message: Some(e.to_string()),
        },
    }
}

/// Runs a job and writes its document to the requested destination.
/// Returns the process exit code.
pub fn execute(spec: &JobSpec) -> i32 {
    let outcome = run(spec);
    if let Some(doc) = &outcome.document {
        let written = match &spec.output {
            Some(path) => std::fs::write(path, doc)
                .map_err(|e| format!("cannot write {}: {e}", path.display())),
            None => std::io::stdout()
                .lock()
                .write_all(doc.as_bytes())
                .map_err(|e| format!("cannot write to stdout: {e}")),
        };
        if let Err(e) = written {
            eprintln!("ncp: {e}");
            return EXIT_IO;
        }
    }
    if spec.command == Command::Check {
        if let Some(doc) = &outcome.document {
            print_check_lines(doc, spec.format);
        }
    }
    if let Some(msg) = &outcome.message {
        eprintln!("ncp: {msg}");
    }
    outcome.exit_code
}

fn print_check_lines(doc: &str, format: Format) {
    if format != Format::Json {
        return;
    }
    let Ok(parsed) = serde_json::from_str::<ResultDocument>(doc) else {
        return;
    };
    let Ok(report) = serde_json::from_value::<CheckReport>(parsed.result) else {
        return;
    };
    for c in &report.checks {
        eprintln!(
            "{} {}/{} max_deviation={:e} tolerance={:e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.group,
            c.name,
            c.max_deviation,
            c.tolerance
        );
    }
}

pub fn render_json(doc: &ResultDocument) -> Result<String, JobError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| JobError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Two columns, `key,value`; nested keys are joined with `.` and array
/// positions become path segments.
pub fn render_csv(doc: &ResultDocument) -> Result<String, JobError> {
    let value = serde_json::to_value(doc).map_err(|e| JobError::Io(e.to_string()))?;
    let mut rows = Vec::new();
    flatten("", &value, &mut rows);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| JobError::Io(e.to_string());
    writer.write_record(["key", "value"]).map_err(io)?;
    for (k, v) in rows {
        writer.write_record([k, v]).map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| JobError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| JobError::Io(e.to_string()))
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

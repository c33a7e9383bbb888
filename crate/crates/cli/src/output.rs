//! Output documents, run records and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use emxcs_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_FINDING: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;

/// A failure with its exit code, reported on stderr as JSON.
#[derive(Debug, Clone)]
pub struct CliError {
    pub code: u8,
    pub kind: String,
    pub message: String,
    pub hint: Option<String>,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            kind: "Usage".into(),
            message: message.into(),
            hint: None,
        }
    }

    pub fn finding(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_FINDING,
            kind: kind.into(),
            message: message.into(),
            hint: None,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError {
            code: EXIT_USAGE,
            kind: "Io".into(),
            message: format!("{}: {err}", path.display()),
            hint: None,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind,
            "message": self.message,
            "exit_code": self.code,
        });
        if let Some(h) = &self.hint {
            v["hint"] = json!(h);
        }
        v
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::BudgetExceeded { .. } => EXIT_BUDGET,
            Error::NotMonotone { .. }
            | Error::CoverFailure { .. }
            | Error::NoCompressingSubset(_)
            | Error::DeltaNotSelected { .. }
            | Error::NotPartition(_)
            | Error::ImageDrift { .. } => EXIT_FINDING,
            _ => EXIT_USAGE,
        };
        let hint = matches!(err, Error::BudgetExceeded { .. })
            .then(|| "exact enumeration is too large; rerun with --mode mc --trials N --seed S".to_string());
        CliError {
            code,
            kind: err.kind().to_string(),
            message: err.to_string(),
            hint,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// What a command produced: the result payload, plus the finding that makes
/// the run exit 1 when the result is a negative answer.
pub struct Outcome {
    pub result: Value,
    pub finding: Option<CliError>,
}

impl Outcome {
    pub fn ok<T: Serialize>(result: &T) -> CliResult<Self> {
        Ok(Outcome {
            result: to_value(result)?,
            finding: None,
        })
    }

    pub fn with_finding(mut self, finding: Option<CliError>) -> Self {
        self.finding = finding;
        self
    }
}

pub fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::usage(format!("serialization failed: {e}")))
}

/// Where the document goes and what it records about the run.
pub struct Emitter {
    pub command: String,
    pub config: Value,
    pub out: Option<PathBuf>,
    started: Instant,
    timestamp_ms: u128,
}

impl Emitter {
    pub fn new(command: &str, config: Value, out: Option<PathBuf>, out_dir: Option<&Path>) -> Self {
        let out = out.or_else(|| out_dir.map(|dir| dir.join(format!("{}.json", command.replace(' ', "-")))));
        Emitter {
            command: command.to_string(),
            config,
            out,
            started: Instant::now(),
            timestamp_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }

    /// The document holds only deterministic content; timing goes to the
    /// `<out>.run.json` record next to it.
    pub fn emit(&self, result: &Value) -> CliResult<()> {
        let doc = json!({
            "command": self.command,
            "version": VERSION,
            "config": self.config,
            "result": result,
        });
        let text = pretty(&doc);
        match &self.out {
            None => print!("{text}"),
            Some(path) => {
                write_file(path, &text)?;
                let record = json!({
                    "config": self.config,
                    "version": VERSION,
                    "timestamp_unix_ms": self.timestamp_ms as u64,
                    "duration_ms": self.started.elapsed().as_secs_f64() * 1000.0,
                    "result": result,
                });
                write_file(&sidecar_path(path), &pretty(&record))?;
            }
        }
        Ok(())
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".run.json");
    out.with_file_name(name)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::usage(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(format!("csv: {e}")))?;
    write_file(path, &String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError {
        code: EXIT_USAGE,
        kind: "Format".into(),
        message: format!("{}: {e}", path.display()),
        hint: None,
    })
}

/// Accepts a bare object or one of our output documents wrapping it, in
/// which case `result` (and then `key` inside it, if present) is taken.
pub fn read_payload<T: serde::de::DeserializeOwned>(path: &Path, key: Option<&str>) -> CliResult<T> {
    let mut v = read_json(path)?;
    if let Some(inner) = v.get_mut("result") {
        v = inner.take();
    }
    if let Some(inner) = key.and_then(|k| v.get_mut(k)) {
        v = inner.take();
    }
    serde_json::from_value(v).map_err(|e| CliError {
        code: EXIT_USAGE,
        kind: "Format".into(),
        message: format!("{}: {e}", path.display()),
        hint: None,
    })
}

/// Absolute form of a path that must exist.
pub fn resolve_input(path: &Path) -> CliResult<PathBuf> {
    fs::canonicalize(path).map_err(|e| CliError::io(path, e))
}

/// Absolute form of a path that may not exist yet.
pub fn resolve_output(path: &Path) -> CliResult<PathBuf> {
    if path.is_absolute() {
        return Ok(path.to_path_buf());
    }
    let cwd = std::env::current_dir().map_err(|e| CliError::io(Path::new("."), e))?;
    Ok(cwd.join(path))
}

//! Report types and the artifact writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    /// Ran to completion but a declared contract does not hold.
    Fail,
    /// Could not run; see `error`.
    Error,
}

/// A numerical result with its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            // shortest round-trip representation: deterministic and lossless
            Cell::Num(v) if v.is_nan() => "NaN".into(),
            Cell::Num(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A plot-ready sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub experiment: String,
    pub status: Status,
    pub measurements: Vec<Measurement>,
    pub contracts: Vec<ContractCheck>,
    pub tables: Vec<Table>,
    pub error: Option<String>,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub jobs: usize,
    pub results: Vec<ExperimentResult>,
    pub passed: bool,
    pub wall_clock_s: f64,
    pub notes: Vec<String>,
}

/// Writes `contents` to a sibling temporary file, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let file_name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{file_name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// One CSV per nonempty table, named `<experiment>_<table>.csv`. Empty tables
/// are skipped and noted in the report.
pub fn emit_plot_data(report: &mut ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let mut notes = Vec::new();
    for result in &report.results {
        if result.tables.is_empty() {
            if result.status == Status::Error {
                notes.push(format!("{}: no plot data (experiment failed to run)", result.name));
            }
            continue;
        }
        for table in &result.tables {
            if table.rows.is_empty() {
                notes.push(format!("{}: table `{}` is empty, no file written", result.name, table.name));
                continue;
            }
            let path = dir.join(format!("{}_{}.csv", result.name, table.name));
            write_atomic(&path, table.to_csv().as_bytes())?;
            written.push(path);
        }
    }
    report.notes.extend(notes);
    Ok(written)
}

/// Plot data plus `report.json`.
pub fn write_outputs(report: &mut ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = emit_plot_data(report, dir)?;
    let path = dir.join("report.json");
    let json = serde_json::to_string_pretty(report).expect("report serialises");
    write_atomic(&path, json.as_bytes())?;
    written.push(path);
    Ok(written)
}

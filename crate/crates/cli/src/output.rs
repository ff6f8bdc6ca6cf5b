//! Output files: results CSV, JSON-lines event log and the run manifest.
//!
//! Every float in the CSV is printed with 17 significant digits, so parsing
//! the file recovers the in-memory table exactly. All output bytes are a
//! pure function of the run configuration and seed.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use mcwf::jump::JumpEvent;

use crate::config::ConfigFile;
use crate::CliError;

/// Results of a run as written to the CSV: one row per sample time with a
/// mean and standard-error column per observable.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub mean: Array2<f64>,
    pub stderr: Array2<f64>,
}

/// 17 significant digits: exact round trip for f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_results_csv(
    path: &Path,
    table: &ResultTable,
    config_echo: &ConfigFile,
) -> Result<(), CliError> {
    let mut text = String::new();
    let version = env!("CARGO_PKG_VERSION");
    let config_json = serde_json::to_string(config_echo).expect("config serialization cannot fail");
    writeln!(text, "# mcwf results v{version}").unwrap();
    writeln!(text, "# config {config_json}").unwrap();
    write!(text, "time").unwrap();
    for label in &table.labels {
        write!(text, ",mean_{label},stderr_{label}").unwrap();
    }
    writeln!(text).unwrap();
    for (k, &t) in table.times.iter().enumerate() {
        write!(text, "{}", fmt_f64(t)).unwrap();
        for j in 0..table.labels.len() {
            write!(
                text,
                ",{},{}",
                fmt_f64(table.mean[[k, j]]),
                fmt_f64(table.stderr[[k, j]])
            )
            .unwrap();
        }
        writeln!(text).unwrap();
    }
    write_file(path, text.as_bytes())
}

/// Parse a results CSV back into the in-memory table (inverse of
/// [`write_results_csv`], comment lines skipped).
pub fn read_results_csv(path: &Path) -> Result<ResultTable, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| CliError::Malformed(format!("{}: empty results file", path.display())))?;
    let mut labels = Vec::new();
    for col in header.split(',').skip(1).step_by(2) {
        let label = col.strip_prefix("mean_").ok_or_else(|| {
            CliError::Malformed(format!("{}: bad header column {col}", path.display()))
        })?;
        labels.push(label.to_string());
    }
    let mut times = Vec::new();
    let mut mean_rows = Vec::new();
    let mut err_rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64, CliError> {
            s.and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Malformed(format!("{}: bad row `{line}`", path.display())))
        };
        times.push(parse(fields.next())?);
        let mut means = Vec::with_capacity(labels.len());
        let mut errs = Vec::with_capacity(labels.len());
        for _ in 0..labels.len() {
            means.push(parse(fields.next())?);
            errs.push(parse(fields.next())?);
        }
        mean_rows.push(means);
        err_rows.push(errs);
    }
    let n = times.len();
    let m = labels.len();
    let mean = Array2::from_shape_fn((n, m), |(i, j)| mean_rows[i][j]);
    let stderr = Array2::from_shape_fn((n, m), |(i, j)| err_rows[i][j]);
    Ok(ResultTable {
        labels,
        times,
        mean,
        stderr,
    })
}

/// One event-log line: `{"traj":i,"t":...,"channel":m}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EventLine {
    pub traj: u64,
    pub t: f64,
    pub channel: usize,
}

pub fn write_events_jsonl(path: &Path, per_trajectory: &[Vec<JumpEvent>]) -> Result<(), CliError> {
    let mut text = String::new();
    for (traj, events) in per_trajectory.iter().enumerate() {
        for event in events {
            let line = EventLine {
                traj: traj as u64,
                t: event.time,
                channel: event.channel,
            };
            writeln!(text, "{}", serde_json::to_string(&line).unwrap()).unwrap();
        }
    }
    write_file(path, text.as_bytes())
}

/// Event lines for a single trajectory (used by replay).
pub fn events_to_jsonl(traj: u64, events: &[JumpEvent]) -> String {
    let mut text = String::new();
    for event in events {
        let line = EventLine {
            traj,
            t: event.time,
            channel: event.channel,
        };
        writeln!(text, "{}", serde_json::to_string(&line).unwrap()).unwrap();
    }
    text
}

pub fn read_events_jsonl(path: &Path) -> Result<Vec<EventLine>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|line| {
            serde_json::from_str(line).map_err(|e| {
                CliError::Malformed(format!("{}: bad event line `{line}`: {e}", path.display()))
            })
        })
        .collect()
}

/// The run manifest: everything needed to replay any single trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact: String,
    pub version: String,
    pub master_seed: u64,
    pub n_traj: usize,
    pub engine: String,
    pub substream_derivation: String,
    pub config: ConfigFile,
}

impl Manifest {
    pub fn new(config: &ConfigFile, master_seed: u64, n_traj: usize) -> Self {
        Manifest {
            artifact: "mcwf".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            n_traj,
            engine: config.run.engine.clone(),
            substream_derivation: mcwf::rng::SUBSTREAM_DERIVATION.to_string(),
            config: config.clone(),
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serialization");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Malformed(format!("{}: bad manifest: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    let mut file = fs::File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Resolve an output path against `--out DIR` (absolute paths unchanged).
pub fn resolve_path(path: &Path, out_dir: Option<&Path>) -> PathBuf {
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

//! Parsing of counts, value lists, objectives and JSON configuration.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;
use simplex_conf_core::{EpsilonMode, Objective};

use crate::error::{CliError, CliResult};

/// Settings that may come from a JSON file; command-line flags win.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub epsilon_mode: Option<String>,
    pub objective: Option<String>,
    pub counts: Option<Vec<u64>>,
    pub values: Option<Vec<f64>>,
    pub p0: Option<Vec<f64>>,
    pub n_grid: Option<Vec<u64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub format: Option<String>,
    pub smooth: Option<String>,
    pub preset: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Parse(format!("config {}: {e}", path.display())))
    }
}

/// Parses a comma-separated list such as `20,30,50`.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|item| {
            item.trim()
                .parse()
                .map_err(|_| CliError::Parse(format!("invalid {what} entry {item:?} in {text:?}")))
        })
        .collect()
}

pub fn parse_epsilon_mode(text: &str) -> CliResult<EpsilonMode> {
    match text {
        "practical" => Ok(EpsilonMode::Practical),
        "theoretical" => Ok(EpsilonMode::Theoretical),
        other => Err(CliError::Parse(format!(
            "epsilon mode must be practical or theoretical, got {other:?}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn parse_format(text: &str) -> CliResult<OutputFormat> {
    match text {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(CliError::Parse(format!("format must be csv or json, got {other:?}"))),
    }
}

/// Reads a square matrix given as a JSON array of rows, averages it with
/// its transpose and checks positive definiteness.
pub fn read_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("matrix {}: {e}", path.display())))?;
    let size = rows.len();
    if size == 0 || rows.iter().any(|r| r.len() != size) {
        return Err(CliError::Parse(format!("matrix {} is not square", path.display())));
    }
    let a = DMatrix::from_fn(size, size, |i, j| rows[i][j]);
    Ok((&a + a.transpose()) * 0.5)
}

/// `negentropy`, `quadratic:fig2` or `quadratic:<matrix.json>`.
pub fn parse_objective(spec: &str, values: Vec<f64>) -> CliResult<Objective> {
    match spec {
        "negentropy" => Ok(Objective::neg_entropy(values)),
        "quadratic:fig2" => {
            let mut preset = Objective::fig2_preset();
            if !values.is_empty() {
                preset.values = values;
            }
            Ok(preset)
        }
        other => match other.strip_prefix("quadratic:") {
            Some(file) => {
                let a = read_matrix(Path::new(file))?;
                Objective::quadratic(a, values).map_err(|e| CliError::Parse(e.to_string()))
            }
            None => Err(CliError::Parse(format!(
                "objective must be negentropy, quadratic:fig2 or quadratic:<file>, got {other:?}"
            ))),
        },
    }
}

#[derive(Debug, Deserialize)]
struct CountRecord {
    #[allow(dead_code)]
    category: String,
    value: f64,
    count: u64,
}

/// Reads a `category,value,count` CSV; returns the counts and values in
/// file order.
pub fn read_counts_csv(path: &Path) -> CliResult<(Vec<u64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["category", "value", "count"] {
        return Err(CliError::Parse(format!(
            "{}: expected header category,value,count",
            path.display()
        )));
    }
    let mut counts = Vec::new();
    let mut values = Vec::new();
    for record in reader.deserialize() {
        let record: CountRecord = record?;
        counts.push(record.count);
        values.push(record.value);
    }
    Ok((counts, values))
}

//! Run configuration: a TOML document with `[model]`, `[drive]`, `[grid]`,
//! `[kernel]` and `[output]` tables. Unknown keys are rejected.
//!
//! ```toml
//! [model]
//! left_offsets = [0.0]            # GHz, strictly increasing
//! right_offsets = [0.0, 6.0]
//! crossings = [[0.01, 0.2]]       # Δ_ij, one row per left level
//!
//! [[model.relax]]                 # one-way channels, labels like 0L / 3R
//! from = "1R"
//! to = "0R"
//! rate = 0.5
//!
//! [model.leak]                    # optional above-barrier state
//! left_threshold = 8
//! right_threshold = 8
//! return_rate = 1.0
//!
//! [drive]
//! frequency = 1.0                 # or: frequencies = [5.0, 8.0]
//! dephasing = 0.05
//!
//! [grid]
//! eps_min = 0.0
//! eps_max = 10.0
//! n_eps = 401                     # optional, default 401
//! amp_min = 0.0
//! amp_max = 10.0
//! n_amp = 401
//!
//! [kernel]                        # optional
//! n_margin = 20
//! tail_cutoff = 1000.0            # in units of the dephasing rate
//!
//! [output]                        # optional
//! directory = "out"
//! formats = ["csv", "pgm"]
//! ```

use std::path::PathBuf;

use lzs_core::{DriveParams, LeakConfig, QubitModel, RateKernelParams, StateIndex, SweepGrid};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Validation(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    drive: RawDrive,
    grid: RawGrid,
    #[serde(default)]
    kernel: RawKernel,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    left_offsets: Vec<f64>,
    right_offsets: Vec<f64>,
    crossings: Vec<Vec<f64>>,
    #[serde(default)]
    relax: Vec<RawRelax>,
    leak: Option<RawLeak>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelax {
    from: String,
    to: String,
    rate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLeak {
    left_threshold: usize,
    right_threshold: usize,
    return_rate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    frequency: Option<f64>,
    frequencies: Option<Vec<f64>>,
    dephasing: f64,
}

fn default_points() -> usize {
    SweepGrid::DEFAULT_POINTS
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    eps_min: f64,
    eps_max: f64,
    #[serde(default = "default_points")]
    n_eps: usize,
    amp_min: f64,
    amp_max: f64,
    #[serde(default = "default_points")]
    n_amp: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    #[serde(default = "default_margin")]
    n_margin: usize,
    tail_cutoff: Option<f64>,
}

fn default_margin() -> usize {
    RateKernelParams::default().n_margin
}

impl Default for RawKernel {
    fn default() -> Self {
        Self {
            n_margin: default_margin(),
            tail_cutoff: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Pgm,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "default_directory")]
    directory: PathBuf,
    #[serde(default = "default_formats")]
    formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Pgm]
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: QubitModel,
    /// One drive per frequency; amplitudes are zero (the grid supplies them).
    pub drives: Vec<DriveParams>,
    pub grid: SweepGrid,
    pub kernel: RateKernelParams,
    pub output: OutputConfig,
    /// SHA-256 (hex) of the configuration text.
    pub config_hash: String,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Validation(e.to_string())
}

fn build_model(raw: RawModel) -> Result<QubitModel, ConfigError> {
    let (nl, nr) = (raw.left_offsets.len(), raw.right_offsets.len());
    if raw.crossings.len() != nl || raw.crossings.iter().any(|row| row.len() != nr) {
        return Err(invalid(format!(
            "crossings must be a {nl} x {nr} matrix (one row per left level, one column per right level)"
        )));
    }
    let mut b = QubitModel::builder(raw.left_offsets, raw.right_offsets).crossing_matrix(&raw.crossings);
    for r in raw.relax {
        let from: StateIndex = r.from.parse().map_err(invalid)?;
        let to: StateIndex = r.to.parse().map_err(invalid)?;
        b = b.relax(from, to, r.rate);
    }
    if let Some(l) = raw.leak {
        b = b.leak(LeakConfig {
            left_threshold: l.left_threshold,
            right_threshold: l.right_threshold,
            return_rate: l.return_rate,
        });
    }
    b.build().map_err(invalid)
}

fn build_drives(raw: RawDrive) -> Result<Vec<DriveParams>, ConfigError> {
    let freqs = match (raw.frequency, raw.frequencies) {
        (Some(f), None) => vec![f],
        (None, Some(fs)) if !fs.is_empty() => fs,
        (None, Some(_)) => return Err(invalid("drive.frequencies must not be empty")),
        (None, None) => return Err(invalid("drive needs `frequency` or `frequencies`")),
        (Some(_), Some(_)) => return Err(invalid("drive takes `frequency` or `frequencies`, not both")),
    };
    freqs
        .into_iter()
        .map(|f| DriveParams::new(0.0, f, raw.dephasing).map_err(invalid))
        .collect()
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let model = build_model(raw.model)?;
    let drives = build_drives(raw.drive)?;
    let g = raw.grid;
    let grid = SweepGrid::new((g.eps_min, g.eps_max), g.n_eps, (g.amp_min, g.amp_max), g.n_amp).map_err(invalid)?;
    let kernel = RateKernelParams {
        n_margin: raw.kernel.n_margin,
        tail_cutoff: raw.kernel.tail_cutoff,
    };
    kernel.validate().map_err(invalid)?;
    if raw.output.formats.is_empty() {
        return Err(invalid("output.formats must name at least one format"));
    }
    let config_hash = Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(RunConfig {
        model,
        drives,
        grid,
        kernel,
        output: OutputConfig {
            directory: raw.output.directory,
            formats: raw.output.formats,
        },
        config_hash,
    })
}

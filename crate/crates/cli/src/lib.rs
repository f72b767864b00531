//! Library side of the `lzs-sim` binary: configuration loading, sweep
//! execution and artifact writing.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lzs_core::{
    build_rate_matrix, diamond_boundaries, regime_classify, run_frequency_batch, stationary_solve, DiamondBoundarySet,
    PopulationMap, PopulationVector, Regime, RegimeReport,
};
use serde::Serialize;

pub use config::{parse_config, ConfigError, Format, RunConfig};

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Serialize)]
struct BoundaryJson {
    left_level: usize,
    right_level: usize,
    delta_ghz: f64,
    position_ghz: f64,
}

#[derive(Debug, Serialize)]
struct RegimeJson {
    regime: &'static str,
    peak_span_ghz: f64,
    diamond_spacing_ghz: f64,
    ratio: f64,
    pair: (usize, usize),
}

impl From<RegimeReport> for RegimeJson {
    fn from(r: RegimeReport) -> Self {
        Self {
            regime: match r.regime {
                Regime::LowFrequency => "low_frequency",
                Regime::HighFrequency => "high_frequency",
            },
            peak_span_ghz: r.peak_span,
            diamond_spacing_ghz: r.diamond_spacing,
            ratio: r.ratio,
            pair: r.pair,
        }
    }
}

#[derive(Debug, Serialize)]
struct FileJson {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct MapJson {
    index: usize,
    frequency_ghz: f64,
    dephasing_ghz: f64,
    regime: Option<RegimeJson>,
    files: Vec<FileJson>,
}

#[derive(Debug, Serialize)]
struct GridJson {
    eps_min: f64,
    eps_max: f64,
    n_eps: usize,
    amp_min: f64,
    amp_max: f64,
    n_amp: usize,
}

#[derive(Debug, Serialize)]
struct Manifest {
    config_sha256: String,
    model_fingerprint: String,
    grid: GridJson,
    n_margin: usize,
    tail_cutoff: Option<f64>,
    diamond_boundaries: Vec<BoundaryJson>,
    maps: Vec<MapJson>,
}

fn boundaries_json(set: &DiamondBoundarySet) -> Vec<BoundaryJson> {
    set.boundaries
        .iter()
        .map(|b| BoundaryJson {
            left_level: b.left_level,
            right_level: b.right_level,
            delta_ghz: b.delta,
            position_ghz: b.position,
        })
        .collect()
}

/// What a run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub maps: Vec<PopulationMap>,
    pub directory: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Sweeps every configured drive and writes the maps plus `manifest.json`
/// into `out` (or the configured directory). Files are named `map_NN.csv`
/// and `map_NN.pgm`, numbered in drive order.
pub fn run(config: &RunConfig, workers: usize, out: Option<&Path>) -> Result<RunSummary> {
    let maps = run_frequency_batch(&config.model, &config.drives, &config.grid, &config.kernel, workers)?;
    let directory = out.map_or_else(|| config.output.directory.clone(), Path::to_path_buf);
    fs::create_dir_all(&directory).with_context(|| format!("creating {}", directory.display()))?;

    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (index, (map, drive)) in maps.iter().zip(&config.drives).enumerate() {
        let mut written = Vec::new();
        for format in &config.output.formats {
            let (name, bytes) = match format {
                Format::Csv => (format!("map_{index:02}.csv"), output::encode_csv(map).into_bytes()),
                Format::Pgm => (format!("map_{index:02}.pgm"), output::encode_pgm(map)),
            };
            let path = directory.join(&name);
            output::write_atomic(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
            written.push(FileJson {
                path: name,
                sha256: output::sha256_hex(&bytes),
            });
            files.push(path);
        }
        entries.push(MapJson {
            index,
            frequency_ghz: map.frequency,
            dephasing_ghz: map.dephasing,
            regime: regime_classify(&config.model, drive).ok().map(Into::into),
            files: written,
        });
    }

    let g = config.grid;
    let manifest = Manifest {
        config_sha256: config.config_hash.clone(),
        model_fingerprint: config.model.fingerprint(),
        grid: GridJson {
            eps_min: g.eps_min,
            eps_max: g.eps_max,
            n_eps: g.n_eps,
            amp_min: g.amp_min,
            amp_max: g.amp_max,
            n_amp: g.n_amp,
        },
        n_margin: config.kernel.n_margin,
        tail_cutoff: config.kernel.tail_cutoff,
        diamond_boundaries: boundaries_json(&diamond_boundaries(&config.model)),
        maps: entries,
    };
    let path = directory.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    output::write_atomic(&path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);

    Ok(RunSummary { maps, directory, files })
}

/// Stationary populations at a single point for drive number `drive`.
pub fn probe(config: &RunConfig, eps: f64, amp: f64, drive: usize) -> Result<PopulationVector> {
    let base = config
        .drives
        .get(drive)
        .with_context(|| format!("drive index {drive} out of range ({} configured)", config.drives.len()))?;
    let d = base.with_amplitude(amp)?;
    let m = build_rate_matrix(&config.model, eps, &d, &config.kernel);
    Ok(stationary_solve(&m)?)
}

pub fn format_probe(p: &PopulationVector) -> String {
    let mut out = String::new();
    for (state, prob) in p.iter() {
        out.push_str(&format!("{state}\t{prob:.12e}\n"));
    }
    out.push_str(&format!("P_L\t{:.12e}\nP_R\t{:.12e}\n", p.left(), p.right()));
    if p.layout().leak {
        out.push_str(&format!("P_leak\t{:.12e}\n", p.leak()));
    }
    out
}

/// Diamond boundaries and, per drive, the regime classification as JSON.
pub fn boundaries_report(config: &RunConfig) -> Result<String> {
    #[derive(Serialize)]
    struct Report {
        diamond_boundaries: Vec<BoundaryJson>,
        regimes: Vec<DriveRegime>,
    }
    #[derive(Serialize)]
    struct DriveRegime {
        frequency_ghz: f64,
        regime: Option<RegimeJson>,
    }
    let report = Report {
        diamond_boundaries: boundaries_json(&diamond_boundaries(&config.model)),
        regimes: config
            .drives
            .iter()
            .map(|d| DriveRegime {
                frequency_ghz: d.frequency(),
                regime: regime_classify(&config.model, d).ok().map(Into::into),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

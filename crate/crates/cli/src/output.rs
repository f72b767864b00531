//! Map serialisation: CSV (full precision), binary PGM, and atomic file writes.

use std::fs;
use std::io;
use std::path::Path;

use lzs_core::{PopulationMap, SweepGrid};
use sha2::{Digest, Sha256};

pub const CSV_HEADER: &str = "eps_ghz,amp_ghz,p_left";

/// One line per grid point, amplitude as the outer loop. `{:.16e}` keeps 17
/// significant digits, enough to round-trip any `f64`.
pub fn encode_csv(map: &PopulationMap) -> String {
    let g = &map.grid;
    let mut out = String::with_capacity(64 * g.len() + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in 0..g.n_amp {
        let amp = g.amp(row);
        for (col, p) in map.row(row).iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", g.eps(col), amp, p));
        }
    }
    out
}

/// Parses CSV produced by [`encode_csv`] into `(eps, amp, p_left)` triples.
pub fn decode_csv(text: &str) -> Result<Vec<(f64, f64, f64)>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("expected header `{CSV_HEADER}`, got {other:?}")),
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(format!("line {}: expected 3 fields", k + 2));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", k + 2));
            Ok((num(fields[0])?, num(fields[1])?, num(fields[2])?))
        })
        .collect()
}

/// 8-bit grey level for a population in `[0, 1]`.
pub fn quantize(p: f64) -> u8 {
    (p.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Binary greymap, detuning left to right, highest amplitude in the top row.
pub fn encode_pgm(map: &PopulationMap) -> Vec<u8> {
    let SweepGrid { n_eps, n_amp, .. } = map.grid;
    let mut out = format!("P5\n{n_eps} {n_amp}\n255\n").into_bytes();
    out.reserve(n_eps * n_amp);
    for row in (0..n_amp).rev() {
        out.extend(map.row(row).iter().map(|&p| quantize(p)));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a sibling temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

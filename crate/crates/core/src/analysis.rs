//! Analytic geometry of the interference maps: where the drive starts to
//! reach each avoided crossing, where the n-photon resonances sit, and whether
//! consecutive diamonds are expected to merge.

use crate::error::{Error, Result};
use crate::model::{DriveParams, QubitModel};
use crate::rates::rate_peak_span;
use crate::sweep::SweepGrid;

/// Half-line in the (eps, amplitude) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub apex: (f64, f64),
    /// Unnormalised direction `(d_eps, d_amp)`.
    pub direction: (f64, f64),
}

/// V-shaped reachability boundary `A = |eps - D_ij|` of one crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiamondBoundary {
    pub left_level: usize,
    pub right_level: usize,
    pub delta: f64,
    pub position: f64,
}

impl DiamondBoundary {
    /// Amplitude at which the drive first reaches the crossing from `eps`.
    pub fn onset_amplitude(&self, eps: f64) -> f64 {
        (eps - self.position).abs()
    }

    pub fn reached(&self, eps: f64, amp: f64) -> bool {
        amp >= self.onset_amplitude(eps)
    }

    /// The two rays of the V, both starting at `(D_ij, 0)`.
    pub fn rays(&self) -> [Ray; 2] {
        let apex = (self.position, 0.0);
        [
            Ray {
                apex,
                direction: (-1.0, 1.0),
            },
            Ray {
                apex,
                direction: (1.0, 1.0),
            },
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiamondBoundarySet {
    pub boundaries: Vec<DiamondBoundary>,
}

impl DiamondBoundarySet {
    pub fn find(&self, left_level: usize, right_level: usize) -> Option<&DiamondBoundary> {
        self.boundaries
            .iter()
            .find(|b| b.left_level == left_level && b.right_level == right_level)
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.boundaries.len()
    }
}

/// One boundary per crossing with nonzero size, in row-major crossing order.
pub fn diamond_boundaries(model: &QubitModel) -> DiamondBoundarySet {
    let boundaries = model
        .active_crossings()
        .map(|(i, j, delta)| DiamondBoundary {
            left_level: i,
            right_level: j,
            delta,
            position: model.right_offsets()[j] - model.left_offsets()[i],
        })
        .collect();
    DiamondBoundarySet { boundaries }
}

/// Whether the diamond opened by `next` starts inside the first resonance
/// lobe of the diamond opened by `first` (amplitudes `0..=span` along the
/// apex line of `first`), with that onset point inside the grid window.
pub fn diamonds_overlap(first: &DiamondBoundary, next: &DiamondBoundary, span: f64, window: &SweepGrid) -> bool {
    let onset = next.onset_amplitude(first.position);
    let inside = (window.eps_min..=window.eps_max).contains(&first.position)
        && (window.amp_min..=window.amp_max).contains(&onset);
    inside && onset <= span
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    LowFrequency,
    HighFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    /// Resonance-peak span `δA = ω`.
    pub peak_span: f64,
    /// Smallest distance between consecutive diamonds `δD`.
    pub diamond_spacing: f64,
    pub ratio: f64,
    pub regime: Regime,
    /// Left levels `(n, n + 1)` whose crossings with `|0, R>` define `δD`.
    pub pair: (usize, usize),
}

/// Low/high-frequency classification: high iff `δA / δD >= 1`, with `δD` the
/// smallest gap between consecutive crossings `(nL, 0R)` and `((n+1)L, 0R)`.
pub fn regime_classify(model: &QubitModel, drive: &DriveParams) -> Result<RegimeReport> {
    let nl = model.n_left();
    if nl < 2 {
        return Err(Error::InsufficientLevels(nl));
    }
    let mut best: Option<(f64, usize)> = None;
    for n in 0..nl - 1 {
        let gap = (model.crossing_position(n, 0)? - model.crossing_position(n + 1, 0)?).abs();
        if best.is_none_or(|(g, _)| gap < g) {
            best = Some((gap, n));
        }
    }
    let (spacing, n) = best.expect("at least one consecutive pair");
    let span = rate_peak_span(drive);
    let ratio = span / spacing;
    Ok(RegimeReport {
        peak_span: span,
        diamond_spacing: spacing,
        ratio,
        regime: if ratio >= 1.0 {
            Regime::HighFrequency
        } else {
            Regime::LowFrequency
        },
        pair: (n, n + 1),
    })
}

/// Multiples `nω` inside `[lo, hi]`, ascending.
pub fn resonance_positions(drive: &DriveParams, range: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = range;
    let w = drive.frequency();
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Vec::new();
    }
    let first = (lo / w).ceil() as i64 - 1;
    let last = (hi / w).floor() as i64 + 1;
    (first..=last)
        .map(|n| n as f64 * w)
        .filter(|e| (lo..=hi).contains(e))
        .collect()
}

//! Multilevel double-well system and the geometry of its level crossings.
//!
//! Diabatic energies follow a fixed linear convention in the global detuning
//! `eps`:
//!
//! ```text
//! E(i, L) = +eps/2 + left_offsets[i]
//! E(j, R) = -eps/2 + right_offsets[j]
//! ```
//!
//! so the pair `(i, L)` / `(j, R)` is degenerate exactly at
//! `eps = right_offsets[j] - left_offsets[i]`.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Well {
    Left,
    Right,
    /// Delocalised above-barrier state shared by both wells.
    Leak,
}

/// A diabatic state `|level, well>`. The leak state always has level 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateIndex {
    pub well: Well,
    pub level: usize,
}

impl StateIndex {
    pub const LEAK: StateIndex = StateIndex {
        well: Well::Leak,
        level: 0,
    };

    pub const fn left(level: usize) -> Self {
        Self {
            well: Well::Left,
            level,
        }
    }

    pub const fn right(level: usize) -> Self {
        Self {
            well: Well::Right,
            level,
        }
    }
}

impl fmt::Display for StateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.well {
            Well::Left => write!(f, "{}L", self.level),
            Well::Right => write!(f, "{}R", self.level),
            Well::Leak => f.write_str("leak"),
        }
    }
}

impl std::str::FromStr for StateIndex {
    type Err = Error;

    /// Parses labels such as `0L`, `3R` or `leak`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("leak") {
            return Ok(Self::LEAK);
        }
        let bad = || Error::InvalidArgument(format!("bad state label `{s}` (expected e.g. `0L`, `1R`, `leak`)"));
        let (digits, well) = s.split_at(s.len().checked_sub(1).ok_or_else(bad)?);
        let level: usize = digits.parse().map_err(|_| bad())?;
        match well {
            "L" | "l" => Ok(Self::left(level)),
            "R" | "r" => Ok(Self::right(level)),
            _ => Err(bad()),
        }
    }
}

/// Flat ordering of all states: left ladder, then right ladder, then the leak
/// state when present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n_left: usize,
    pub n_right: usize,
    pub leak: bool,
}

impl StateLayout {
    pub fn len(&self) -> usize {
        self.n_left + self.n_right + usize::from(self.leak)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index_of(&self, state: StateIndex) -> Option<usize> {
        match state.well {
            Well::Left if state.level < self.n_left => Some(state.level),
            Well::Right if state.level < self.n_right => Some(self.n_left + state.level),
            Well::Leak if self.leak && state.level == 0 => Some(self.n_left + self.n_right),
            _ => None,
        }
    }

    pub fn state_at(&self, index: usize) -> Option<StateIndex> {
        if index < self.n_left {
            Some(StateIndex::left(index))
        } else if index < self.n_left + self.n_right {
            Some(StateIndex::right(index - self.n_left))
        } else if self.leak && index == self.n_left + self.n_right {
            Some(StateIndex::LEAK)
        } else {
            None
        }
    }

    pub fn states(&self) -> impl Iterator<Item = StateIndex> + '_ {
        (0..self.len()).filter_map(|k| self.state_at(k))
    }

    /// Flat index of `|0, R>`, the initial state of every tie-break evolution.
    pub fn ground_right(&self) -> usize {
        self.n_left
    }
}

/// Optional above-barrier ("non-local") state.
///
/// Levels at or above the threshold in a well are delocalised: an LZS
/// crossing between a localised state and such a level pumps the localised
/// state into the leak state at the crossing's LZS rate (one way). The leak
/// state relaxes into `|0, L>` and `|0, R>` with the same `return_rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakConfig {
    pub left_threshold: usize,
    pub right_threshold: usize,
    pub return_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitModel {
    left_offsets: Vec<f64>,
    right_offsets: Vec<f64>,
    /// `n_left x n_right`, row-major by left level.
    crossings: Vec<f64>,
    /// `[from][to]` within the left well.
    intra_left: Vec<f64>,
    intra_right: Vec<f64>,
    /// `[left][right]`, rate `|i,L> -> |j,R>`.
    left_to_right: Vec<f64>,
    /// `[right][left]`, rate `|j,R> -> |i,L>`.
    right_to_left: Vec<f64>,
    leak: Option<LeakConfig>,
}

#[derive(Debug, Clone)]
pub struct QubitModelBuilder {
    left_offsets: Vec<f64>,
    right_offsets: Vec<f64>,
    crossings: Vec<(usize, usize, f64)>,
    relax: Vec<(StateIndex, StateIndex, f64)>,
    leak: Option<LeakConfig>,
}

impl QubitModelBuilder {
    /// Sets the avoided-crossing size between `|i,L>` and `|j,R>`.
    pub fn crossing(mut self, i: usize, j: usize, delta: f64) -> Self {
        self.crossings.push((i, j, delta));
        self
    }

    /// Sets a full crossing matrix, rows indexed by left level.
    pub fn crossing_matrix(mut self, rows: &[Vec<f64>]) -> Self {
        for (i, row) in rows.iter().enumerate() {
            for (j, &d) in row.iter().enumerate() {
                self.crossings.push((i, j, d));
            }
        }
        self
    }

    /// Adds a one-way relaxation channel. Repeated channels accumulate.
    pub fn relax(mut self, from: StateIndex, to: StateIndex, rate: f64) -> Self {
        self.relax.push((from, to, rate));
        self
    }

    pub fn leak(mut self, leak: LeakConfig) -> Self {
        self.leak = Some(leak);
        self
    }

    pub fn build(self) -> Result<QubitModel> {
        let invalid = |msg: String| Err(Error::InvalidModel(msg));
        let (nl, nr) = (self.left_offsets.len(), self.right_offsets.len());
        if nl == 0 || nr == 0 {
            return invalid("each well needs at least one level".into());
        }
        for (name, ladder) in [("left", &self.left_offsets), ("right", &self.right_offsets)] {
            if ladder.iter().any(|x| !x.is_finite()) {
                return invalid(format!("{name} offsets must be finite"));
            }
            if ladder.windows(2).any(|w| w[1] <= w[0]) {
                return invalid(format!("{name} offsets must be strictly increasing"));
            }
        }

        let mut crossings = vec![0.0; nl * nr];
        for (i, j, d) in self.crossings {
            if i >= nl || j >= nr {
                return invalid(format!(
                    "crossing ({i}L, {j}R) does not match ladder lengths {nl} x {nr}"
                ));
            }
            if !d.is_finite() || d < 0.0 {
                return invalid(format!("crossing ({i}L, {j}R) must be finite and >= 0, got {d}"));
            }
            crossings[i * nr + j] = d;
        }

        let mut intra_left = vec![0.0; nl * nl];
        let mut intra_right = vec![0.0; nr * nr];
        let mut left_to_right = vec![0.0; nl * nr];
        let mut right_to_left = vec![0.0; nr * nl];
        for (from, to, rate) in self.relax {
            if !rate.is_finite() || rate < 0.0 {
                return invalid(format!(
                    "relaxation rate {from} -> {to} must be finite and >= 0, got {rate}"
                ));
            }
            let in_range = |s: StateIndex| match s.well {
                Well::Left => s.level < nl,
                Well::Right => s.level < nr,
                Well::Leak => false,
            };
            if !in_range(from) || !in_range(to) {
                return invalid(format!(
                    "relaxation {from} -> {to} references a state outside the ladders \
                     (leak channels are set through the leak config)"
                ));
            }
            match (from.well, to.well) {
                (Well::Left, Well::Left) | (Well::Right, Well::Right) => {
                    if to.level >= from.level {
                        return invalid(format!("intrawell relaxation {from} -> {to} must go strictly downward"));
                    }
                    if from.well == Well::Left {
                        intra_left[from.level * nl + to.level] += rate;
                    } else {
                        intra_right[from.level * nr + to.level] += rate;
                    }
                }
                (Well::Left, Well::Right) => left_to_right[from.level * nr + to.level] += rate,
                (Well::Right, Well::Left) => right_to_left[from.level * nl + to.level] += rate,
                _ => unreachable!(),
            }
        }

        if let Some(leak) = self.leak {
            if leak.left_threshold == 0 || leak.right_threshold == 0 {
                return invalid("leak thresholds must be >= 1 (ground states are localised)".into());
            }
            if leak.left_threshold > nl || leak.right_threshold > nr {
                return invalid(format!(
                    "leak thresholds ({}, {}) exceed ladder lengths ({nl}, {nr})",
                    leak.left_threshold, leak.right_threshold
                ));
            }
            if !leak.return_rate.is_finite() || leak.return_rate <= 0.0 {
                return invalid("leak return rate must be finite and positive".into());
            }
        }

        Ok(QubitModel {
            left_offsets: self.left_offsets,
            right_offsets: self.right_offsets,
            crossings,
            intra_left,
            intra_right,
            left_to_right,
            right_to_left,
            leak: self.leak,
        })
    }
}

impl QubitModel {
    pub fn builder(left_offsets: Vec<f64>, right_offsets: Vec<f64>) -> QubitModelBuilder {
        QubitModelBuilder {
            left_offsets,
            right_offsets,
            crossings: Vec::new(),
            relax: Vec::new(),
            leak: None,
        }
    }

    pub fn n_left(&self) -> usize {
        self.left_offsets.len()
    }

    pub fn n_right(&self) -> usize {
        self.right_offsets.len()
    }

    pub fn left_offsets(&self) -> &[f64] {
        &self.left_offsets
    }

    pub fn right_offsets(&self) -> &[f64] {
        &self.right_offsets
    }

    pub fn leak(&self) -> Option<&LeakConfig> {
        self.leak.as_ref()
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout {
            n_left: self.n_left(),
            n_right: self.n_right(),
            leak: self.leak.is_some(),
        }
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n_left() || j >= self.n_right() {
            return Err(Error::IndexOutOfRange(format!(
                "crossing ({i}L, {j}R) in a {} x {} model",
                self.n_left(),
                self.n_right()
            )));
        }
        Ok(())
    }

    pub fn crossing(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i, j)?;
        Ok(self.crossings[i * self.n_right() + j])
    }

    /// Global detuning `D_ij` at which `|i,L>` and `|j,R>` are degenerate.
    pub fn crossing_position(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i, j)?;
        Ok(self.right_offsets[j] - self.left_offsets[i])
    }

    /// Detuning measured from crossing `(i, j)`: `eps - D_ij`.
    pub fn local_detuning(&self, eps: f64, i: usize, j: usize) -> Result<f64> {
        Ok(eps - self.crossing_position(i, j)?)
    }

    /// Crossings with nonzero size, as `(i, j, delta)` in row-major order.
    pub fn active_crossings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let nr = self.n_right();
        self.crossings
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0.0)
            .map(move |(k, &d)| (k / nr, k % nr, d))
    }

    /// Largest `|D_ij|` over active crossings (0 when there are none).
    pub fn max_crossing_distance(&self) -> f64 {
        self.active_crossings()
            .map(|(i, j, _)| (self.right_offsets[j] - self.left_offsets[i]).abs())
            .fold(0.0, f64::max)
    }

    /// All nonzero relaxation channels as `(from, to, rate)`, leak channels
    /// excluded.
    pub fn relaxation_channels(&self) -> Vec<(StateIndex, StateIndex, f64)> {
        let (nl, nr) = (self.n_left(), self.n_right());
        let mut out = Vec::new();
        let mut push = |from, to, rate: f64| {
            if rate > 0.0 {
                out.push((from, to, rate));
            }
        };
        for a in 0..nl {
            for b in 0..nl {
                push(StateIndex::left(a), StateIndex::left(b), self.intra_left[a * nl + b]);
            }
            for b in 0..nr {
                push(
                    StateIndex::left(a),
                    StateIndex::right(b),
                    self.left_to_right[a * nr + b],
                );
            }
        }
        for a in 0..nr {
            for b in 0..nr {
                push(StateIndex::right(a), StateIndex::right(b), self.intra_right[a * nr + b]);
            }
            for b in 0..nl {
                push(
                    StateIndex::right(a),
                    StateIndex::left(b),
                    self.right_to_left[a * nl + b],
                );
            }
        }
        out
    }

    /// Stable content hash (hex, 16 chars) used to tag population maps.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |xs: &[f64]| {
            h.update((xs.len() as u64).to_le_bytes());
            for x in xs {
                h.update(x.to_bits().to_le_bytes());
            }
        };
        put(&self.left_offsets);
        put(&self.right_offsets);
        put(&self.crossings);
        put(&self.intra_left);
        put(&self.intra_right);
        put(&self.left_to_right);
        put(&self.right_to_left);
        match &self.leak {
            Some(l) => put(&[1.0, l.left_threshold as f64, l.right_threshold as f64, l.return_rate]),
            None => put(&[0.0]),
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Drive amplitude `A`, angular frequency `omega` and dephasing rate
/// `gamma2 = 1/T2`, all in GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    amplitude: f64,
    frequency: f64,
    dephasing: f64,
}

impl DriveParams {
    pub fn new(amplitude: f64, frequency: f64, dephasing: f64) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::InvalidDrive(format!(
                "amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !frequency.is_finite() || frequency <= 0.0 {
            return Err(Error::InvalidDrive(format!(
                "frequency must be positive, got {frequency}"
            )));
        }
        if !dephasing.is_finite() || dephasing <= 0.0 {
            return Err(Error::InvalidDrive(format!(
                "dephasing must be positive, got {dephasing}"
            )));
        }
        Ok(Self {
            amplitude,
            frequency,
            dephasing,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn dephasing(&self) -> f64 {
        self.dephasing
    }

    /// Bessel argument `A / omega`.
    pub fn bessel_argument(&self) -> f64 {
        self.amplitude / self.frequency
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        Self::new(amplitude, self.frequency, self.dephasing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladders(left: &[f64], right: &[f64]) -> QubitModel {
        QubitModel::builder(left.to_vec(), right.to_vec()).build().unwrap()
    }

    #[test]
    fn crossing_positions() {
        assert_eq!(ladders(&[0.0], &[0.0]).crossing_position(0, 0).unwrap(), 0.0);
        let m = ladders(&[0.0, 6.0], &[0.0, 5.0]);
        assert_eq!(m.crossing_position(1, 0).unwrap(), -6.0);
        assert_eq!(m.crossing_position(0, 1).unwrap(), 5.0);
        assert!(matches!(m.crossing_position(2, 0), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(m.local_detuning(0.0, 0, 2), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn local_detunings() {
        let m = ladders(&[0.0], &[0.0, 5.0]);
        assert_eq!(m.local_detuning(5.0, 0, 1).unwrap(), 0.0);
        assert_eq!(m.local_detuning(3.0, 0, 1).unwrap(), -2.0);
        assert_eq!(ladders(&[0.0], &[0.0]).local_detuning(1.0, 0, 0).unwrap(), 1.0);
    }

    #[test]
    fn consecutive_left_crossings_are_spaced_by_the_ladder() {
        let m = ladders(&[0.0, 4.5, 10.0], &[0.3]);
        for n in 0..2 {
            let d = (m.crossing_position(n, 0).unwrap() - m.crossing_position(n + 1, 0).unwrap()).abs();
            let spacing = m.left_offsets()[n + 1] - m.left_offsets()[n];
            assert!((d - spacing).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_models() {
        let err = |b: QubitModelBuilder| b.build().unwrap_err();
        assert!(matches!(
            err(QubitModel::builder(vec![0.0, 0.0], vec![0.0])),
            Error::InvalidModel(_)
        ));
        assert!(matches!(
            err(QubitModel::builder(vec![1.0, 0.0], vec![0.0])),
            Error::InvalidModel(_)
        ));
        assert!(matches!(
            err(QubitModel::builder(vec![], vec![0.0])),
            Error::InvalidModel(_)
        ));
        assert!(matches!(
            err(QubitModel::builder(vec![0.0], vec![0.0]).crossing(0, 1, 0.1)),
            Error::InvalidModel(_)
        ));
        assert!(matches!(
            err(QubitModel::builder(vec![0.0], vec![0.0]).crossing(0, 0, -0.1)),
            Error::InvalidModel(_)
        ));
        assert!(matches!(
            err(QubitModel::builder(vec![0.0], vec![0.0]).crossing(0, 0, f64::NAN)),
            Error::InvalidModel(_)
        ));
        // upward intrawell relaxation
        assert!(matches!(
            err(QubitModel::builder(vec![0.0, 1.0], vec![0.0]).relax(StateIndex::left(0), StateIndex::left(1), 0.1)),
            Error::InvalidModel(_)
        ));
        assert!(matches!(
            err(QubitModel::builder(vec![0.0], vec![0.0]).relax(StateIndex::left(0), StateIndex::right(0), -1.0)),
            Error::InvalidModel(_)
        ));
        assert!(matches!(
            err(QubitModel::builder(vec![0.0, 1.0], vec![0.0]).leak(LeakConfig {
                left_threshold: 0,
                right_threshold: 1,
                return_rate: 1.0
            })),
            Error::InvalidModel(_)
        ));
        assert!(matches!(
            err(QubitModel::builder(vec![0.0, 1.0], vec![0.0]).leak(LeakConfig {
                left_threshold: 1,
                right_threshold: 1,
                return_rate: 0.0
            })),
            Error::InvalidModel(_)
        ));
    }

    #[test]
    fn layout_indexing_round_trips() {
        let layout = StateLayout {
            n_left: 3,
            n_right: 2,
            leak: true,
        };
        assert_eq!(layout.len(), 6);
        for (k, s) in layout.states().enumerate() {
            assert_eq!(layout.index_of(s), Some(k));
        }
        assert_eq!(layout.ground_right(), 3);
        assert_eq!(layout.index_of(StateIndex::right(2)), None);
        assert_eq!(layout.state_at(6), None);
    }

    #[test]
    fn state_labels_parse() {
        assert_eq!("0L".parse::<StateIndex>().unwrap(), StateIndex::left(0));
        assert_eq!("12R".parse::<StateIndex>().unwrap(), StateIndex::right(12));
        assert_eq!("leak".parse::<StateIndex>().unwrap(), StateIndex::LEAK);
        assert!("L".parse::<StateIndex>().is_err());
        assert!("3X".parse::<StateIndex>().is_err());
        assert_eq!(StateIndex::right(4).to_string(), "4R");
    }

    #[test]
    fn drive_validation() {
        assert!(DriveParams::new(0.0, 1.0, 0.1).is_ok());
        let msg = DriveParams::new(0.0, 1.0, -0.1).unwrap_err().to_string();
        assert!(msg.contains("dephasing must be positive"), "{msg}");
        assert!(DriveParams::new(0.0, 0.0, 0.1).is_err());
        assert!(DriveParams::new(-1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = QubitModel::builder(vec![0.0], vec![0.0])
            .crossing(0, 0, 0.1)
            .build()
            .unwrap();
        let b = QubitModel::builder(vec![0.0], vec![0.0])
            .crossing(0, 0, 0.2)
            .build()
            .unwrap();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }
}

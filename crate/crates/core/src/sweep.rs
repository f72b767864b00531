//! Stationary left-well population over a rectangular (detuning, amplitude)
//! grid.
//!
//! Each grid point is an independent small solve. Rows (fixed amplitude) are
//! distributed over a rayon pool; every point is computed by the same
//! sequential code path, so results do not depend on the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::master::{assemble, stationary_solve};
use crate::model::{DriveParams, QubitModel};
use crate::rates::{RateEvaluator, RateKernelParams};

/// Inclusive, uniformly spaced axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub eps_min: f64,
    pub eps_max: f64,
    pub n_eps: usize,
    pub amp_min: f64,
    pub amp_max: f64,
    pub n_amp: usize,
}

impl SweepGrid {
    pub const DEFAULT_POINTS: usize = 401;

    pub fn new(eps: (f64, f64), n_eps: usize, amp: (f64, f64), n_amp: usize) -> Result<Self> {
        let g = Self {
            eps_min: eps.0,
            eps_max: eps.1,
            n_eps,
            amp_min: amp.0,
            amp_max: amp.1,
            n_amp,
        };
        g.validate()?;
        Ok(g)
    }

    /// Same ranges at the default 401 x 401 resolution.
    pub fn with_default_resolution(eps: (f64, f64), amp: (f64, f64)) -> Result<Self> {
        Self::new(eps, Self::DEFAULT_POINTS, amp, Self::DEFAULT_POINTS)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGrid(m.to_string()));
        if self.n_eps < 2 || self.n_amp < 2 {
            return bad("each axis needs at least 2 points");
        }
        if ![self.eps_min, self.eps_max, self.amp_min, self.amp_max]
            .iter()
            .all(|v| v.is_finite())
        {
            return bad("axis bounds must be finite");
        }
        if self.eps_max <= self.eps_min || self.amp_max <= self.amp_min {
            return bad("axis maximum must exceed its minimum");
        }
        if self.amp_min < 0.0 {
            return bad("amplitudes must be >= 0");
        }
        Ok(())
    }

    fn lerp(lo: f64, hi: f64, k: usize, n: usize) -> f64 {
        if k + 1 == n {
            hi
        } else {
            lo + (hi - lo) * (k as f64 / (n - 1) as f64)
        }
    }

    pub fn eps(&self, col: usize) -> f64 {
        Self::lerp(self.eps_min, self.eps_max, col, self.n_eps)
    }

    pub fn amp(&self, row: usize) -> f64 {
        Self::lerp(self.amp_min, self.amp_max, row, self.n_amp)
    }

    pub fn len(&self) -> usize {
        self.n_eps * self.n_amp
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Left-well population `P_L` on a grid; `values` is `n_amp x n_eps`,
/// row-major with amplitude as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMap {
    pub grid: SweepGrid,
    pub values: Vec<f64>,
    pub frequency: f64,
    pub dephasing: f64,
    /// Content hash of the model the map was computed from.
    pub fingerprint: String,
}

impl PopulationMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.grid.n_eps + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.grid.n_eps;
        &self.values[row * n..(row + 1) * n]
    }
}

fn fill_row(
    model: &QubitModel,
    drive: &DriveParams,
    kernel: &RateKernelParams,
    grid: &SweepGrid,
    row: usize,
    out: &mut [f64],
) -> Result<()> {
    let amp = grid.amp(row);
    let rates = RateEvaluator::new(&drive.with_amplitude(amp)?, kernel);
    for (col, slot) in out.iter_mut().enumerate() {
        let eps = grid.eps(col);
        let p = stationary_solve(&assemble(model, eps, &rates)).map_err(|e| match e {
            Error::NonConvergent { .. } => Error::NonConvergentAt { eps, amp, row, col },
            other => other,
        })?;
        *slot = p.left();
    }
    Ok(())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

fn sweep_in(
    pool: &rayon::ThreadPool,
    model: &QubitModel,
    drive: &DriveParams,
    grid: &SweepGrid,
    kernel: &RateKernelParams,
) -> Result<PopulationMap> {
    grid.validate()?;
    kernel.validate()?;
    let mut values = vec![0.0; grid.len()];
    let outcomes: Vec<Result<()>> = pool.install(|| {
        values
            .par_chunks_mut(grid.n_eps)
            .enumerate()
            .map(|(row, out)| fill_row(model, drive, kernel, grid, row, out))
            .collect()
    });
    // first failure in grid order, whatever the scheduling
    outcomes.into_iter().collect::<Result<()>>()?;
    Ok(PopulationMap {
        grid: *grid,
        values,
        frequency: drive.frequency(),
        dephasing: drive.dephasing(),
        fingerprint: model.fingerprint(),
    })
}

/// Stationary `P_L` at every grid point, with the drive amplitude taken from
/// the grid row (the amplitude in `drive_base` is ignored).
pub fn run_sweep(
    model: &QubitModel,
    drive_base: &DriveParams,
    grid: &SweepGrid,
    kernel: &RateKernelParams,
    workers: usize,
) -> Result<PopulationMap> {
    sweep_in(&pool(workers)?, model, drive_base, grid, kernel)
}

/// One map per drive (typically one per frequency) over a shared grid.
pub fn run_frequency_batch(
    model: &QubitModel,
    drives: &[DriveParams],
    grid: &SweepGrid,
    kernel: &RateKernelParams,
    workers: usize,
) -> Result<Vec<PopulationMap>> {
    if drives.is_empty() {
        return Err(Error::InvalidArgument(
            "frequency batch needs at least one drive".into(),
        ));
    }
    let pool = pool(workers)?;
    drives.iter().map(|d| sweep_in(&pool, model, d, grid, kernel)).collect()
}

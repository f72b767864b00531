//! Rate-equation engine for Landau-Zener-Stückelberg (LZS) interferometry in a
//! multilevel double-well system such as a strongly driven flux qubit.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: level ladders of both wells, avoided crossings, relaxation
//!   channels and the optional above-barrier leak state.
//! - [`rates`]: Bessel kernel and the photon-assisted LZS transition rate.
//! - [`master`]: rate matrix assembly, stationary and transient populations.
//! - [`sweep`]: parallel, deterministic population maps over (detuning, amplitude).
//! - [`analysis`]: diamond boundaries, resonance positions and regime classification.
//!
//! All energies, frequencies and rates are in GHz with ħ = 1; times are in ns.

pub mod analysis;
pub mod error;
mod linalg;
pub mod master;
pub mod model;
pub mod rates;
pub mod sweep;

pub use analysis::{
    diamond_boundaries, diamonds_overlap, regime_classify, resonance_positions, DiamondBoundary, DiamondBoundarySet,
    Ray, Regime, RegimeReport,
};
pub use error::{Error, Result};
pub use master::{
    build_rate_matrix, stationary_eq7, stationary_eq8, stationary_solve, time_evolve, well_population,
    PopulationVector, RateMatrix,
};
pub use model::{DriveParams, LeakConfig, QubitModel, QubitModelBuilder, StateIndex, StateLayout, Well};
pub use rates::{bessel_jn, lzs_rate, rate_peak_span, RateEvaluator, RateKernelParams};
pub use sweep::{run_frequency_batch, run_sweep, PopulationMap, SweepGrid};

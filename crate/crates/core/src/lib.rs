//! Calibration, simulation and weather-derivative pricing for a daily
//! temperature model with mean-reverting stochastic (CIR) volatility.
//!
//! The crate is organised bottom-up:
//!
//! * [`timeseries`] — loading and diagnosing daily series,
//! * [`seasonal`] and [`model`] — deterministic functions and parameters,
//! * [`estimation`] — conditional least squares for every parameter,
//! * [`simulation`] — exact OU / Ninomiya–Victoir path generation,
//! * [`charfn`] — affine characteristic functions via a Riccati sweep,
//! * [`pricing`] — indices, Monte Carlo, Fourier inversion, control variates,
//! * [`baseline`] — the gamma index-model benchmark,
//! * [`sensitivity`] — parameter sweeps with common random numbers.

// `!(x > 0.0)` is used deliberately: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod baseline;
pub mod charfn;
pub mod error;
pub mod estimation;
mod linalg;
pub mod model;
pub mod pricing;
pub mod quad;
pub mod seasonal;
pub mod sensitivity;
pub mod simulation;
pub mod stats;
pub mod timeseries;

pub use baseline::{index_model_price, HistoricalIndexSample, IndexModelPrice};
pub use charfn::{charfn_cat, charfn_state, riccati_solve, CharFnSolution, FourierArgs};
pub use error::{Error, Result};
pub use estimation::{calibrate, Calibration, CalibrationConfig, RealizedVolSeries};
pub use model::{ModelParams, ParamsDocument};
pub use pricing::{IndexKind, IndexSpec, McConfig, PayoffSpec, PriceDistribution, StrikeRule};
pub use seasonal::{eval_s, eval_sigma2, TrendSeasonalParams, VolSeasonalParams};
pub use sensitivity::{sweep, SweepAxis, SweepPoint};
pub use simulation::{simulate_paths, PathSet};
pub use timeseries::{DetrendedSeries, TemperatureSeries};

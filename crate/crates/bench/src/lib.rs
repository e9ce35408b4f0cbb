//! Shared fixtures for the benchmarks.

use chrono::NaiveDate;
use tempsv_core::{simulate_paths, IndexSpec, ModelParams, PayoffSpec, TemperatureSeries};

/// January 2019 in model days.
pub const JAN_2019: (f64, f64) = (14235.0, 14265.0);

/// `years` of daily data simulated from the reference parameters.
pub fn synthetic_series(years: usize, seed: u64) -> TemperatureSeries {
    let p = ModelParams::paris();
    let n = years * 365;
    let paths = simulate_paths(&p, (0.0, p.sigma2(0.0)), 0.0, (n - 1) as f64, 1.0, 1, seed).expect("valid parameters");
    TemperatureSeries::new(NaiveDate::from_ymd_opt(1980, 1, 1).unwrap(), paths.temps(0).to_vec()).expect("valid series")
}

/// January HDD call with an at-the-money fixed strike.
pub fn january_hdd() -> PayoffSpec {
    PayoffSpec::fixed(IndexSpec::hdd(JAN_2019.0, JAN_2019.1).unwrap(), 310.0, f64::INFINITY).unwrap()
}

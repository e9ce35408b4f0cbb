//! Conditional least-squares estimation, in the fixed pipeline order
//! trend/kappa -> realized volatility -> K and sigma^2 -> eta^2 -> rho.

mod calibrate;
mod cir;
mod trend;
mod volatility;

pub use calibrate::{calibrate, qq_table, Calibration, CalibrationConfig, QqRow};
pub use cir::{clse_eta2_cir, clse_gamma_cir};
pub use trend::{estimate_trend, estimate_trend_harmonics, trend_lambda, TrendFit};
pub use volatility::{
    cond_mean_zeta, cond_weight_zeta, estimate_eta2, estimate_rho, estimate_vol_seasonal, realized_volatility,
    vol_theta, RealizedVolSeries, RhoEstimate, VolFit,
};

/// Default realized-volatility window, in observations.
pub const DEFAULT_Q: usize = 10;

/// `(1 - e^{-a h}) / a`, continuous at `a = 0`.
pub(crate) fn psi(a: f64, h: f64) -> f64 {
    if (a * h).abs() < 1e-12 {
        h
    } else {
        -(-a * h).exp_m1() / a
    }
}

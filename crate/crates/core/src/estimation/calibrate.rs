use statrs::distribution::{ContinuousCDF, Normal};

use super::{
    estimate_eta2, estimate_rho, estimate_trend_harmonics, estimate_vol_seasonal, realized_volatility,
    RealizedVolSeries, RhoEstimate, TrendFit, VolFit, DEFAULT_Q,
};
use crate::error::Result;
use crate::model::ModelParams;
use crate::stats;
use crate::timeseries::TemperatureSeries;

#[derive(Debug, Clone)]
pub struct CalibrationConfig {
    /// Realized-volatility window length.
    pub q: usize,
    pub harmonics_sigma2: usize,
    pub harmonics_trend: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self { q: DEFAULT_Q, harmonics_sigma2: 2, harmonics_trend: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct Calibration {
    /// Full parameter set; `rho` holds the clamped estimate.
    pub params: ModelParams,
    pub q: usize,
    pub trend_fit: TrendFit,
    pub realized_vol: RealizedVolSeries,
    pub vol_fit: VolFit,
    /// `None` when `eta^2 = 0` leaves the correlation unidentified.
    pub rho: Option<RhoEstimate>,
}

/// Run the full estimation chain on a daily series.
pub fn calibrate(series: &TemperatureSeries, config: &CalibrationConfig) -> Result<Calibration> {
    let trend_fit = estimate_trend_harmonics(series, config.harmonics_trend)?;
    log::debug!("trend: kappa = {:.5}, lambda = {:?}", trend_fit.kappa, trend_fit.lambda);
    let rv = realized_volatility(&trend_fit.detrended, trend_fit.kappa, config.q)?;
    let vol_fit = estimate_vol_seasonal(&rv, config.harmonics_sigma2)?;
    let eta2 = estimate_eta2(&rv, &vol_fit.vol_seasonal, vol_fit.big_k)?;
    let mut params = ModelParams::new(
        trend_fit.trend.clone(),
        trend_fit.kappa,
        vol_fit.vol_seasonal.clone(),
        vol_fit.big_k,
        eta2,
        0.0,
    )?;
    let rho = if eta2 > 0.0 {
        let r = estimate_rho(series, &rv, &params)?;
        params.rho = r.rho;
        Some(r)
    } else {
        log::warn!("eta^2 estimate is zero; correlation left at 0");
        None
    };
    Ok(Calibration { params, q: config.q, trend_fit, realized_vol: rv, vol_fit, rho })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QqRow {
    pub p: f64,
    pub observed: f64,
    /// Quantile of the Gaussian with the observed mean and variance.
    pub normal: f64,
    pub simulated: Option<f64>,
}

/// Quantile-quantile table of one-step residuals at `points` probabilities
/// `(j + 1/2) / points`, against a moment-matched Gaussian and optionally
/// against residuals of a simulated path.
pub fn qq_table(observed: &[f64], simulated: Option<&[f64]>, points: usize) -> Vec<QqRow> {
    let mut obs = observed.to_vec();
    obs.sort_by(f64::total_cmp);
    let sim = simulated.map(|s| {
        let mut v = s.to_vec();
        v.sort_by(f64::total_cmp);
        v
    });
    let normal = Normal::new(stats::mean(observed), stats::std_dev(observed).max(f64::MIN_POSITIVE)).unwrap();
    (0..points)
        .map(|j| {
            let p = (j as f64 + 0.5) / points as f64;
            QqRow {
                p,
                observed: stats::quantile_sorted(&obs, p),
                normal: normal.inverse_cdf(p),
                simulated: sim.as_deref().map(|s| stats::quantile_sorted(s, p)),
            }
        })
        .collect()
}

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::seasonal::{xi_k, TrendSeasonalParams};
use crate::timeseries::{DetrendedSeries, TemperatureSeries};

#[derive(Debug, Clone)]
pub struct TrendFit {
    pub trend: TrendSeasonalParams,
    pub kappa: f64,
    /// Regression coefficients `(1, t, T, sin.., cos..)`.
    pub lambda: Vec<f64>,
    /// One-step residuals `T_{i+1} - lambda' X_i`, length `n - 1`.
    pub residuals: Vec<f64>,
    pub detrended: DetrendedSeries,
}

fn regressors(t: f64, temp: f64, harmonics: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(3 + 2 * harmonics);
    x.extend([1.0, t, temp]);
    x.extend((1..=harmonics).map(|k| (xi_k(k) * t).sin()));
    x.extend((1..=harmonics).map(|k| (xi_k(k) * t).cos()));
    x
}

/// Coefficients of the one-step regression implied by `(trend, kappa)`:
/// `E[T_{t+delta} | T_t] = s(t + delta) + e^{-kappa delta} (T_t - s(t))`.
pub fn trend_lambda(trend: &TrendSeasonalParams, kappa: f64, delta: f64) -> Vec<f64> {
    let e = (-kappa * delta).exp();
    let n = trend.harmonics();
    let mut l = vec![0.0; 3 + 2 * n];
    l[0] = trend.alpha0 * (1.0 - e) + trend.beta0 * delta;
    l[1] = trend.beta0 * (1.0 - e);
    l[2] = e;
    for k in 0..n {
        let m = Complex64::from_polar(1.0, xi_k(k + 1) * delta) - e;
        let z = Complex64::new(trend.alpha[k], trend.beta[k]) * m;
        l[3 + k] = z.re;
        l[3 + n + k] = z.im;
    }
    l
}

/// Fit `s(t)` with one harmonic and `kappa` by conditional least squares.
pub fn estimate_trend(series: &TemperatureSeries) -> Result<TrendFit> {
    estimate_trend_harmonics(series, 1)
}

pub fn estimate_trend_harmonics(series: &TemperatureSeries, harmonics: usize) -> Result<TrendFit> {
    let p = 3 + 2 * harmonics;
    let n = series.len();
    if n < p + 1 {
        return Err(Error::InvalidInput(format!("trend fit needs at least {} observations, got {n}", p + 1)));
    }
    let delta = series.delta;
    let rows: Vec<Vec<f64>> = (0..n - 1).map(|i| regressors(series.time(i), series.values[i], harmonics)).collect();
    let y = &series.values[1..];
    let lambda = least_squares(&rows, y, "trend")?;

    let l2 = lambda[2];
    if !(l2 > 0.0 && l2 < 1.0) {
        return Err(Error::NonMeanRevertingTrend(l2));
    }
    let kappa = -l2.ln() / delta;
    let beta0 = lambda[1] / (1.0 - l2);
    let alpha0 = lambda[0] / (1.0 - l2) - lambda[1] * delta / (1.0 - l2).powi(2);
    let mut alpha = Vec::with_capacity(harmonics);
    let mut beta = Vec::with_capacity(harmonics);
    for k in 0..harmonics {
        let m = Complex64::from_polar(1.0, xi_k(k + 1) * delta) - l2;
        let z = Complex64::new(lambda[3 + k], lambda[3 + harmonics + k]) / m;
        alpha.push(z.re);
        beta.push(z.im);
    }
    let trend = TrendSeasonalParams::new(alpha0, beta0, alpha, beta)?;

    let residuals = rows.iter().zip(y).map(|(x, yi)| yi - dot(x, &lambda)).collect();
    let detrended = DetrendedSeries::from_series(series, &trend);
    Ok(TrendFit { trend, kappa, lambda, residuals, detrended })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

//! Index-model benchmark: yearly historical index, linear detrending, gamma
//! maximum likelihood and the expected payoff under the fitted law.

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::digamma;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::pricing::{compute_index, IndexSpec, PayoffSpec, StrikeRule};
use crate::quad::adaptive_simpson;
use crate::stats;
use crate::timeseries::TemperatureSeries;

/// Yearly index values of one calendar month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoricalIndexSample {
    pub years: Vec<i32>,
    pub index_values: Vec<f64>,
    /// Values with the fitted linear trend removed and re-added at `recenter_year`.
    pub detrended: Vec<f64>,
    pub trend_intercept: f64,
    pub trend_slope: f64,
    pub recenter_year: i32,
}

impl HistoricalIndexSample {
    /// Build the sample for `month` over `years`, recentering at the year after the last.
    pub fn from_series(
        series: &TemperatureSeries,
        spec: &IndexSpec,
        month: u32,
        years: RangeInclusive<i32>,
    ) -> Result<Self> {
        let target = *years.end() + 1;
        Self::from_series_recentered(series, spec, month, years, target)
    }

    pub fn from_series_recentered(
        series: &TemperatureSeries,
        spec: &IndexSpec,
        month: u32,
        years: RangeInclusive<i32>,
        recenter_year: i32,
    ) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidInput(format!("month must be 1..=12, got {month}")));
        }
        let mut ys = Vec::new();
        let mut vals = Vec::new();
        for year in years {
            let days: Vec<f64> = (0..series.len())
                .filter(|i| {
                    let d = series.date(*i);
                    d.year() == year && d.month() == month
                })
                .map(|i| series.values[i])
                .collect();
            let len = month_days(month);
            if days.len() != len {
                return Err(Error::InvalidInput(format!(
                    "series covers {} of {len} days of {year}-{month:02}",
                    days.len()
                )));
            }
            let window = IndexSpec { t1: 0.0, t2: (len - 1) as f64, ..*spec };
            ys.push(year);
            vals.push(compute_index(&days, &window)?);
        }
        Self::from_values(ys, vals, recenter_year)
    }

    pub fn from_values(years: Vec<i32>, index_values: Vec<f64>, recenter_year: i32) -> Result<Self> {
        if years.len() != index_values.len() || years.len() < 3 {
            return Err(Error::InvalidInput("need one index value per year and at least three years".into()));
        }
        let x: Vec<f64> = years.iter().map(|y| f64::from(*y)).collect();
        let (a, b) = stats::ols_line(&x, &index_values);
        let level = a + b * f64::from(recenter_year);
        let detrended = x.iter().zip(&index_values).map(|(t, v)| v - (a + b * t) + level).collect();
        Ok(Self { years, index_values, detrended, trend_intercept: a, trend_slope: b, recenter_year })
    }
}

/// Days per month of the 365-day calendar.
fn month_days(month: u32) -> usize {
    [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31][month as usize - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
}

/// `psi'(x)` by upward recurrence and the asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + x2 / 2.0 + (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0))) * x2 / x
}

/// Gamma maximum likelihood: Newton on `ln k - psi(k) = ln mean - mean(ln x)`,
/// then `scale = mean / k`.
pub fn fit_gamma(x: &[f64]) -> Result<GammaFit> {
    if x.len() < 2 {
        return Err(Error::InvalidInput("gamma fit needs at least two observations".into()));
    }
    if let Some(v) = x.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidInput(format!("gamma support violated by value {v}")));
    }
    let m = stats::mean(x);
    let s = m.ln() - x.iter().map(|v| v.ln()).sum::<f64>() / x.len() as f64;
    if !(s > 0.0) {
        return Err(Error::InvalidInput("observations are all equal; gamma fit is degenerate".into()));
    }
    let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..100 {
        let f = k.ln() - digamma(k) - s;
        let step = f / (1.0 / k - trigamma(k));
        let next = if k - step > 0.0 { k - step } else { 0.5 * k };
        let done = (next - k).abs() < 1e-14 * k;
        k = next;
        if done {
            break;
        }
    }
    Ok(GammaFit { shape: k, scale: m / k })
}

/// Per-observation log-likelihood score `(d/dk, d/dscale)`.
pub fn gamma_score(x: &[f64], fit: &GammaFit) -> (f64, f64) {
    let n = x.len() as f64;
    let mean_ln = x.iter().map(|v| v.ln()).sum::<f64>() / n;
    let mean = stats::mean(x);
    let GammaFit { shape: k, scale: th } = *fit;
    (mean_ln - th.ln() - digamma(k), -k / th + mean / (th * th))
}

/// `E[min((X - K)^+, L)] = int_K^{K+L} P(X > x) dx` for `X ~ Gamma`.
pub fn gamma_expected_payoff(fit: &GammaFit, strike: f64, cap: f64) -> Result<f64> {
    let law = Gamma::new(fit.shape, 1.0 / fit.scale).map_err(|e| Error::InvalidInput(e.to_string()))?;
    if cap == 0.0 {
        return Ok(0.0);
    }
    let lo = strike.max(0.0);
    let far = law.inverse_cdf(1.0 - 1e-13).max(lo);
    let hi = if cap.is_finite() { (strike + cap).min(far) } else { far };
    let intercept = (lo - strike).min(cap);
    if hi <= lo {
        return Ok(intercept);
    }
    let sf = |x: f64| law.sf(x);
    Ok(intercept + adaptive_simpson(&sf, lo, hi, 1e-10 * (1.0 + fit.shape * fit.scale)))
}

/// Result of the index-model benchmark for one contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexModelPrice {
    pub price: f64,
    pub strike: f64,
    pub fit: GammaFit,
    pub sample: HistoricalIndexSample,
    /// How the detrended values were re-levelled before fitting.
    pub recentering: String,
}

pub const MIN_YEARS: usize = 10;

/// Price `spec` on the contract `month` from its yearly history over `years`.
pub fn index_model_price(
    series: &TemperatureSeries,
    spec: &PayoffSpec,
    month: u32,
    years: RangeInclusive<i32>,
) -> Result<IndexModelPrice> {
    let sample = HistoricalIndexSample::from_series(series, &spec.index, month, years)?;
    price_sample(sample, spec)
}

/// Fit and price an already assembled yearly sample.
pub fn price_sample(sample: HistoricalIndexSample, spec: &PayoffSpec) -> Result<IndexModelPrice> {
    if sample.years.len() < MIN_YEARS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_YEARS} yearly observations, got {}",
            sample.years.len()
        )));
    }
    if let Some((year, value)) = sample.years.iter().zip(&sample.detrended).find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::GammaSupport { year: *year, value: *value });
    }
    let strike = match spec.strike_rule {
        StrikeRule::HistoricalQuantile(q) => stats::quantile(&sample.detrended, q),
        _ if spec.is_resolved() => spec.strike,
        _ => {
            return Err(Error::InvalidInput(
                "simulated-quantile strikes must be resolved before the index model".into(),
            ))
        }
    };
    let fit = fit_gamma(&sample.detrended)?;
    let price = spec.discount * gamma_expected_payoff(&fit, strike, spec.cap)?;
    let recentering = format!("linear trend removed and re-added at its {} level", sample.recenter_year);
    Ok(IndexModelPrice { price, strike, fit, sample, recentering })
}

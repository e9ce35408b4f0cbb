//! Deterministic trend/seasonality `s(t)` and seasonal variance level `sigma^2(t)`.
//!
//! Time is measured in days with a 365-day year (no leap correction), so the
//! base angular frequency is exactly `2*pi/365`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Base angular frequency of the yearly cycle, per day.
pub const XI: f64 = 2.0 * PI / 365.0;

/// Angular frequency of harmonic `k` (1-based).
#[inline]
pub fn xi_k(k: usize) -> f64 {
    XI * k as f64
}

/// `s(t) = alpha0 + beta0 t + sum_k alpha_k sin(xi_k t) + beta_k cos(xi_k t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeasonalParams {
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl TrendSeasonalParams {
    pub fn new(alpha0: f64, beta0: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::InvalidInput(format!(
                "trend harmonics mismatch: {} sine vs {} cosine coefficients",
                alpha.len(),
                beta.len()
            )));
        }
        Ok(Self { alpha0, beta0, alpha, beta })
    }

    /// Single-harmonic trend, the shape produced by the CLS trend fit.
    pub fn single(alpha0: f64, beta0: f64, alpha1: f64, beta1: f64) -> Self {
        Self { alpha0, beta0, alpha: vec![alpha1], beta: vec![beta1] }
    }

    pub fn zero() -> Self {
        Self::single(0.0, 0.0, 0.0, 0.0)
    }

    pub fn harmonics(&self) -> usize {
        self.alpha.len()
    }

    pub fn eval(&self, t: f64) -> f64 {
        eval_s(t, self)
    }
}

/// Evaluate the trend/seasonal function at day `t`.
pub fn eval_s(t: f64, p: &TrendSeasonalParams) -> f64 {
    let mut s = p.alpha0 + p.beta0 * t;
    for (k, (a, b)) in p.alpha.iter().zip(&p.beta).enumerate() {
        let w = xi_k(k + 1) * t;
        s += a * w.sin() + b * w.cos();
    }
    s
}

/// `sigma^2(t) = gamma0 + sum_k gamma_k sin(xi_k t) + delta_k cos(xi_k t)`, validated
/// to be nonnegative over one year sampled every quarter day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolSeasonalParams {
    pub gamma0: f64,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
}

/// Sample points used for the nonnegativity check: `0, 0.25, ..., 365`.
fn check_grid() -> impl Iterator<Item = f64> {
    (0..=1460).map(|i| i as f64 * 0.25)
}

impl VolSeasonalParams {
    pub fn new(gamma0: f64, gamma: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if gamma.len() != delta.len() {
            return Err(Error::InvalidInput(format!(
                "variance harmonics mismatch: {} sine vs {} cosine coefficients",
                gamma.len(),
                delta.len()
            )));
        }
        let p = Self { gamma0, gamma, delta };
        let (t, value) = p.min_on_grid();
        if value < 0.0 || !value.is_finite() {
            return Err(Error::NegativeVariance { t, value });
        }
        Ok(p)
    }

    /// Constant level `c >= 0` with no harmonics.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(c, Vec::new(), Vec::new())
    }

    /// Build from fitted coefficients, raising `gamma0` just enough to make the
    /// function nonnegative on the check grid. Returns the shift applied.
    pub fn new_projected(gamma0: f64, gamma: Vec<f64>, delta: Vec<f64>) -> Result<(Self, f64)> {
        if gamma.len() != delta.len() {
            return Err(Error::InvalidInput("variance harmonics mismatch".into()));
        }
        let raw = Self { gamma0, gamma, delta };
        let (_, min) = raw.min_on_grid();
        if !min.is_finite() {
            return Err(Error::InvalidInput("non-finite variance coefficients".into()));
        }
        let shift = if min < 0.0 { -min } else { 0.0 };
        Ok((Self { gamma0: raw.gamma0 + shift, ..raw }, shift))
    }

    pub fn harmonics(&self) -> usize {
        self.gamma.len()
    }

    pub fn eval(&self, t: f64) -> f64 {
        eval_sigma2(t, self)
    }

    fn min_on_grid(&self) -> (f64, f64) {
        check_grid().map(|t| (t, self.eval(t))).fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
    }
}

impl<'de> Deserialize<'de> for VolSeasonalParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            gamma0: f64,
            gamma: Vec<f64>,
            delta: Vec<f64>,
        }
        let r = Raw::deserialize(d)?;
        VolSeasonalParams::new(r.gamma0, r.gamma, r.delta).map_err(serde::de::Error::custom)
    }
}

/// Evaluate the seasonal variance level at day `t`.
pub fn eval_sigma2(t: f64, p: &VolSeasonalParams) -> f64 {
    let mut v = p.gamma0;
    for (k, (g, d)) in p.gamma.iter().zip(&p.delta).enumerate() {
        let w = xi_k(k + 1) * t;
        v += g * w.sin() + d * w.cos();
    }
    v
}

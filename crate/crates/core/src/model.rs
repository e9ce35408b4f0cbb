//! Full parameter set of the temperature model
//!
//! ```text
//! T_t      = s(t) + X_t
//! dX_t     = -kappa X_t dt + sqrt(zeta_t) (rho dW_t + sqrt(1 - rho^2) dZ_t)
//! dzeta_t  = -K (zeta_t - sigma^2(t)) dt + eta sqrt(zeta_t) dW_t
//! ```
//!
//! and its flat JSON document.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::seasonal::{TrendSeasonalParams, VolSeasonalParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub trend: TrendSeasonalParams,
    /// Mean reversion of the detrended temperature, 1/day.
    pub kappa: f64,
    pub vol_seasonal: VolSeasonalParams,
    /// Mean reversion of the volatility, 1/day.
    pub big_k: f64,
    /// Squared vol-of-vol.
    pub eta2: f64,
    pub rho: f64,
}

impl ModelParams {
    pub fn new(
        trend: TrendSeasonalParams,
        kappa: f64,
        vol_seasonal: VolSeasonalParams,
        big_k: f64,
        eta2: f64,
        rho: f64,
    ) -> Result<Self> {
        let p = Self { trend, kappa, vol_seasonal, big_k, eta2, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::InvalidInput(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.big_k.is_finite() && self.big_k > 0.0) {
            return Err(Error::InvalidInput(format!("K must be > 0, got {}", self.big_k)));
        }
        if !(self.eta2.is_finite() && self.eta2 >= 0.0) {
            return Err(Error::InvalidInput(format!("eta2 must be >= 0, got {}", self.eta2)));
        }
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::InvalidInput(format!("rho must lie in [-1, 1], got {}", self.rho)));
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        self.eta2.sqrt()
    }

    pub fn s(&self, t: f64) -> f64 {
        self.trend.eval(t)
    }

    pub fn sigma2(&self, t: f64) -> f64 {
        self.vol_seasonal.eval(t)
    }

    /// Reference calibration for Paris daily average temperatures, 1980-2020,
    /// with two variance harmonics and `rho` set to zero.
    pub fn paris() -> Self {
        Self {
            trend: TrendSeasonalParams::single(10.868, 0.00013, -3.540, -6.993),
            kappa: 0.230,
            vol_seasonal: VolSeasonalParams { gamma0: 5.603, gamma: vec![0.201, -0.266], delta: vec![0.358, 0.459] },
            big_k: 0.396,
            eta2: 1.043,
            rho: 0.0,
        }
    }

    /// Gaussian Ornstein-Uhlenbeck counterpart: same trend and seasonal
    /// variance, no vol-of-vol.
    pub fn ou_counterpart(&self) -> Self {
        Self { eta2: 0.0, rho: 0.0, ..self.clone() }
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..self.clone() }
    }

    pub fn with_big_k(&self, big_k: f64) -> Self {
        Self { big_k, ..self.clone() }
    }

    pub fn with_eta2(&self, eta2: f64) -> Self {
        Self { eta2, ..self.clone() }
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        Self { rho, ..self.clone() }
    }
}

/// Flat parameter document as read and written by the command line tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma0: f64,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
    pub kappa: f64,
    #[serde(rename = "K")]
    pub big_k: f64,
    pub eta2: f64,
    pub rho: f64,
    #[serde(rename = "Q")]
    pub q: usize,
}

impl ParamsDocument {
    pub fn from_params(p: &ModelParams, q: usize) -> Self {
        Self {
            alpha0: p.trend.alpha0,
            beta0: p.trend.beta0,
            alpha: p.trend.alpha.clone(),
            beta: p.trend.beta.clone(),
            gamma0: p.vol_seasonal.gamma0,
            gamma: p.vol_seasonal.gamma.clone(),
            delta: p.vol_seasonal.delta.clone(),
            kappa: p.kappa,
            big_k: p.big_k,
            eta2: p.eta2,
            rho: p.rho,
            q,
        }
    }

    pub fn to_params(&self) -> Result<ModelParams> {
        ModelParams::new(
            TrendSeasonalParams::new(self.alpha0, self.beta0, self.alpha.clone(), self.beta.clone())?,
            self.kappa,
            VolSeasonalParams::new(self.gamma0, self.gamma.clone(), self.delta.clone())?,
            self.big_k,
            self.eta2,
            self.rho,
        )
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

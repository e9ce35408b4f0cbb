//! Degree-day indices, capped call payoffs and their valuation by Monte Carlo,
//! Fourier inversion and control variates.

mod control;
mod fourier;

pub use control::{control_variate_price, price_with_control_variate, ControlVariateResult};
pub use fourier::{
    daily_hdd_expectation, fft_cdf, hdd_option_via_cat, invert_cdf, put_expectation, CdfGrid, GridConfig,
};

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulation::{simulate_paths, PathSet};
use crate::stats;

/// EU convention for the degree-day base temperature, in °C.
pub const DEFAULT_BASE_TEMP: f64 = 15.5;
pub const DEFAULT_LEVEL: f64 = 0.95;
/// Fewer samples make the tail metrics meaningless.
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Hdd,
    Cdd,
    Cat,
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexKind::Hdd => "hdd",
            IndexKind::Cdd => "cdd",
            IndexKind::Cat => "cat",
        })
    }
}

/// Index over the risk period `t1..=t2` (model days, inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSpec {
    pub kind: IndexKind,
    pub base_temp: f64,
    pub t1: f64,
    pub t2: f64,
}

impl IndexSpec {
    pub fn new(kind: IndexKind, base_temp: f64, t1: f64, t2: f64) -> Result<Self> {
        if !(t1 <= t2) || (t2 - t1).fract().abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("risk period must be whole days with t1 <= t2, got [{t1}, {t2}]")));
        }
        Ok(Self { kind, base_temp, t1, t2 })
    }

    pub fn hdd(t1: f64, t2: f64) -> Result<Self> {
        Self::new(IndexKind::Hdd, DEFAULT_BASE_TEMP, t1, t2)
    }

    /// Number of days `t2 - t1 + 1`.
    pub fn days(&self) -> usize {
        (self.t2 - self.t1).round() as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum StrikeRule {
    Fixed(f64),
    /// Quantile of the simulated index distribution.
    SimulatedQuantile(f64),
    /// Quantile of the yearly historical index sample.
    HistoricalQuantile(f64),
}

impl StrikeRule {
    /// Parse `quantile:0.9`, `historical:0.9` or a plain number.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse strike rule `{s}`"));
        let rule = if let Some(q) = s.strip_prefix("quantile:") {
            StrikeRule::SimulatedQuantile(q.parse().map_err(|_| bad())?)
        } else if let Some(q) = s.strip_prefix("historical:") {
            StrikeRule::HistoricalQuantile(q.parse().map_err(|_| bad())?)
        } else {
            StrikeRule::Fixed(s.parse().map_err(|_| bad())?)
        };
        if let StrikeRule::SimulatedQuantile(q) | StrikeRule::HistoricalQuantile(q) = rule {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidInput(format!("quantile must lie in (0, 1), got {q}")));
            }
        }
        Ok(rule)
    }
}

/// `min((index - strike)^+, cap)` paid at the end of the period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub index: IndexSpec,
    pub strike_rule: StrikeRule,
    /// Strike in index units; meaningful once the rule has been resolved.
    pub strike: f64,
    /// Cap in index units, `f64::INFINITY` for none.
    pub cap: f64,
    /// Discount factor applied to the mean; 1 by convention.
    pub discount: f64,
}

impl PayoffSpec {
    pub fn new(index: IndexSpec, strike_rule: StrikeRule, cap: f64) -> Result<Self> {
        if !(cap >= 0.0) {
            return Err(Error::InvalidInput(format!("cap must be >= 0, got {cap}")));
        }
        let strike = if let StrikeRule::Fixed(k) = strike_rule { k } else { f64::NAN };
        Ok(Self { index, strike_rule, strike, cap, discount: 1.0 })
    }

    pub fn fixed(index: IndexSpec, strike: f64, cap: f64) -> Result<Self> {
        Self::new(index, StrikeRule::Fixed(strike), cap)
    }

    pub fn is_resolved(&self) -> bool {
        self.strike.is_finite()
    }

    /// Copy with the strike pinned to `strike`.
    pub fn with_strike(&self, strike: f64) -> Self {
        Self { strike, strike_rule: StrikeRule::Fixed(strike), ..*self }
    }

    /// Resolve quantile rules against simulated and, when given, historical index samples.
    pub fn resolve(&self, simulated: &[f64], historical: Option<&[f64]>) -> Result<Self> {
        match self.strike_rule {
            StrikeRule::Fixed(k) => Ok(self.with_strike(k)),
            StrikeRule::SimulatedQuantile(q) => Ok(self.with_strike(stats::quantile(simulated, q))),
            StrikeRule::HistoricalQuantile(q) => match historical {
                Some(h) if !h.is_empty() => Ok(self.with_strike(stats::quantile(h, q))),
                _ => Err(Error::InvalidInput("historical strike rule needs the historical index sample".into())),
            },
        }
    }
}

/// Index value of a daily path covering exactly `t1..=t2`.
pub fn compute_index(values: &[f64], spec: &IndexSpec) -> Result<f64> {
    if values.len() != spec.days() {
        return Err(Error::InvalidInput(format!(
            "path has {} daily values but the risk period has {} days",
            values.len(),
            spec.days()
        )));
    }
    let tb = spec.base_temp;
    Ok(match spec.kind {
        IndexKind::Hdd => values.iter().map(|t| (tb - t).max(0.0)).sum(),
        IndexKind::Cdd => values.iter().map(|t| (t - tb).max(0.0)).sum(),
        IndexKind::Cat => values.iter().sum(),
    })
}

pub fn payoff(index: f64, spec: &PayoffSpec) -> f64 {
    (index - spec.strike).max(0.0).min(spec.cap)
}

/// Daily temperatures of path `p` on the days `t1..=t2`.
pub fn daily_values(paths: &PathSet, p: usize, spec: &IndexSpec) -> Result<Vec<f64>> {
    let row = paths.temps(p);
    (0..spec.days())
        .map(|d| {
            let t = spec.t1 + d as f64;
            paths.step_of(t).map(|k| row[k]).ok_or_else(|| Error::InvalidInput(format!("paths do not cover day {t}")))
        })
        .collect()
}

/// Index value on every path.
pub fn index_samples(paths: &PathSet, spec: &IndexSpec) -> Result<Vec<f64>> {
    (0..paths.n_paths).map(|p| compute_index(&daily_values(paths, p, spec)?, spec)).collect()
}

/// Summary of an empirical payoff distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceDistribution {
    pub mean: f64,
    pub ci95_halfwidth: f64,
    pub variance: f64,
    /// Empirical payoff quantile at the risk level (95% by default).
    pub var95: f64,
    /// Mean of the payoffs at or above `var95`.
    pub cvar95: f64,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_samples: Option<Vec<f64>>,
}

impl PriceDistribution {
    pub fn from_samples(samples: &[f64], level: f64) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "{} samples is too few for risk metrics (need >= {MIN_SAMPLES})",
                samples.len()
            )));
        }
        let n = samples.len();
        let mean = stats::mean(samples);
        let variance = stats::variance(samples);
        let (var, cvar) = tail_metrics(samples, level);
        Ok(Self {
            mean,
            ci95_halfwidth: 1.96 * (variance / n as f64).sqrt(),
            variance,
            var95: var,
            cvar95: cvar,
            n_samples: n,
            payoff_samples: None,
        })
    }

    pub fn with_samples(mut self, samples: Vec<f64>) -> Self {
        self.payoff_samples = Some(samples);
        self
    }
}

/// `(VaR, CVaR)` at `level`: the order statistic at `ceil(level n) - 1` and the
/// mean of all samples at or above it.
pub fn tail_metrics(samples: &[f64], level: f64) -> (f64, f64) {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let var = stats::quantile_sorted(&v, level);
    let start = v.partition_point(|x| *x < var);
    let cvar = stats::mean(&v[start..]);
    (var, cvar)
}

/// Plain Monte-Carlo valuation. Quantile strikes are resolved against the
/// simulated index distribution of the same paths.
pub fn mc_price(paths: &PathSet, spec: &PayoffSpec) -> Result<(PriceDistribution, PayoffSpec)> {
    mc_price_at(paths, spec, DEFAULT_LEVEL)
}

pub fn mc_price_at(paths: &PathSet, spec: &PayoffSpec, level: f64) -> Result<(PriceDistribution, PayoffSpec)> {
    if paths.n_paths < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("need at least {MIN_SAMPLES} paths, got {}", paths.n_paths)));
    }
    let indices = index_samples(paths, &spec.index)?;
    let spec = if spec.is_resolved() { *spec } else { spec.resolve(&indices, None)? };
    let pays: Vec<f64> = indices.iter().map(|i| spec.discount * payoff(*i, &spec)).collect();
    Ok((PriceDistribution::from_samples(&pays, level)?.with_samples(pays), spec))
}

/// Where Monte-Carlo paths start and how many to draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Pricing day.
    pub t0: f64,
    /// `(T~_{t0}, zeta_{t0})`; `None` means `(0, sigma^2(t0))`.
    pub state: Option<(f64, f64)>,
    pub n_paths: usize,
    pub seed: u64,
    /// Simulation step in days; must divide one day.
    pub delta: f64,
    pub level: f64,
}

impl McConfig {
    pub fn new(t0: f64, n_paths: usize, seed: u64) -> Self {
        Self { t0, state: None, n_paths, seed, delta: 1.0, level: DEFAULT_LEVEL }
    }

    pub fn state(&self, params: &ModelParams) -> (f64, f64) {
        self.state.unwrap_or((0.0, params.sigma2(self.t0)))
    }

    /// Simulate from `t0` to the end of the risk period.
    pub fn simulate(&self, params: &ModelParams, index: &IndexSpec) -> Result<PathSet> {
        if index.t1 < self.t0 {
            return Err(Error::InvalidInput(format!(
                "risk period starts at {} before pricing day {}",
                index.t1, self.t0
            )));
        }
        simulate_paths(params, self.state(params), self.t0, index.t2 - self.t0, self.delta, self.n_paths, self.seed)
    }
}

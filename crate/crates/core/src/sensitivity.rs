//! Parameter sweeps of Monte-Carlo prices under common random numbers.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::pricing::{index_samples, mc_price_at, McConfig, PayoffSpec, PriceDistribution, StrikeRule};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Multipliers of `kappa`.
    Kappa,
    /// Multipliers of `eta^2`.
    Eta2,
    /// Multipliers of `K`.
    BigK,
    /// Lead times `t1 - t0` in days.
    LeadTime,
    /// Strike quantile levels of the base index distribution.
    Moneyness,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Kappa => "kappa",
            SweepAxis::Eta2 => "eta2",
            SweepAxis::BigK => "K",
            SweepAxis::LeadTime => "lead_time",
            SweepAxis::Moneyness => "moneyness",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kappa" => SweepAxis::Kappa,
            "eta2" => SweepAxis::Eta2,
            "K" | "k" | "big_k" => SweepAxis::BigK,
            "lead_time" | "lead" => SweepAxis::LeadTime,
            "moneyness" => SweepAxis::Moneyness,
            _ => return Err(Error::InvalidInput(format!("unknown sweep axis `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(x: &[f64], bins: usize) -> Self {
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bins = bins.max(1);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0; bins];
        for v in x {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
        Self { edges: (0..=bins).map(|i| lo + i as f64 * width).collect(), counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub strike: f64,
    pub distribution: PriceDistribution,
    /// Histogram of the simulated index.
    pub histogram: Histogram,
}

pub const HISTOGRAM_BINS: usize = 60;

/// Lead-time sweeps start from `T~ = 2 sigma(t0)`, `zeta = sigma(t0)` unless
/// the configuration fixes the state.
fn lead_state(params: &ModelParams, mc: &McConfig, t0: f64) -> (f64, f64) {
    mc.state.unwrap_or_else(|| {
        let sd = params.sigma2(t0).sqrt();
        (2.0 * sd, sd)
    })
}

/// Price `spec` at every point of `axis`. The strike is pinned at the base
/// configuration's quantile (except on the moneyness axis) and every point
/// reuses the per-path random streams of `mc.seed`.
pub fn sweep(
    base: &ModelParams,
    axis: SweepAxis,
    values: &[f64],
    spec: &PayoffSpec,
    mc: &McConfig,
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one value".into()));
    }
    let base_paths = match axis {
        SweepAxis::LeadTime => {
            McConfig { state: Some(lead_state(base, mc, mc.t0)), ..*mc }.simulate(base, &spec.index)?
        }
        _ => mc.simulate(base, &spec.index)?,
    };
    let base_index = index_samples(&base_paths, &spec.index)?;
    let base_spec = spec.resolve(&base_index, None)?;

    values
        .iter()
        .map(|&v| {
            let (params, cfg, point_spec) = match axis {
                SweepAxis::Kappa => (base.with_kappa(base.kappa * v), *mc, base_spec),
                SweepAxis::Eta2 => (base.with_eta2(base.eta2 * v), *mc, base_spec),
                SweepAxis::BigK => (base.with_big_k(base.big_k * v), *mc, base_spec),
                SweepAxis::LeadTime => {
                    if !(v >= 0.0) || v.fract() != 0.0 {
                        return Err(Error::InvalidInput(format!("lead time must be a whole number of days, got {v}")));
                    }
                    let t0 = spec.index.t1 - v;
                    (base.clone(), McConfig { t0, state: Some(lead_state(base, mc, t0)), ..*mc }, base_spec)
                }
                SweepAxis::Moneyness => {
                    if !(v > 0.0 && v < 1.0) {
                        return Err(Error::InvalidInput(format!(
                            "moneyness must be a quantile level in (0, 1), got {v}"
                        )));
                    }
                    (base.clone(), *mc, spec.with_strike(stats::quantile(&base_index, v)))
                }
            };
            params.validate()?;
            let paths = cfg.simulate(&params, &spec.index)?;
            let (distribution, resolved) = mc_price_at(&paths, &point_spec, cfg.level)?;
            let histogram = Histogram::new(&index_samples(&paths, &spec.index)?, HISTOGRAM_BINS);
            Ok(SweepPoint { axis_value: v, strike: resolved.strike, distribution: strip(distribution), histogram })
        })
        .collect()
}

fn strip(mut d: PriceDistribution) -> PriceDistribution {
    d.payoff_samples = None;
    d
}

/// Default strike rule of the sweeps: 90% quantile of the base simulation.
pub fn default_strike_rule() -> StrikeRule {
    StrikeRule::SimulatedQuantile(0.9)
}

pub fn write_sweep_csv(mut w: impl Write, points: &[SweepPoint]) -> Result<()> {
    writeln!(w, "axis_value,strike,mean,ci95,var95,cvar95")?;
    for p in points {
        let d = &p.distribution;
        writeln!(w, "{},{},{},{},{},{}", p.axis_value, p.strike, d.mean, d.ci95_halfwidth, d.var95, d.cvar95)?;
    }
    Ok(())
}

pub fn write_histogram_csv(mut w: impl Write, h: &Histogram) -> Result<()> {
    writeln!(w, "lower,upper,count")?;
    for (i, c) in h.counts.iter().enumerate() {
        writeln!(w, "{},{},{}", h.edges[i], h.edges[i + 1], c)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::{mc_price, IndexSpec};

    fn jan_spec() -> PayoffSpec {
        PayoffSpec::new(IndexSpec::hdd(14_235.0, 14_265.0).unwrap(), default_strike_rule(), f64::INFINITY).unwrap()
    }

    #[test]
    fn singleton_sweep_equals_price() {
        let p = ModelParams::paris();
        let mc = McConfig::new(14_205.0, 500, 5);
        let pts = sweep(&p, SweepAxis::Kappa, &[1.0], &jan_spec(), &mc).unwrap();
        let (d, resolved) = mc_price(&mc.simulate(&p, &jan_spec().index).unwrap(), &jan_spec()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].strike, resolved.strike);
        assert_eq!(pts[0].distribution.mean, d.mean);
        assert_eq!(pts[0].distribution.cvar95, d.cvar95);
        assert_eq!(pts[0].histogram.counts.iter().sum::<usize>(), 500);
    }

    #[test]
    fn sweeps_are_reproducible() {
        let p = ModelParams::paris();
        let mc = McConfig::new(14_205.0, 300, 8);
        let a = sweep(&p, SweepAxis::Eta2, &[1.0, 5.0], &jan_spec(), &mc).unwrap();
        let b = sweep(&p, SweepAxis::Eta2, &[1.0, 5.0], &jan_spec(), &mc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn moneyness_lowers_price_with_level() {
        let p = ModelParams::paris();
        let mc = McConfig::new(14_205.0, 400, 2);
        let pts = sweep(&p, SweepAxis::Moneyness, &[0.7, 0.8, 0.9], &jan_spec(), &mc).unwrap();
        assert!(pts[0].strike < pts[1].strike && pts[1].strike < pts[2].strike);
        assert!(pts[0].distribution.mean >= pts[1].distribution.mean);
        assert!(pts[1].distribution.mean >= pts[2].distribution.mean);
    }

    #[test]
    fn lead_time_axis_moves_start() {
        let p = ModelParams::paris();
        let mc = McConfig::new(14_205.0, 200, 2);
        let pts = sweep(&p, SweepAxis::LeadTime, &[0.0, 10.0, 60.0], &jan_spec(), &mc).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(sweep(&p, SweepAxis::LeadTime, &[1.5], &jan_spec(), &mc).is_err());
    }

    #[test]
    fn rejects_empty_and_parses_axes() {
        let p = ModelParams::paris();
        let mc = McConfig::new(14_205.0, 200, 2);
        assert!(sweep(&p, SweepAxis::Kappa, &[], &jan_spec(), &mc).is_err());
        assert_eq!("K".parse::<SweepAxis>().unwrap(), SweepAxis::BigK);
        assert!("x".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn histogram_counts_everything() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64).sqrt()).collect();
        let h = Histogram::new(&x, 7);
        assert_eq!(h.counts.iter().sum::<usize>(), 1000);
        assert_eq!(h.edges.len(), 8);
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &h).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 8);
    }
}

//! Monte Carlo with the Fourier-priced CAT put as control variate.

use serde::{Deserialize, Serialize};

use super::{compute_index, daily_values, payoff, GridConfig, IndexKind, McConfig, PayoffSpec, PriceDistribution};
use super::{hdd_option_via_cat, tail_metrics};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulation::PathSet;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlVariateResult {
    /// Mean, variance and CI of the adjusted estimator; VaR/CVaR of the raw payoff.
    pub distribution: PriceDistribution,
    pub lambda_star: f64,
    /// `Var(payoff) / Var(payoff - lambda* control)`.
    pub variance_ratio: f64,
    pub correlation: f64,
    pub fft_leg: f64,
    /// Plain Monte Carlo was used because the control never moved.
    pub fallback: bool,
}

/// `price = lambda* fft_leg + mean(payoff - lambda* control)` where the control
/// is the uncapped put `((t2 - t1 + 1) T_b - K - CAT)^+` and `fft_leg` its
/// expectation. `lambda*` is estimated on the same paths.
pub fn control_variate_price(paths: &PathSet, spec: &PayoffSpec, fft_leg: f64) -> Result<ControlVariateResult> {
    control_variate_price_at(paths, spec, fft_leg, super::DEFAULT_LEVEL)
}

pub fn control_variate_price_at(
    paths: &PathSet,
    spec: &PayoffSpec,
    fft_leg: f64,
    level: f64,
) -> Result<ControlVariateResult> {
    if spec.index.kind != IndexKind::Hdd {
        return Err(Error::Unsupported(format!("control variate is defined for HDD calls, not {}", spec.index.kind)));
    }
    if !spec.is_resolved() {
        return Err(Error::InvalidInput("strike must be resolved before pricing".into()));
    }
    if paths.n_paths < super::MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("need at least {} paths, got {}", super::MIN_SAMPLES, paths.n_paths)));
    }
    let effective = spec.index.days() as f64 * spec.index.base_temp - spec.strike;
    let cat_spec = super::IndexSpec { kind: IndexKind::Cat, ..spec.index };
    let mut pays = Vec::with_capacity(paths.n_paths);
    let mut controls = Vec::with_capacity(paths.n_paths);
    for p in 0..paths.n_paths {
        let days = daily_values(paths, p, &spec.index)?;
        pays.push(spec.discount * payoff(compute_index(&days, &spec.index)?, spec));
        controls.push(spec.discount * (effective - compute_index(&days, &cat_spec)?).max(0.0));
    }
    combine(&pays, &controls, fft_leg, level)
}

fn combine(pays: &[f64], controls: &[f64], fft_leg: f64, level: f64) -> Result<ControlVariateResult> {
    let var_c = stats::variance(controls);
    let var_y = stats::variance(pays);
    if var_c == 0.0 {
        log::warn!("control variate has zero variance; falling back to plain Monte Carlo");
        let distribution = PriceDistribution::from_samples(pays, level)?.with_samples(pays.to_vec());
        return Ok(ControlVariateResult {
            distribution,
            lambda_star: 0.0,
            variance_ratio: 1.0,
            correlation: 0.0,
            fft_leg,
            fallback: true,
        });
    }
    let lambda = stats::covariance(pays, controls) / var_c;
    let adjusted: Vec<f64> = pays.iter().zip(controls).map(|(y, c)| y - lambda * (c - fft_leg)).collect();
    let mut distribution = PriceDistribution::from_samples(&adjusted, level)?;
    let (var, cvar) = tail_metrics(pays, level);
    distribution.var95 = var;
    distribution.cvar95 = cvar;
    distribution.payoff_samples = Some(pays.to_vec());
    let residual = stats::variance(&adjusted);
    let variance_ratio = if residual > 0.0 { var_y / residual } else { f64::INFINITY };
    let correlation = if var_y > 0.0 { stats::correlation(pays, controls) } else { 0.0 };
    Ok(ControlVariateResult {
        distribution,
        lambda_star: lambda,
        variance_ratio,
        correlation,
        fft_leg,
        fallback: false,
    })
}

/// Simulate, resolve the strike on the simulated HDD distribution, price the
/// control leg by Fourier inversion and combine.
pub fn price_with_control_variate(
    params: &ModelParams,
    spec: &PayoffSpec,
    mc: &McConfig,
    grid: &GridConfig,
) -> Result<(ControlVariateResult, PayoffSpec)> {
    let paths = mc.simulate(params, &spec.index)?;
    let spec =
        if spec.is_resolved() { *spec } else { spec.resolve(&super::index_samples(&paths, &spec.index)?, None)? };
    let uncapped = PayoffSpec { cap: f64::INFINITY, ..spec };
    let fft_leg = hdd_option_via_cat(&uncapped, mc.t0, mc.state(params), params, grid)?;
    Ok((control_variate_price_at(&paths, &spec, fft_leg, mc.level)?, spec))
}

//! Gil-Pelaez inversion on an FFT grid and the put-style expectations built on it.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::{IndexKind, PayoffSpec};
use crate::charfn::{charfn_cat, charfn_temperature, DEFAULT_DELTA};
use crate::error::{Error, Result};
use crate::model::ModelParams;

const I: Complex64 = Complex64::new(0.0, 1.0);
/// Clamp magnitude above which the grid is reported as too coarse.
const CLAMP_WARN: f64 = 0.01;

/// CDF samples on `x_k = x0 + k delta_x`, `k = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfGrid {
    pub x0: f64,
    pub delta_x: f64,
    pub cdf: Vec<f64>,
    /// Largest distance any raw value was moved to land in `[0, 1]`.
    pub clamp: f64,
}

impl CdfGrid {
    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.delta_x
    }

    pub fn x_last(&self) -> f64 {
        self.x(self.cdf.len() - 1)
    }

    /// Linear interpolation; 0 below the grid and 1 above it.
    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.x0) / self.delta_x;
        if pos <= 0.0 {
            return if pos == 0.0 { self.cdf[0] } else { 0.0 };
        }
        let k = pos.floor() as usize;
        if k + 1 >= self.cdf.len() {
            return if k + 1 == self.cdf.len() && pos == k as f64 { self.cdf[k] } else { 1.0 };
        }
        let w = pos - k as f64;
        self.cdf[k] * (1.0 - w) + self.cdf[k + 1] * w
    }

    /// `int_{-inf}^{x_last} P(X <= x) dx = E[(x_last - X)^+]` with the
    /// half-weight terminal node.
    pub fn put_integral(&self) -> f64 {
        let n = self.cdf.len();
        self.delta_x * (self.cdf[..n - 1].iter().sum::<f64>() + 0.5 * self.cdf[n - 1])
    }

    /// Largest drop between consecutive nodes.
    pub fn max_decrease(&self) -> f64 {
        self.cdf.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

/// Invert the characteristic function `phi` of `X` on the grid ending at
/// `x_last` (`x_k = x_last + (k - N + 1) delta_x`), with
/// `delta_v = 2 pi / (N delta_x)`. The result is exact up to truncation as
/// long as all mass lies within `N delta_x` of every node.
pub fn fft_cdf(phi: impl Fn(f64) -> Complex64 + Sync, x_last: f64, n: usize, delta_x: f64) -> Result<CdfGrid> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!("FFT size must be a power of two, got {n}")));
    }
    if !(delta_x > 0.0) {
        return Err(Error::InvalidInput(format!("grid step must be positive, got {delta_x}")));
    }
    let delta_v = 2.0 * PI / (n as f64 * delta_x);
    let x0 = x_last - (n - 1) as f64 * delta_x;
    let mut buf: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let v = (j as f64 + 0.5) * delta_v;
            (-I * v * x0).exp() * phi(v) / (I * v)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut clamp = 0.0f64;
    let cdf = buf
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let raw = 0.5 - delta_v / PI * ((-I * (0.5 * delta_v * k as f64 * delta_x)).exp() * f).re;
            let c = raw.clamp(0.0, 1.0);
            clamp = clamp.max((raw - c).abs());
            c
        })
        .collect();
    if clamp > CLAMP_WARN {
        log::warn!("grid too coarse: CDF clamp magnitude {clamp:.3e}");
    }
    Ok(CdfGrid { x0, delta_x, cdf, clamp })
}

/// Grid choices for the pricing inversions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    /// Lower bound for the grid step; `None` means `sqrt(2 pi / N)`.
    pub delta_x: Option<f64>,
    /// Half-width of the retained support in standard deviations.
    pub tail_sd: f64,
    /// Riccati step in days.
    pub riccati_delta: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 1 << 14, delta_x: None, tail_sd: 12.0, riccati_delta: DEFAULT_DELTA }
    }
}

impl GridConfig {
    fn min_step(&self) -> f64 {
        self.delta_x.unwrap_or_else(|| (2.0 * PI / self.n as f64).sqrt())
    }
}

/// Mean and standard deviation from central differences of `log phi` at 0.
fn moments(phi: &impl Fn(f64) -> Complex64) -> (f64, f64) {
    let at = |h: f64| {
        let (p, m) = (phi(h).ln(), phi(-h).ln());
        ((p - m).im / (2.0 * h), (-(p + m).re / (h * h)).max(0.0).sqrt())
    };
    let (_, sd) = at(1e-4);
    if sd > 0.0 {
        at(0.01 / sd)
    } else {
        at(1e-4)
    }
}

/// Inverted CDF of `X` over `mean +- tail_sd sd`. The grid step is widened
/// when needed so the period covers twice the retained support.
pub fn invert_cdf(phi: impl Fn(f64) -> Complex64 + Sync, cfg: &GridConfig) -> Result<CdfGrid> {
    let (mean, sd) = moments(&phi);
    invert_around(&phi, mean, sd, mean + cfg.tail_sd * sd, cfg)
}

fn invert_around(
    phi: &(impl Fn(f64) -> Complex64 + Sync),
    mean: f64,
    sd: f64,
    x_last: f64,
    cfg: &GridConfig,
) -> Result<CdfGrid> {
    if sd <= 0.0 {
        return Err(Error::InvalidInput("distribution is degenerate".into()));
    }
    let half = cfg.tail_sd * sd;
    let delta_x = cfg.min_step().max(2.1 * half / cfg.n as f64);
    let mut grid = fft_cdf(phi, x_last, cfg.n, delta_x)?;
    // Nodes below the retained support are aliased by the upper tail.
    let lo = mean - half;
    for k in 0..grid.len() {
        if grid.x(k) >= lo {
            break;
        }
        grid.cdf[k] = 0.0;
    }
    Ok(grid)
}

/// `E[(a - X)^+]` from the characteristic function of `X`.
pub fn put_expectation(phi: impl Fn(f64) -> Complex64 + Sync, a: f64, cfg: &GridConfig) -> Result<f64> {
    let (mean, sd) = moments(&phi);
    if sd == 0.0 {
        return Ok((a - mean).max(0.0));
    }
    let half = cfg.tail_sd * sd;
    if a <= mean - half {
        return Ok(0.0);
    }
    let top = a.min(mean + half);
    let grid = invert_around(&phi, mean, sd, top, cfg)?;
    Ok(grid.put_integral() + (a - top))
}

/// `E[(T_b - T_t)^+]` seen from `t0` in state `(T~_{t0}, zeta_{t0})`.
pub fn daily_hdd_expectation(
    t: f64,
    t0: f64,
    state: (f64, f64),
    params: &ModelParams,
    base_temp: f64,
    cfg: &GridConfig,
) -> Result<f64> {
    if t < t0 {
        return Err(Error::InvalidInput(format!("target day {t} precedes pricing day {t0}")));
    }
    params.validate()?;
    if params.rho != 0.0 {
        return Err(Error::Unsupported("Fourier pricing assumes rho = 0".into()));
    }
    let phi = |u: f64| charfn_temperature(u, t0, t, state, params, cfg.riccati_delta).expect("validated inputs");
    put_expectation(phi, base_temp - params.s(t), cfg)
}

/// Winter approximation `E[((t2 - t1 + 1) T_b - K - CAT)^+]` of the HDD call,
/// capped as the difference of two CAT puts when the cap is finite.
pub fn hdd_option_via_cat(
    spec: &PayoffSpec,
    t0: f64,
    state: (f64, f64),
    params: &ModelParams,
    cfg: &GridConfig,
) -> Result<f64> {
    if spec.index.kind != IndexKind::Hdd {
        return Err(Error::Unsupported(format!("CAT approximation prices HDD calls, not {}", spec.index.kind)));
    }
    if !spec.is_resolved() {
        return Err(Error::InvalidInput("strike must be resolved before Fourier pricing".into()));
    }
    params.validate()?;
    if params.rho != 0.0 {
        return Err(Error::Unsupported("Fourier pricing assumes rho = 0".into()));
    }
    let idx = &spec.index;
    // Validate the window once so the closure can unwrap.
    charfn_cat(t0, idx.t1, idx.t2, 0.0, state, params, cfg.riccati_delta)?;
    let phi = |u: f64| charfn_cat(t0, idx.t1, idx.t2, u, state, params, cfg.riccati_delta).expect("validated inputs");
    let a = idx.days() as f64 * idx.base_temp - spec.strike;
    let mut value = put_expectation(phi, a, cfg)?;
    if spec.cap.is_finite() {
        value -= put_expectation(phi, a - spec.cap, cfg)?;
    }
    Ok(spec.discount * value.max(0.0))
}

//! Realized volatility and the CLS estimators of `K`, `sigma^2(.)`, `eta^2` and `rho`.

use num_complex::Complex64;

use super::psi;
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::model::ModelParams;
use crate::seasonal::{xi_k, VolSeasonalParams};
use crate::timeseries::{DetrendedSeries, TemperatureSeries};

/// Window-averaged, bias-corrected squared innovations of `T~`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedVolSeries {
    /// Window length in observations.
    pub q: usize,
    /// Inner sampling step in days.
    pub delta: f64,
    pub values: Vec<f64>,
    /// Window start times `i Q delta`.
    pub times: Vec<f64>,
}

impl RealizedVolSeries {
    pub fn new(q: usize, delta: f64, values: Vec<f64>) -> Result<Self> {
        if q == 0 || !(delta > 0.0) {
            return Err(Error::InvalidInput("window and step must be positive".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput("realized volatilities must be nonnegative".into()));
        }
        let h = q as f64 * delta;
        let times = (0..values.len()).map(|i| i as f64 * h).collect();
        Ok(Self { q, delta, values, times })
    }

    /// Time between consecutive observations, `Q delta`.
    pub fn step(&self) -> f64 {
        self.q as f64 * self.delta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `zeta_i = (1/Q) sum_j c (T~_{iQ+j} - e^{-kappa delta} T~_{iQ+j-1})^2` with
/// `c = 2 kappa / (1 - e^{-2 kappa delta})`, for `i < floor(N / Q)`.
pub fn realized_volatility(detrended: &DetrendedSeries, kappa: f64, q: usize) -> Result<RealizedVolSeries> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidInput(format!("kappa must be > 0, got {kappa}")));
    }
    if q == 0 {
        return Err(Error::InvalidInput("window length Q must be >= 1".into()));
    }
    let x = &detrended.residuals;
    if x.len() < q + 1 {
        return Err(Error::InvalidInput(format!("need at least Q + 1 = {} observations, got {}", q + 1, x.len())));
    }
    let delta = detrended.delta;
    let e = (-kappa * delta).exp();
    let c = 2.0 * kappa / -(-2.0 * kappa * delta).exp_m1();
    let windows = (x.len() - 1) / q;
    let values = (0..windows)
        .map(|i| {
            (1..=q)
                .map(|j| {
                    let k = i * q + j;
                    let d = x[k] - e * x[k - 1];
                    d * d
                })
                .sum::<f64>()
                * c
                / q as f64
        })
        .collect();
    RealizedVolSeries::new(q, delta, values)
}

/// Multiplier `M` such that `K int_0^h e^{-K(h-u)} e^{i xi (t+u)} du = M e^{i xi t}`.
fn mean_multiplier(big_k: f64, xi: f64, h: f64) -> Complex64 {
    let e = (-big_k * h).exp();
    (Complex64::from_polar(1.0, xi * h) - e) * big_k / Complex64::new(big_k, xi)
}

/// `E[zeta_{t+h} | zeta_t]` for the CIR dynamics reverting to `sigma^2`.
pub fn cond_mean_zeta(zeta: f64, t: f64, h: f64, vol: &VolSeasonalParams, big_k: f64) -> f64 {
    let e = (-big_k * h).exp();
    let mut m = zeta * e + vol.gamma0 * (1.0 - e);
    for k in 0..vol.harmonics() {
        let xi = xi_k(k + 1);
        let z = Complex64::new(vol.gamma[k], vol.delta[k])
            * mean_multiplier(big_k, xi, h)
            * Complex64::from_polar(1.0, xi * t);
        m += z.im;
    }
    m
}

/// `int_0^h e^{-r (h - v)} E[zeta_{t+v} | zeta_t] dv`.
///
/// With `r = 2K` this is the conditional variance of `zeta_{t+h}` divided by
/// `eta^2`; with `r = kappa + K` it is the conditional covariance with
/// `T~_{t+h}` divided by `rho eta`.
pub fn cond_weight_zeta(zeta: f64, t: f64, h: f64, vol: &VolSeasonalParams, big_k: f64, r: f64) -> f64 {
    let e = (-big_k * h).exp();
    let decay = e * psi(r - big_k, h);
    let mut w = zeta * decay + vol.gamma0 * (psi(r, h) - decay);
    for k in 0..vol.harmonics() {
        let xi = xi_k(k + 1);
        let a = Complex64::new(r, xi);
        let psi_c = (1.0 - (-a * h).exp()) / a;
        let inner = Complex64::from_polar(1.0, xi * h) * psi_c - decay;
        let z = Complex64::new(vol.gamma[k], vol.delta[k]) * big_k / Complex64::new(big_k, xi)
            * inner
            * Complex64::from_polar(1.0, xi * t);
        w += z.im;
    }
    w
}

/// Regression coefficients `(theta_0, phi_0, theta_1.., phi_1..)` of
/// `zeta_{i+1}` on `(1, zeta_i, sin.., cos..)` implied by `(sigma^2, K)` at step `h`.
pub fn vol_theta(vol: &VolSeasonalParams, big_k: f64, h: f64) -> Vec<f64> {
    let n = vol.harmonics();
    let e = (-big_k * h).exp();
    let mut out = vec![0.0; 2 + 2 * n];
    out[0] = vol.gamma0 * (1.0 - e);
    out[1] = e;
    for k in 0..n {
        let z = Complex64::new(vol.gamma[k], vol.delta[k]) * mean_multiplier(big_k, xi_k(k + 1), h);
        out[2 + k] = z.re;
        out[2 + n + k] = z.im;
    }
    out
}

#[derive(Debug, Clone)]
pub struct VolFit {
    pub vol_seasonal: VolSeasonalParams,
    pub big_k: f64,
    /// Raw regression coefficients.
    pub theta: Vec<f64>,
    /// Amount added to `gamma0` to keep the fitted `sigma^2` nonnegative.
    pub projection_shift: f64,
}

fn vol_regressors(zeta: f64, t: f64, harmonics: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 + 2 * harmonics);
    x.extend([1.0, zeta]);
    x.extend((1..=harmonics).map(|k| (xi_k(k) * t).sin()));
    x.extend((1..=harmonics).map(|k| (xi_k(k) * t).cos()));
    x
}

/// Fit `K` and the seasonal variance level from a realized-volatility series.
pub fn estimate_vol_seasonal(rv: &RealizedVolSeries, harmonics: usize) -> Result<VolFit> {
    let p = 2 + 2 * harmonics;
    if rv.len() < p + 1 {
        return Err(Error::InvalidInput(format!("volatility fit needs at least {} windows, got {}", p + 1, rv.len())));
    }
    let rows: Vec<Vec<f64>> = (0..rv.len() - 1).map(|i| vol_regressors(rv.values[i], rv.times[i], harmonics)).collect();
    let theta = least_squares(&rows, &rv.values[1..], "volatility")?;

    let phi0 = theta[1];
    if !(phi0 > 0.0 && phi0 < 1.0) {
        return Err(Error::NonMeanRevertingVol(phi0));
    }
    let h = rv.step();
    let big_k = -phi0.ln() / h;
    let gamma0 = theta[0] / (1.0 - phi0);
    let mut gamma = Vec::with_capacity(harmonics);
    let mut delta = Vec::with_capacity(harmonics);
    for k in 0..harmonics {
        let z = Complex64::new(theta[2 + k], theta[2 + harmonics + k]) / mean_multiplier(big_k, xi_k(k + 1), h);
        gamma.push(z.re);
        delta.push(z.im);
    }
    let (vol_seasonal, shift) = VolSeasonalParams::new_projected(gamma0, gamma, delta)?;
    if shift > 0.0 {
        log::warn!("fitted sigma^2 dips below zero; raising gamma0 by {shift:.6} to restore nonnegativity");
    }
    Ok(VolFit { vol_seasonal, big_k, theta, projection_shift: shift })
}

/// Weighted CLS estimator of `eta^2` from squared one-step residuals of `zeta`.
pub fn estimate_eta2(rv: &RealizedVolSeries, vol: &VolSeasonalParams, big_k: f64) -> Result<f64> {
    if !(big_k > 0.0) {
        return Err(Error::InvalidInput(format!("K must be > 0, got {big_k}")));
    }
    if rv.len() < 2 {
        return Err(Error::InvalidInput("need at least two realized-volatility windows".into()));
    }
    let h = rv.step();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..rv.len() - 1 {
        let (z, t) = (rv.values[i], rv.times[i]);
        let y = cond_weight_zeta(z, t, h, vol, big_k, 2.0 * big_k);
        let r = rv.values[i + 1] - cond_mean_zeta(z, t, h, vol, big_k);
        num += y * r * r;
        den += y * y;
    }
    if !(den > 0.0) {
        return Err(Error::DegenerateWeights("all conditional-variance weights vanish"));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoEstimate {
    /// Estimate clamped to `[-1, 1]`.
    pub rho: f64,
    /// Unclamped ratio.
    pub raw: f64,
}

/// Conditional-covariance estimator of the correlation between the
/// temperature and volatility shocks. `params` must carry the already
/// estimated trend, `kappa`, `sigma^2`, `K` and `eta^2`; its `rho` is ignored.
pub fn estimate_rho(series: &TemperatureSeries, rv: &RealizedVolSeries, params: &ModelParams) -> Result<RhoEstimate> {
    if !(params.eta2 > 0.0) {
        return Err(Error::DegenerateWeights("eta^2 = 0 makes the covariance weights vanish"));
    }
    if (rv.delta - series.delta).abs() > 1e-12 {
        return Err(Error::InvalidInput("realized volatility and series use different steps".into()));
    }
    if rv.len() < 2 {
        return Err(Error::InvalidInput("need at least two realized-volatility windows".into()));
    }
    let detrended = DetrendedSeries::from_series(series, &params.trend);
    let x = &detrended.residuals;
    let (q, h) = (rv.q, rv.step());
    let (kappa, big_k, eta) = (params.kappa, params.big_k, params.eta());
    let e_t = (-kappa * h).exp();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..rv.len() - 1 {
        let (z, t) = (rv.values[i], rv.times[i]);
        let y = eta * cond_weight_zeta(z, t, h, &params.vol_seasonal, big_k, kappa + big_k);
        let rt = x[(i + 1) * q] - e_t * x[i * q];
        let rz = rv.values[i + 1] - cond_mean_zeta(z, t, h, &params.vol_seasonal, big_k);
        num += y * rt * rz;
        den += y * y;
    }
    if !(den > 0.0) {
        return Err(Error::DegenerateWeights("all conditional-covariance weights vanish"));
    }
    let raw = num / den;
    if raw.abs() > 1.0 {
        log::warn!("correlation estimate {raw:.4} outside [-1, 1]; clamping");
    }
    Ok(RhoEstimate { rho: raw.clamp(-1.0, 1.0), raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::simpson;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn paris_vol() -> VolSeasonalParams {
        VolSeasonalParams::new(5.603, vec![0.201, -0.266], vec![0.358, 0.459]).unwrap()
    }

    /// The sine/cosine weights written out in real arithmetic, exactly as the
    /// closed-form conditional-variance coefficients are usually printed.
    fn y_weights_printed(vol: &VolSeasonalParams, k_: f64, h: f64) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let e1 = (-k_ * h).exp();
        let theta0 = vol.gamma0 * (1.0 - e1).powi(2) / (2.0 * k_);
        let phi0 = e1 * (1.0 - e1) / k_;
        let mut th = vec![];
        let mut ph = vec![];
        for k in 0..vol.harmonics() {
            let xi = xi_k(k + 1);
            let (c, s, e2) = ((xi * h).cos(), (xi * h).sin(), (-2.0 * k_ * h).exp());
            let d = 4.0 * k_ * k_ + xi * xi;
            let a = (2.0 * k_ * (c - e2) + xi * s) / d;
            let b = (2.0 * k_ * s - xi * (c - e2)) / d;
            let den = k_ * k_ + xi * xi;
            let p = k_ * (k_ * (a - phi0) + xi * b) / den;
            let r = k_ * (k_ * b - xi * (a - phi0)) / den;
            th.push(vol.gamma[k] * p - vol.delta[k] * r);
            ph.push(vol.gamma[k] * r + vol.delta[k] * p);
        }
        (theta0, phi0, th, ph)
    }

    #[test]
    fn variance_weight_matches_printed_coefficients() {
        let vol = paris_vol();
        let (k_, h) = (0.396, 10.0);
        let (t0, p0, th, ph) = y_weights_printed(&vol, k_, h);
        for &(z, t) in &[(0.0, 0.0), (3.0, 17.0), (8.5, 250.0)] {
            let mut y = t0 + p0 * z;
            for k in 0..2 {
                let w = xi_k(k + 1) * t;
                y += th[k] * w.sin() + ph[k] * w.cos();
            }
            let got = cond_weight_zeta(z, t, h, &vol, k_, 2.0 * k_);
            assert!((got - y).abs() < 1e-12, "{got} vs {y}");
        }
    }

    #[test]
    fn weights_match_quadrature() {
        let vol = paris_vol();
        let (k_, h, z, t) = (0.4, 10.0, 4.0, 123.0);
        for r in [2.0 * k_, 0.23 + k_, k_] {
            let f = |v: f64| (-r * (h - v)).exp() * cond_mean_zeta(z, t, v, &vol, k_);
            let q = simpson(f, 0.0, h, 2000);
            let got = cond_weight_zeta(z, t, h, &vol, k_, r);
            assert!((got - q).abs() < 1e-9, "r = {r}: {got} vs {q}");
        }
    }

    #[test]
    fn conditional_mean_solves_the_ode() {
        // d m / dh = -K (m - sigma^2(t + h)); check with a central difference.
        let vol = paris_vol();
        let (k_, z, t, h) = (0.396, 2.0, 40.0, 3.0);
        let eps = 1e-5;
        let dm = (cond_mean_zeta(z, t, h + eps, &vol, k_) - cond_mean_zeta(z, t, h - eps, &vol, k_)) / (2.0 * eps);
        let rhs = -k_ * (cond_mean_zeta(z, t, h, &vol, k_) - vol.eval(t + h));
        assert!((dm - rhs).abs() < 1e-7);
        assert_eq!(cond_mean_zeta(z, t, 0.0, &vol, k_), z);
    }

    #[test]
    fn zero_detrended_gives_zero_vol() {
        let d = DetrendedSeries::from_residuals(vec![0.0; 101], 1.0);
        let rv = realized_volatility(&d, 0.2, 10).unwrap();
        assert_eq!(rv.len(), 10);
        assert!(rv.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_window_is_corrected_mean_square() {
        let x: Vec<f64> = (0..21).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let kappa = 0.3;
        let rv = realized_volatility(&DetrendedSeries::from_residuals(x.clone(), 1.0), kappa, 20).unwrap();
        let e = (-kappa).exp();
        let ms: f64 = (1..21).map(|k| (x[k] - e * x[k - 1]).powi(2)).sum::<f64>() / 20.0;
        assert_eq!(rv.len(), 1);
        assert!((rv.values[0] - ms * 2.0 * kappa / (1.0 - (-2.0 * kappa).exp())).abs() < 1e-12);
    }

    #[test]
    fn frozen_volatility_is_unbiased() {
        // Exact OU with constant zeta*: each corrected squared innovation is zeta* chi^2_1.
        let (kappa, zstar): (f64, f64) = (0.23, 4.0);
        let e = (-kappa).exp();
        let sd = (zstar * (1.0 - e * e) / (2.0 * kappa)).sqrt();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut x = vec![0.0];
        for _ in 0..200_000 {
            let g: f64 = StandardNormal.sample(&mut rng);
            x.push(e * x.last().unwrap() + sd * g);
        }
        let rv = realized_volatility(&DetrendedSeries::from_residuals(x, 1.0), kappa, 10).unwrap();
        let m = crate::stats::mean(&rv.values);
        // sd of the overall mean: zeta* sqrt(2 / 200000).
        let se = zstar * (2.0f64 / 200_000.0).sqrt();
        assert!((m - zstar).abs() < 3.0 * se, "mean {m}, se {se}");
    }

    #[test]
    fn realized_vol_ignores_level_shift_of_raw_series() {
        let s = TemperatureSeries::new(
            chrono::NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            (0..200).map(|i| ((i as f64) * 0.7).sin() * 5.0).collect(),
        )
        .unwrap();
        let shifted = TemperatureSeries { values: s.values.iter().map(|v| v + 12.0).collect(), ..s.clone() };
        let tr = crate::seasonal::TrendSeasonalParams::single(1.0, 0.0, 0.5, 0.5);
        let tr_shift = crate::seasonal::TrendSeasonalParams { alpha0: 13.0, ..tr.clone() };
        let a = realized_volatility(&DetrendedSeries::from_series(&s, &tr), 0.2, 5).unwrap();
        let b = realized_volatility(&DetrendedSeries::from_series(&shifted, &tr_shift), 0.2, 5).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    fn noise_free_rv(vol: &VolSeasonalParams, k_: f64, q: usize, n: usize) -> RealizedVolSeries {
        let h = q as f64;
        let mut z = vec![vol.gamma0];
        for i in 0..n - 1 {
            z.push(cond_mean_zeta(z[i], i as f64 * h, h, vol, k_));
        }
        RealizedVolSeries::new(q, 1.0, z).unwrap()
    }

    #[test]
    fn noise_free_vol_recursion_is_recovered() {
        let vol = paris_vol();
        // Start away from the attractor so the zeta column is not collinear with the harmonics.
        let mut rv = noise_free_rv(&vol, 0.396, 10, 300);
        rv.values[0] = 20.0;
        for i in 0..rv.len() - 1 {
            rv.values[i + 1] = cond_mean_zeta(rv.values[i], rv.times[i], 10.0, &vol, 0.396);
        }
        let fit = estimate_vol_seasonal(&rv, 2).unwrap();
        assert!((fit.big_k - 0.396).abs() < 1e-8, "K = {}", fit.big_k);
        assert!((fit.vol_seasonal.gamma0 - 5.603).abs() < 1e-6);
        for k in 0..2 {
            assert!((fit.vol_seasonal.gamma[k] - vol.gamma[k]).abs() < 1e-6);
            assert!((fit.vol_seasonal.delta[k] - vol.delta[k]).abs() < 1e-6);
        }
        let th = vol_theta(&vol, 0.396, 10.0);
        for (a, b) in th.iter().zip(&fit.theta) {
            assert!((a - b).abs() < 1e-9);
        }
        // Exactly on the conditional mean: eta^2 = 0.
        let eta2 = estimate_eta2(&rv, &fit.vol_seasonal, fit.big_k).unwrap();
        assert!(eta2.abs() < 1e-12, "{eta2}");
    }

    #[test]
    fn non_mean_reverting_vol_rejected() {
        let v: Vec<f64> = (0..60).map(|i| 1.05f64.powi(i) + 0.1 * (i as f64).cos()).collect();
        let rv = RealizedVolSeries::new(1, 1.0, v).unwrap();
        assert!(matches!(estimate_vol_seasonal(&rv, 1), Err(Error::NonMeanRevertingVol(_))));
    }

    #[test]
    fn eta2_scales_linearly_with_zeta() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let vals: Vec<f64> = (0..400).map(|_| 1.0 + rand::Rng::random::<f64>(&mut rng) * 3.0).collect();
        let rv = RealizedVolSeries::new(5, 1.0, vals.clone()).unwrap();
        let vol = paris_vol();
        let base = estimate_eta2(&rv, &vol, 0.4).unwrap();
        let c = 3.7;
        let rv_c = RealizedVolSeries::new(5, 1.0, vals.iter().map(|v| c * v).collect()).unwrap();
        let vol_c = VolSeasonalParams::new(
            c * vol.gamma0,
            vol.gamma.iter().map(|g| c * g).collect(),
            vol.delta.iter().map(|d| c * d).collect(),
        )
        .unwrap();
        let scaled = estimate_eta2(&rv_c, &vol_c, 0.4).unwrap();
        assert!((scaled - c * base).abs() < 1e-9 * scaled);
    }

    #[test]
    fn eta2_degenerate_weights() {
        let rv = RealizedVolSeries::new(1, 1.0, vec![0.0; 10]).unwrap();
        let vol = VolSeasonalParams::constant(0.0).unwrap();
        assert!(matches!(estimate_eta2(&rv, &vol, 0.5), Err(Error::DegenerateWeights(_))));
    }

    #[test]
    fn rho_needs_positive_eta2() {
        let p = ModelParams::paris().with_eta2(0.0);
        let s = TemperatureSeries::new(chrono::NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(), vec![1.0; 50]).unwrap();
        let rv = RealizedVolSeries::new(10, 1.0, vec![1.0; 4]).unwrap();
        assert!(estimate_rho(&s, &rv, &p).is_err());
    }
}

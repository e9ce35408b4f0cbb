//! Single-parameter CLS estimators for `d zeta = K (gamma theta(t) - zeta) dt + eta sqrt(zeta) dW`
//! with `K` and `theta(.)` known. These exist mainly to check convergence rates.

use crate::error::{Error, Result};
use crate::quad::simpson;

/// Subintervals per observation step for the kernel integrals.
const SIMPSON_INTERVALS: usize = 100;

fn check(zeta: &[f64], big_k: f64, delta: f64) -> Result<()> {
    if zeta.len() < 2 {
        return Err(Error::InvalidInput("need at least two observations".into()));
    }
    if !(big_k > 0.0 && delta > 0.0) {
        return Err(Error::InvalidInput("K and delta must be > 0".into()));
    }
    Ok(())
}

/// `gamma_hat = sum (zeta_{i+1} - zeta_i e^{-K delta}) I_i / (K sum I_i^2)` with
/// `I_i = int_{i delta}^{(i+1) delta} theta(u) e^{-K((i+1) delta - u)} du`.
pub fn clse_gamma_cir(zeta: &[f64], big_k: f64, theta: impl Fn(f64) -> f64, delta: f64) -> Result<f64> {
    check(zeta, big_k, delta)?;
    let e = (-big_k * delta).exp();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..zeta.len() - 1 {
        let end = (i + 1) as f64 * delta;
        let w = simpson(|u| theta(u) * (-big_k * (end - u)).exp(), end - delta, end, SIMPSON_INTERVALS);
        num += (zeta[i + 1] - zeta[i] * e) * w;
        den += w * w;
    }
    if !(den > 0.0) {
        return Err(Error::DegenerateWeights("theta integrates to zero on every step"));
    }
    Ok(num / (big_k * den))
}

/// Weighted CLS estimator of `eta^2` (with `gamma = 1`): squared residuals of
/// the conditional mean regressed on their conditional expectation
/// `a_i = e^{-K delta}(1 - e^{-K delta})/K zeta_i + int theta(v) e^{-K(s-v)}(1 - e^{-K(s-v)}) dv`.
pub fn clse_eta2_cir(zeta: &[f64], big_k: f64, theta: impl Fn(f64) -> f64, delta: f64) -> Result<f64> {
    check(zeta, big_k, delta)?;
    let e = (-big_k * delta).exp();
    let c = e * (1.0 - e) / big_k;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..zeta.len() - 1 {
        let end = (i + 1) as f64 * delta;
        let drift = big_k * simpson(|u| theta(u) * (-big_k * (end - u)).exp(), end - delta, end, SIMPSON_INTERVALS);
        let th2 = simpson(
            |v| {
                let d = (-big_k * (end - v)).exp();
                theta(v) * d * (1.0 - d)
            },
            end - delta,
            end,
            SIMPSON_INTERVALS,
        );
        let a = c * zeta[i] + th2;
        let r = zeta[i + 1] - (zeta[i] * e + drift);
        num += r * r * a;
        den += a * a;
    }
    if !(den > 0.0) {
        return Err(Error::DegenerateWeights("all conditional-variance weights vanish"));
    }
    Ok(num / den)
}

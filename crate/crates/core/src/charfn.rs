//! Affine characteristic function of `(T~_{t'}, zeta_{t'}, int T~ ds)` given the
//! state at `t`, for uncorrelated shocks.
//!
//! With `tau = t' - s`, the `zeta` coefficient solves the Riccati equation
//!
//! ```text
//! a2'(tau) = -K a2 - c(tau)^2 / 2 + eta^2 a2^2 / 2,   a2(0) = i u2,
//! c(tau)   = u1 e^{-kappa tau} + u3 (1 - e^{-kappa tau}) / kappa,
//! ```
//!
//! `a1(tau) = i c(tau)` and `a0 = K int sigma^2(s) a2(t' - s) ds`. On each
//! step of length `delta` the source term is frozen at the midpoint and the
//! resulting constant-coefficient equation is solved exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimation::psi;
use crate::model::ModelParams;

/// Default Riccati step, in days.
pub const DEFAULT_DELTA: f64 = 0.1;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierArgs {
    /// Argument on `T~_{t'}`.
    pub u1: f64,
    /// Argument on `zeta_{t'}`; `Im(u2) >= 0`.
    pub u2: Complex64,
    /// Argument on `int_t^{t'} T~_s ds`.
    pub u3: f64,
}

impl FourierArgs {
    pub fn new(u1: f64, u2: Complex64, u3: f64) -> Result<Self> {
        if u2.im < 0.0 || !u2.is_finite() || !u1.is_finite() || !u3.is_finite() {
            return Err(Error::InvalidInput(format!("Fourier argument u2 = {u2} must have Im(u2) >= 0")));
        }
        Ok(Self { u1, u2, u3 })
    }

    /// Real-argument transform of `T~_{t'}` only.
    pub fn temperature(u: f64) -> Self {
        Self { u1: u, u2: Complex64::new(0.0, 0.0), u3: 0.0 }
    }

    /// Real-argument transform of the time integral only.
    pub fn integral(u: f64) -> Self {
        Self { u1: 0.0, u2: Complex64::new(0.0, 0.0), u3: u }
    }
}

#[derive(Debug, Clone)]
pub struct CharFnSolution {
    pub args: FourierArgs,
    pub t: f64,
    pub t_prime: f64,
    pub delta_riccati: f64,
    pub kappa: f64,
    /// `a2[k] = a2(k delta)`, i.e. the coefficient for calendar time `t' - k delta`.
    pub a2: Vec<Complex64>,
    /// `a1(t' - t)`.
    pub a1: Complex64,
    /// `a0(t, t')`, trapezoid-accumulated during the sweep.
    pub a0: Complex64,
}

impl CharFnSolution {
    /// Calendar times of the grid, `t, t + delta, ..., t'`.
    pub fn grid(&self) -> Vec<f64> {
        (0..self.a2.len()).map(|k| self.t + k as f64 * self.delta_riccati).collect()
    }

    /// `a2(t' - t)`, the coefficient applied to `zeta_t`.
    pub fn a2_end(&self) -> Complex64 {
        *self.a2.last().unwrap()
    }

    /// Closed-form `a1(tau)`.
    pub fn a1_at(&self, tau: f64) -> Complex64 {
        I * source(self.args.u1, self.args.u3, self.kappa, tau)
    }
}

/// `c(tau)`; `kappa = 0` is allowed and gives `u1 + u3 tau`.
fn source(u1: f64, u3: f64, kappa: f64, tau: f64) -> f64 {
    u1 * (-kappa * tau).exp() + u3 * psi(kappa, tau)
}

/// Exact solution over `delta` of `a' = eta^2 a^2 / 2 - K a - c^2 / 2` from `a`.
///
/// Written around the stable root `a_- = -c^2 / (K + sqrt(D))`, which stays
/// well conditioned as `eta -> 0`; algebraically this is the usual Möbius form
/// with `Psi = (K + sqrt(D)) / eta^2`.
fn frozen_step(a: Complex64, c: f64, big_k: f64, eta2: f64, delta: f64) -> Complex64 {
    let d = big_k * big_k + eta2 * c * c;
    debug_assert!(d >= 0.0, "discriminant must be real nonnegative");
    let sd = d.sqrt();
    let a_minus = -c * c / (big_k + sd);
    let b = a - a_minus;
    let decay = (-sd * delta).exp();
    let growth = if eta2 == 0.0 { 0.0 } else { eta2 * -(-sd * delta).exp_m1() / (2.0 * sd) };
    a_minus + b * decay / (1.0 - b * growth)
}

/// Sweep shared by the public solver and the tests; `kappa = 0` is accepted.
#[allow(clippy::too_many_arguments)]
fn sweep(
    args: FourierArgs,
    t: f64,
    t_prime: f64,
    kappa: f64,
    big_k: f64,
    eta2: f64,
    sigma2: impl Fn(f64) -> f64,
    delta: f64,
) -> Result<(Vec<Complex64>, Complex64)> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("Riccati step must be > 0, got {delta}")));
    }
    let span = t_prime - t;
    if !(span > 0.0) {
        return Err(Error::InvalidInput(format!("need t < t', got [{t}, {t_prime}]")));
    }
    let nf = span / delta;
    let n = nf.round() as usize;
    if n == 0 || (nf - n as f64).abs() > 1e-8 * nf.max(1.0) {
        return Err(Error::InvalidInput(format!("step {delta} does not divide the horizon {span}")));
    }
    let mut a2 = Vec::with_capacity(n + 1);
    a2.push(I * args.u2);
    let mut a0 = Complex64::new(0.0, 0.0);
    let mut s_prev = sigma2(t_prime);
    for k in 0..n {
        let c = source(args.u1, args.u3, kappa, (k as f64 + 0.5) * delta);
        let next = frozen_step(a2[k], c, big_k, eta2, delta);
        let s_next = sigma2(t_prime - (k + 1) as f64 * delta);
        a0 += 0.5 * delta * big_k * (s_prev * a2[k] + s_next * next);
        s_prev = s_next;
        a2.push(next);
    }
    Ok((a2, a0))
}

/// Solve for the characteristic-function coefficients on `[t, t']`.
pub fn riccati_solve(
    args: FourierArgs,
    t: f64,
    t_prime: f64,
    params: &ModelParams,
    delta: f64,
) -> Result<CharFnSolution> {
    if params.rho != 0.0 {
        return Err(Error::Unsupported("characteristic function assumes rho = 0".into()));
    }
    if args.u2.im < 0.0 {
        return Err(Error::InvalidInput("Im(u2) must be >= 0".into()));
    }
    let (a2, a0) = sweep(args, t, t_prime, params.kappa, params.big_k, params.eta2, |s| params.sigma2(s), delta)?;
    let a1 = I * source(args.u1, args.u3, params.kappa, t_prime - t);
    Ok(CharFnSolution { args, t, t_prime, delta_riccati: delta, kappa: params.kappa, a2, a1, a0 })
}

/// `exp(a0 + a1 T~_t + a2 zeta_t)`.
pub fn charfn_state(sol: &CharFnSolution, t_tilde: f64, zeta: f64) -> Complex64 {
    (sol.a0 + sol.a1 * t_tilde + sol.a2_end() * zeta).exp()
}

/// `E[exp(i u T~_{t'}) | T~_t, zeta_t]`.
pub fn charfn_temperature(
    u: f64,
    t: f64,
    t_prime: f64,
    state: (f64, f64),
    params: &ModelParams,
    delta: f64,
) -> Result<Complex64> {
    if u == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let sol = riccati_solve(FourierArgs::temperature(u), t, t_prime, params, delta)?;
    Ok(charfn_state(&sol, state.0, state.1))
}

/// Approximate characteristic function of `CAT = sum_{t1..=t2} T_t` seen from
/// `t0`, replacing the sum of `T~` by its integral over `[t1, t2 + 1]`.
pub fn charfn_cat(
    t0: f64,
    t1: f64,
    t2: f64,
    u: f64,
    state: (f64, f64),
    params: &ModelParams,
    delta: f64,
) -> Result<Complex64> {
    if !(t0 <= t1 && t1 <= t2) {
        return Err(Error::InvalidInput(format!("need t0 <= t1 <= t2, got {t0}, {t1}, {t2}")));
    }
    let days = (t2 - t1).round() as usize + 1;
    let seasonal: f64 = (0..days).map(|j| params.s(t1 + j as f64)).sum();
    if u == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let len = t2 + 1.0 - t1;
    let inner = riccati_solve(FourierArgs::integral(u), t1, t2 + 1.0, params, delta)?;
    let a2_inner = inner.a2_end();
    let u1 = u * psi(params.kappa, len);
    let exponent = if t1 > t0 {
        let u2 = -I * a2_inner;
        assert!(u2.im >= -1e-15, "stage-two argument left the admissible half-plane: {u2}");
        let u2 = Complex64::new(u2.re, u2.im.max(0.0));
        let outer = riccati_solve(FourierArgs { u1, u2, u3: 0.0 }, t0, t1, params, delta)?;
        outer.a0 + outer.a1 * state.0 + outer.a2_end() * state.1
    } else {
        I * u1 * state.0 + a2_inner * state.1
    };
    Ok((I * u * seasonal + inner.a0 + exponent).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::simpson;
    use crate::seasonal::{TrendSeasonalParams, VolSeasonalParams};
    use proptest::prelude::*;

    const JAN1_2019: f64 = 14_235.0;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Möbius update exactly as usually printed.
    fn mobius_step(a: Complex64, cc: f64, k: f64, eta2: f64, delta: f64) -> Complex64 {
        let d = k * k + eta2 * cc * cc;
        let sd = d.sqrt();
        let psi = (k + sd) / eta2;
        let x = psi - a;
        psi + 2.0 * sd * x / ((eta2 * x - 2.0 * sd) * (-sd * delta).exp() - eta2 * x)
    }

    #[test]
    fn stable_step_equals_mobius_form() {
        for &(a, cc, k, e2, d) in &[
            (c(0.0, 0.3), 1.2, 0.4, 1.0, 0.1),
            (c(-2.0, -0.5), 0.0, 0.4, 1.043, 1.0),
            (c(-0.1, 4.0), 3.0, 2.0, 0.3, 0.5),
        ] {
            let s = frozen_step(a, cc, k, e2, d);
            let m = mobius_step(a, cc, k, e2, d);
            assert!((s - m).norm() < 1e-12 * (1.0 + m.norm()), "{s} vs {m}");
        }
    }

    #[test]
    fn zero_arguments() {
        let p = ModelParams::paris();
        let sol = riccati_solve(FourierArgs::temperature(0.0), 0.0, 31.0, &p, 0.1).unwrap();
        assert!(sol.a2.iter().all(|a| a.norm() == 0.0));
        assert_eq!(sol.a0, c(0.0, 0.0));
        assert_eq!(charfn_state(&sol, 3.0, 5.0), c(1.0, 0.0));
        assert_eq!(sol.a2.len(), 311);
        assert!((sol.grid()[310] - 31.0).abs() < 1e-12);
    }

    #[test]
    fn constant_coefficient_closed_form() {
        // kappa = 0, u3 = 0: any step sequence reproduces the explicit solution.
        let (k, e2, u1, u2) = (0.4, 1.043, 0.8, c(0.3, 0.2));
        let d = k * k + e2 * u1 * u1;
        let sd = f64::sqrt(d);
        let psi = (k + sd) / e2;
        let closed = |t: f64| {
            let x = psi - I * u2;
            psi + 2.0 * sd * x / ((e2 * x - 2.0 * sd) * (-sd * t).exp() - e2 * x)
        };
        let args = FourierArgs::new(u1, u2, 0.0).unwrap();
        for (span, delta) in [(31.0, 31.0), (31.0, 0.5), (2.0, 0.001)] {
            let (a2, _) = sweep(args, 0.0, span, 0.0, k, e2, |_| 1.0, delta).unwrap();
            let want = closed(span);
            assert!((a2.last().unwrap() - want).norm() < 1e-12, "{span}/{delta}");
        }
    }

    fn gaussian_params() -> ModelParams {
        ModelParams::paris().with_eta2(1e-16)
    }

    /// Deterministic volatility path by RK4 on `z' = -K (z - sigma^2(t))`.
    fn zeta_path(p: &ModelParams, z0: f64, t0: f64, t1: f64, n: usize) -> impl Fn(f64) -> f64 {
        let h = (t1 - t0) / n as f64;
        let mut zs = vec![z0];
        let f = |t: f64, z: f64| -p.big_k * (z - p.sigma2(t));
        for i in 0..n {
            let (t, z) = (t0 + i as f64 * h, zs[i]);
            let k1 = f(t, z);
            let k2 = f(t + h / 2.0, z + h / 2.0 * k1);
            let k3 = f(t + h / 2.0, z + h / 2.0 * k2);
            let k4 = f(t + h, z + h * k3);
            zs.push(z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        }
        move |t: f64| {
            let x = ((t - t0) / h).clamp(0.0, n as f64);
            let i = (x.floor() as usize).min(n - 1);
            let w = x - i as f64;
            // Cubic-accurate enough at this resolution.
            zs[i] * (1.0 - w) + zs[i + 1] * w
        }
    }

    #[test]
    fn gaussian_limit_of_temperature_charfn() {
        let p = gaussian_params();
        let (t, tp, x0, z0) = (JAN1_2019, JAN1_2019 + 30.0, 1.5, 4.0);
        let zeta = zeta_path(&p, z0, t, tp, 300_000);
        let var = simpson(|s| (-2.0 * p.kappa * (tp - s)).exp() * zeta(s), t, tp, 20_000);
        let m = x0 * (-p.kappa * (tp - t)).exp();
        for u in [0.3, 1.0, 2.0] {
            let want = (I * u * m - 0.5 * u * u * var).exp();
            let fine = charfn_temperature(u, t, tp, (x0, z0), &p, 0.001).unwrap();
            let rel_fine = (fine - want).norm() / want.norm();
            assert!(rel_fine < 1e-6, "u = {u}: rel {rel_fine:e}");
            // Second order in the step.
            let coarse = charfn_temperature(u, t, tp, (x0, z0), &p, 0.01).unwrap();
            let rel_coarse = (coarse - want).norm() / want.norm();
            assert!(rel_coarse > 50.0 * rel_fine, "u = {u}: {rel_coarse:e} vs {rel_fine:e}");
        }
    }

    #[test]
    fn gaussian_limit_of_cat_charfn() {
        let p = gaussian_params();
        let (t0, t1, t2, x0, z0) = (JAN1_2019 - 30.0, JAN1_2019, JAN1_2019 + 30.0, -2.0, 7.0);
        let end = t2 + 1.0;
        let zeta = zeta_path(&p, z0, t0, end, 400_000);
        let k = p.kappa;
        // Weight of the shock at s in int_{t1}^{end} T~ dr.
        let g = |s: f64| {
            let lo = s.max(t1);
            (1.0 - (-k * (end - lo)).exp()) / k * (-k * (lo - s)).exp()
        };
        let var =
            simpson(|s| g(s).powi(2) * zeta(s), t0, t1, 20_000) + simpson(|s| g(s).powi(2) * zeta(s), t1, end, 20_000);
        let mean = x0 * (-k * (t1 - t0)).exp() * (1.0 - (-k * (end - t1)).exp()) / k;
        let seasonal: f64 = (0..31).map(|j| p.s(t1 + j as f64)).sum();
        for u in [0.01, 0.05, 0.1] {
            let want = (I * u * (seasonal + mean) - 0.5 * u * u * var).exp();
            let got = charfn_cat(t0, t1, t2, u, (x0, z0), &p, 0.01).unwrap();
            let rel = (got - want).norm() / want.norm();
            assert!(rel < 1e-5, "u = {u}: rel {rel:e}");
        }
    }

    #[test]
    fn step_size_self_convergence() {
        let p = ModelParams::paris();
        let coarse = riccati_solve(FourierArgs::temperature(1.0), 0.0, 31.0, &p, 0.1).unwrap().a2_end();
        let fine = riccati_solve(FourierArgs::temperature(1.0), 0.0, 31.0, &p, 1e-3).unwrap().a2_end();
        assert!((coarse - fine).norm() / fine.norm() < 1e-4);
    }

    #[test]
    fn cat_zero_argument_and_zero_lead() {
        let p = ModelParams::paris();
        assert_eq!(charfn_cat(0.0, 10.0, 40.0, 0.0, (0.0, 6.0), &p, 0.1).unwrap(), c(1.0, 0.0));
        let v = charfn_cat(10.0, 10.0, 40.0, 0.02, (0.0, 6.0), &p, 0.1).unwrap();
        assert!(v.norm() <= 1.0);
    }

    #[test]
    fn rejects_bad_grid_and_args() {
        let p = ModelParams::paris();
        assert!(riccati_solve(FourierArgs::temperature(1.0), 0.0, 1.0, &p, 0.0).is_err());
        assert!(riccati_solve(FourierArgs::temperature(1.0), 0.0, 1.0, &p, 0.3).is_err());
        assert!(riccati_solve(FourierArgs::temperature(1.0), 1.0, 1.0, &p, 0.1).is_err());
        assert!(FourierArgs::new(0.0, c(0.0, -1.0), 0.0).is_err());
        assert!(riccati_solve(FourierArgs::temperature(1.0), 0.0, 1.0, &p.with_rho(0.1), 0.1).is_err());
    }

    fn params_strategy() -> impl Strategy<Value = ModelParams> {
        (0.05f64..1.0, 0.05f64..3.0, 0.0f64..5.0, 1.0f64..8.0).prop_map(|(kappa, k, eta2, g0)| {
            ModelParams::new(
                TrendSeasonalParams::zero(),
                kappa,
                VolSeasonalParams::new(g0, vec![0.5], vec![-0.5]).unwrap(),
                k,
                eta2,
                0.0,
            )
            .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn riccati_real_part_nonpositive(
            p in params_strategy(), u1 in -5.0f64..5.0, u2r in -5.0f64..5.0, u2i in 0.0f64..3.0, u3 in -2.0f64..2.0,
            t in 0.0f64..365.0, span in 1usize..60
        ) {
            let args = FourierArgs::new(u1, c(u2r, u2i), u3).unwrap();
            let sol = riccati_solve(args, t, t + span as f64, &p, 0.5).unwrap();
            prop_assert!(sol.a2.iter().all(|a| a.re <= 1e-14 && a.is_finite()));
            prop_assert!(sol.a0.re <= 1e-12);
            prop_assert_eq!(sol.a2[0], I * args.u2);
        }

        #[test]
        fn charfn_bounded_and_hermitian(
            p in params_strategy(), u in -4.0f64..4.0, x0 in -8.0f64..8.0, z0 in 0.0f64..15.0, span in 1usize..40
        ) {
            let phi = charfn_temperature(u, 0.0, span as f64, (x0, z0), &p, 0.25).unwrap();
            let conj = charfn_temperature(-u, 0.0, span as f64, (x0, z0), &p, 0.25).unwrap();
            prop_assert!(phi.norm() <= 1.0 + 1e-12);
            prop_assert!((phi - conj.conj()).norm() < 1e-12);
            let cat = charfn_cat(0.0, 5.0, 5.0 + span as f64, u / 10.0, (x0, z0), &p, 0.25).unwrap();
            let cat_neg = charfn_cat(0.0, 5.0, 5.0 + span as f64, -u / 10.0, (x0, z0), &p, 0.25).unwrap();
            prop_assert!(cat.norm() <= 1.0 + 1e-12);
            prop_assert!((cat - cat_neg.conj()).norm() < 1e-12);
        }
    }
}

//! Joint `(T, zeta)` path generation: exact-in-law OU step for the detrended
//! temperature and a second-order Ninomiya–Victoir step for the volatility.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimation::psi;
use crate::model::ModelParams;

/// One volatility step over `delta` days with `sigma^2` frozen at `t_mid`,
/// driven by the standard normal draw `gaussian`.
///
/// When `K sigma^2 >= eta^2 / 4` this is the Ninomiya–Victoir composition
/// `X0(delta/2) o X1(sqrt(delta) Y) o X0(delta/2)`. Otherwise the draw is
/// mapped to a uniform and the moment-matching construction for the
/// degenerate regime is used: the same composition with a three-point `Y` when
/// `zeta` is above the threshold that keeps it nonnegative, and a two-point
/// law matching the exact first two conditional moments below it.
pub fn cir_step(zeta: f64, t_mid: f64, delta: f64, params: &ModelParams, gaussian: f64) -> f64 {
    let (k, eta2) = (params.big_k, params.eta2);
    let a = k * params.sigma2(t_mid);
    let shifted = a - 0.25 * eta2;
    let half_decay = (-0.5 * k * delta).exp();
    let psi_half = psi(k, 0.5 * delta);
    let eta = eta2.sqrt();

    let nv = |y: f64| {
        let inner = (shifted * psi_half + zeta * half_decay).max(0.0).sqrt() + 0.5 * eta * delta.sqrt() * y;
        (half_decay * inner * inner + shifted * psi_half).max(0.0)
    };
    if shifted >= 0.0 {
        return nv(gaussian);
    }

    let u = standard_normal_cdf(gaussian);
    let gap = -shifted * psi_half;
    let root = (gap / half_decay).sqrt() + 0.5 * eta * (3.0 * delta).sqrt();
    let threshold = (gap + root * root) / half_decay;
    if zeta >= threshold {
        let s3 = 3f64.sqrt();
        let y = if u < 1.0 / 6.0 {
            -s3
        } else if u > 5.0 / 6.0 {
            s3
        } else {
            0.0
        };
        return nv(y);
    }

    let decay = (-k * delta).exp();
    let p = psi(k, delta);
    let m1 = zeta * decay + a * p;
    if m1 <= 0.0 {
        return 0.0;
    }
    let m2 = m1 * m1 + eta2 * (zeta * p * decay + 0.5 * a * p * p);
    let pi = 0.5 * (1.0 - (1.0 - m1 * m1 / m2).max(0.0).sqrt());
    if u < pi {
        m1 / (2.0 * pi)
    } else {
        m1 / (2.0 * (1.0 - pi))
    }
}

fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Simulated trajectories, stored row-major: path `p` occupies
/// `p * (n_steps + 1) .. (p + 1) * (n_steps + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub t0: f64,
    pub delta: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub temps: Vec<f64>,
    pub vols: Vec<f64>,
    pub seed: u64,
}

impl PathSet {
    pub fn width(&self) -> usize {
        self.n_steps + 1
    }

    pub fn temps(&self, path: usize) -> &[f64] {
        let w = self.width();
        &self.temps[path * w..(path + 1) * w]
    }

    pub fn vols(&self, path: usize) -> &[f64] {
        let w = self.width();
        &self.vols[path * w..(path + 1) * w]
    }

    pub fn time(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.delta
    }

    /// Index of the grid point closest to day `t`, if `t` lies on the grid.
    pub fn step_of(&self, t: f64) -> Option<usize> {
        let k = ((t - self.t0) / self.delta).round();
        (k >= 0.0 && (k as usize) <= self.n_steps && (self.time(k as usize) - t).abs() < 1e-9).then_some(k as usize)
    }

    /// Values of every path at one grid step.
    pub fn temps_at(&self, step: usize) -> Vec<f64> {
        (0..self.n_paths).map(|p| self.temps(p)[step]).collect()
    }

    const MAGIC: &'static [u8; 8] = b"TSVPATH1";

    /// Little-endian binary layout:
    ///
    /// ```text
    /// magic    8 bytes  "TSVPATH1"
    /// n_paths  u64
    /// n_steps  u64
    /// t0       f64
    /// delta    f64
    /// seed     u64
    /// temps    f64 x n_paths x (n_steps + 1), row-major by path
    /// vols     f64 x n_paths x (n_steps + 1)
    /// ```
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&(self.n_paths as u64).to_le_bytes())?;
        w.write_all(&(self.n_steps as u64).to_le_bytes())?;
        w.write_all(&self.t0.to_le_bytes())?;
        w.write_all(&self.delta.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * (self.temps.len() + self.vols.len()));
        for v in self.temps.iter().chain(&self.vols) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::InvalidInput("not a path file (bad magic)".into()));
        }
        let mut b = [0u8; 8];
        let mut next = |r: &mut dyn Read| -> Result<[u8; 8]> {
            r.read_exact(&mut b)?;
            Ok(b)
        };
        let n_paths = u64::from_le_bytes(next(&mut r)?) as usize;
        let n_steps = u64::from_le_bytes(next(&mut r)?) as usize;
        let t0 = f64::from_le_bytes(next(&mut r)?);
        let delta = f64::from_le_bytes(next(&mut r)?);
        let seed = u64::from_le_bytes(next(&mut r)?);
        let n = n_paths * (n_steps + 1);
        let mut payload = vec![0u8; 16 * n];
        r.read_exact(&mut payload)?;
        let vals: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let (temps, vols) = vals.split_at(n);
        Ok(Self { t0, delta, n_steps, n_paths, temps: temps.to_vec(), vols: vols.to_vec(), seed })
    }

    /// `path,step,t,temp,zeta` rows.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "path,step,t,temp,zeta")?;
        for p in 0..self.n_paths {
            for (k, (t, z)) in self.temps(p).iter().zip(self.vols(p)).enumerate() {
                writeln!(w, "{p},{k},{},{t},{z}", self.time(k))?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            self.write_csv(f)
        } else {
            self.write_binary(f)
        }
    }
}

/// Deterministic per-path generator: stream `path` of the ChaCha8 sequence for `seed`.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Simulate `n_paths` paths of `horizon / delta` steps from `(T~_0, zeta_0)` at day `t0`.
pub fn simulate_paths(
    params: &ModelParams,
    init: (f64, f64),
    t0: f64,
    horizon: f64,
    delta: f64,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    params.validate()?;
    if params.rho != 0.0 {
        return Err(Error::Unsupported(format!(
            "path simulation assumes independent shocks (rho = 0), got rho = {}",
            params.rho
        )));
    }
    if !(delta > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidInput("delta must be > 0 and horizon >= 0".into()));
    }
    let steps_f = horizon / delta;
    let n_steps = steps_f.round() as usize;
    if (steps_f - n_steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::InvalidInput(format!("horizon {horizon} is not a multiple of delta {delta}")));
    }
    let (x0, z0) = init;
    if !(z0 >= 0.0) {
        return Err(Error::InvalidInput(format!("initial volatility must be >= 0, got {z0}")));
    }
    if n_paths == 0 {
        return Err(Error::InvalidInput("n_paths must be >= 1".into()));
    }

    let w = n_steps + 1;
    let mut temps = vec![0.0; n_paths * w];
    let mut vols = vec![0.0; n_paths * w];
    let e = (-params.kappa * delta).exp();
    let ou_var = psi(2.0 * params.kappa, delta);
    let seasonal: Vec<f64> = (0..w).map(|k| params.s(t0 + k as f64 * delta)).collect();

    temps.par_chunks_mut(w).zip(vols.par_chunks_mut(w)).enumerate().for_each(|(p, (tc, vc))| {
        let mut rng = path_rng(seed, p);
        let (mut x, mut z) = (x0, z0);
        tc[0] = seasonal[0] + x;
        vc[0] = z;
        for i in 0..n_steps {
            let y: f64 = rng.sample(StandardNormal);
            let g: f64 = rng.sample(StandardNormal);
            let t_mid = t0 + (i as f64 + 0.5) * delta;
            let z_next = cir_step(z, t_mid, delta, params, y);
            x = e * x + (ou_var * 0.5 * (z + z_next)).sqrt() * g;
            z = z_next;
            tc[i + 1] = seasonal[i + 1] + x;
            vc[i + 1] = z;
        }
    });
    Ok(PathSet { t0, delta, n_steps, n_paths, temps, vols, seed })
}

/// Volatility-only trajectory, `n_steps` steps of size `delta` from day `t0`.
pub fn simulate_cir(
    params: &ModelParams,
    zeta0: f64,
    t0: f64,
    n_steps: usize,
    delta: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(zeta0);
    let mut z = zeta0;
    for i in 0..n_steps {
        let y: f64 = rng.sample(StandardNormal);
        z = cir_step(z, t0 + (i as f64 + 0.5) * delta, delta, params, y);
        out.push(z);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seasonal::{TrendSeasonalParams, VolSeasonalParams};

    fn cir_params(k: f64, sigma2: f64, eta2: f64) -> ModelParams {
        ModelParams::new(TrendSeasonalParams::zero(), 0.2, VolSeasonalParams::constant(sigma2).unwrap(), k, eta2, 0.0)
            .unwrap()
    }

    /// Exact CIR conditional mean and second moment with constant level.
    fn exact_moments(z: f64, k: f64, s2: f64, eta2: f64, t: f64) -> (f64, f64) {
        let d = (-k * t).exp();
        let m = z * d + s2 * (1.0 - d);
        let v = z * eta2 / k * (d - d * d) + s2 * eta2 / (2.0 * k) * (1.0 - d).powi(2);
        (m, v + m * m)
    }

    #[test]
    fn noiseless_step_converges_to_level() {
        let p = cir_params(0.4, 3.0, 0.0);
        let mut z = 10.0;
        for i in 0..200 {
            z = cir_step(z, i as f64 + 0.5, 1.0, &p, 0.7);
        }
        assert!((z - 3.0).abs() < 1e-12);
        // One step reproduces the ODE exactly.
        let one = cir_step(10.0, 0.5, 1.0, &p, -1.3);
        assert!((one - (3.0 + 7.0 * (-0.4f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn one_step_mean_within_three_se() {
        let p = cir_params(0.4, 5.0, 1.0);
        let (z0, d) = (2.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| cir_step(z0, 0.5, d, &p, rng.sample(StandardNormal))).collect();
        let (m, m2) = exact_moments(z0, 0.4, 5.0, 1.0, d);
        let se = ((m2 - m * m) / n as f64).sqrt();
        let got = crate::stats::mean(&draws);
        assert!((got - m).abs() < 3.0 * se, "{got} vs {m} (se {se})");
    }

    #[test]
    fn degenerate_branch_matches_moments_and_stays_nonnegative() {
        // K sigma^2 = 0.1 < eta^2 / 4 = 0.5.
        let p = cir_params(1.0, 0.1, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &z0 in &[0.0, 0.05, 0.5, 5.0] {
            let n = 400_000;
            let draws: Vec<f64> = (0..n).map(|_| cir_step(z0, 0.5, 0.5, &p, rng.sample(StandardNormal))).collect();
            assert!(draws.iter().all(|z| *z >= 0.0));
            let (m, m2) = exact_moments(z0, 1.0, 0.1, 2.0, 0.5);
            let se = ((m2 - m * m) / n as f64).sqrt().max(1e-12);
            let got = crate::stats::mean(&draws);
            // Second-order scheme: bias O(delta^2) on top of MC noise.
            assert!((got - m).abs() < 3.0 * se + 0.02 * m.max(0.01), "z0 {z0}: {got} vs {m}");
        }
    }

    #[test]
    fn two_point_law_is_exact_in_two_moments() {
        let p = cir_params(1.0, 0.1, 2.0);
        // Zeta = 0 is always below the threshold.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 500_000;
        let draws: Vec<f64> = (0..n).map(|_| cir_step(0.0, 0.5, 1.0, &p, rng.sample(StandardNormal))).collect();
        let (m, m2) = exact_moments(0.0, 1.0, 0.1, 2.0, 1.0);
        let e2 = draws.iter().map(|z| z * z).sum::<f64>() / n as f64;
        assert!((crate::stats::mean(&draws) - m).abs() < 4.0 * ((m2 - m * m) / n as f64).sqrt());
        assert!((e2 - m2).abs() < 0.02 * m2, "{e2} vs {m2}");
    }

    #[test]
    fn ou_limit_is_gaussian_ar1() {
        let p = cir_params(0.5, 4.0, 0.0).with_kappa(0.23);
        let ps = simulate_paths(&p, (0.0, 4.0), 0.0, 100_000.0, 1.0, 1, 8).unwrap();
        let x = ps.temps(0);
        let m = crate::stats::mean(x);
        let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
        let e = (-0.23f64).exp();
        let se = ((1.0 - e * e) / x.len() as f64).sqrt();
        assert!((num / den - e).abs() < 3.0 * se, "{} vs {e}", num / den);
    }

    #[test]
    fn conditional_mean_of_temperature() {
        let p = ModelParams::paris();
        let (x0, t) = (3.0, 10usize);
        let ps = simulate_paths(&p, (x0, p.sigma2(0.0)), 0.0, t as f64, 1.0, 50_000, 21).unwrap();
        let xs: Vec<f64> = (0..ps.n_paths).map(|i| ps.temps(i)[t] - p.s(t as f64)).collect();
        let target = x0 * (-p.kappa * t as f64).exp();
        let se = crate::stats::std_dev(&xs) / (xs.len() as f64).sqrt();
        assert!((crate::stats::mean(&xs) - target).abs() < 3.0 * se);
    }

    #[test]
    fn deterministic_zero_case() {
        let p = ModelParams::new(
            TrendSeasonalParams::single(10.0, 0.001, -3.0, -7.0),
            0.2,
            VolSeasonalParams::constant(0.0).unwrap(),
            0.4,
            0.0,
            0.0,
        )
        .unwrap();
        let ps = simulate_paths(&p, (0.0, 0.0), 5.0, 20.0, 0.5, 3, 1).unwrap();
        for path in 0..3 {
            for (k, t) in ps.temps(path).iter().enumerate() {
                assert_eq!(*t, p.s(ps.time(k)));
            }
        }
    }

    #[test]
    fn rejects_correlation_and_bad_grid() {
        let p = ModelParams::paris();
        assert!(matches!(
            simulate_paths(&p.with_rho(0.3), (0.0, 1.0), 0.0, 10.0, 1.0, 2, 0),
            Err(Error::Unsupported(_))
        ));
        assert!(simulate_paths(&p, (0.0, 1.0), 0.0, 10.0, 0.3, 2, 0).is_err());
        assert!(simulate_paths(&p, (0.0, -1.0), 0.0, 10.0, 1.0, 2, 0).is_err());
    }

    #[test]
    fn reproducible_and_thread_invariant() {
        let p = ModelParams::paris();
        let a = simulate_paths(&p, (1.0, 6.0), 0.0, 50.0, 0.25, 64, 77).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_paths(&p, (1.0, 6.0), 0.0, 50.0, 0.25, 64, 77).unwrap());
        assert_eq!(a, b);
        let c = simulate_paths(&p, (1.0, 6.0), 0.0, 50.0, 0.25, 64, 78).unwrap();
        assert_ne!(a.temps, c.temps);
        assert!(a.vols.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn binary_round_trip() {
        let p = ModelParams::paris();
        let a = simulate_paths(&p, (0.0, 6.0), 14_235.0, 31.0, 1.0, 5, 3).unwrap();
        let mut buf = Vec::new();
        a.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 5 * 8 + 2 * 5 * 32 * 8);
        assert_eq!(PathSet::read_binary(&buf[..]).unwrap(), a);
        assert!(PathSet::read_binary(&b"garbage!........"[..]).is_err());
    }
}

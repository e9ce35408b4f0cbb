use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use chrono::{Datelike, NaiveDate};
use serde::Serialize;
use serde_json::json;

use tempsv_core::charfn::{charfn_cat, charfn_temperature};
use tempsv_core::estimation::{estimate_trend, qq_table, realized_volatility};
use tempsv_core::pricing::{hdd_option_via_cat, invert_cdf, mc_price_at, price_with_control_variate, GridConfig};
use tempsv_core::sensitivity::{write_histogram_csv, write_sweep_csv};
use tempsv_core::simulation::simulate_paths;
use tempsv_core::timeseries::{
    hurst_estimate, load_series, noleap_date, noleap_days_between, pacf, write_hurst_csv, write_pacf_csv, CsvFormat,
    DEFAULT_HURST_LAGS, DEFAULT_HURST_QS,
};
use tempsv_core::{
    calibrate, index_model_price, sweep, CalibrationConfig, DetrendedSeries, IndexKind, IndexSpec, McConfig,
    ModelParams, ParamsDocument, PayoffSpec, StrikeRule, SweepAxis, TemperatureSeries,
};

use crate::args::*;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Calibrate(a) => run_calibrate(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Price(a) => run_price(a),
        Command::Baseline(a) => run_baseline(a),
        Command::Compare(a) => run_compare(a),
        Command::Sensitivity(a) => run_sensitivity(a),
        Command::Diagnose(a) => run_diagnose(a),
    }
}

fn csv_format(f: &SeriesFormat) -> CsvFormat {
    CsvFormat { date_column: f.date_column.clone(), value_column: f.value_column.clone() }
}

fn load(path: &Path, f: &SeriesFormat) -> Result<TemperatureSeries> {
    load_series(path, &csv_format(f)).with_context(|| format!("loading {}", path.display()))
}

impl Calendar {
    fn origin(&self) -> Result<NaiveDate> {
        self.origin.parse().with_context(|| format!("bad origin date `{}`", self.origin))
    }

    /// A plain number is a model day; an ISO date is converted on the no-leap calendar.
    fn day(&self, s: &str) -> Result<f64> {
        if let Ok(t) = s.parse::<f64>() {
            return Ok(t);
        }
        let d: NaiveDate = s.parse().with_context(|| format!("`{s}` is neither a day number nor an ISO date"))?;
        ensure!(!(d.month() == 2 && d.day() == 29), "February 29 is not on the model calendar");
        Ok(noleap_days_between(self.origin()?, d) as f64)
    }

    fn date(&self, t: f64) -> Result<NaiveDate> {
        ensure!(t >= 0.0, "day {t} precedes the calendar origin");
        Ok(noleap_date(self.origin()?, t as usize))
    }
}

fn load_params(path: &Path) -> Result<(ModelParams, usize)> {
    let doc = ParamsDocument::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((doc.to_params()?, doc.q))
}

/// Path simulation and Fourier pricing need independent shocks.
fn without_correlation(p: ModelParams) -> ModelParams {
    if p.rho != 0.0 {
        log::warn!("rho = {:.4} ignored: simulation and pricing assume rho = 0", p.rho);
        p.with_rho(0.0)
    } else {
        p
    }
}

fn index_kind(i: IndexArg) -> IndexKind {
    match i {
        IndexArg::Hdd => IndexKind::Hdd,
        IndexArg::Cdd => IndexKind::Cdd,
        IndexArg::Cat => IndexKind::Cat,
    }
}

fn write_json(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run_calibrate(a: CalibrateArgs) -> Result<()> {
    let series = load(&a.input, &a.format)?;
    let config =
        CalibrationConfig { q: a.q_window, harmonics_sigma2: usize::from(a.harmonics_sigma2), ..Default::default() };
    let cal = calibrate(&series, &config)?;
    log::info!(
        "kappa = {:.4}, K = {:.4}, eta^2 = {:.4}, rho = {:.4}",
        cal.params.kappa,
        cal.params.big_k,
        cal.params.eta2,
        cal.params.rho
    );
    if let Some(path) = &a.qq {
        let p = cal.params.with_rho(0.0);
        let sim = simulate_paths(&p, (0.0, p.sigma2(0.0)), 0.0, (series.len() - 1) as f64, 1.0, 1, a.seed)?;
        let e = (-p.kappa).exp();
        let tilde: Vec<f64> = sim.temps(0).iter().enumerate().map(|(i, x)| x - p.s(sim.time(i))).collect();
        let sim_res: Vec<f64> = tilde.windows(2).map(|w| w[1] - e * w[0]).collect();
        let mut w = create(path)?;
        writeln!(w, "p,observed,normal,simulated")?;
        for r in qq_table(&cal.trend_fit.residuals, Some(&sim_res), 200) {
            writeln!(w, "{},{},{},{}", r.p, r.observed, r.normal, r.simulated.unwrap_or(f64::NAN))?;
        }
        w.flush()?;
    }
    let doc = ParamsDocument::from_params(&cal.params, cal.q);
    match &a.out {
        Some(p) => doc.write(p)?,
        None => write_json(&doc, None)?,
    }
    Ok(())
}

fn initial_state(params: &ModelParams, t0: f64, s: &StateArgs) -> (f64, f64) {
    (s.x0.unwrap_or(0.0), s.zeta0.unwrap_or_else(|| params.sigma2(t0)))
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let (params, _) = load_params(&a.params)?;
    let params = without_correlation(params);
    let t0 = a.calendar.day(&a.t0)?;
    let paths = simulate_paths(&params, initial_state(&params, t0, &a.state), t0, a.days, a.delta, a.paths, a.seed)?;
    paths.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    log::info!("wrote {} paths of {} steps to {}", paths.n_paths, paths.n_steps, a.out.display());
    Ok(())
}

/// Last detrended value and last realized volatility of an observed series
/// whose first row falls on model day `offset`.
fn state_from_series(
    series: &TemperatureSeries,
    offset: f64,
    params: &ModelParams,
    q: usize,
) -> Result<(f64, (f64, f64))> {
    let residuals: Vec<f64> =
        series.values.iter().enumerate().map(|(i, v)| v - params.s(offset + series.time(i))).collect();
    let last = *residuals.last().context("empty series")?;
    let rv = realized_volatility(&DetrendedSeries::from_residuals(residuals, series.delta), params.kappa, q)?;
    let zeta = *rv.values.last().context("series too short for realized volatility")?;
    Ok((offset + series.time(series.len() - 1), (last, zeta)))
}

struct Contract {
    spec: PayoffSpec,
    t0: f64,
    state: (f64, f64),
}

fn contract(
    params: &ModelParams,
    q: usize,
    c: &ContractArgs,
    t0: Option<&str>,
    cal: &Calendar,
    state: &StateArgs,
    series: Option<(&TemperatureSeries, bool)>,
) -> Result<Contract> {
    let (t1, t2) = (cal.day(&c.t1)?, cal.day(&c.t2)?);
    let index = IndexSpec::new(index_kind(c.index), c.base_temp, t1, t2)?;
    let mut spec = PayoffSpec::new(index, StrikeRule::parse(&c.strike_rule)?, c.cap)?;
    let mut t0 = match t0 {
        Some(s) => cal.day(s)?,
        None => t1 - 30.0,
    };
    let mut st = initial_state(params, t0, state);
    if let Some((series, use_state)) = series {
        let offset = noleap_days_between(cal.origin()?, series.start_date) as f64;
        if use_state {
            let (t_last, s) = state_from_series(series, offset, params, q)?;
            log::info!("state at day {t_last}: T~ = {:.3}, zeta = {:.3}", s.0, s.1);
            t0 = t_last;
            st = (state.x0.unwrap_or(s.0), state.zeta0.unwrap_or(s.1));
        }
        if let StrikeRule::HistoricalQuantile(_) = spec.strike_rule {
            let start = cal.date(t1)?;
            ensure!(cal.date(t2)?.month() == start.month(), "historical strikes need a single-month period");
            let first = series.start_date.year() + i32::from(series.start_date.ordinal() > 1);
            let priced = index_model_price(series, &spec, start.month(), first..=start.year() - 1)?;
            spec = spec.with_strike(priced.strike);
        }
    } else if let StrikeRule::HistoricalQuantile(_) = spec.strike_rule {
        bail!("historical strike rule needs --series");
    }
    ensure!(t0 <= t1, "pricing day {t0} is after the start of the risk period {t1}");
    Ok(Contract { spec, t0, state: st })
}

/// HDD strike at quantile `q` from the inverted CAT law: `HDD ~ N T_b - CAT`.
fn fourier_strike(spec: &PayoffSpec, c: &Contract, params: &ModelParams, grid: &GridConfig, q: f64) -> Result<f64> {
    let idx = &spec.index;
    let phi = |u: f64| charfn_cat(c.t0, idx.t1, idx.t2, u, c.state, params, grid.riccati_delta).expect("validated");
    let cdf = invert_cdf(phi, grid)?;
    let target = 1.0 - q;
    let k = (0..cdf.len()).find(|&k| cdf.cdf[k] >= target).context("quantile outside the inverted grid")?;
    let x = if k == 0 {
        cdf.x(0)
    } else {
        let (f0, f1) = (cdf.cdf[k - 1], cdf.cdf[k]);
        cdf.x(k - 1) + (target - f0) / (f1 - f0) * cdf.delta_x
    };
    Ok(idx.days() as f64 * idx.base_temp - x)
}

fn dump_charfn(path: &Path, spec: &PayoffSpec, c: &Contract, params: &ModelParams, delta: f64) -> Result<()> {
    let idx = &spec.index;
    let span = idx.days() as f64;
    let mut w = create(path)?;
    writeln!(w, "u,re,im")?;
    for j in 0..=400 {
        let u = -2.0 + 4.0 * j as f64 / 400.0;
        let phi = if span > 1.0 {
            charfn_cat(c.t0, idx.t1, idx.t2, u / span.sqrt(), c.state, params, delta)?
        } else {
            charfn_temperature(u, c.t0, idx.t1, c.state, params, delta)?
        };
        writeln!(w, "{u},{},{}", phi.re, phi.im)?;
    }
    Ok(w.flush()?)
}

fn run_price(a: PriceArgs) -> Result<()> {
    let (params, q) = load_params(&a.params)?;
    let params = without_correlation(params);
    let series = a.series.as_deref().map(|p| load(p, &a.format)).transpose()?;
    let c = contract(
        &params,
        q,
        &a.contract,
        a.t0.as_deref(),
        &a.calendar,
        &a.state,
        series.as_ref().map(|s| (s, a.state_from_series)),
    )?;
    ensure!(series.is_some() || !a.state_from_series, "--state-from-series needs --series");
    let grid = GridConfig { n: a.fft_n, riccati_delta: a.riccati_delta, ..Default::default() };
    let mc = McConfig { state: Some(c.state), level: a.level, ..McConfig::new(c.t0, a.paths, a.seed) };
    let idx = c.spec.index;

    let out = match a.method {
        Method::Mc => {
            let paths = mc.simulate(&params, &idx)?;
            let (d, spec) = mc_price_at(&paths, &c.spec, a.level)?;
            json!({
                "method": "mc", "strike": spec.strike, "mean": d.mean, "ci95": d.ci95_halfwidth,
                "var95": d.var95, "cvar95": d.cvar95, "n_paths": d.n_samples,
            })
        }
        Method::Cv => {
            let (r, spec) = price_with_control_variate(&params, &c.spec, &mc, &grid)?;
            let d = &r.distribution;
            json!({
                "method": "cv", "strike": spec.strike, "mean": d.mean, "ci95": d.ci95_halfwidth,
                "var95": d.var95, "cvar95": d.cvar95, "n_paths": d.n_samples,
                "lambda_star": r.lambda_star, "variance_ratio": r.variance_ratio,
                "correlation": r.correlation, "fft_leg": r.fft_leg, "fallback": r.fallback,
            })
        }
        Method::Fft => {
            let spec = match c.spec.strike_rule {
                StrikeRule::SimulatedQuantile(level) if !c.spec.is_resolved() => {
                    c.spec.with_strike(fourier_strike(&c.spec, &c, &params, &grid, level)?)
                }
                _ => c.spec,
            };
            let price = hdd_option_via_cat(&spec, c.t0, c.state, &params, &grid)?;
            json!({ "method": "fft", "strike": spec.strike, "mean": price, "ci95": 0.0 })
        }
    };
    if let Some(p) = &a.dump_charfn {
        dump_charfn(p, &c.spec, &c, &params, a.riccati_delta)?;
    }
    let mut out = out;
    out["index"] = json!(idx.kind);
    out["t0"] = json!(c.t0);
    out["t1"] = json!(idx.t1);
    out["t2"] = json!(idx.t2);
    write_json(&out, None)
}

fn run_baseline(a: BaselineArgs) -> Result<()> {
    let series = load(&a.series, &a.format)?;
    let index = IndexSpec::new(index_kind(a.index), a.base_temp, 0.0, 0.0)?;
    let spec = PayoffSpec::new(index, StrikeRule::parse(&a.strike_rule)?, a.cap)?;
    ensure!(
        !matches!(spec.strike_rule, StrikeRule::SimulatedQuantile(_)),
        "the index model uses historical:q or fixed strikes"
    );
    let r = index_model_price(&series, &spec, a.month, a.from_year..=a.to_year)?;
    write_json(
        &json!({
            "price": r.price, "strike": r.strike, "shape": r.fit.shape, "scale": r.fit.scale,
            "recentering": r.recentering, "years": r.sample.years, "index": r.sample.index_values,
            "detrended": r.sample.detrended,
        }),
        None,
    )
}

const MONTH_DAYS: [usize; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

fn run_compare(a: CompareArgs) -> Result<()> {
    let (params, _) = load_params(&a.params)?;
    let params = without_correlation(params);
    let series = a.series.as_deref().map(|p| load(p, &a.format)).transpose()?;
    let grid = GridConfig::default();
    let mut rows = Vec::with_capacity(12);
    for m in 1..=12u32 {
        let first = NaiveDate::from_ymd_opt(a.year, m, 1).context("bad contract year")?;
        let t1 = a.calendar.day(&first.to_string())?;
        let t2 = t1 + (MONTH_DAYS[m as usize - 1] - 1) as f64;
        let index = IndexSpec::new(IndexKind::Hdd, a.base_temp, t1, t2)?;
        let spec = PayoffSpec::new(index, StrikeRule::SimulatedQuantile(a.quantile), f64::INFINITY)?;
        let mc = McConfig::new(t1 - a.lead, a.paths, a.seed);
        let (cv, resolved) = price_with_control_variate(&params, &spec, &mc, &grid)?;
        let paths = mc.simulate(&params, &index)?;
        let (plain, _) = mc_price_at(&paths, &resolved, mc.level)?;
        let fft = hdd_option_via_cat(&resolved, mc.t0, mc.state(&params), &params, &grid)?;
        let base = match &series {
            Some(s) => {
                let hspec = PayoffSpec::new(index, StrikeRule::HistoricalQuantile(a.quantile), f64::INFINITY)?;
                match index_model_price(s, &hspec, m, s.start_date.year()..=a.year - 1) {
                    Ok(r) => (r.strike, r.price),
                    Err(e) => {
                        log::warn!("month {m}: index model unavailable: {e}");
                        (f64::NAN, f64::NAN)
                    }
                }
            }
            None => (f64::NAN, f64::NAN),
        };
        log::info!("month {m}: mc {:.3} cv {:.3} fft {:.3}", plain.mean, cv.distribution.mean, fft);
        rows.push((m, resolved.strike, plain, fft, cv, base));
    }
    let mut w: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(
        w,
        "month,strike,mc_mean,mc_ci95,fft,cv_mean,cv_ci95,correlation,variance_ratio,baseline_strike,baseline"
    )?;
    for (m, k, plain, fft, cv, (bk, bp)) in rows {
        writeln!(
            w,
            "{m},{k},{},{},{fft},{},{},{},{},{bk},{bp}",
            plain.mean,
            plain.ci95_halfwidth,
            cv.distribution.mean,
            cv.distribution.ci95_halfwidth,
            cv.correlation,
            cv.variance_ratio
        )?;
    }
    Ok(w.flush()?)
}

fn run_sensitivity(a: SensitivityArgs) -> Result<()> {
    let (params, q) = load_params(&a.params)?;
    let params = without_correlation(params);
    let axis = match a.axis {
        AxisArg::Kappa => SweepAxis::Kappa,
        AxisArg::Eta2 => SweepAxis::Eta2,
        AxisArg::K => SweepAxis::BigK,
        AxisArg::LeadTime => SweepAxis::LeadTime,
        AxisArg::Moneyness => SweepAxis::Moneyness,
    };
    let c = contract(&params, q, &a.contract, a.t0.as_deref(), &a.calendar, &a.state, None)?;
    let explicit_state = a.state.x0.is_some() || a.state.zeta0.is_some();
    let mc = McConfig { state: explicit_state.then_some(c.state), ..McConfig::new(c.t0, a.paths, a.seed) };
    let points = sweep(&params, axis, &a.values, &c.spec, &mc)?;

    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut w = create(&a.out_dir.join("sweep.csv"))?;
    write_sweep_csv(&mut w, &points)?;
    w.flush()?;
    for p in &points {
        let mut h = create(&a.out_dir.join(format!("histogram_{axis}_{}.csv", p.axis_value)))?;
        write_histogram_csv(&mut h, &p.histogram)?;
        h.flush()?;
    }
    log::info!("wrote {} sweep points to {}", points.len(), a.out_dir.display());
    Ok(())
}

fn run_diagnose(a: DiagnoseArgs) -> Result<()> {
    let series = load(&a.input, &a.format)?;
    let fit = estimate_trend(&series)?;
    let hurst = hurst_estimate(&fit.detrended, &DEFAULT_HURST_QS, &DEFAULT_HURST_LAGS)?;
    let p = pacf(&fit.detrended.residuals, a.max_lag)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut w = create(&a.out_dir.join("hurst.csv"))?;
    write_hurst_csv(&mut w, &hurst)?;
    w.flush()?;
    let mut w = create(&a.out_dir.join("pacf.csv"))?;
    write_pacf_csv(&mut w, &p)?;
    w.flush()?;
    write_json(&json!({ "hurst": hurst.h, "per_q": hurst.per_q, "pacf": p.values, "pacf_band": p.band }), None)
}

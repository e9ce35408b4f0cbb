//! Daily temperature series on a 365-day calendar plus the regularity and
//! partial-autocorrelation diagnostics.

use chrono::{Datelike, Duration, NaiveDate};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::seasonal::TrendSeasonalParams;
use crate::stats;

pub fn is_leap_day(d: NaiveDate) -> bool {
    d.month() == 2 && d.day() == 29
}

/// Next calendar day, skipping February 29.
pub fn next_day(d: NaiveDate) -> NaiveDate {
    let n = d + Duration::days(1);
    if is_leap_day(n) {
        n + Duration::days(1)
    } else {
        n
    }
}

/// Number of 365-day-calendar days from `from` to `to` (negative if `to` is
/// earlier). Leap days themselves map onto the following March 1.
pub fn noleap_days_between(from: NaiveDate, to: NaiveDate) -> i64 {
    if to < from {
        return -noleap_days_between(to, from);
    }
    let mut leap_days = 0;
    for y in from.year()..=to.year() {
        if let Some(f29) = NaiveDate::from_ymd_opt(y, 2, 29) {
            if f29 >= from && f29 < to {
                leap_days += 1;
            }
        }
    }
    (to - from).num_days() - leap_days
}

/// Date reached after `days` steps of [`next_day`].
pub fn noleap_date(start: NaiveDate, days: usize) -> NaiveDate {
    let whole_years = days / 365;
    let mut d = start;
    // Jumping a whole 365-day year preserves the month/day unless we land on Feb 29.
    for _ in 0..whole_years {
        let y = d.year() + 1;
        d = NaiveDate::from_ymd_opt(y, d.month(), d.day()).unwrap_or_else(|| NaiveDate::from_ymd_opt(y, 3, 1).unwrap());
    }
    for _ in 0..days % 365 {
        d = next_day(d);
    }
    d
}

/// Equally spaced daily observations with February 29 removed.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSeries {
    pub start_date: NaiveDate,
    pub values: Vec<f64>,
    /// Sampling step in days.
    pub delta: f64,
}

impl TemperatureSeries {
    pub fn new(start_date: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty temperature series".into()));
        }
        if is_leap_day(start_date) {
            return Err(Error::InvalidInput("series cannot start on February 29".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite temperature at index {i}")));
        }
        Ok(Self { start_date, values, delta: 1.0 })
    }

    /// Sub-daily sampling, used for simulated series only.
    pub fn with_delta(start_date: NaiveDate, values: Vec<f64>, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidInput(format!("delta must be > 0, got {delta}")));
        }
        Ok(Self { delta, ..Self::new(start_date, values)? })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Model time of observation `i`, in days from the first observation.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.delta
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        noleap_date(self.start_date, (i as f64 * self.delta).floor() as usize)
    }

    /// Index of the observation on `date`, if it is inside the series (daily data only).
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let d = noleap_days_between(self.start_date, date);
        (d >= 0 && (d as usize) < self.len() && !is_leap_day(date)).then_some(d as usize)
    }
}

/// Column names of the input CSV.
#[derive(Debug, Clone)]
pub struct CsvFormat {
    pub date_column: String,
    pub value_column: String,
}

impl Default for CsvFormat {
    fn default() -> Self {
        Self { date_column: "date".into(), value_column: "tavg".into() }
    }
}

/// Load a `date,tavg` CSV with ISO dates, dropping February 29 and failing on gaps.
pub fn load_series(path: impl AsRef<Path>, format: &CsvFormat) -> Result<TemperatureSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path.as_ref()).map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or(Error::Parse { row: 1, msg: format!("missing column `{name}`") })
    };
    let (dc, vc) = (col(&format.date_column)?, col(&format.value_column)?);

    let mut start: Option<NaiveDate> = None;
    let mut last: Option<NaiveDate> = None;
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // Header is row 1.
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        let field = |c: usize| rec.get(c).ok_or(Error::Parse { row, msg: "short row".into() });
        let date = NaiveDate::parse_from_str(field(dc)?, "%Y-%m-%d")
            .map_err(|e| Error::Parse { row, msg: format!("bad date `{}`: {e}", field(dc).unwrap_or("")) })?;
        let value: f64 = field(vc)?
            .parse()
            .map_err(|e| Error::Parse { row, msg: format!("bad temperature `{}`: {e}", field(vc).unwrap_or("")) })?;
        if !value.is_finite() {
            return Err(Error::Parse { row, msg: "non-finite temperature".into() });
        }
        if let Some(prev) = last {
            if date <= prev {
                return Err(Error::Unordered(row));
            }
            let expected = if is_leap_day(prev) { prev + Duration::days(1) } else { next_day(prev) };
            if !is_leap_day(date) && date != expected {
                return Err(Error::MissingDay(expected));
            }
        }
        last = Some(date);
        if is_leap_day(date) {
            continue;
        }
        start.get_or_insert(date);
        values.push(value);
    }
    match start {
        Some(s) => TemperatureSeries::new(s, values),
        None => Err(Error::InvalidInput("no observations in file".into())),
    }
}

pub fn save_series(path: impl AsRef<Path>, series: &TemperatureSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_err)?;
    w.write_record(["date", "tavg"]).map_err(csv_err)?;
    let mut d = series.start_date;
    for (i, v) in series.values.iter().enumerate() {
        if i > 0 {
            d = next_day(d);
        }
        w.write_record([d.format("%Y-%m-%d").to_string(), format!("{v:?}")]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        },
        _ => {
            let row = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse { row, msg: e.to_string() }
        }
    }
}

/// Residuals `T~_t = T_t - s(t)` of a series about a fitted trend.
#[derive(Debug, Clone, PartialEq)]
pub struct DetrendedSeries {
    pub start_date: NaiveDate,
    pub delta: f64,
    pub residuals: Vec<f64>,
}

impl DetrendedSeries {
    pub fn from_series(base: &TemperatureSeries, trend: &TrendSeasonalParams) -> Self {
        let residuals = base.values.iter().enumerate().map(|(i, v)| v - trend.eval(base.time(i))).collect();
        Self { start_date: base.start_date, delta: base.delta, residuals }
    }

    /// Wrap already-detrended values (e.g. simulated `T~` paths).
    pub fn from_residuals(residuals: Vec<f64>, delta: f64) -> Self {
        Self { start_date: NaiveDate::from_ymd_opt(1970, 1, 1).unwrap(), delta, residuals }
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }
}

pub const DEFAULT_HURST_QS: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];
pub const DEFAULT_HURST_LAGS: [usize; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

#[derive(Debug, Clone)]
pub struct HurstEstimate {
    /// Average of `slope / q` over the exponents.
    pub h: f64,
    /// `(q, slope / q)` per exponent.
    pub per_q: Vec<(f64, f64)>,
    /// `(q, lag, m(q, lag))` table.
    pub m: Vec<(f64, usize, f64)>,
}

/// Empirical absolute moment `m(q, lag) = mean_i |x[(i+1) lag] - x[i lag]|^q`.
pub fn abs_moment(x: &[f64], q: f64, lag: usize) -> f64 {
    let steps = (x.len() - 1) / lag;
    (0..steps).map(|i| (x[(i + 1) * lag] - x[i * lag]).abs().powf(q)).sum::<f64>() / steps as f64
}

/// Regularity estimate: OLS slope of `log m(q, lag)` on `log lag`, divided by `q`.
pub fn hurst_estimate(series: &DetrendedSeries, qs: &[f64], lags: &[usize]) -> Result<HurstEstimate> {
    if qs.is_empty() {
        return Err(Error::InvalidInput("no moment exponents given".into()));
    }
    if lags.len() < 2 {
        return Err(Error::InvalidInput("at least two lags are needed for the log-log regression".into()));
    }
    if lags.contains(&0) {
        return Err(Error::InvalidInput("lags must be >= 1".into()));
    }
    let x = &series.residuals;
    if x.len() <= *lags.iter().max().unwrap() {
        return Err(Error::InvalidInput("series shorter than the largest lag".into()));
    }
    let log_lag: Vec<f64> = lags.iter().map(|&d| (d as f64).ln()).collect();
    let mut table = Vec::new();
    let mut per_q = Vec::new();
    for &q in qs {
        let ms: Vec<f64> = lags.iter().map(|&d| abs_moment(x, q, d)).collect();
        if ms.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidInput("zero increments: log-moment undefined".into()));
        }
        let logm: Vec<f64> = ms.iter().map(|m| m.ln()).collect();
        let (_, slope) = stats::ols_line(&log_lag, &logm);
        per_q.push((q, slope / q));
        table.extend(lags.iter().zip(&ms).map(|(&d, &m)| (q, d, m)));
    }
    let h = per_q.iter().map(|p| p.1).sum::<f64>() / per_q.len() as f64;
    Ok(HurstEstimate { h, per_q, m: table })
}

#[derive(Debug, Clone)]
pub struct Pacf {
    /// Partial autocorrelations at lags `1..=max_lag`.
    pub values: Vec<f64>,
    /// Half-width of the 95% band, `1.96 / sqrt(N)`.
    pub band: f64,
}

/// Durbin–Levinson partial autocorrelations from the biased sample autocovariances.
pub fn pacf(x: &[f64], max_lag: usize) -> Result<Pacf> {
    let n = x.len();
    if max_lag == 0 || 2 * max_lag >= n {
        return Err(Error::InvalidInput(format!("max_lag must be in 1..{}", n.div_ceil(2))));
    }
    let m = stats::mean(x);
    let acov = |k: usize| (0..n - k).map(|i| (x[i] - m) * (x[i + k] - m)).sum::<f64>() / n as f64;
    let c0 = acov(0);
    if !(c0 > 0.0) {
        return Err(Error::InvalidInput("constant series: zero variance".into()));
    }
    let rho: Vec<f64> = (0..=max_lag).map(|k| acov(k) / c0).collect();

    let mut phi = vec![0.0; max_lag + 1];
    let mut prev = vec![0.0; max_lag + 1];
    let mut v = 1.0;
    let mut out = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let num = rho[k] - (1..k).map(|j| prev[j] * rho[k - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        phi[k] = a;
        for j in 1..k {
            phi[j] = prev[j] - a * prev[k - j];
        }
        v *= 1.0 - a * a;
        out.push(a.clamp(-1.0, 1.0));
        prev[..=k].copy_from_slice(&phi[..=k]);
    }
    Ok(Pacf { values: out, band: 1.96 / (n as f64).sqrt() })
}

pub fn write_hurst_csv(mut w: impl Write, est: &HurstEstimate) -> Result<()> {
    writeln!(w, "q,delta,m")?;
    for (q, d, m) in &est.m {
        writeln!(w, "{q},{d},{m}")?;
    }
    Ok(())
}

pub fn write_pacf_csv(mut w: impl Write, p: &Pacf) -> Result<()> {
    writeln!(w, "lag,pacf,band")?;
    for (i, v) in p.values.iter().enumerate() {
        writeln!(w, "{},{v},{}", i + 1, p.band)?;
    }
    Ok(())
}

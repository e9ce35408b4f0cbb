use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "tempsv",
    version,
    about = "Stochastic-volatility temperature model: calibration, simulation and HDD/CDD/CAT pricing"
)]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate all model parameters from a daily temperature CSV.
    Calibrate(CalibrateArgs),
    /// Simulate joint temperature/volatility paths.
    Simulate(SimulateArgs),
    /// Price an index option by Monte Carlo, Fourier inversion or control variates.
    Price(PriceArgs),
    /// Index-model benchmark: gamma fit to the yearly historical index.
    Baseline(BaselineArgs),
    /// Per-month comparison of all pricing methods over one contract year.
    Compare(CompareArgs),
    /// Parameter sweep of Monte-Carlo prices.
    Sensitivity(SensitivityArgs),
    /// Roughness and autocorrelation diagnostics of the detrended series.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SeriesFormat {
    /// Name of the date column.
    #[arg(long, default_value = "date")]
    pub date_column: String,
    /// Name of the temperature column.
    #[arg(long, default_value = "tavg")]
    pub value_column: String,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Daily CSV with ISO dates; day 0 of the fitted model is its first row.
    pub input: PathBuf,
    #[command(flatten)]
    pub format: SeriesFormat,
    /// Realized-volatility window length.
    #[arg(long, default_value_t = 10)]
    pub q_window: usize,
    /// Harmonics of the seasonal variance.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub harmonics_sigma2: u8,
    /// Write the parameter document here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write residual quantile-quantile data (observed, Gaussian, simulated) as CSV.
    #[arg(long)]
    pub qq: Option<PathBuf>,
    /// Seed of the simulated path used in the qq table.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Day arguments accept an ISO date or a model day number.
#[derive(Args, Debug, Clone)]
pub struct Calendar {
    /// Date of model day 0.
    #[arg(long, default_value = "1980-01-01")]
    pub origin: String,
}

#[derive(Args, Debug, Clone)]
pub struct StateArgs {
    /// Detrended temperature at t0 (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Volatility at t0 (default sigma^2(t0)).
    #[arg(long)]
    pub zeta0: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[command(flatten)]
    pub calendar: Calendar,
    /// Start day.
    #[arg(long, allow_hyphen_values = true)]
    pub t0: String,
    /// Horizon in days.
    #[arg(long)]
    pub days: f64,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Time step in days.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[command(flatten)]
    pub state: StateArgs,
    /// Output file; `.csv` is written as text, anything else in the binary layout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mc,
    Fft,
    Cv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexArg {
    Hdd,
    Cdd,
    Cat,
}

#[derive(Args, Debug, Clone)]
pub struct ContractArgs {
    #[arg(long, value_enum, default_value = "hdd")]
    pub index: IndexArg,
    /// First day of the risk period.
    #[arg(long, allow_hyphen_values = true)]
    pub t1: String,
    /// Last day of the risk period (inclusive).
    #[arg(long, allow_hyphen_values = true)]
    pub t2: String,
    /// `quantile:q`, `historical:q` or a fixed strike.
    #[arg(long, default_value = "quantile:0.9")]
    pub strike_rule: String,
    /// Payoff cap; `inf` for none.
    #[arg(long, default_value = "inf")]
    pub cap: f64,
    #[arg(long, default_value_t = 15.5)]
    pub base_temp: f64,
}

#[derive(Args, Debug)]
pub struct PriceArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, value_enum, default_value = "mc")]
    pub method: Method,
    #[command(flatten)]
    pub contract: ContractArgs,
    /// Pricing day (default 30 days before t1).
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<String>,
    #[command(flatten)]
    pub calendar: Calendar,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 50_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Risk level of VaR/CVaR.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// FFT size (power of two).
    #[arg(long, default_value_t = 1 << 14)]
    pub fft_n: usize,
    /// Riccati step in days.
    #[arg(long, default_value_t = 0.1)]
    pub riccati_delta: f64,
    /// Observed daily series, used for historical strikes and `--state-from-series`.
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[command(flatten)]
    pub format: SeriesFormat,
    /// Price from the last observation: t0 is its day, the state is the last
    /// detrended value and the last realized volatility.
    #[arg(long)]
    pub state_from_series: bool,
    /// Dump (u, Re phi, Im phi) of the priced variable to this CSV.
    #[arg(long)]
    pub dump_charfn: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    /// Historical daily CSV.
    #[arg(long)]
    pub series: PathBuf,
    #[command(flatten)]
    pub format: SeriesFormat,
    #[arg(long, value_enum, default_value = "hdd")]
    pub index: IndexArg,
    /// Contract month (1-12).
    #[arg(long)]
    pub month: u32,
    /// First historical year.
    #[arg(long, default_value_t = 1980)]
    pub from_year: i32,
    /// Last historical year; the contract year is the next one.
    #[arg(long, default_value_t = 2018)]
    pub to_year: i32,
    #[arg(long, default_value = "historical:0.9")]
    pub strike_rule: String,
    #[arg(long, default_value = "inf")]
    pub cap: f64,
    #[arg(long, default_value_t = 15.5)]
    pub base_temp: f64,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Historical series for the index-model column.
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[command(flatten)]
    pub format: SeriesFormat,
    #[command(flatten)]
    pub calendar: Calendar,
    #[arg(long, default_value_t = 2019)]
    pub year: i32,
    /// Lead time t1 - t0 in days.
    #[arg(long, default_value_t = 30.0)]
    pub lead: f64,
    #[arg(long, default_value_t = 50_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Strike quantile level for both approaches.
    #[arg(long, default_value_t = 0.9)]
    pub quantile: f64,
    #[arg(long, default_value_t = 15.5)]
    pub base_temp: f64,
    /// Output CSV (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisArg {
    Kappa,
    Eta2,
    #[value(name = "K")]
    K,
    LeadTime,
    Moneyness,
}

#[derive(Args, Debug)]
pub struct SensitivityArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, value_enum)]
    pub axis: AxisArg,
    /// Comma-separated multipliers, lead times or quantile levels.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub contract: ContractArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<String>,
    #[command(flatten)]
    pub calendar: Calendar,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 50_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Directory receiving `sweep.csv` and one histogram CSV per point.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub format: SeriesFormat,
    #[arg(long, default_value_t = 20)]
    pub max_lag: usize,
    /// Directory receiving `hurst.csv` and `pacf.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

//! Command-line front end: `solve`, `rate`, `sweep` and `report`.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 a solve stopped at a
//! time or node limit, 3 internal error. Every command writes a
//! `manifest.json` into its output directory.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use getco::case_io::CaseError;
use getco::dlr::DlrError;
use getco::formulation::FormulationError;
use getco::scenario::ScenarioError;

#[derive(Debug, Parser)]
#[command(name = "getco", version, about = "Grid-enhancing technology co-optimization on DC power flow")]
pub struct Cli {
    /// TOML file with [formulation], [solver] and [scenario] sections;
    /// command-line flags take precedence over it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// -v for progress, -vv for solver detail
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one case for one hour or a horizon and print the cost summary
    Solve(SolveArgs),
    /// Compute dynamic line ratings from a weather series
    Rate(RateArgs),
    /// Run the DLR x VID cost-matrix sweep
    Sweep(SweepArgs),
    /// Render a previous run's results as markdown and SVG
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Branching {
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Args)]
pub struct WeatherArgs {
    /// weather CSV (`hour,temp_c,wind_mps`)
    #[arg(long, conflicts_with = "profile")]
    pub weather: Option<PathBuf>,
    /// bundled weather profile: high_wind, low_wind or slr_ref
    #[arg(long)]
    pub profile: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// angle bound in radians
    #[arg(long)]
    pub theta_max: Option<f64>,
    /// value of lost load, $/MWh
    #[arg(long)]
    pub voll: Option<f64>,
    /// VID susceptance range as a fraction of nominal
    #[arg(long)]
    pub vid_range: Option<f64>,
    #[arg(long)]
    pub cost_segments: Option<usize>,
    /// balance rows use total line flows instead of busbar shares
    #[arg(long)]
    pub strict_balance: bool,
    #[arg(long, conflicts_with = "optimized_topology")]
    pub fixed_topology: bool,
    #[arg(long)]
    pub optimized_topology: bool,
    /// relative optimality gap target
    #[arg(long)]
    pub gap: Option<f64>,
    /// seconds per solve
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub node_limit: Option<usize>,
    #[arg(long, value_enum)]
    pub branching: Option<Branching>,
    /// hourly load multipliers CSV (`hour,multiplier`); bundled profile by default
    #[arg(long)]
    pub load_profile: Option<PathBuf>,
    /// conductor JSON; bundled Drake parameters by default
    #[arg(long)]
    pub conductors: Option<PathBuf>,
    /// fraction of each static rating kept (1 = no congestion)
    #[arg(long)]
    pub congestion: Option<f64>,
    #[command(flatten)]
    pub weather: WeatherArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// MATPOWER or JSON case file; `case24` / `case118` select bundled cases
    #[arg(long)]
    pub case: String,
    /// hours to solve, e.g. `12`, `0-23` or `6,12,18`
    #[arg(long, conflicts_with = "blocks")]
    pub hour: Option<String>,
    /// four 6-hour blocks instead of single hours
    #[arg(long)]
    pub blocks: bool,
    /// comma-separated ids of DLR-equipped lines
    #[arg(long, value_delimiter = ',')]
    pub dlr_lines: Vec<u32>,
    /// comma-separated ids of VID-equipped lines
    #[arg(long, value_delimiter = ',')]
    pub vid_lines: Vec<u32>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "getco-out/solve")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub weather: WeatherArgs,
    #[arg(long)]
    pub conductors: Option<PathBuf>,
    /// rate every line of this case instead of the default conductor alone
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long, default_value = "getco-out/rate")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub case: String,
    /// DLR line counts, e.g. `0,4,8,12,16,20`
    #[arg(long, value_delimiter = ',')]
    pub dlr: Option<Vec<usize>>,
    /// VID line counts
    #[arg(long, value_delimiter = ',')]
    pub vid: Option<Vec<usize>>,
    /// hours to solve, e.g. `0-23`
    #[arg(long, conflicts_with = "blocks")]
    pub hours: Option<String>,
    #[arg(long)]
    pub blocks: bool,
    /// explicit priority order (comma-separated line ids) instead of the
    /// baseline loading ranking
    #[arg(long, value_delimiter = ',')]
    pub priority: Option<Vec<u32>>,
    #[arg(long)]
    pub name: Option<String>,
    /// worker threads for cells and hours
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "getco-out/sweep")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// output directory of a previous run (must contain manifest.json)
    pub dir: PathBuf,
    /// defaults to `<dir>/report`
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Marker for errors caused by the user's inputs.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

/// What a command reports back besides success.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    LimitReached,
}

fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if cause.is::<InputError>()
            || cause.is::<CaseError>()
            || cause.is::<DlrError>()
            || cause.is::<FormulationError>()
            || cause.is::<std::io::Error>()
            || cause.is::<toml::de::Error>()
            || cause.is::<serde_json::Error>()
            || cause.is::<csv::Error>()
        {
            return 1;
        }
        if let Some(s) = cause.downcast_ref::<ScenarioError>() {
            return match s {
                ScenarioError::MissingBaseline(_) | ScenarioError::HourMismatch(_) => 3,
                _ => 1,
            };
        }
    }
    3
}

pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = std::panic::catch_unwind(|| commands::run(&cli, &argv));
    match result {
        Ok(Ok(Outcome::Done)) => 0,
        Ok(Ok(Outcome::LimitReached)) => {
            eprintln!("warning: at least one solve stopped at its time or node limit");
            2
        }
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
        Err(_) => {
            eprintln!("error: internal failure (panic)");
            3
        }
    }
}

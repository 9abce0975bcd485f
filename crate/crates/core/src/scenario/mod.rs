//! Experiment protocol: congestion, line priority, DLR/VID count sweeps and
//! the metrics reported from them.

mod loading;
mod svg;
mod sweep;

pub use loading::{mean_line_loading, rank_priority_lines, LineLoading, LoadingReport, LoadingRow, PeriodFlows};
pub use svg::{cost_heatmap_svg, loading_scatter_svg};
pub use sweep::{congested_network, run_sweep, solve_period, CellResult, CostMatrix, PeriodResult, SweepOptions, SweepOutput};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case_io::{parse_case, CaseError, LoadProfile, WeatherSample, WeatherSeries, UNLIMITED_RATING_MW};
use crate::dlr::{ConductorSet, DlrError};
use crate::formulation::{FormulationConfig, FormulationError, TopologyMode};
use crate::network::{LineId, Network};
use crate::solver::SolverConfig;

pub const CASE24: &str = include_str!("../../data/case24_ieee_rts.m");
pub const CASE118: &str = include_str!("../../data/case118.m");
pub const LOAD_PROFILE_RTS: &str = include_str!("../../data/load_profile_rts.csv");
pub const WEATHER_HIGH_WIND: &str = include_str!("../../data/weather_high_wind.csv");
pub const WEATHER_LOW_WIND: &str = include_str!("../../data/weather_low_wind.csv");
pub const WEATHER_SLR_REF: &str = include_str!("../../data/weather_slr_ref.csv");
pub const CONDUCTORS_DRAKE: &str = include_str!("../../data/conductor_drake.json");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Dlr(#[from] DlrError),
    #[error("hour {hour}: {source}")]
    Formulation { hour: usize, source: FormulationError },
    #[error("baseline has no solution for hour {0}")]
    MissingBaseline(usize),
    #[error("hour sets differ: {0}")]
    HourMismatch(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

/// Weather driving the DLR factors. Bundled profiles are synthetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeatherProfile {
    HighWind,
    LowWind,
    SlrRef,
    /// CSV text with `hour,temp_c,wind_mps`
    Custom { label: String, csv: String },
}

impl WeatherProfile {
    pub fn label(&self) -> &str {
        match self {
            WeatherProfile::HighWind => "high_wind (synthetic)",
            WeatherProfile::LowWind => "low_wind (synthetic)",
            WeatherProfile::SlrRef => "slr_ref",
            WeatherProfile::Custom { label, .. } => label,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "high_wind" => Some(WeatherProfile::HighWind),
            "low_wind" => Some(WeatherProfile::LowWind),
            "slr_ref" => Some(WeatherProfile::SlrRef),
            _ => None,
        }
    }

    pub fn series(&self) -> Result<WeatherSeries, CaseError> {
        WeatherSeries::from_csv(match self {
            WeatherProfile::HighWind => WEATHER_HIGH_WIND,
            WeatherProfile::LowWind => WEATHER_LOW_WIND,
            WeatherProfile::SlrRef => WEATHER_SLR_REF,
            WeatherProfile::Custom { csv, .. } => csv,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// individual hours, each weighted 1
    Hours(Vec<usize>),
    /// four 6-hour blocks of averaged load and weather, each weighted 6
    SixHourBlocks,
}

impl Horizon {
    pub fn full_day() -> Self {
        Horizon::Hours((0..24).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    /// baseline mean loading, descending
    Auto,
    Explicit(Vec<LineId>),
}

/// One solved period of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Period {
    /// hour key used for ratings and formulation metadata
    pub hour: usize,
    pub load_multiplier: f64,
    pub weather: WeatherSample,
    pub weight: f64,
}

/// Resolves the horizon against a load profile and weather series.
pub fn periods(horizon: &Horizon, profile: &LoadProfile, weather: &WeatherSeries) -> Result<Vec<Period>, ScenarioError> {
    let sample = |h: usize| weather.at(h).copied().ok_or(DlrError::MissingWeatherHour(h));
    match horizon {
        Horizon::Hours(hours) => {
            let mut seen = std::collections::BTreeSet::new();
            hours
                .iter()
                .map(|&h| {
                    if !seen.insert(h) {
                        return Err(ScenarioError::Invalid(format!("hour {h} listed twice")));
                    }
                    Ok(Period { hour: h, load_multiplier: profile.multiplier(h)?, weather: sample(h)?, weight: 1.0 })
                })
                .collect()
        }
        Horizon::SixHourBlocks => (0..4)
            .map(|b| {
                let hours: Vec<usize> = (6 * b..6 * b + 6).collect();
                let mut mult = 0.0;
                let (mut t, mut v) = (0.0, 0.0);
                for &h in &hours {
                    mult += profile.multiplier(h)?;
                    let s = sample(h)?;
                    t += s.ambient_temp;
                    v += s.wind_speed;
                }
                let hour = 6 * b;
                Ok(Period {
                    hour,
                    load_multiplier: mult / 6.0,
                    weather: WeatherSample { hour, ambient_temp: t / 6.0, wind_speed: v / 6.0 },
                    weight: 6.0,
                })
            })
            .collect(),
    }
}

/// Everything a sweep needs besides the protocol knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInputs {
    /// uncongested case; generator minimum outputs are zeroed on use
    pub network: Network,
    pub profile: LoadProfile,
    pub weather: WeatherSeries,
    pub conductors: ConductorSet,
}

impl ScenarioInputs {
    /// Bundled case (`case24` or `case118`) with the bundled load profile,
    /// Drake conductors and the requested weather profile.
    pub fn bundled(case: &str, weather: &WeatherProfile) -> Result<Self, ScenarioError> {
        let text = match case {
            "case24" => CASE24,
            "case118" => CASE118,
            other => return Err(ScenarioError::Invalid(format!("no bundled case `{other}`"))),
        };
        Ok(ScenarioInputs {
            network: parse_case(text)?,
            profile: LoadProfile::from_csv(LOAD_PROFILE_RTS)?,
            weather: weather.series()?,
            conductors: ConductorSet::from_json(CONDUCTORS_DRAKE)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub name: String,
    pub case_id: String,
    pub weather: WeatherProfile,
    pub congestion_factor: f64,
    pub dlr_counts: Vec<usize>,
    pub vid_counts: Vec<usize>,
    pub topology_mode: TopologyMode,
    pub horizon: Horizon,
    pub priority: Priority,
    /// cells (d, v) compared against (0, 0) in the loading report
    pub loading_cells: Vec<(usize, usize)>,
    pub formulation: FormulationConfig,
    pub solver: SolverConfig,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            name: "sweep".into(),
            case_id: "case24".into(),
            weather: WeatherProfile::HighWind,
            congestion_factor: 0.5,
            dlr_counts: vec![0, 4, 8, 12, 16, 20],
            vid_counts: vec![0, 4, 8, 12, 16, 20],
            topology_mode: TopologyMode::Fixed,
            horizon: Horizon::full_day(),
            priority: Priority::Auto,
            loading_cells: vec![(8, 0), (0, 8), (8, 8)],
            formulation: FormulationConfig::default(),
            solver: SolverConfig { log_every: 0, ..SolverConfig::default() },
        }
    }
}

impl ScenarioSpec {
    pub fn check(&self, net: &Network) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if !(self.congestion_factor > 0.0 && self.congestion_factor <= 1.0) {
            return bad(format!("congestion_factor {} outside (0, 1]", self.congestion_factor));
        }
        let n = net.lines.len();
        for (what, counts) in [("dlr", &self.dlr_counts), ("vid", &self.vid_counts)] {
            if counts.is_empty() {
                return bad(format!("{what} counts are empty"));
            }
            if let Some(c) = counts.iter().find(|&&c| c > n) {
                return bad(format!("{what} count {c} exceeds the {n} lines of the case"));
            }
            if counts.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("{what} counts must be strictly increasing"));
            }
        }
        if let Priority::Explicit(list) = &self.priority {
            let mut seen = std::collections::BTreeSet::new();
            for id in list {
                if net.line_position(*id).is_none() || !seen.insert(*id) {
                    return bad(format!("priority list entry {id} is unknown or repeated"));
                }
            }
            let need = self.dlr_counts.iter().chain(&self.vid_counts).max().copied().unwrap_or(0);
            if list.len() < need {
                return bad(format!("priority list has {} lines, counts need {need}", list.len()));
            }
        }
        if let Horizon::Hours(h) = &self.horizon {
            if h.is_empty() || h.iter().any(|&h| h >= 24) {
                return bad("hours must be a non-empty subset of 0..=23".into());
            }
        }
        self.formulation.check().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.solver.check().map_err(ScenarioError::Invalid)
    }
}

/// Limits every line to `factor` times its static rating. Lines without a
/// real rating (the unlimited surrogate) get `factor` times their largest
/// absolute flow over the given base solutions instead (at least 1 MW).
pub fn apply_congestion(net: &Network, base: &[PeriodFlows], factor: f64) -> Result<Network, ScenarioError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(ScenarioError::Invalid(format!("congestion factor {factor} must be positive")));
    }
    let mut out = net.clone();
    for l in &mut out.lines {
        if l.p_max_static >= UNLIMITED_RATING_MW {
            if base.is_empty() {
                return Err(ScenarioError::MissingBaseline(0));
            }
            let peak = base.iter().map(|p| p.flows.get(&l.id).copied().unwrap_or(0.0).abs()).fold(0.0, f64::max);
            l.p_max_static = (factor * peak).max(1.0);
        } else {
            l.p_max_static *= factor;
        }
    }
    Ok(out)
}

pub fn has_unlimited_lines(net: &Network) -> bool {
    net.lines.iter().any(|l| l.p_max_static >= UNLIMITED_RATING_MW)
}

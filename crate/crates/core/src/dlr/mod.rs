//! Weather-driven line ratings.
//!
//! Ratings are expressed as a factor `alpha = I_dlr / I_slr` applied to the
//! static MW rating of each equipped line. Without a voltage in the DC model
//! the current ratio is used directly as the power ratio.

mod ieee738;

pub use ieee738::{heat_terms, resistance_at, solar_position, steady_state_current, HeatTerms, COEF};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case_io::WeatherSeries;
use crate::network::{LineId, Network};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DlrError {
    #[error("no positive rating exists (net cooling {net_cooling:.3} W/m): {reason}")]
    InfeasibleRating { net_cooling: f64, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("weather series has no sample for hour {0}")]
    MissingWeatherHour(usize),
    #[error("invalid conductor file: {0}")]
    Json(String),
}

/// Conductor data for the heat balance. `heat_capacity` only matters for
/// transient tracking and is carried for completeness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductorParams {
    /// outer diameter, m
    pub diameter: f64,
    pub emissivity: f64,
    pub solar_absorptivity: f64,
    /// Ω/m at `temp_low`
    pub resistance_low: f64,
    pub temp_low: f64,
    /// Ω/m at `temp_high`
    pub resistance_high: f64,
    pub temp_high: f64,
    /// rated (maximum average) conductor temperature, °C
    pub max_conductor_temp: f64,
    /// J/(m·°C)
    pub heat_capacity: f64,
    /// m above sea level
    pub elevation: f64,
    /// degrees north
    pub latitude: f64,
    /// line azimuth, degrees clockwise from north (90 = east-west)
    #[serde(default = "default_azimuth")]
    pub line_azimuth: f64,
}

fn default_azimuth() -> f64 {
    90.0
}

impl ConductorParams {
    /// 795 kcmil 26/7 "Drake" ACSR.
    pub fn drake() -> Self {
        ConductorParams {
            diameter: 0.02814,
            emissivity: 0.8,
            solar_absorptivity: 0.8,
            resistance_low: 7.283e-5,
            temp_low: 25.0,
            resistance_high: 8.688e-5,
            temp_high: 75.0,
            max_conductor_temp: 100.0,
            heat_capacity: 1310.0,
            elevation: 0.0,
            latitude: 30.3,
            line_azimuth: 90.0,
        }
    }

    pub fn check(&self) -> Result<(), DlrError> {
        let ok = self.diameter > 0.0
            && (0.0..=1.0).contains(&self.emissivity)
            && (0.0..=1.0).contains(&self.solar_absorptivity)
            && self.resistance_low > 0.0
            && self.resistance_high >= self.resistance_low
            && self.temp_high > self.temp_low
            && self.max_conductor_temp.is_finite()
            && self.elevation.is_finite()
            && self.latitude.is_finite();
        if ok {
            Ok(())
        } else {
            Err(DlrError::InvalidInput(format!("conductor parameters out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingConditions {
    /// °C
    pub ambient_temp: f64,
    /// m/s
    pub wind_speed: f64,
    /// degrees between wind and conductor axis
    pub wind_angle: f64,
    pub solar: bool,
    pub hour_of_day: f64,
    pub day_of_year: u32,
}

impl RatingConditions {
    /// Static-rating reference: 40 °C, 0.5 m/s, perpendicular wind, no sun.
    pub fn slr_reference() -> Self {
        RatingConditions {
            ambient_temp: 40.0,
            wind_speed: 0.5,
            wind_angle: 90.0,
            solar: false,
            hour_of_day: 12.0,
            day_of_year: 172,
        }
    }

    pub fn with_weather(self, ambient_temp: f64, wind_speed: f64, hour_of_day: f64) -> Self {
        RatingConditions { ambient_temp, wind_speed, hour_of_day, ..self }
    }

    pub fn check(&self) -> Result<(), DlrError> {
        let ok = self.wind_speed >= 0.0
            && self.wind_speed.is_finite()
            && self.ambient_temp.is_finite()
            && self.wind_angle.is_finite()
            && self.hour_of_day.is_finite()
            && (1..=366).contains(&self.day_of_year);
        if ok {
            Ok(())
        } else {
            Err(DlrError::InvalidInput(format!("weather conditions out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingFactor {
    pub alpha: f64,
    pub i_dlr: f64,
    pub i_slr: f64,
}

pub fn rating_factor(
    c: &ConductorParams,
    w: &RatingConditions,
    slr_ref: &RatingConditions,
) -> Result<RatingFactor, DlrError> {
    let i_dlr = steady_state_current(c, w)?;
    let i_slr = steady_state_current(c, slr_ref)?;
    Ok(RatingFactor { alpha: i_dlr / i_slr, i_dlr, i_slr })
}

/// Default conductor plus per-line overrides, as stored in the conductor
/// JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductorSet {
    pub default: ConductorParams,
    #[serde(default)]
    pub overrides: BTreeMap<LineId, ConductorParams>,
}

impl Default for ConductorSet {
    fn default() -> Self {
        ConductorSet { default: ConductorParams::drake(), overrides: BTreeMap::new() }
    }
}

impl ConductorSet {
    pub fn from_json(text: &str) -> Result<Self, DlrError> {
        let set: ConductorSet = serde_json::from_str(text).map_err(|e| DlrError::Json(e.to_string()))?;
        set.default.check()?;
        for c in set.overrides.values() {
            c.check()?;
        }
        Ok(set)
    }

    pub fn for_line(&self, id: LineId) -> &ConductorParams {
        self.overrides.get(&id).unwrap_or(&self.default)
    }
}

/// Effective MW limit of one line at one hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourlyRating {
    pub hour: usize,
    pub alpha: f64,
    pub p_max_effective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingSeries {
    pub hours: Vec<usize>,
    /// keyed by line id; entries ordered as `hours`
    pub lines: BTreeMap<LineId, Vec<HourlyRating>>,
}

impl RatingSeries {
    /// Static ratings at every listed hour.
    pub fn static_only(net: &Network, hours: &[usize]) -> Self {
        let lines = net
            .lines
            .iter()
            .map(|l| {
                let v = hours.iter().map(|&hour| HourlyRating { hour, alpha: 1.0, p_max_effective: l.p_max_static }).collect();
                (l.id, v)
            })
            .collect();
        RatingSeries { hours: hours.to_vec(), lines }
    }

    pub fn get(&self, line: LineId, hour: usize) -> Option<&HourlyRating> {
        let k = self.hours.iter().position(|&h| h == hour)?;
        self.lines.get(&line).and_then(|v| v.get(k))
    }

    pub fn limit(&self, line: LineId, hour: usize) -> Option<f64> {
        self.get(line, hour).map(|r| r.p_max_effective)
    }

    /// CSV with one row per line and hour.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("line,hour,alpha,p_max_mw\n");
        for (id, v) in &self.lines {
            for r in v {
                s.push_str(&format!("{},{},{:.6},{:.4}\n", id.0, r.hour, r.alpha, r.p_max_effective));
            }
        }
        s
    }
}

/// Per-line hourly limits. Equipped lines get `p_max_static * alpha(hour)`;
/// the per-hour conditions take angle, sun and day from `slr_ref`.
pub fn build_rating_series(
    net: &Network,
    weather: &WeatherSeries,
    conductors: &ConductorSet,
    slr_ref: &RatingConditions,
    hours: &[usize],
) -> Result<RatingSeries, DlrError> {
    let mut factors: BTreeMap<(LineId, usize), f64> = BTreeMap::new();
    let mut cache: Vec<(&ConductorParams, usize, f64)> = Vec::new();
    for l in net.lines.iter().filter(|l| l.dlr_equipped) {
        let c = conductors.for_line(l.id);
        for &hour in hours {
            let alpha = match cache.iter().find(|(cc, h, _)| *cc == c && *h == hour) {
                Some(&(_, _, a)) => a,
                None => {
                    let s = weather.at(hour).ok_or(DlrError::MissingWeatherHour(hour))?;
                    let w = slr_ref.with_weather(s.ambient_temp, s.wind_speed, hour as f64 + 0.5);
                    let a = rating_factor(c, &w, slr_ref)?.alpha;
                    cache.push((c, hour, a));
                    a
                }
            };
            factors.insert((l.id, hour), alpha);
        }
    }
    let mut series = RatingSeries::static_only(net, hours);
    for (id, v) in series.lines.iter_mut() {
        for r in v.iter_mut() {
            if let Some(&a) = factors.get(&(*id, r.hour)) {
                r.alpha = a;
                r.p_max_effective *= a;
            }
        }
    }
    Ok(series)
}

//! Hourly load multipliers and weather samples (CSV).

use serde::{Deserialize, Serialize};

use super::CaseError;

pub const HOURS_PER_DAY: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    multipliers: Vec<f64>,
}

impl LoadProfile {
    pub fn new(multipliers: Vec<f64>) -> Result<Self, CaseError> {
        if multipliers.len() != HOURS_PER_DAY {
            return Err(CaseError::Csv {
                what: "load profile",
                msg: format!("expected {HOURS_PER_DAY} hours, found {}", multipliers.len()),
            });
        }
        if let Some((h, m)) = multipliers.iter().enumerate().find(|(_, m)| !(**m >= 0.0 && m.is_finite())) {
            return Err(CaseError::Csv { what: "load profile", msg: format!("hour {h}: invalid multiplier {m}") });
        }
        Ok(LoadProfile { multipliers })
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn multiplier(&self, hour: usize) -> Result<f64, CaseError> {
        self.multipliers
            .get(hour)
            .copied()
            .ok_or(CaseError::HourOutOfRange { hour, len: self.multipliers.len() })
    }

    /// Reads `hour,multiplier` rows; every hour 0..=23 must appear once.
    pub fn from_csv(text: &str) -> Result<Self, CaseError> {
        let rows = read_rows(text, "load profile", &["hour", "multiplier"])?;
        let mut mult = vec![f64::NAN; HOURS_PER_DAY];
        for (line, r) in rows {
            let hour = parse_hour(&r[0], line, "load profile")?;
            let m = parse_f64(&r[1], line, "load profile")?;
            let slot = mult.get_mut(hour).ok_or(CaseError::Csv {
                what: "load profile",
                msg: format!("row {line}: hour {hour} outside 0..=23"),
            })?;
            if !slot.is_nan() {
                return Err(CaseError::Csv { what: "load profile", msg: format!("row {line}: duplicate hour {hour}") });
            }
            *slot = m;
        }
        if let Some(h) = mult.iter().position(|m| m.is_nan()) {
            return Err(CaseError::Csv { what: "load profile", msg: format!("missing hour {h}") });
        }
        Self::new(mult)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("hour,multiplier\n");
        for (h, m) in self.multipliers.iter().enumerate() {
            s.push_str(&format!("{h},{m}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherSample {
    pub hour: usize,
    pub ambient_temp: f64,
    pub wind_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSeries {
    samples: Vec<WeatherSample>,
}

impl WeatherSeries {
    pub fn new(samples: Vec<WeatherSample>) -> Result<Self, CaseError> {
        for (k, s) in samples.iter().enumerate() {
            if !(s.wind_speed >= 0.0 && s.wind_speed.is_finite() && s.ambient_temp.is_finite()) {
                return Err(CaseError::Csv {
                    what: "weather",
                    msg: format!("hour {}: invalid sample ({} °C, {} m/s)", s.hour, s.ambient_temp, s.wind_speed),
                });
            }
            if k > 0 && samples[k - 1].hour >= s.hour {
                return Err(CaseError::Csv { what: "weather", msg: format!("hours not strictly increasing at {}", s.hour) });
            }
        }
        Ok(WeatherSeries { samples })
    }

    /// Same conditions at every hour of the day.
    pub fn constant(ambient_temp: f64, wind_speed: f64) -> Result<Self, CaseError> {
        Self::new(
            (0..HOURS_PER_DAY)
                .map(|hour| WeatherSample { hour, ambient_temp, wind_speed })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[WeatherSample] {
        &self.samples
    }

    pub fn at(&self, hour: usize) -> Option<&WeatherSample> {
        self.samples.binary_search_by_key(&hour, |s| s.hour).ok().map(|k| &self.samples[k])
    }

    pub fn from_csv(text: &str) -> Result<Self, CaseError> {
        let rows = read_rows(text, "weather", &["hour", "temp_c", "wind_mps"])?;
        let mut samples = Vec::with_capacity(rows.len());
        for (line, r) in rows {
            samples.push(WeatherSample {
                hour: parse_hour(&r[0], line, "weather")?,
                ambient_temp: parse_f64(&r[1], line, "weather")?,
                wind_speed: parse_f64(&r[2], line, "weather")?,
            });
        }
        Self::new(samples)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("hour,temp_c,wind_mps\n");
        for w in &self.samples {
            s.push_str(&format!("{},{:.3},{:.3}\n", w.hour, w.ambient_temp, w.wind_speed));
        }
        s
    }
}

fn read_rows(text: &str, what: &'static str, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>, CaseError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let got: Vec<String> = rdr
        .headers()
        .map_err(|e| CaseError::Csv { what, msg: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    if got != header {
        return Err(CaseError::Csv { what, msg: format!("expected header `{}`, found `{}`", header.join(","), got.join(",")) });
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CaseError::Csv { what, msg: e.to_string() })?;
        out.push((k + 2, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn parse_f64(s: &str, line: usize, what: &'static str) -> Result<f64, CaseError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CaseError::Csv { what, msg: format!("row {line}: invalid number `{s}`") })
}

fn parse_hour(s: &str, line: usize, what: &'static str) -> Result<usize, CaseError> {
    s.parse::<usize>().map_err(|_| CaseError::Csv { what, msg: format!("row {line}: invalid hour `{s}`") })
}

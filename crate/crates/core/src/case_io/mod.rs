//! Case, load-profile and weather ingestion.
//!
//! Two case formats are accepted: a subset of the MATPOWER `.m` table syntax
//! (read-only) and a native JSON encoding of [`Network`] which is the
//! canonical round-trip format.

mod matpower;
mod series;
mod validate;

pub use matpower::{parse_matpower, ParsedCase, UNLIMITED_RATING_MW};
pub use series::{LoadProfile, WeatherSample, WeatherSeries};
pub use validate::{validate_network, Diagnostic};

use thiserror::Error;

use crate::network::Network;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{owner} references unknown {target}")]
    DanglingReference { owner: String, target: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("branch {0} has zero reactance")]
    ZeroReactance(String),
    #[error("missing table `{0}`")]
    MissingTable(&'static str),
    #[error("table `{table}` row {row}: {msg}")]
    BadRow { table: &'static str, row: usize, msg: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid json case: {0}")]
    Json(String),
    #[error("invalid csv ({what}): {msg}")]
    Csv { what: &'static str, msg: String },
    #[error("hour {hour} out of range (profile has {len} entries)")]
    HourOutOfRange { hour: usize, len: usize },
}

/// Parses either format; JSON is recognised by a leading `{`.
pub fn parse_case(text: &str) -> Result<Network, CaseError> {
    if text.trim_start().starts_with('{') {
        from_json(text)
    } else {
        let parsed = parse_matpower(text)?;
        for w in &parsed.warnings {
            log::warn!("{w}");
        }
        Ok(parsed.network)
    }
}

pub fn from_json(text: &str) -> Result<Network, CaseError> {
    let net: Network = serde_json::from_str(text).map_err(|e| CaseError::Json(e.to_string()))?;
    // surface dangling references / duplicate ids at the boundary
    net.incidence()?;
    for l in &net.lines {
        if l.susceptance_nominal == 0.0 || !l.susceptance_nominal.is_finite() {
            return Err(CaseError::ZeroReactance(l.id.to_string()));
        }
    }
    Ok(net)
}

pub fn to_json(net: &Network) -> String {
    serde_json::to_string_pretty(net).expect("network serializes")
}

/// Copy of `net` with each demand scaled by the profile multiplier at `hour`.
pub fn scale_demands(net: &Network, profile: &LoadProfile, hour: usize) -> Result<Network, CaseError> {
    let m = profile.multiplier(hour)?;
    Ok(scale_demands_by(net, m))
}

pub(crate) fn scale_demands_by(net: &Network, multiplier: f64) -> Network {
    let mut out = net.clone();
    for d in &mut out.demands {
        d.p_max_nominal *= multiplier;
    }
    out
}

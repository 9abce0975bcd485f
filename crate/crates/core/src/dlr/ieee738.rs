//! IEEE 738 steady-state heat balance (SI form of the 2012 edition).
//!
//! Every empirical coefficient lives in [`COEF`]; the functions below only
//! wire them together.

use super::{ConductorParams, DlrError, RatingConditions};

/// Coefficient table for the heat-balance correlations.
pub struct Coefficients {
    /// dynamic viscosity of air: `mu = a * (T+273)^1.5 / (T + b)`
    pub mu_a: f64,
    pub mu_b: f64,
    /// air density: `(r0 + r1*He + r2*He^2) / (1 + r3*T)`
    pub rho: [f64; 4],
    /// thermal conductivity of air: `k0 + k1*T + k2*T^2`
    pub k: [f64; 3],
    /// wind direction factor: `a0 - cos(phi) + a2*cos(2phi) + a3*sin(2phi)`
    pub angle: [f64; 3],
    /// low-speed forced convection: `(c0 + c1 * Re^e)`
    pub forced_low: (f64, f64, f64),
    /// high-speed forced convection: `c * Re^e`
    pub forced_high: (f64, f64),
    /// natural convection: `c * rho^0.5 * D^0.75 * dT^1.25`
    pub natural: f64,
    /// radiation: `c * D * eps * (((Ts+273)/100)^4 - ((Ta+273)/100)^4)`
    pub radiation: f64,
    /// clear-atmosphere total heat flux polynomial in solar altitude (deg), A..G
    pub clear_sky: [f64; 7],
    /// elevation correction: `1 + s1*He + s2*He^2`
    pub solar_elevation: [f64; 2],
    /// solar declination amplitude, degrees
    pub declination: f64,
}

pub const COEF: Coefficients = Coefficients {
    mu_a: 1.458e-6,
    mu_b: 383.4,
    rho: [1.293, -1.525e-4, 6.379e-9, 0.00367],
    k: [2.424e-2, 7.477e-5, -4.407e-9],
    angle: [1.194, 0.194, 0.368],
    forced_low: (1.01, 1.35, 0.52),
    forced_high: (0.754, 0.6),
    natural: 3.645,
    radiation: 17.8,
    clear_sky: [
        -42.2391,
        63.8044,
        -1.9220,
        3.46921e-2,
        -3.61118e-4,
        1.94318e-6,
        -4.07608e-9,
    ],
    solar_elevation: [1.148e-4, -1.108e-8],
    declination: 23.46,
};

/// The individual heat terms in W/m at the rated conductor temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatTerms {
    pub convective: f64,
    pub radiative: f64,
    pub solar: f64,
    /// Ω/m at the rated conductor temperature
    pub resistance: f64,
}

pub fn resistance_at(c: &ConductorParams, temp: f64) -> f64 {
    let slope = (c.resistance_high - c.resistance_low) / (c.temp_high - c.temp_low);
    c.resistance_low + slope * (temp - c.temp_low)
}

pub fn convective_loss(c: &ConductorParams, w: &RatingConditions, ts: f64) -> f64 {
    let ta = w.ambient_temp;
    let dt = ts - ta;
    let t_film = 0.5 * (ts + ta);
    let he = c.elevation;
    let mu = COEF.mu_a * (t_film + 273.0).powf(1.5) / (t_film + COEF.mu_b);
    let [r0, r1, r2, r3] = COEF.rho;
    let rho = (r0 + r1 * he + r2 * he * he) / (1.0 + r3 * t_film);
    let [k0, k1, k2] = COEF.k;
    let kf = k0 + k1 * t_film + k2 * t_film * t_film;
    let re = c.diameter * rho * w.wind_speed / mu;
    let phi = w.wind_angle.to_radians();
    let [a0, a2, a3] = COEF.angle;
    let k_angle = a0 - phi.cos() + a2 * (2.0 * phi).cos() + a3 * (2.0 * phi).sin();
    let (l0, l1, le) = COEF.forced_low;
    let q1 = k_angle * (l0 + l1 * re.powf(le)) * kf * dt;
    let (h0, he_) = COEF.forced_high;
    let q2 = k_angle * h0 * re.powf(he_) * kf * dt;
    let qn = COEF.natural * rho.sqrt() * c.diameter.powf(0.75) * dt.powf(1.25);
    q1.max(q2).max(qn)
}

pub fn radiative_loss(c: &ConductorParams, ambient: f64, ts: f64) -> f64 {
    let k = |t: f64| ((t + 273.0) / 100.0).powi(4);
    COEF.radiation * c.diameter * c.emissivity * (k(ts) - k(ambient))
}

/// Solar altitude and azimuth in degrees.
pub fn solar_position(latitude: f64, hour: f64, day_of_year: u32) -> (f64, f64) {
    let decl = COEF.declination * ((284.0 + day_of_year as f64) / 365.0 * 360.0).to_radians().sin();
    let omega = (hour - 12.0) * 15.0;
    let (lat, d, w) = (latitude.to_radians(), decl.to_radians(), omega.to_radians());
    let hc = (lat.cos() * d.cos() * w.cos() + lat.sin() * d.sin()).asin();
    let chi = w.sin() / (lat.sin() * w.cos() - lat.cos() * d.tan());
    let offset = match (omega < 0.0, chi >= 0.0) {
        (true, true) => 0.0,
        (true, false) => 180.0,
        (false, true) => 180.0,
        (false, false) => 360.0,
    };
    (hc.to_degrees(), offset + chi.atan().to_degrees())
}

pub fn solar_gain(c: &ConductorParams, w: &RatingConditions) -> f64 {
    if !w.solar {
        return 0.0;
    }
    let (hc, zc) = solar_position(c.latitude, w.hour_of_day, w.day_of_year);
    if hc <= 0.0 {
        return 0.0;
    }
    let flux: f64 = COEF.clear_sky.iter().rev().fold(0.0, |acc, a| acc * hc + a);
    let [s1, s2] = COEF.solar_elevation;
    let k_solar = 1.0 + s1 * c.elevation + s2 * c.elevation * c.elevation;
    let incidence = (hc.to_radians().cos() * (zc - c.line_azimuth).to_radians().cos()).acos();
    c.solar_absorptivity * k_solar * flux * incidence.sin() * c.diameter
}

pub fn heat_terms(c: &ConductorParams, w: &RatingConditions) -> HeatTerms {
    let ts = c.max_conductor_temp;
    HeatTerms {
        convective: convective_loss(c, w, ts),
        radiative: radiative_loss(c, w.ambient_temp, ts),
        solar: solar_gain(c, w),
        resistance: resistance_at(c, ts),
    }
}

/// Ampacity holding the conductor at its rated temperature.
pub fn steady_state_current(c: &ConductorParams, w: &RatingConditions) -> Result<f64, DlrError> {
    c.check()?;
    w.check()?;
    if w.ambient_temp >= c.max_conductor_temp {
        return Err(DlrError::InfeasibleRating {
            net_cooling: 0.0,
            reason: format!("ambient {} °C at or above conductor limit {} °C", w.ambient_temp, c.max_conductor_temp),
        });
    }
    let h = heat_terms(c, w);
    let net = h.convective + h.radiative - h.solar;
    if !(net > 0.0) || !(h.resistance > 0.0) {
        return Err(DlrError::InfeasibleRating { net_cooling: net, reason: "solar gain exceeds cooling".into() });
    }
    Ok((net / h.resistance).sqrt())
}

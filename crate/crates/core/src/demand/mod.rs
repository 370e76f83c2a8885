//! Demand generation and mode choice.

mod city;
mod trips;

pub use city::{city_uam_demand, city_uam_demand_mc, global_scan, scan_city, assemble_scan, CityProfile, ScanGrid, ScanParams, ScanResult, ScanRow, TripLength};
pub use trips::{trip_candidates, DailyProfile, FlightRequest, GeneratorParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Uam,
    Car,
    Transit,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Uam => "uam",
            Mode::Car => "car",
            Mode::Transit => "transit",
        }
    }
}

/// Door-to-door time and out-of-pocket cost of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAttributes {
    pub time_min: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeOffer {
    pub options: Vec<(Mode, ModeAttributes)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceParams {
    #[serde(default = "default_beta_time")]
    pub beta_time: f64,
    #[serde(default = "default_beta_cost")]
    pub beta_cost: f64,
    #[serde(default)]
    pub asc_uam: f64,
    #[serde(default)]
    pub asc_car: f64,
    #[serde(default)]
    pub asc_transit: f64,
    /// Cost sensitivity scales with `(reference_gdp / gdp)^income_elasticity`.
    #[serde(default = "default_elasticity")]
    pub income_elasticity: f64,
    #[serde(default = "default_reference_gdp")]
    pub reference_gdp: f64,
}

fn default_beta_time() -> f64 {
    -0.05
}
fn default_beta_cost() -> f64 {
    -0.1
}
fn default_elasticity() -> f64 {
    0.5
}
fn default_reference_gdp() -> f64 {
    40_000.0
}

impl Default for ChoiceParams {
    fn default() -> Self {
        ChoiceParams {
            beta_time: default_beta_time(),
            beta_cost: default_beta_cost(),
            asc_uam: 0.0,
            asc_car: 0.0,
            asc_transit: 0.0,
            income_elasticity: default_elasticity(),
            reference_gdp: default_reference_gdp(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("beta_time and beta_cost must be strictly negative")]
    NonNegativeBeta,
    #[error("mode choice needs at least two modes, got {0}")]
    TooFewModes(usize),
    #[error("vertiport density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl ChoiceParams {
    pub fn validate(&self) -> Result<(), DemandError> {
        if !(self.beta_time < 0.0 && self.beta_cost < 0.0) {
            return Err(DemandError::NonNegativeBeta);
        }
        if !(self.reference_gdp > 0.0) || !(self.income_elasticity >= 0.0) {
            return Err(DemandError::Invalid { field: "choice".into(), reason: "reference_gdp > 0 and income_elasticity >= 0".into() });
        }
        Ok(())
    }

    pub fn asc(&self, m: Mode) -> f64 {
        match m {
            Mode::Uam => self.asc_uam,
            Mode::Car => self.asc_car,
            Mode::Transit => self.asc_transit,
        }
    }

    /// Cost sensitivity for a population with the given income.
    pub fn for_income(&self, gdp_per_capita: f64) -> ChoiceParams {
        let scale = (self.reference_gdp / gdp_per_capita).powf(self.income_elasticity);
        ChoiceParams { beta_cost: self.beta_cost * scale, ..*self }
    }

    pub fn utility(&self, m: Mode, a: &ModeAttributes) -> f64 {
        self.asc(m) + self.beta_time * a.time_min + self.beta_cost * a.cost
    }
}

/// Numerically stable softmax.
pub fn softmax(u: &[f64]) -> Vec<f64> {
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![1.0 / u.len() as f64; u.len()];
    }
    let e: Vec<f64> = u.iter().map(|x| (x - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn mode_probabilities(offer: &ModeOffer, p: &ChoiceParams) -> Result<Vec<(Mode, f64)>, DemandError> {
    p.validate()?;
    if offer.options.len() < 2 {
        return Err(DemandError::TooFewModes(offer.options.len()));
    }
    let u: Vec<f64> = offer.options.iter().map(|(m, a)| p.utility(*m, a)).collect();
    Ok(offer.options.iter().map(|(m, _)| *m).zip(softmax(&u)).collect())
}

/// Access-time law: `k_access / √density + t_process`, density per 100 km².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessParams {
    /// Ground speed to the vertiport, km/h.
    #[serde(default = "default_access_speed")]
    pub access_speed_kmh: f64,
    /// Check-in and boarding processing, minutes.
    #[serde(default = "default_process")]
    pub t_process_min: f64,
}

fn default_access_speed() -> f64 {
    14.0
}
fn default_process() -> f64 {
    5.0
}

impl Default for AccessParams {
    fn default() -> Self {
        AccessParams { access_speed_kmh: default_access_speed(), t_process_min: default_process() }
    }
}

impl AccessParams {
    /// Minutes times √(vertiports per 100 km²). The mean distance to the
    /// nearest of a uniform point set of density ρ per km² is 1/(2√ρ).
    pub fn k_access(&self) -> f64 {
        // 0.5 * sqrt(100) km at v km/h, in minutes.
        5.0 / self.access_speed_kmh * 60.0
    }

    /// Ground leg to or from the vertiport, minutes.
    pub fn ground_leg(&self, density: f64) -> Result<f64, DemandError> {
        if !(density > 0.0) {
            return Err(DemandError::NonPositiveDensity(density));
        }
        Ok(self.k_access() / density.sqrt())
    }

    pub fn access_time(&self, density: f64) -> Result<f64, DemandError> {
        Ok(self.ground_leg(density)? + self.t_process_min)
    }
}

/// Ground alternatives as functions of trip distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundModes {
    #[serde(default = "gm_detour")]
    pub detour_factor: f64,
    #[serde(default = "gm_car_speed")]
    pub car_speed_kmh: f64,
    #[serde(default = "gm_car_fixed")]
    pub car_fixed_min: f64,
    #[serde(default = "gm_car_cost")]
    pub car_cost_per_km: f64,
    #[serde(default = "gm_transit_speed")]
    pub transit_speed_kmh: f64,
    #[serde(default = "gm_transit_fixed")]
    pub transit_fixed_min: f64,
    #[serde(default = "gm_transit_fare")]
    pub transit_fare: f64,
}

fn gm_detour() -> f64 {
    1.3
}
fn gm_car_speed() -> f64 {
    30.0
}
fn gm_car_fixed() -> f64 {
    5.0
}
fn gm_car_cost() -> f64 {
    0.3
}
fn gm_transit_speed() -> f64 {
    22.0
}
fn gm_transit_fixed() -> f64 {
    12.0
}
fn gm_transit_fare() -> f64 {
    3.5
}

impl Default for GroundModes {
    fn default() -> Self {
        GroundModes {
            detour_factor: gm_detour(),
            car_speed_kmh: gm_car_speed(),
            car_fixed_min: gm_car_fixed(),
            car_cost_per_km: gm_car_cost(),
            transit_speed_kmh: gm_transit_speed(),
            transit_fixed_min: gm_transit_fixed(),
            transit_fare: gm_transit_fare(),
        }
    }
}

impl GroundModes {
    pub fn car(&self, distance_km: f64) -> ModeAttributes {
        let road = distance_km * self.detour_factor;
        ModeAttributes { time_min: self.car_fixed_min + road / self.car_speed_kmh * 60.0, cost: road * self.car_cost_per_km }
    }

    pub fn transit(&self, distance_km: f64) -> ModeAttributes {
        let road = distance_km * self.detour_factor;
        ModeAttributes { time_min: self.transit_fixed_min + road / self.transit_speed_kmh * 60.0, cost: self.transit_fare }
    }
}

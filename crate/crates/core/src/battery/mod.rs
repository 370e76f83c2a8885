//! Pack-level capacity fade: calendar ageing plus DOD-weighted cycle ageing.
//!
//! Remaining capacity as a fraction of nominal:
//!
//! ```text
//! f = 1 - alpha_cal * age_days^z_cal
//!       - sqrt(beta0^2 M0 + 2 beta0 beta1 M1 + beta1^2 M2) * M0^(z_cyc - 1/2)
//! ```
//!
//! where `M0 = Σq`, `M1 = Σq·d` and `M2 = Σq·d²` are throughput moments over
//! every discharge (q = d) and weighted charge increment. For a constant
//! depth `d` the cycle term reduces to `(beta0 + beta1 d) · Q^z_cyc`. Unlike
//! multiplying a running mean DOD into `√Q`, this form never recovers
//! capacity when a shallow cycle follows deep ones.

mod calibration;
mod life;

pub use calibration::{calibrate_aging, range_checks, AgingFit, AgingTarget, CalibrationError, RangeCheck, TargetResidual};
pub use life::{cycles_to_threshold, replacement_policy, CycleLife, FlightProfile, LifeError, LimitingFactor, Replacement, ReplaceReason};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CELL_TEMPERATURE_C: f64 = 26.0;

/// Replacement trigger: a capacity fraction, or whatever the design mission needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReplaceThreshold {
    Fraction(f64),
    Named(NamedThreshold),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedThreshold {
    EnergyDriven,
}

impl ReplaceThreshold {
    pub const STANDARD: ReplaceThreshold = ReplaceThreshold::Fraction(0.80);
    pub const EXTENDED: ReplaceThreshold = ReplaceThreshold::Fraction(0.75);
    pub const ENERGY_DRIVEN: ReplaceThreshold = ReplaceThreshold::Named(NamedThreshold::EnergyDriven);

    pub fn fraction(&self) -> Option<f64> {
        match self {
            ReplaceThreshold::Fraction(f) => Some(*f),
            ReplaceThreshold::Named(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgingParams {
    pub alpha_cal: f64,
    #[serde(default = "default_z_cal")]
    pub z_cal: f64,
    pub beta0: f64,
    pub beta1: f64,
    #[serde(default = "default_z_cyc")]
    pub z_cyc: f64,
    #[serde(default = "default_knee")]
    pub knee_fraction: f64,
    #[serde(default = "default_threshold")]
    pub replace_threshold: ReplaceThreshold,
    /// FEC credited per unit of SoC recharged. Set to 0 to count discharges only.
    #[serde(default = "default_charge_weight")]
    pub charge_weight: f64,
}

fn default_z_cal() -> f64 {
    0.75
}
fn default_z_cyc() -> f64 {
    0.5
}
fn default_knee() -> f64 {
    0.75
}
fn default_threshold() -> ReplaceThreshold {
    ReplaceThreshold::STANDARD
}
fn default_charge_weight() -> f64 {
    0.5
}

impl Default for AgingParams {
    /// Coefficients fitted to the bundled cycle-life targets.
    fn default() -> Self {
        serde_json::from_str(include_str!("../../data/calibration/aging_params.json"))
            .expect("bundled aging params parse")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BatteryError {
    #[error("aging params: {0}")]
    InvalidParams(String),
    #[error("depth of discharge must be in (0, 1], got {0}")]
    InvalidDod(f64),
    #[error("depth of discharge {dod} exceeds state of charge {soc}")]
    DodExceedsSoc { dod: f64, soc: f64 },
    #[error("battery is beyond model validity (capacity {0:.4})")]
    BeyondValidity(f64),
    #[error("c-rate must be positive, got {0}")]
    InvalidCRate(f64),
    #[error("target soc {target} outside [soc {soc}, 1]")]
    InvalidTarget { target: f64, soc: f64 },
    #[error("time step must be non-negative, got {0}")]
    NegativeStep(f64),
}

impl AgingParams {
    pub fn validate(&self) -> Result<(), BatteryError> {
        let bad = |m: &str| Err(BatteryError::InvalidParams(m.to_string()));
        let all = [self.alpha_cal, self.z_cal, self.beta0, self.beta1, self.z_cyc, self.knee_fraction, self.charge_weight];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all coefficients must be finite");
        }
        if self.alpha_cal < 0.0 || self.beta0 < 0.0 || self.beta1 < 0.0 {
            return bad("alpha_cal, beta0 and beta1 must be non-negative");
        }
        if !(self.z_cal > 0.0) {
            return bad("z_cal must be positive");
        }
        if !(0.5..=1.0).contains(&self.z_cyc) {
            return bad("z_cyc must lie in [0.5, 1]");
        }
        if !(self.knee_fraction > 0.0 && self.knee_fraction < 1.0) {
            return bad("knee_fraction must lie in (0, 1)");
        }
        if let Some(t) = self.replace_threshold.fraction() {
            if !(t >= self.knee_fraction && t <= 1.0) {
                return bad("replace_threshold must lie in [knee_fraction, 1]");
            }
        }
        if self.charge_weight < 0.0 {
            return bad("charge_weight must be non-negative");
        }
        Ok(())
    }

    pub fn calendar_loss(&self, age_days: f64) -> f64 {
        if age_days <= 0.0 {
            0.0
        } else {
            self.alpha_cal * age_days.powf(self.z_cal)
        }
    }

    pub fn cycle_loss(&self, m: &Moments) -> f64 {
        if m.m0 <= 0.0 {
            return 0.0;
        }
        let (b0, b1) = (self.beta0, self.beta1);
        let quad = (b0 * b0 * m.m0 + 2.0 * b0 * b1 * m.m1 + b1 * b1 * m.m2).max(0.0);
        let scale = if self.z_cyc == 0.5 { 1.0 } else { m.m0.powf(self.z_cyc - 0.5) };
        quad.sqrt() * scale
    }

    pub fn capacity(&self, age_days: f64, m: &Moments) -> f64 {
        1.0 - self.calendar_loss(age_days) - self.cycle_loss(m)
    }
}

/// Throughput moments `Σq`, `Σq·d`, `Σq·d²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
}

impl Moments {
    pub fn add(&mut self, q: f64, depth: f64) {
        self.m0 += q;
        self.m1 += q * depth;
        self.m2 += q * depth * depth;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    /// Nominal capacity C0.
    pub c0: f64,
    pub capacity_fraction: f64,
    pub soc: f64,
    pub age_days: f64,
    pub moments: Moments,
    pub flight_cycles: u64,
    pub temperature_c: f64,
    pub beyond_model_validity: bool,
}

impl BatteryState {
    pub fn fresh(c0: f64) -> Self {
        BatteryState {
            c0,
            capacity_fraction: 1.0,
            soc: 1.0,
            age_days: 0.0,
            moments: Moments::default(),
            flight_cycles: 0,
            temperature_c: CELL_TEMPERATURE_C,
            beyond_model_validity: false,
        }
    }

    /// Cumulative full-equivalent cycles.
    pub fn throughput_fec(&self) -> f64 {
        self.moments.m0
    }

    /// Throughput-weighted mean depth.
    pub fn dod_avg(&self) -> f64 {
        if self.moments.m0 > 0.0 {
            self.moments.m1 / self.moments.m0
        } else {
            0.0
        }
    }

    /// Usable energy as a fraction of nominal capacity.
    pub fn available_energy(&self) -> f64 {
        self.soc * self.capacity_fraction
    }

    fn refresh(&mut self, p: &AgingParams) {
        let f = p.capacity(self.age_days, &self.moments);
        // Guards against rounding when nothing changed.
        self.capacity_fraction = f.min(self.capacity_fraction);
        if self.capacity_fraction < p.knee_fraction {
            self.beyond_model_validity = true;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightStress {
    pub dod: f64,
    pub duration_s: f64,
}

pub fn apply_flight(b: &BatteryState, p: &AgingParams, s: FlightStress) -> Result<BatteryState, BatteryError> {
    if b.beyond_model_validity {
        return Err(BatteryError::BeyondValidity(b.capacity_fraction));
    }
    if !(s.dod > 0.0 && s.dod <= 1.0) {
        return Err(BatteryError::InvalidDod(s.dod));
    }
    if s.dod > b.soc + 1e-12 {
        return Err(BatteryError::DodExceedsSoc { dod: s.dod, soc: b.soc });
    }
    let mut n = b.clone();
    n.soc = (b.soc - s.dod).max(0.0);
    n.moments.add(s.dod, s.dod);
    n.flight_cycles += 1;
    n.refresh(p);
    Ok(n)
}

pub fn apply_calendar(b: &BatteryState, p: &AgingParams, dt_days: f64) -> Result<BatteryState, BatteryError> {
    if !(dt_days >= 0.0) {
        return Err(BatteryError::NegativeStep(dt_days));
    }
    let mut n = b.clone();
    if dt_days == 0.0 {
        return Ok(n);
    }
    n.age_days += dt_days;
    n.refresh(p);
    Ok(n)
}

/// Charge to `target_soc` at constant `c_rate`; returns the new state and the duration in whole seconds.
pub fn charge(b: &BatteryState, p: &AgingParams, c_rate: f64, target_soc: f64) -> Result<(BatteryState, u64), BatteryError> {
    if !(c_rate > 0.0) || !c_rate.is_finite() {
        return Err(BatteryError::InvalidCRate(c_rate));
    }
    if !(target_soc >= b.soc - 1e-12 && target_soc <= 1.0) {
        return Err(BatteryError::InvalidTarget { target: target_soc, soc: b.soc });
    }
    let delta = (target_soc - b.soc).max(0.0);
    let mut n = b.clone();
    n.soc = target_soc;
    if delta == 0.0 {
        return Ok((n, 0));
    }
    if p.charge_weight > 0.0 {
        n.moments.add(p.charge_weight * delta, delta);
        n.refresh(p);
    }
    let duration = (delta * 3600.0 / c_rate).round() as u64;
    Ok((n, duration))
}

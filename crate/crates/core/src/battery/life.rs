//! Cycle-life prediction and the battery replacement rule.

use super::{apply_calendar, apply_flight, charge, AgingParams, BatteryError, BatteryState, FlightStress};
use crate::energy::{mission_energy, EnergyError, Mission, VehicleSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A mission flown `flights_per_day` times a day, recharged to full after each flight.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightProfile {
    pub mission: Mission,
    pub flights_per_day: u32,
    pub c_rate: f64,
}

impl FlightProfile {
    pub fn design(spec: &VehicleSpec, payload: u32, flights_per_day: u32) -> Self {
        FlightProfile { mission: Mission::design(spec, payload), flights_per_day, c_rate: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitingFactor {
    Threshold,
    EnergyInfeasibility,
    /// The loop cap was reached first.
    Horizon,
}

impl LimitingFactor {
    pub fn as_str(self) -> &'static str {
        match self {
            LimitingFactor::Threshold => "threshold",
            LimitingFactor::EnergyInfeasibility => "energy_infeasibility",
            LimitingFactor::Horizon => "horizon",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLife {
    /// Flights completed when the limit was reached.
    pub cycles: u64,
    /// Interpolated crossing point, for smooth objectives.
    pub fractional_cycles: f64,
    pub limiting_factor: LimitingFactor,
    pub days: f64,
    pub calendar_loss: f64,
    pub cycle_loss: f64,
    pub final_capacity: f64,
    /// Depth of the first flight.
    pub dod: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum LifeError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Battery(#[from] BatteryError),
    #[error("profile needs {required:.4} of nominal capacity, infeasible even on a fresh pack")]
    InfeasibleFresh { required: f64 },
    #[error("flights per day must be positive")]
    NoFlights,
}

pub const MAX_LIFE_CYCLES: u64 = 40_000;

pub fn cycles_to_threshold(
    spec: &VehicleSpec,
    aging: &AgingParams,
    profile: &FlightProfile,
    threshold: f64,
) -> Result<CycleLife, LifeError> {
    cycles_to_threshold_capped(spec, aging, profile, threshold, MAX_LIFE_CYCLES)
}

pub(crate) fn cycles_to_threshold_capped(
    spec: &VehicleSpec,
    aging: &AgingParams,
    profile: &FlightProfile,
    threshold: f64,
    cap: u64,
) -> Result<CycleLife, LifeError> {
    if profile.flights_per_day == 0 {
        return Err(LifeError::NoFlights);
    }
    let required = mission_energy(spec, &profile.mission)?;
    let consumed = mission_energy(spec, &profile.mission.without_reserve())?;
    if required > 1.0 {
        return Err(LifeError::InfeasibleFresh { required });
    }
    let mut b = BatteryState::fresh(spec.battery_capacity);
    let mut n = 0u64;
    let first_dod = consumed;
    let finish = |b: &BatteryState, n: u64, frac: f64, lf: LimitingFactor| CycleLife {
        cycles: n,
        fractional_cycles: frac,
        limiting_factor: lf,
        days: b.age_days,
        calendar_loss: aging.calendar_loss(b.age_days),
        cycle_loss: aging.cycle_loss(&b.moments),
        final_capacity: b.capacity_fraction,
        dod: first_dod,
    };
    loop {
        for _ in 0..profile.flights_per_day {
            if required > b.capacity_fraction || b.beyond_model_validity {
                return Ok(finish(&b, n, n as f64, LimitingFactor::EnergyInfeasibility));
            }
            if n >= cap {
                return Ok(finish(&b, n, n as f64, LimitingFactor::Horizon));
            }
            let prev = b.capacity_fraction;
            let dod = consumed / b.capacity_fraction;
            b = apply_flight(&b, aging, FlightStress { dod, duration_s: spec.flight_time_s(profile.mission.total_distance_km()) })?;
            b = charge(&b, aging, profile.c_rate, 1.0)?.0;
            n += 1;
            if b.capacity_fraction < threshold {
                let frac = n as f64 - 1.0 + (prev - threshold) / (prev - b.capacity_fraction);
                return Ok(finish(&b, n, frac, LimitingFactor::Threshold));
            }
        }
        b = apply_calendar(&b, aging, 1.0)?;
        if b.capacity_fraction < threshold {
            return Ok(finish(&b, n, n as f64, LimitingFactor::Threshold));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplaceReason {
    /// Below the configured capacity fraction.
    Threshold,
    /// Below what the vehicle's design mission needs.
    EnergyRequirement,
    /// Below the validity knee of the fade model.
    BeyondValidity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "decision", content = "reason")]
pub enum Replacement {
    Keep,
    Replace(ReplaceReason),
}

/// Keep or replace. The bar is the larger of the configured threshold and
/// the design-mission requirement; under the energy-driven policy only the
/// requirement applies. A pack flagged beyond validity is always replaced.
pub fn replacement_policy(b: &BatteryState, aging: &AgingParams, spec: &VehicleSpec) -> Result<Replacement, EnergyError> {
    let need = mission_energy(spec, &Mission::design(spec, spec.max_payload_persons))?;
    let cap = b.capacity_fraction;
    let configured = aging.replace_threshold.fraction().unwrap_or(0.0);
    if cap < need && need > configured {
        return Ok(Replacement::Replace(ReplaceReason::EnergyRequirement));
    }
    if cap < configured {
        return Ok(Replacement::Replace(ReplaceReason::Threshold));
    }
    if b.beyond_model_validity {
        return Ok(Replacement::Replace(ReplaceReason::BeyondValidity));
    }
    Ok(Replacement::Keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::tests::params;
    use crate::battery::ReplaceThreshold;
    use crate::energy::{EnergyCoefficients, TechLevel, VehicleKind};

    fn spec(kind: VehicleKind, e_fixed: f64, base: f64, person: f64, loiter: f64) -> VehicleSpec {
        let (cruise, range, stops) = kind.design_defaults();
        VehicleSpec {
            id: "t".into(),
            kind,
            tech_level: TechLevel::NearTerm,
            seats: 4,
            cruise_speed_kmh: cruise,
            design_range_km: range,
            design_stops: stops,
            battery_capacity: 1.0,
            energy: EnergyCoefficients { e_fixed, e_km_base: base, e_km_person: person, p_loiter: Some(loiter) },
            reserve_loiter_min: 20.0,
            max_payload_persons: 4,
            note: None,
        }
    }

    fn multirotor() -> VehicleSpec {
        spec(VehicleKind::Multirotor, 0.0375, 0.00351, 6e-5, 0.0125)
    }

    fn tilt_near() -> VehicleSpec {
        spec(VehicleKind::Tiltrotor, 0.041875, 0.0036625, 1e-4, 0.015)
    }

    #[test]
    fn fresh_battery_is_kept() {
        let b = BatteryState::fresh(1.0);
        assert_eq!(replacement_policy(&b, &params(), &multirotor()).unwrap(), Replacement::Keep);
    }

    #[test]
    fn energy_driven_keeps_what_standard_replaces() {
        let b = BatteryState { capacity_fraction: 0.56, ..BatteryState::fresh(1.0) };
        let energy = AgingParams { replace_threshold: ReplaceThreshold::ENERGY_DRIVEN, ..params() };
        assert_eq!(replacement_policy(&b, &energy, &multirotor()).unwrap(), Replacement::Keep);
        assert_eq!(
            replacement_policy(&b, &params(), &multirotor()).unwrap(),
            Replacement::Replace(ReplaceReason::Threshold)
        );
    }

    #[test]
    fn tiltrotor_below_design_need_is_replaced() {
        let b = BatteryState { capacity_fraction: 0.78, ..BatteryState::fresh(1.0) };
        let p = AgingParams { replace_threshold: ReplaceThreshold::EXTENDED, ..params() };
        assert_eq!(
            replacement_policy(&b, &p, &tilt_near()).unwrap(),
            Replacement::Replace(ReplaceReason::EnergyRequirement)
        );
    }

    #[test]
    fn deeper_flights_shorten_life() {
        let s = multirotor();
        let p = params();
        let light = cycles_to_threshold(&s, &p, &FlightProfile::design(&s, 1, 25), 0.8).unwrap();
        let heavy = cycles_to_threshold(&s, &p, &FlightProfile::design(&s, 4, 25), 0.8).unwrap();
        assert!(heavy.cycles < light.cycles);
        assert_eq!(heavy.limiting_factor, LimitingFactor::Threshold);
        assert!(heavy.fractional_cycles <= heavy.cycles as f64 && heavy.fractional_cycles > heavy.cycles as f64 - 1.0);
    }

    #[test]
    fn infeasible_profile_is_an_error() {
        let s = multirotor();
        let mut m = Mission::design(&s, 4);
        m.legs[0].distance_km = 400.0;
        let prof = FlightProfile { mission: m, flights_per_day: 10, c_rate: 1.0 };
        assert!(matches!(cycles_to_threshold(&s, &params(), &prof, 0.8), Err(LifeError::InfeasibleFresh { .. })));
    }

    #[test]
    fn threshold_above_design_need_stops_on_energy() {
        // Tiltrotor near needs 0.79; a 0.75 threshold is never reached.
        let s = tilt_near();
        let life = cycles_to_threshold(&s, &params(), &FlightProfile::design(&s, 4, 22), 0.75).unwrap();
        assert_eq!(life.limiting_factor, LimitingFactor::EnergyInfeasibility);
        assert!(life.final_capacity < 0.79);
    }
}

//! Vehicle performance specifications and the affine mission-energy model.
//!
//! Energy is expressed in units of nominal battery capacity: a mission
//! energy of `0.55` means 55 % of a fresh pack. Per mission:
//!
//! ```text
//! E = Σ_legs (e_fixed + (e_km_base + persons · e_km_person) · d_leg)
//!     + reserve · p_loiter · reserve_loiter_min
//! ```

pub mod calibration;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleKind {
    Multirotor,
    Tiltrotor,
}

impl VehicleKind {
    /// (cruise km/h, design range km, design stops)
    pub fn design_defaults(self) -> (f64, f64, u32) {
        match self {
            VehicleKind::Multirotor => (120.0, 50.0, 2),
            VehicleKind::Tiltrotor => (210.0, 100.0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechLevel {
    NearTerm,
    FarTerm,
}

/// Loiter power defaults to a tenth of the per-leg fixed energy per minute.
pub const DEFAULT_LOITER_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyCoefficients {
    /// Take-off, climb, descent and landing energy per leg.
    pub e_fixed: f64,
    /// Cruise energy per km with an empty cabin.
    pub e_km_base: f64,
    /// Additional cruise energy per km and person on board.
    pub e_km_person: f64,
    /// Loiter energy per minute; `None` ties it to `e_fixed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_loiter: Option<f64>,
}

impl EnergyCoefficients {
    pub fn loiter_per_min(&self) -> f64 {
        self.p_loiter.unwrap_or(self.e_fixed * DEFAULT_LOITER_RATIO)
    }

    pub fn per_km(&self, persons: u32) -> f64 {
        self.e_km_base + persons as f64 * self.e_km_person
    }
}

/// Input form of a vehicle spec: kind-dependent fields may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpecDoc {
    pub id: String,
    pub kind: VehicleKind,
    pub tech_level: TechLevel,
    #[serde(default)]
    pub seats: Option<u32>,
    #[serde(default)]
    pub cruise_speed_kmh: Option<f64>,
    #[serde(default)]
    pub design_range_km: Option<f64>,
    #[serde(default)]
    pub design_stops: Option<u32>,
    #[serde(default)]
    pub battery_capacity: Option<f64>,
    pub energy: EnergyCoefficients,
    #[serde(default)]
    pub reserve_loiter_min: Option<f64>,
    #[serde(default)]
    pub max_payload_persons: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub id: String,
    pub kind: VehicleKind,
    pub tech_level: TechLevel,
    /// Persons including a potential pilot.
    pub seats: u32,
    pub cruise_speed_kmh: f64,
    pub design_range_km: f64,
    pub design_stops: u32,
    /// Nominal capacity C0 in energy units.
    pub battery_capacity: f64,
    pub energy: EnergyCoefficients,
    pub reserve_loiter_min: f64,
    pub max_payload_persons: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("mission has no legs")]
    NoLegs,
    #[error("leg {index} has non-positive distance {distance_km} km")]
    NonPositiveLeg { index: usize, distance_km: f64 },
    #[error("payload {payload} exceeds maximum {max} persons")]
    PayloadExceeded { payload: u32, max: u32 },
    #[error("capacity fraction {0} outside (0, 1]")]
    CapacityFraction(f64),
    #[error("spec {id}: {reason}")]
    InvalidSpec { id: String, reason: String },
    #[error("spec {id}: design mission infeasible (needs {required:.4} of nominal capacity)")]
    DesignInfeasible { id: String, required: f64 },
}

impl VehicleSpecDoc {
    pub fn resolve(self) -> Result<VehicleSpec, EnergyError> {
        let (cruise, range, stops) = self.kind.design_defaults();
        let spec = VehicleSpec {
            id: self.id,
            kind: self.kind,
            tech_level: self.tech_level,
            seats: self.seats.unwrap_or(4),
            cruise_speed_kmh: self.cruise_speed_kmh.unwrap_or(cruise),
            design_range_km: self.design_range_km.unwrap_or(range),
            design_stops: self.design_stops.unwrap_or(stops),
            battery_capacity: self.battery_capacity.unwrap_or(1.0),
            energy: self.energy,
            reserve_loiter_min: self.reserve_loiter_min.unwrap_or(20.0),
            max_payload_persons: self.max_payload_persons.unwrap_or(4),
            note: self.note,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<VehicleSpec> for VehicleSpecDoc {
    fn from(s: VehicleSpec) -> Self {
        VehicleSpecDoc {
            id: s.id,
            kind: s.kind,
            tech_level: s.tech_level,
            seats: Some(s.seats),
            cruise_speed_kmh: Some(s.cruise_speed_kmh),
            design_range_km: Some(s.design_range_km),
            design_stops: Some(s.design_stops),
            battery_capacity: Some(s.battery_capacity),
            energy: s.energy,
            reserve_loiter_min: Some(s.reserve_loiter_min),
            max_payload_persons: Some(s.max_payload_persons),
            note: s.note,
        }
    }
}

impl VehicleSpec {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let bad = |reason: &str| EnergyError::InvalidSpec { id: self.id.clone(), reason: reason.to_string() };
        let e = &self.energy;
        let coeffs = [e.e_fixed, e.e_km_base, e.e_km_person, e.loiter_per_min()];
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(bad("energy coefficients must be finite and non-negative"));
        }
        if !(self.cruise_speed_kmh > 0.0) || !(self.design_range_km > 0.0) {
            return Err(bad("cruise speed and design range must be positive"));
        }
        if !(self.battery_capacity > 0.0) {
            return Err(bad("battery capacity must be positive"));
        }
        if self.seats == 0 || self.max_payload_persons == 0 || self.max_payload_persons > self.seats {
            return Err(bad("need 1 <= max_payload_persons <= seats"));
        }
        if !(self.reserve_loiter_min >= 0.0) {
            return Err(bad("reserve loiter time must be non-negative"));
        }
        let required = mission_energy(self, &Mission::design(self, self.max_payload_persons))?;
        if required > 1.0 + 1e-12 {
            return Err(EnergyError::DesignInfeasible { id: self.id.clone(), required });
        }
        Ok(())
    }

    pub fn flight_time_s(&self, distance_km: f64) -> f64 {
        distance_km / self.cruise_speed_kmh * 3600.0
    }

    pub fn design_legs(&self) -> u32 {
        self.design_stops + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub origin: String,
    pub destination: String,
    pub distance_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub legs: Vec<Leg>,
    /// Persons on board, pilot included when piloted.
    pub payload: u32,
    pub reserve_included: bool,
}

impl Mission {
    pub fn single_leg(origin: &str, destination: &str, distance_km: f64, payload: u32) -> Self {
        Mission {
            legs: vec![Leg { origin: origin.into(), destination: destination.into(), distance_km }],
            payload,
            reserve_included: true,
        }
    }

    /// Design range split into equal legs, one per stop plus one.
    pub fn design(spec: &VehicleSpec, payload: u32) -> Self {
        let n = spec.design_legs();
        let d = spec.design_range_km / n as f64;
        let legs = (0..n)
            .map(|i| Leg { origin: format!("wp{i}"), destination: format!("wp{}", i + 1), distance_km: d })
            .collect();
        Mission { legs, payload, reserve_included: true }
    }

    pub fn without_reserve(&self) -> Self {
        Mission { reserve_included: false, ..self.clone() }
    }

    pub fn with_payload(&self, payload: u32) -> Self {
        Mission { payload, ..self.clone() }
    }

    pub fn total_distance_km(&self) -> f64 {
        self.legs.iter().map(|l| l.distance_km).sum()
    }
}

/// Mission energy as a fraction of nominal capacity.
pub fn mission_energy(spec: &VehicleSpec, m: &Mission) -> Result<f64, EnergyError> {
    if m.legs.is_empty() {
        return Err(EnergyError::NoLegs);
    }
    if m.payload > spec.max_payload_persons {
        return Err(EnergyError::PayloadExceeded { payload: m.payload, max: spec.max_payload_persons });
    }
    let e = &spec.energy;
    let per_km = e.per_km(m.payload);
    let mut total = 0.0;
    for (index, leg) in m.legs.iter().enumerate() {
        if !(leg.distance_km > 0.0) {
            return Err(EnergyError::NonPositiveLeg { index, distance_km: leg.distance_km });
        }
        total += e.e_fixed + per_km * leg.distance_km;
    }
    if m.reserve_included {
        total += reserve_energy(spec);
    }
    Ok(total / spec.battery_capacity)
}

/// Energy held back for the loiter reserve, in energy units.
pub fn reserve_energy(spec: &VehicleSpec) -> f64 {
    spec.energy.loiter_per_min() * spec.reserve_loiter_min
}

/// Longest single leg (reserve held) that fits into `capacity_fraction · C0`.
pub fn payload_range(spec: &VehicleSpec, capacity_fraction: f64, payload: u32) -> Result<f64, EnergyError> {
    if !(capacity_fraction > 0.0 && capacity_fraction <= 1.0) {
        return Err(EnergyError::CapacityFraction(capacity_fraction));
    }
    if payload > spec.max_payload_persons {
        return Err(EnergyError::PayloadExceeded { payload, max: spec.max_payload_persons });
    }
    let e = &spec.energy;
    let budget = capacity_fraction * spec.battery_capacity - e.e_fixed - reserve_energy(spec);
    if budget <= 0.0 {
        return Ok(0.0);
    }
    let per_km = e.per_km(payload);
    if per_km == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(budget / per_km)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Required energy as a fraction of nominal capacity.
    pub required: f64,
    pub available: f64,
    /// Missing energy; zero when feasible.
    pub deficit: f64,
}

pub fn mission_feasible(
    spec: &VehicleSpec,
    capacity_fraction: f64,
    soc: f64,
    m: &Mission,
) -> Result<Feasibility, EnergyError> {
    let required = mission_energy(spec, m)?;
    let available = soc.clamp(0.0, 1.0) * capacity_fraction;
    let feasible = required <= available;
    Ok(Feasibility { feasible, required, available, deficit: if feasible { 0.0 } else { required - available } })
}

const BUILTIN_SPECS: [&str; 3] = [
    include_str!("../../data/specs/multirotor_near.json"),
    include_str!("../../data/specs/tiltrotor_near.json"),
    include_str!("../../data/specs/tiltrotor_far.json"),
];

/// The bundled spec library keyed by id.
pub fn builtin_specs() -> BTreeMap<String, VehicleSpec> {
    BUILTIN_SPECS
        .iter()
        .map(|text| {
            let doc: VehicleSpecDoc = serde_json::from_str(text).expect("bundled spec parses");
            let spec = doc.resolve().expect("bundled spec is valid");
            (spec.id.clone(), spec)
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn spec_with(e_fixed: f64, e_km_base: f64, e_km_person: f64) -> VehicleSpec {
        VehicleSpec {
            id: "t".into(),
            kind: VehicleKind::Tiltrotor,
            tech_level: TechLevel::FarTerm,
            seats: 4,
            cruise_speed_kmh: 210.0,
            design_range_km: 100.0,
            design_stops: 1,
            battery_capacity: 1.0,
            energy: EnergyCoefficients { e_fixed, e_km_base, e_km_person, p_loiter: None },
            reserve_loiter_min: 20.0,
            max_payload_persons: 4,
            note: None,
        }
    }

    /// Largest d on a bisection search; independent of the closed form.
    fn range_by_bisection(spec: &VehicleSpec, f: f64, p: u32) -> f64 {
        let fits = |d: f64| {
            if d <= 0.0 {
                return true;
            }
            mission_energy(spec, &Mission::single_leg("a", "b", d, p)).unwrap() <= f * spec.battery_capacity
        };
        let tiny = 1e-9;
        if !fits(tiny) {
            return 0.0;
        }
        let (mut lo, mut hi) = (tiny, 1.0);
        while fits(hi) {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fits(mid) {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    #[test]
    fn tiny_leg_tends_to_fixed_energy() {
        let s = spec_with(0.05, 0.003, 0.0002);
        let m = Mission { reserve_included: false, ..Mission::single_leg("a", "b", 1e-9, 4) };
        assert_relative_eq!(mission_energy(&s, &m).unwrap(), 0.05, epsilon = 1e-10);
    }

    #[test]
    fn zero_distance_and_empty_missions_rejected() {
        let s = spec_with(0.05, 0.003, 0.0002);
        let m = Mission::single_leg("a", "b", 0.0, 1);
        assert!(matches!(mission_energy(&s, &m), Err(EnergyError::NonPositiveLeg { .. })));
        let m = Mission { legs: vec![], payload: 1, reserve_included: true };
        assert_eq!(mission_energy(&s, &m), Err(EnergyError::NoLegs));
        let m = Mission::single_leg("a", "b", 10.0, 5);
        assert!(matches!(mission_energy(&s, &m), Err(EnergyError::PayloadExceeded { .. })));
    }

    #[test]
    fn range_zero_when_only_fixed_terms_fit() {
        let s = spec_with(0.1, 0.003, 0.0002);
        // fixed + reserve = 0.1 + 20 * 0.01 = 0.3
        assert_eq!(payload_range(&s, 0.3, 4).unwrap(), 0.0);
        let r = payload_range(&s, 0.3 + 1e-6, 4).unwrap();
        assert!(r > 0.0 && r < 0.01);
        let closed = 1e-6 / (0.003 + 4.0 * 0.0002);
        assert_relative_eq!(r, closed, max_relative = 1e-6);
        assert!((r - range_by_bisection(&s, 0.3 + 1e-6, 4)).abs() < 0.01);
    }

    #[test]
    fn capacity_fraction_bounds() {
        let s = spec_with(0.1, 0.003, 0.0002);
        assert!(payload_range(&s, 0.0, 1).is_err());
        assert!(payload_range(&s, 1.01, 1).is_err());
    }

    #[test]
    fn empty_battery_deficit_is_mission_energy() {
        let s = spec_with(0.1, 0.003, 0.0002);
        let m = Mission::design(&s, 4);
        let f = mission_feasible(&s, 1.0, 0.0, &m).unwrap();
        assert!(!f.feasible);
        assert_relative_eq!(f.deficit, mission_energy(&s, &m).unwrap());
    }

    #[test]
    fn design_legs_are_equal() {
        let mut s = spec_with(0.1, 0.003, 0.0002);
        s.design_stops = 2;
        s.design_range_km = 50.0;
        let m = Mission::design(&s, 4);
        assert_eq!(m.legs.len(), 3);
        assert_relative_eq!(m.legs[0].distance_km, 50.0 / 3.0);
    }

    #[test]
    fn infeasible_design_rejected_at_load() {
        let doc = VehicleSpecDoc {
            id: "heavy".into(),
            kind: VehicleKind::Multirotor,
            tech_level: TechLevel::NearTerm,
            seats: None,
            cruise_speed_kmh: None,
            design_range_km: None,
            design_stops: None,
            battery_capacity: None,
            energy: EnergyCoefficients { e_fixed: 0.05, e_km_base: 0.05, e_km_person: 0.0, p_loiter: None },
            reserve_loiter_min: None,
            max_payload_persons: None,
            note: None,
        };
        assert!(matches!(doc.resolve(), Err(EnergyError::DesignInfeasible { .. })));
    }

    proptest! {
        #[test]
        fn closed_form_range_matches_bisection(
            e_fixed in 0.0f64..0.1, base in 0.0005f64..0.01, person in 0.0f64..0.001,
            f in 0.3f64..1.0, p in 1u32..=4,
        ) {
            let s = spec_with(e_fixed, base, person);
            let closed = payload_range(&s, f, p).unwrap();
            let oracle = range_by_bisection(&s, f, p);
            prop_assert!((closed - oracle).abs() < 0.01, "closed {} oracle {}", closed, oracle);
        }

        #[test]
        fn energy_additive_and_monotone(
            e_fixed in 0.0f64..0.1, base in 0.0005f64..0.01, person in 0.0f64..0.001,
            d1 in 0.5f64..60.0, d2 in 0.5f64..60.0, p in 1u32..4,
        ) {
            let s = spec_with(e_fixed, base, person);
            let one = |d: f64, p: u32| mission_energy(&s, &Mission { reserve_included: false, ..Mission::single_leg("a", "b", d, p) }).unwrap();
            let two = Mission {
                legs: vec![
                    Leg { origin: "a".into(), destination: "b".into(), distance_km: d1 },
                    Leg { origin: "b".into(), destination: "c".into(), distance_km: d2 },
                ],
                payload: p,
                reserve_included: false,
            };
            let both = mission_energy(&s, &two).unwrap();
            prop_assert!((both - one(d1, p) - one(d2, p)).abs() < 1e-12);
            prop_assert!(one(d1 + 1.0, p) > one(d1, p));
            if person > 0.0 {
                prop_assert!(one(d1, p + 1) > one(d1, p));
            }
        }

        #[test]
        fn range_monotone_in_payload_and_fraction(
            e_fixed in 0.0f64..0.1, base in 0.0005f64..0.01, person in 0.0f64..0.001,
            f in 0.3f64..0.99, p in 1u32..4,
        ) {
            let s = spec_with(e_fixed, base, person);
            prop_assert!(payload_range(&s, f, p + 1).unwrap() <= payload_range(&s, f, p).unwrap());
            prop_assert!(payload_range(&s, f + 0.01, p).unwrap() >= payload_range(&s, f, p).unwrap());
        }
    }
}

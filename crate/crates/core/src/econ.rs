//! Direct operating cost per flight and the fares that recover it.

use crate::battery::{cycles_to_threshold, FlightProfile, LifeError};
use crate::battery::AgingParams;
use crate::energy::{mission_energy, EnergyError, Mission, VehicleSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Block time added per leg for taxi and turn phases, hours.
pub const BLOCK_ADDER_H: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    /// Currency per unit of nominal pack energy.
    pub electricity_price: f64,
    pub battery_pack_cost: f64,
    pub maintenance_per_fh: f64,
    /// Zero for autonomous operation.
    pub crew_per_fh: f64,
    pub vehicle_price: f64,
    pub depreciation_years: f64,
    pub annual_utilization_fh: f64,
    /// Fraction of the vehicle price per year.
    pub insurance_rate: f64,
    pub landing_fee: f64,
    /// Indirect cost as a share of total cost.
    pub indirect_share: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    0.10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostCase {
    Optimistic,
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostPair {
    pub optimistic: CostParams,
    pub conservative: CostParams,
}

impl CostPair {
    pub fn get(&self, case: CostCase) -> &CostParams {
        match case {
            CostCase::Optimistic => &self.optimistic,
            CostCase::Conservative => &self.conservative,
        }
    }
}

/// Cost parameters per vehicle spec id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub specs: BTreeMap<String, CostPair>,
}

impl Default for CostTable {
    fn default() -> Self {
        serde_json::from_str(include_str!("../data/econ/cost_params.json")).expect("bundled cost params parse")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EconError {
    #[error("mission distance must be positive")]
    ZeroDistance,
    #[error("seats_sold must be at least 1")]
    NoSeats,
    #[error("cycle life must be positive, got {0}")]
    CycleLife(f64),
    #[error("cost params: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("no cost parameters for spec {0}")]
    UnknownSpec(String),
    #[error("cycle life: {0}")]
    Life(#[from] LifeError),
}

impl CostParams {
    /// A pilot is aboard, and takes a seat, exactly when crew time is paid.
    pub fn piloted(&self) -> bool {
        self.crew_per_fh > 0.0
    }

    pub fn validate(&self) -> Result<(), EconError> {
        let vals = [
            self.electricity_price,
            self.battery_pack_cost,
            self.maintenance_per_fh,
            self.crew_per_fh,
            self.vehicle_price,
            self.insurance_rate,
            self.landing_fee,
            self.margin,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(EconError::InvalidParams("all rates must be finite and non-negative".into()));
        }
        if !(self.depreciation_years > 0.0 && self.annual_utilization_fh > 0.0) {
            return Err(EconError::InvalidParams("depreciation_years and annual_utilization_fh must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.indirect_share) {
            return Err(EconError::InvalidParams("indirect_share must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub energy: f64,
    pub battery_depreciation: f64,
    pub maintenance: f64,
    pub crew: f64,
    pub capital: f64,
    pub insurance: f64,
    pub fees: f64,
    pub indirect: f64,
    pub total: f64,
    pub distance_km: f64,
    pub block_hours: f64,
    pub seats_sold: u32,
    pub fare_per_km: f64,
    pub fare_per_seat: f64,
}

impl CostBreakdown {
    pub fn direct(&self) -> f64 {
        self.energy + self.battery_depreciation + self.maintenance + self.crew + self.capital + self.insurance + self.fees
    }
}

pub fn block_hours(spec: &VehicleSpec, mission: &Mission) -> f64 {
    mission.legs.iter().map(|l| l.distance_km / spec.cruise_speed_kmh + BLOCK_ADDER_H).sum()
}

/// Per-flight cost, with fares at `seats_sold` paying passengers.
pub fn flight_cost(
    spec: &VehicleSpec,
    mission: &Mission,
    cycle_life: f64,
    params: &CostParams,
    seats_sold: u32,
) -> Result<CostBreakdown, EconError> {
    params.validate()?;
    if !(cycle_life > 0.0) {
        return Err(EconError::CycleLife(cycle_life));
    }
    let distance = mission.total_distance_km();
    if mission.legs.is_empty() || !(distance > 0.0) {
        return Err(EconError::ZeroDistance);
    }
    if seats_sold == 0 {
        return Err(EconError::NoSeats);
    }
    // The reserve stays in the pack, only consumed energy is bought.
    let used = mission_energy(spec, &mission.without_reserve())? * spec.battery_capacity;
    let bh = block_hours(spec, mission);
    let mut c = CostBreakdown {
        energy: used * params.electricity_price,
        battery_depreciation: params.battery_pack_cost / cycle_life,
        maintenance: params.maintenance_per_fh * bh,
        crew: params.crew_per_fh * bh,
        capital: params.vehicle_price / (params.depreciation_years * params.annual_utilization_fh) * bh,
        insurance: params.insurance_rate * params.vehicle_price / params.annual_utilization_fh * bh,
        fees: mission.legs.len() as f64 * params.landing_fee,
        indirect: 0.0,
        total: 0.0,
        distance_km: distance,
        block_hours: bh,
        seats_sold,
        fare_per_km: 0.0,
        fare_per_seat: 0.0,
    };
    let direct = c.direct();
    c.indirect = params.indirect_share / (1.0 - params.indirect_share) * direct;
    c.total = direct + c.indirect;
    c.fare_per_km = fare_per_km(&c, params.margin, seats_sold, distance)?;
    c.fare_per_seat = c.total * (1.0 + params.margin) / seats_sold as f64;
    Ok(c)
}

pub fn fare_per_km(b: &CostBreakdown, margin: f64, seats_sold: u32, distance_km: f64) -> Result<f64, EconError> {
    if seats_sold == 0 {
        return Err(EconError::NoSeats);
    }
    if !(distance_km > 0.0) {
        return Err(EconError::ZeroDistance);
    }
    Ok(b.total * (1.0 + margin) / (distance_km * seats_sold as f64))
}

/// Cycles to replacement for the vehicle's design mission at full payload.
/// The bar is the configured threshold, or the design requirement under
/// the energy-driven policy.
pub fn reference_cycle_life(spec: &VehicleSpec, aging: &AgingParams, flights_per_day: u32) -> Result<f64, EconError> {
    let profile = FlightProfile::design(spec, spec.max_payload_persons, flights_per_day);
    let threshold = match aging.replace_threshold.fraction() {
        Some(f) => f,
        None => mission_energy(spec, &profile.mission)?,
    };
    Ok(cycles_to_threshold(spec, aging, &profile, threshold)?.fractional_cycles)
}

/// A reference operation: one spec flying a fixed stage length at full load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UseCase {
    pub name: String,
    pub spec: String,
    pub distance_km: f64,
    /// Daily flights assumed when deriving battery life.
    pub flights_per_day: u32,
}

impl UseCase {
    pub fn intra_city() -> Self {
        UseCase { name: "intra_city".into(), spec: "multirotor_near".into(), distance_km: 22.0, flights_per_day: 25 }
    }

    pub fn intercity() -> Self {
        UseCase { name: "intercity".into(), spec: "tiltrotor_far".into(), distance_km: 82.0, flights_per_day: 11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UseCaseFare {
    pub use_case: String,
    pub spec: String,
    pub case: CostCase,
    pub cycle_life: f64,
    pub piloted: bool,
    pub breakdown: CostBreakdown,
}

/// Fare for a use case at load factor 1: every passenger seat sold.
pub fn use_case_fare(
    uc: &UseCase,
    spec: &VehicleSpec,
    aging: &AgingParams,
    costs: &CostTable,
    case: CostCase,
) -> Result<UseCaseFare, EconError> {
    let params = costs.specs.get(&spec.id).ok_or_else(|| EconError::UnknownSpec(spec.id.clone()))?.get(case);
    let crew = params.piloted() as u32;
    let seats = spec.seats.saturating_sub(crew);
    let payload = (seats + crew).min(spec.max_payload_persons);
    let cycle_life = reference_cycle_life(spec, aging, uc.flights_per_day)?;
    let mission = Mission::single_leg("o", "d", uc.distance_km, payload);
    let breakdown = flight_cost(spec, &mission, cycle_life, params, seats)?;
    Ok(UseCaseFare { use_case: uc.name.clone(), spec: spec.id.clone(), case, cycle_life, piloted: crew > 0, breakdown })
}

/// One flown flight as seen by the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightAccount {
    pub flight: u64,
    pub use_case: String,
    pub distance_km: f64,
    pub seats_fixed: u32,
    pub revenue: f64,
    pub cost: f64,
    pub ferry: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FareStats {
    pub flights: usize,
    pub mean_fare_per_km: f64,
    pub min_fare_per_km: f64,
    pub max_fare_per_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorPnl {
    pub flights: usize,
    pub ferry_flights: usize,
    pub revenue: f64,
    pub cost: f64,
    pub profit: f64,
    /// Profit over cost.
    pub realized_margin: f64,
    /// Revenue per passenger-km, by use case.
    pub fares: BTreeMap<String, FareStats>,
}

pub fn operator_pnl(flights: &[FlightAccount]) -> OperatorPnl {
    let revenue: f64 = flights.iter().map(|f| f.revenue).sum();
    let cost: f64 = flights.iter().map(|f| f.cost).sum();
    let mut fares: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for f in flights.iter().filter(|f| !f.ferry && f.seats_fixed > 0) {
        fares.entry(f.use_case.clone()).or_default().push(f.revenue / (f.distance_km * f.seats_fixed as f64));
    }
    OperatorPnl {
        flights: flights.len(),
        ferry_flights: flights.iter().filter(|f| f.ferry).count(),
        revenue,
        cost,
        profit: revenue - cost,
        realized_margin: if cost > 0.0 { (revenue - cost) / cost } else { 0.0 },
        fares: fares
            .into_iter()
            .map(|(k, v)| {
                let stats = FareStats {
                    flights: v.len(),
                    mean_fare_per_km: v.iter().sum::<f64>() / v.len() as f64,
                    min_fare_per_km: v.iter().copied().fold(f64::INFINITY, f64::min),
                    max_fare_per_km: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                };
                (k, stats)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::builtin_specs;
    use proptest::prelude::*;

    fn zero() -> CostParams {
        CostParams {
            electricity_price: 0.0,
            battery_pack_cost: 0.0,
            maintenance_per_fh: 0.0,
            crew_per_fh: 0.0,
            vehicle_price: 0.0,
            depreciation_years: 1.0,
            annual_utilization_fh: 1.0,
            insurance_rate: 0.0,
            landing_fee: 0.0,
            indirect_share: 0.0,
            margin: 0.1,
        }
    }

    fn mr() -> VehicleSpec {
        builtin_specs()["multirotor_near"].clone()
    }

    #[test]
    fn null_costs_give_zero_fare() {
        let c = flight_cost(&mr(), &Mission::single_leg("a", "b", 22.0, 4), 1500.0, &zero(), 3).unwrap();
        assert_eq!(c.total, 0.0);
        assert_eq!(c.fare_per_km, 0.0);
    }

    #[test]
    fn hand_computed_breakdown() {
        let p = CostParams { electricity_price: 10.0, maintenance_per_fh: 100.0, landing_fee: 50.0, indirect_share: 0.2, ..zero() };
        let s = mr();
        let c = flight_cost(&s, &Mission::single_leg("a", "b", 24.0, 4), 1000.0, &p, 2).unwrap();
        let used = s.energy.e_fixed + 24.0 * s.energy.per_km(4);
        let bh = 24.0 / 120.0 + 0.1;
        let direct = 10.0 * used + 100.0 * bh + 50.0;
        assert!((c.total - direct / 0.8).abs() < 1e-9);
        assert!((c.fare_per_km - c.total * 1.1 / 48.0).abs() < 1e-12);
        assert!((c.direct() + c.indirect - c.total).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let s = mr();
        let m = Mission::single_leg("a", "b", 22.0, 4);
        assert_eq!(flight_cost(&s, &m, 1000.0, &zero(), 0), Err(EconError::NoSeats));
        assert_eq!(flight_cost(&s, &Mission { legs: vec![], ..m.clone() }, 1000.0, &zero(), 1), Err(EconError::ZeroDistance));
        assert!(matches!(flight_cost(&s, &m, 0.0, &zero(), 1), Err(EconError::CycleLife(_))));
    }

    #[test]
    fn margin_and_seats_are_linear() {
        let p = CostTable::default().specs["multirotor_near"].optimistic;
        let c = flight_cost(&mr(), &Mission::single_leg("a", "b", 22.0, 4), 1500.0, &p, 3).unwrap();
        let recover = fare_per_km(&c, 0.0, 3, 22.0).unwrap();
        assert!((recover * 22.0 * 3.0 - c.total).abs() < 1e-9);
        assert!((fare_per_km(&c, 0.1, 3, 22.0).unwrap() / recover - 1.1).abs() < 1e-12);
        let r = fare_per_km(&c, 0.1, 2, 22.0).unwrap() / fare_per_km(&c, 0.1, 4, 22.0).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        assert_eq!(fare_per_km(&c, 0.1, 0, 22.0), Err(EconError::NoSeats));
    }

    #[test]
    fn pnl_cases() {
        let empty = operator_pnl(&[]);
        assert_eq!((empty.revenue, empty.cost, empty.realized_margin), (0.0, 0.0, 0.0));
        let full = |id: u64| FlightAccount { flight: id, use_case: "intra".into(), distance_km: 22.0, seats_fixed: 3, revenue: 110.0, cost: 100.0, ferry: false };
        let pnl = operator_pnl(&[full(1), full(2)]);
        assert!((pnl.realized_margin - 0.1).abs() < 1e-12);
        let ferry = FlightAccount { flight: 3, seats_fixed: 0, revenue: 0.0, ferry: true, ..full(3) };
        assert!(operator_pnl(&[full(1), full(2), ferry]).realized_margin < pnl.realized_margin);
    }

    proptest! {
        #[test]
        fn longer_missions_are_cheaper_per_km(d in 5.0f64..40.0, extra in 0.5f64..20.0) {
            let p = CostTable::default().specs["multirotor_near"].conservative;
            let s = mr();
            let a = flight_cost(&s, &Mission::single_leg("a", "b", d, 4), 1500.0, &p, 3).unwrap();
            let b = flight_cost(&s, &Mission::single_leg("a", "b", d + extra, 4), 1500.0, &p, 3).unwrap();
            prop_assert!(b.fare_per_km < a.fare_per_km);
        }

        #[test]
        fn autonomy_and_battery_life(d in 5.0f64..40.0, life in 100.0f64..3000.0) {
            let p = CostTable::default().specs["multirotor_near"].optimistic;
            let s = mr();
            let m = Mission::single_leg("a", "b", d, 4);
            let piloted = flight_cost(&s, &m, life, &p, 3).unwrap();
            let auto = flight_cost(&s, &m, life, &CostParams { crew_per_fh: 0.0, ..p }, 3).unwrap();
            prop_assert!(auto.fare_per_km < piloted.fare_per_km);
            let shorter = flight_cost(&s, &m, life * 0.9, &p, 3).unwrap();
            prop_assert!(shorter.fare_per_km > piloted.fare_per_km);
            let parts = [piloted.energy, piloted.battery_depreciation, piloted.maintenance, piloted.crew, piloted.capital, piloted.insurance, piloted.fees, piloted.indirect];
            prop_assert!(parts.iter().all(|x| *x >= 0.0));
        }
    }
}

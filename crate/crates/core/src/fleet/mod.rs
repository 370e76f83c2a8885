//! Fleet operations: the request pipeline, flight execution, charging and
//! battery replacement, driven by the event queue.

mod checks;
mod pipeline;

pub use checks::InvariantReport;

use crate::battery::{apply_calendar, apply_flight, charge, replacement_policy, AgingParams, BatteryState, FlightStress, Replacement};
use crate::demand::{trip_candidates, ChoiceParams, FlightRequest};
use crate::econ::{reference_cycle_life, CostBreakdown, CostParams};
use crate::energy::{mission_energy, reserve_energy, Mission, VehicleSpec};
use crate::network::{CorridorTable, Direction, Slot, SlotTable, StandGrant, StandPool};
use crate::sim::rng::{stream, StreamRng, CHOICE_STREAM, DEMAND_STREAM};
use crate::sim::{EventKind, EventLog, EventQueue, LogRecord, RecordKind, Scenario, SimTime, SECONDS_PER_DAY};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleStatus {
    Idle,
    Charging,
    /// Reserved for a committed flight that has not left yet.
    Boarding,
    Enroute,
    Maintenance,
}

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: String,
    pub spec: String,
    pub battery: BatteryState,
    /// Vertidrome index; None while airborne.
    pub location: Option<usize>,
    pub available_from: SimTime,
    pub status: VehicleStatus,
    /// Holds a stand at `location`. False while airborne or waiting on the apron.
    pub parked: bool,
    pub next_flight: Option<u64>,
    pub replace_pending: bool,
    pub flights: u64,
    pub flight_seconds: u64,
    pub packs_retired: u32,
    /// Flights per day since the last calendar tick.
    pub flights_today: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlightStatus {
    Provisional,
    Committed,
    Departed,
    Completed,
    Cancelled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NoVehicle,
    NoEnergy,
    NoSlot,
    WindowUnservable,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::NoVehicle => "no_vehicle",
            RejectReason::NoEnergy => "no_energy",
            RejectReason::NoSlot => "no_slot",
            RejectReason::WindowUnservable => "window_unservable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result")]
pub enum RequestOutcome {
    Pooled { flight: u64 },
    Accepted { flight: u64 },
    Declined,
    Rejected { reason: RejectReason },
}

impl RequestOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            RequestOutcome::Pooled { .. } => "pooled",
            RequestOutcome::Accepted { .. } => "accepted",
            RequestOutcome::Declined => "declined",
            RequestOutcome::Rejected { .. } => "rejected",
        }
    }
}

/// Slot and corridor timing of a scheduled flight.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightPlan {
    pub dep: Slot,
    pub arr: Slot,
    /// Earliest departure the vehicle and window allowed.
    pub t_ready: u64,
    pub wait_dep_slot: u64,
    pub wait_corridor: u64,
    pub wait_arr_slot: u64,
}

#[derive(Debug, Clone)]
pub struct Flight {
    pub id: u64,
    pub vehicle: usize,
    pub origin: usize,
    pub destination: usize,
    pub distance_km: f64,
    pub corridor: String,
    pub direction: Direction,
    pub plan: FlightPlan,
    /// Passenger seats, pilot excluded.
    pub capacity: u32,
    pub crew: u32,
    /// (request id, persons)
    pub fixed: Vec<(u64, u32)>,
    pub provisional: Vec<(u64, u32)>,
    pub status: FlightStatus,
    pub ferry: bool,
    pub fare_per_seat: f64,
}

impl Flight {
    pub fn fixed_pax(&self) -> u32 {
        self.fixed.iter().map(|(_, p)| p).sum()
    }

    pub fn booked_pax(&self) -> u32 {
        self.fixed_pax() + self.provisional.iter().map(|(_, p)| p).sum::<u32>()
    }

    pub fn seats_free(&self) -> u32 {
        self.capacity.saturating_sub(self.booked_pax())
    }

    pub fn payload(&self) -> u32 {
        self.booked_pax() + self.crew
    }

    pub fn airborne_s(&self) -> u64 {
        self.plan.arr.t_start - self.plan.dep.t_start
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("vehicle {vehicle}: {message}")]
    Setup { vehicle: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Payload {
    Request(usize),
    Departure(u64),
    Arrival(u64),
    ChargeDone(usize),
    Tick(u64),
}

/// Per-vehicle, per-day battery record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryRow {
    pub vehicle: String,
    pub day: u64,
    pub flights: u64,
    pub throughput_fec: f64,
    pub capacity_fraction: f64,
    pub limiting_factor: String,
}

pub struct Simulation<'a> {
    pub scenario: &'a Scenario,
    queue: EventQueue<Payload>,
    pub log: EventLog,
    pub vehicles: Vec<Vehicle>,
    pub flights: BTreeMap<u64, Flight>,
    pub requests: Vec<FlightRequest>,
    pub outcomes: BTreeMap<u64, RequestOutcome>,
    pub slots: Vec<SlotTable>,
    pub stands: Vec<StandPool>,
    pub corridors: CorridorTable,
    pub battery_rows: Vec<BatteryRow>,
    /// Battery life used for fares, per spec id.
    pub cycle_life: BTreeMap<String, f64>,
    retired_lives: BTreeMap<String, Vec<u64>>,
    /// SoC and reserve fraction at each arrival.
    pub arrivals: Vec<(u64, f64, f64)>,
    no_vehicle_log: Vec<Vec<u64>>,
    choice: ChoiceParams,
    choice_rng: StreamRng,
    next_flight: u64,
    clock: SimTime,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self, SimError> {
        let doc = &scenario.doc;
        let net = &scenario.network;
        let horizon = doc.horizon_s;
        let slots = net
            .vertidromes
            .iter()
            .enumerate()
            .map(|(i, v)| SlotTable::new(i, v.n_fato as usize, v.fato_occupancy_s, v.min_separation_s, horizon))
            .collect();
        let mut stands: Vec<StandPool> = net.vertidromes.iter().map(|v| StandPool::new(v.n_stands as usize)).collect();

        let mut cycle_life = BTreeMap::new();
        let mut vehicles = Vec::with_capacity(doc.fleet.vehicles.len());
        for (i, vd) in doc.fleet.vehicles.iter().enumerate() {
            let spec = &scenario.specs[&vd.spec];
            if !cycle_life.contains_key(&spec.id) {
                let life = reference_cycle_life(spec, &doc.aging, doc.econ.reference_flights_per_day)
                    .map_err(|e| SimError::Setup { vehicle: vd.id.clone(), message: e.to_string() })?;
                cycle_life.insert(spec.id.clone(), life.max(1.0));
            }
            let loc = net.index_of(&vd.location).expect("validated location");
            let granted = stands[loc].acquire(i as u64);
            debug_assert_eq!(granted, StandGrant::Granted);
            let mut battery = BatteryState::fresh(spec.battery_capacity);
            battery.soc = vd.soc;
            vehicles.push(Vehicle {
                id: vd.id.clone(),
                spec: vd.spec.clone(),
                battery,
                location: Some(loc),
                available_from: SimTime::ZERO,
                status: VehicleStatus::Idle,
                parked: true,
                next_flight: None,
                replace_pending: false,
                flights: 0,
                flight_seconds: 0,
                packs_retired: 0,
                flights_today: 0,
            });
        }

        let mut requests = scenario.requests.clone();
        if let Some(gen) = &doc.demand.generator {
            let mut rng = stream(doc.seed, DEMAND_STREAM);
            let mut next_id = requests.iter().map(|r| r.id + 1).max().unwrap_or(0);
            let days = horizon.div_ceil(SECONDS_PER_DAY).max(1);
            for day in 0..days {
                let batch = trip_candidates(gen, net, day, next_id, &mut rng);
                next_id += batch.len() as u64;
                requests.extend(batch);
            }
            requests.sort_by_key(|r| (r.t_request, r.id));
        }
        requests.retain(|r| r.t_request.0 <= horizon);

        let choice = match &doc.demand.generator {
            Some(g) => doc.demand.choice.for_income(g.city.gdp_per_capita),
            None => doc.demand.choice,
        };

        let mut sim = Simulation {
            scenario,
            queue: EventQueue::new(),
            log: EventLog::new(),
            vehicles,
            flights: BTreeMap::new(),
            requests,
            outcomes: BTreeMap::new(),
            slots,
            stands,
            corridors: CorridorTable::new(net.corridor_sep_s),
            battery_rows: Vec::new(),
            cycle_life,
            retired_lives: BTreeMap::new(),
            arrivals: Vec::new(),
            no_vehicle_log: vec![Vec::new(); net.vertidromes.len()],
            choice,
            choice_rng: stream(doc.seed, CHOICE_STREAM),
            next_flight: 0,
            clock: SimTime::ZERO,
        };
        sim.log.push(
            LogRecord::new(SimTime::ZERO, EventKind::CalendarTick)
                .value(0.0)
                .kv("horizon_s", horizon)
                .kv("vehicles", sim.vehicles.len())
                .kv("seed", doc.seed),
        );
        for (i, r) in sim.requests.iter().enumerate() {
            sim.queue.schedule(r.t_request, EventKind::RequestArrival, Payload::Request(i)).expect("future event");
        }
        if horizon >= SECONDS_PER_DAY {
            sim.queue.schedule(SimTime(SECONDS_PER_DAY), EventKind::CalendarTick, Payload::Tick(1)).expect("future event");
        }
        for v in 0..sim.vehicles.len() {
            sim.start_charging(v, SimTime::ZERO);
        }
        Ok(sim)
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn spec(&self, v: usize) -> &'a VehicleSpec {
        &self.scenario.specs[&self.vehicles[v].spec]
    }

    pub fn cost_params(&self, v: usize) -> &'a CostParams {
        let doc = &self.scenario.doc;
        doc.econ.costs.specs[&self.vehicles[v].spec].get(doc.econ.case)
    }

    fn aging(&self) -> &'a AgingParams {
        &self.scenario.doc.aging
    }

    pub(crate) fn vname(&self, i: usize) -> &'a str {
        &self.scenario.network.vertidromes[i].id
    }

    /// Processes every event with `t <= t_end`; the clock ends at `t_end`.
    pub fn run_until(&mut self, t_end: SimTime) -> &EventLog {
        let t_end = t_end.min(self.scenario.horizon());
        while let Some((ev, payload)) = self.queue.pop_until(t_end) {
            self.clock = ev.t;
            match payload {
                Payload::Request(i) => self.process_request(i),
                Payload::Departure(f) => self.depart(f),
                Payload::Arrival(f) => self.arrive(f),
                Payload::ChargeDone(v) => self.charge_done(v),
                Payload::Tick(day) => self.calendar_tick(day),
            }
        }
        self.queue.advance_to(t_end);
        self.clock = t_end;
        &self.log
    }

    pub fn run(&mut self) -> &EventLog {
        self.run_until(self.scenario.horizon())
    }

    pub(crate) fn schedule(&mut self, t: SimTime, kind: EventKind, p: Payload) {
        // Handlers only schedule at or after the current event time.
        self.queue.schedule(t, kind, p).expect("causal schedule");
    }

    fn anomaly(&mut self, t: SimTime, what: &str, rec: LogRecord) {
        log::warn!("anomaly at {t}: {what}");
        let mut r = rec.kv("anomaly", what);
        r.t = t.0;
        r.kind = RecordKind::Anomaly;
        self.log.push(r);
    }

    /// Battery the vehicle will have once any charge in progress finishes.
    pub(crate) fn projected_battery(&self, v: usize) -> BatteryState {
        let veh = &self.vehicles[v];
        let target = self.scenario.doc.ops.charge_target_soc;
        if veh.status == VehicleStatus::Charging && veh.battery.soc < target {
            if let Ok((b, _)) = charge(&veh.battery, self.aging(), 1.0, target) {
                return b;
            }
        }
        veh.battery.clone()
    }

    pub(crate) fn flight_mission(&self, f: &Flight, payload: u32) -> Mission {
        Mission::single_leg(self.vname(f.origin), self.vname(f.destination), f.distance_km, payload)
    }

    fn start_charging(&mut self, v: usize, now: SimTime) {
        let target = self.scenario.doc.ops.charge_target_soc;
        let loc = self.vehicles[v].location.expect("parked vehicle has a location");
        let c_rate = self.scenario.network.vertidromes[loc].charge_c_rate;
        let veh = &self.vehicles[v];
        if veh.battery.soc >= target {
            let veh = &mut self.vehicles[v];
            veh.available_from = veh.available_from.max(now);
            veh.status = if veh.next_flight.is_some() { VehicleStatus::Boarding } else { VehicleStatus::Idle };
            return;
        }
        match charge(&veh.battery, self.aging(), c_rate, target) {
            Ok((_, secs)) => {
                let veh = &mut self.vehicles[v];
                veh.status = VehicleStatus::Charging;
                veh.available_from = now + secs;
                self.schedule(now + secs, EventKind::ChargeComplete, Payload::ChargeDone(v));
            }
            Err(e) => {
                let rec = LogRecord::new(now, RecordKind::Anomaly).vehicle(&self.vehicles[v].id.clone()).kv("error", e);
                self.anomaly(now, "charge rejected", rec);
            }
        }
    }

    fn charge_done(&mut self, v: usize) {
        let now = self.clock;
        if self.vehicles[v].status != VehicleStatus::Charging {
            return;
        }
        let loc = self.vehicles[v].location.expect("charging vehicle is parked");
        let c_rate = self.scenario.network.vertidromes[loc].charge_c_rate;
        let target = self.scenario.doc.ops.charge_target_soc;
        let before = self.vehicles[v].battery.clone();
        match charge(&before, self.aging(), c_rate, target.max(before.soc)) {
            Ok((b, _)) => self.vehicles[v].battery = b,
            Err(e) => {
                let rec = LogRecord::new(now, RecordKind::Anomaly).vehicle(&self.vehicles[v].id.clone()).kv("error", e);
                self.anomaly(now, "charge rejected", rec);
            }
        }
        let name = self.vname(loc);
        let veh = &mut self.vehicles[v];
        veh.status = if veh.next_flight.is_some() { VehicleStatus::Boarding } else { VehicleStatus::Idle };
        veh.available_from = now;
        let rec = LogRecord::new(now, EventKind::ChargeComplete)
            .vehicle(&veh.id)
            .vertidrome(name)
            .soc(before.soc, veh.battery.soc)
            .capacity(veh.battery.capacity_fraction)
            .value(veh.battery.throughput_fec());
        self.log.push(rec);
        if self.vehicles[v].replace_pending {
            self.replace_battery(v, now, "deferred");
        }
    }

    fn depart(&mut self, fid: u64) {
        let now = self.clock;
        let f = self.flights[&fid].clone();
        if f.status != FlightStatus::Committed {
            return;
        }
        let v = f.vehicle;
        let spec = self.spec(v);
        let before = self.vehicles[v].battery.clone();
        let mission = self.flight_mission(&f, f.payload().min(spec.max_payload_persons));
        let required = mission_energy(spec, &mission).unwrap_or(f64::INFINITY);
        let consumed = mission_energy(spec, &mission.without_reserve()).unwrap_or(f64::INFINITY);
        let available = before.available_energy();
        if required > available + 1e-12 {
            let rec = LogRecord::new(now, RecordKind::Anomaly).flight(fid).vehicle(&self.vehicles[v].id.clone()).value(required - available);
            self.anomaly(now, "reserve margin lost after commit", rec);
        }
        let dod = consumed / before.capacity_fraction;
        let stress = FlightStress { dod, duration_s: f.airborne_s() as f64 };
        let after = match apply_flight(&before, self.aging(), stress) {
            Ok(b) => b,
            Err(e) => {
                let rec = LogRecord::new(now, RecordKind::Anomaly).flight(fid).vehicle(&self.vehicles[v].id.clone()).kv("error", e);
                self.anomaly(now, "flight cannot be flown", rec);
                self.cancel_flight(fid, now, "energy");
                self.vehicles[v].next_flight = None;
                self.vehicles[v].status = VehicleStatus::Idle;
                return;
            }
        };
        self.vehicles[v].battery = after.clone();

        // Leaving frees the stand for the first vehicle waiting on the apron.
        let o = f.origin;
        let next = self.stands[o].release(v as u64);
        self.log.push(
            LogRecord::new(now, EventKind::StandReleased)
                .vehicle(&self.vehicles[v].id)
                .vertidrome(self.vname(o))
                .value(self.stands[o].occupied() as f64),
        );
        if let Some(w) = next {
            self.take_stand(w as usize, o, now);
        }

        let veh = &mut self.vehicles[v];
        veh.location = None;
        veh.parked = false;
        veh.status = VehicleStatus::Enroute;
        veh.next_flight = None;
        self.flights.get_mut(&fid).expect("flight exists").status = FlightStatus::Departed;
        let rec = LogRecord::new(now, EventKind::FlightDeparture)
            .flight(fid)
            .vehicle(&self.vehicles[v].id)
            .vertidrome(self.vname(o))
            .soc(before.soc, after.soc)
            .capacity(after.capacity_fraction)
            .value(f.distance_km)
            .kv("to", self.vname(f.destination))
            .kv("pax", f.fixed_pax())
            .kv("payload", f.payload())
            .kv("ferry", f.ferry as u8)
            .kv("dod", dod)
            .kv("arr_t", f.plan.arr.t_start);
        self.log.push(rec);
        self.schedule(SimTime(f.plan.arr.t_start), EventKind::FlightArrival, Payload::Arrival(fid));
    }

    fn arrive(&mut self, fid: u64) {
        let now = self.clock;
        let f = self.flights[&fid].clone();
        let v = f.vehicle;
        let d = f.destination;
        let spec = self.spec(v);
        let b = self.vehicles[v].battery.clone();
        let reserve = reserve_energy(spec) / b.capacity_fraction;
        self.arrivals.push((fid, b.soc, reserve));
        {
            let veh = &mut self.vehicles[v];
            veh.location = Some(d);
            veh.status = VehicleStatus::Idle;
            veh.available_from = now;
            veh.flights += 1;
            veh.flights_today += 1;
            veh.flight_seconds += f.airborne_s();
        }
        self.flights.get_mut(&fid).expect("flight exists").status = FlightStatus::Completed;
        self.log.push(
            LogRecord::new(now, EventKind::FlightArrival)
                .flight(fid)
                .vehicle(&self.vehicles[v].id)
                .vertidrome(self.vname(d))
                .soc(b.soc, b.soc)
                .capacity(b.capacity_fraction)
                .value(f.airborne_s() as f64)
                .kv("from", self.vname(f.origin))
                .kv("reserve", reserve),
        );
        self.account(&f, now);
        if self.vehicles[v].replace_pending {
            self.replace_battery(v, now, "deferred");
        }
        match self.stands[d].acquire(v as u64) {
            StandGrant::Granted => self.take_stand(v, d, now),
            StandGrant::Queued(pos) => {
                let fato = self.slots[d].hold(v as u64);
                self.log.push(
                    LogRecord::new(now, RecordKind::ApronCongestion)
                        .vehicle(&self.vehicles[v].id)
                        .vertidrome(self.vname(d))
                        .value((pos + 1) as f64)
                        .kv("fato_held", fato.map_or("none".to_string(), |f| f.to_string())),
                );
            }
        }
    }

    /// Vehicle `v` occupies a stand at `loc` and starts charging.
    fn take_stand(&mut self, v: usize, loc: usize, now: SimTime) {
        self.slots[loc].release_hold(v as u64);
        self.vehicles[v].parked = true;
        self.vehicles[v].available_from = now;
        self.log.push(
            LogRecord::new(now, EventKind::StandAcquired)
                .vehicle(&self.vehicles[v].id)
                .vertidrome(self.vname(loc))
                .value(self.stands[loc].occupied() as f64),
        );
        self.start_charging(v, now);
    }

    fn account(&mut self, f: &Flight, now: SimTime) {
        let v = f.vehicle;
        let spec = self.spec(v);
        let params = self.cost_params(v);
        let mission = self.flight_mission(f, f.payload().min(spec.max_payload_persons));
        let life = self.cycle_life[&spec.id];
        let sold = f.fixed_pax().max(1);
        match crate::econ::flight_cost(spec, &mission, life, params, sold) {
            Ok(c) => {
                let revenue = f.fare_per_seat * f.fixed_pax() as f64;
                self.log.push(cost_record(now, f, &self.vehicles[v].id, &spec.id, &c, revenue, life));
            }
            Err(e) => {
                let rec = LogRecord::new(now, RecordKind::Anomaly).flight(f.id).kv("error", e);
                self.anomaly(now, "cost model failed", rec);
            }
        }
    }

    fn calendar_tick(&mut self, day: u64) {
        let now = self.clock;
        self.log.push(LogRecord::new(now, EventKind::CalendarTick).value(day as f64));
        for v in 0..self.vehicles.len() {
            let b = match apply_calendar(&self.vehicles[v].battery, self.aging(), 1.0) {
                Ok(b) => b,
                Err(e) => {
                    let rec = LogRecord::new(now, RecordKind::Anomaly).vehicle(&self.vehicles[v].id.clone()).kv("error", e);
                    self.anomaly(now, "calendar ageing failed", rec);
                    continue;
                }
            };
            self.vehicles[v].battery = b;
            let decision = replacement_policy(&self.vehicles[v].battery, self.aging(), self.spec(v)).unwrap_or(Replacement::Keep);
            let veh = &self.vehicles[v];
            self.battery_rows.push(BatteryRow {
                vehicle: veh.id.clone(),
                day,
                flights: veh.flights_today,
                throughput_fec: veh.battery.throughput_fec(),
                capacity_fraction: veh.battery.capacity_fraction,
                limiting_factor: match decision {
                    Replacement::Keep => "none".into(),
                    Replacement::Replace(r) => serde_json::to_value(r).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                },
            });
            self.vehicles[v].flights_today = 0;
            if let Replacement::Replace(reason) = decision {
                let veh = &self.vehicles[v];
                if veh.parked && veh.status != VehicleStatus::Charging {
                    let label = serde_json::to_value(reason).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                    self.replace_battery(v, now, &label);
                } else {
                    self.vehicles[v].replace_pending = true;
                }
            }
        }
        let next = (day + 1) * SECONDS_PER_DAY;
        if next <= self.scenario.doc.horizon_s {
            self.schedule(SimTime(next), EventKind::CalendarTick, Payload::Tick(day + 1));
        }
    }

    fn replace_battery(&mut self, v: usize, now: SimTime, reason: &str) {
        let spec_id = self.vehicles[v].spec.clone();
        let c0 = self.spec(v).battery_capacity;
        let old = std::mem::replace(&mut self.vehicles[v].battery, BatteryState::fresh(c0));
        let veh = &mut self.vehicles[v];
        veh.replace_pending = false;
        veh.packs_retired += 1;
        let lives = self.retired_lives.entry(spec_id.clone()).or_default();
        lives.push(old.flight_cycles);
        let mean = lives.iter().sum::<u64>() as f64 / lives.len() as f64;
        self.cycle_life.insert(spec_id, mean.max(1.0));
        self.log.push(
            LogRecord::new(now, EventKind::BatteryReplaced)
                .vehicle(&veh.id)
                .capacity(old.capacity_fraction)
                .value(old.flight_cycles as f64)
                .kv("reason", reason)
                .kv("age_days", old.age_days)
                .kv("fec", old.throughput_fec())
                .kv("fare_cycle_life", mean),
        );
    }
}

pub(crate) fn cost_record(
    now: SimTime,
    f: &Flight,
    vehicle: &str,
    spec: &str,
    c: &CostBreakdown,
    revenue: f64,
    cycle_life: f64,
) -> LogRecord {
    LogRecord::new(now, RecordKind::FlightCost)
        .flight(f.id)
        .vehicle(vehicle)
        .value(c.total)
        .kv("spec", spec)
        .kv("distance_km", f.distance_km)
        .kv("pax", f.fixed_pax())
        .kv("ferry", f.ferry as u8)
        .kv("revenue", revenue)
        .kv("energy", c.energy)
        .kv("battery", c.battery_depreciation)
        .kv("maintenance", c.maintenance)
        .kv("crew", c.crew)
        .kv("capital", c.capital)
        .kv("insurance", c.insurance)
        .kv("fees", c.fees)
        .kv("indirect", c.indirect)
        .kv("cycle_life", cycle_life)
}

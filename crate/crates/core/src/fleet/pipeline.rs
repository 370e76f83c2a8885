//! Request handling: pool check, vehicle selection, slot scheduling,
//! mode-choice offer and seat finalisation.

use super::{Flight, FlightPlan, FlightStatus, Payload, RejectReason, RequestOutcome, Simulation, VehicleStatus};
use crate::demand::{mode_probabilities, FlightRequest, Mode, ModeAttributes, ModeOffer};
use crate::econ::flight_cost;
use crate::energy::{mission_feasible, Mission};
use crate::network::{Movement, SlotError};
use crate::sim::{EventKind, LogRecord, RecordKind, SimTime};
use rand::Rng;

impl Simulation<'_> {
    pub(super) fn process_request(&mut self, i: usize) {
        let now = self.clock;
        let r = self.requests[i].clone();
        let net = &self.scenario.network;
        let (o, d) = (net.index_of(&r.origin).expect("validated"), net.index_of(&r.destination).expect("validated"));
        self.log.push(
            LogRecord::new(now, EventKind::RequestArrival)
                .request(r.id)
                .vertidrome(&r.origin)
                .kv("to", &r.destination)
                .kv("pax", r.pax)
                .kv("t_min", r.t_min.0)
                .kv("t_max", r.t_max.0),
        );

        // Step 1: an existing flight with room, in the window, still energy-feasible.
        let pooled = if self.scenario.doc.ops.pooling { self.find_pool(&r, o, d) } else { None };
        let mut check = LogRecord::new(now, RecordKind::PoolCheck).request(r.id).kv("hit", pooled.is_some() as u8);
        if let Some(f) = pooled {
            check = check.flight(f);
        }
        self.log.push(check);

        let (fid, fresh) = match pooled {
            Some(f) => (f, false),
            None => match self.new_flight(&r, o, d) {
                Ok(f) => (f, true),
                Err(reason) => {
                    self.finish(&r, None, RequestOutcome::Rejected { reason }, None);
                    if reason == RejectReason::NoVehicle {
                        self.note_no_vehicle(o, now);
                    }
                    return;
                }
            },
        };
        self.flights.get_mut(&fid).expect("flight").provisional.push((r.id, r.pax));

        // Step 3: offer and draw.
        let (mode, p_uam) = self.offer(&r, fid);
        let accepted = mode == Mode::Uam;

        // Step 4: finalise.
        let f = self.flights.get_mut(&fid).expect("flight");
        f.provisional.retain(|(q, _)| *q != r.id);
        if accepted {
            f.fixed.push((r.id, r.pax));
            let first = f.status == FlightStatus::Provisional;
            if first {
                self.commit(fid);
            }
            let outcome = if fresh { RequestOutcome::Accepted { flight: fid } } else { RequestOutcome::Pooled { flight: fid } };
            self.finish(&r, Some(fid), outcome, Some((mode, p_uam)));
        } else {
            if f.status == FlightStatus::Provisional && f.fixed.is_empty() {
                self.cancel_flight(fid, now, "declined");
            }
            self.finish(&r, Some(fid), RequestOutcome::Declined, Some((mode, p_uam)));
        }
    }

    fn finish(&mut self, r: &FlightRequest, flight: Option<u64>, outcome: RequestOutcome, choice: Option<(Mode, f64)>) {
        let mut rec = LogRecord::new(self.clock, RecordKind::RequestOutcome)
            .request(r.id)
            .vertidrome(&r.origin)
            .kv("outcome", outcome.label());
        if let Some(f) = flight {
            rec = rec.flight(f);
        }
        if let RequestOutcome::Rejected { reason } = &outcome {
            rec = rec.kv("reason", reason.as_str());
        }
        if let Some((m, p)) = choice {
            rec = rec.kv("mode", m.as_str()).value(p);
        }
        self.log.push(rec);
        self.outcomes.insert(r.id, outcome);
    }

    fn find_pool(&self, r: &FlightRequest, o: usize, d: usize) -> Option<u64> {
        let mut best: Option<(u64, u64)> = None;
        for (id, f) in &self.flights {
            if f.ferry || f.origin != o || f.destination != d {
                continue;
            }
            if !matches!(f.status, FlightStatus::Committed | FlightStatus::Provisional) {
                continue;
            }
            let t = f.plan.dep.t_start;
            if t < r.t_min.0 || t > r.t_max.0 || f.seats_free() < r.pax {
                continue;
            }
            let spec = self.spec(f.vehicle);
            let payload = f.payload() + r.pax;
            if payload > spec.max_payload_persons {
                continue;
            }
            let b = self.projected_battery(f.vehicle);
            let ok = mission_feasible(spec, b.capacity_fraction, b.soc, &self.flight_mission(f, payload)).is_ok_and(|x| x.feasible);
            if ok && best.is_none_or(|(bt, bid)| (t, *id) < (bt, bid)) {
                best = Some((t, *id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Passenger seats and crew for vehicle `v` under the scenario's cost case.
    fn seats(&self, v: usize) -> (u32, u32) {
        let spec = self.spec(v);
        let crew = self.cost_params(v).piloted() as u32;
        (spec.seats.min(spec.max_payload_persons).saturating_sub(crew), crew)
    }

    /// Earliest-available feasible vehicle parked at `o`; ties by distance then index.
    pub(super) fn select_vehicle(&self, o: usize, d: usize, pax: u32, t_max: SimTime) -> Result<usize, RejectReason> {
        let boarding = self.scenario.doc.ops.boarding_s;
        let dist = self.scenario.network.route(o, d).expect("route").distance_km;
        let mut present = false;
        let mut energetic = false;
        let mut best: Option<(SimTime, usize)> = None;
        for (i, v) in self.vehicles.iter().enumerate() {
            if v.location != Some(o) || !v.parked || v.next_flight.is_some() {
                continue;
            }
            if !matches!(v.status, VehicleStatus::Idle | VehicleStatus::Charging) {
                continue;
            }
            let (cap, crew) = self.seats(i);
            if cap < pax {
                continue;
            }
            present = true;
            let spec = self.spec(i);
            let b = self.projected_battery(i);
            let m = Mission::single_leg(self.vname(o), self.vname(d), dist, pax + crew);
            if b.beyond_model_validity || !mission_feasible(spec, b.capacity_fraction, b.soc, &m).is_ok_and(|x| x.feasible) {
                continue;
            }
            energetic = true;
            if v.available_from + boarding > t_max {
                continue;
            }
            if best.is_none_or(|(t, _)| v.available_from < t) {
                best = Some((v.available_from, i));
            }
        }
        match best {
            Some((_, i)) => Ok(i),
            None if !present => Err(RejectReason::NoVehicle),
            None if !energetic => Err(RejectReason::NoEnergy),
            None => Err(RejectReason::WindowUnservable),
        }
    }

    /// Joint search over departure slot, corridor entry and arrival slot.
    /// Every retry moves the departure strictly later, and the window is
    /// finite, so the loop ends.
    pub(super) fn plan_flight(&self, v: usize, o: usize, d: usize, t_ready: u64, t_max: u64) -> Result<FlightPlan, RejectReason> {
        if t_ready > t_max {
            return Err(RejectReason::WindowUnservable);
        }
        let route = self.scenario.network.route(o, d).expect("route");
        let flight_s = self.flight_seconds(v, route.distance_km);
        let (mut wait_dep, mut wait_cor, mut wait_arr) = (0, 0, 0);
        let mut t = t_ready;
        loop {
            let (fd, td) = self.slots[o].probe_for(Movement::Departure, t).map_err(slot_reason)?;
            if td > t_max {
                return Err(RejectReason::NoSlot);
            }
            wait_dep += td - t;
            let delay = self.corridors.deconflict(&route.corridor, route.direction(), td);
            if delay > 0 {
                wait_cor += delay;
                t = td + delay;
                continue;
            }
            let ta = td + flight_s;
            let (fa, ta2) = self.slots[d].probe_for(Movement::Arrival, ta).map_err(slot_reason)?;
            if ta2 > ta {
                wait_arr += ta2 - ta;
                t = td + (ta2 - ta);
                continue;
            }
            let dep = crate::network::Slot {
                vertidrome: o,
                fato: fd,
                movement: Movement::Departure,
                t_start: td,
                t_end: td + self.slots[o].occupancy_s,
                owner: 0,
            };
            let arr = crate::network::Slot {
                vertidrome: d,
                fato: fa,
                movement: Movement::Arrival,
                t_start: ta,
                t_end: ta + self.slots[d].occupancy_s,
                owner: 0,
            };
            return Ok(FlightPlan { dep, arr, t_ready, wait_dep_slot: wait_dep, wait_corridor: wait_cor, wait_arr_slot: wait_arr });
        }
    }

    pub(super) fn flight_seconds(&self, v: usize, distance_km: f64) -> u64 {
        self.spec(v).flight_time_s(distance_km).round() as u64 + self.scenario.doc.ops.leg_overhead_s
    }

    /// Books the plan's slots and corridor entry and registers a provisional flight.
    fn book_flight(&mut self, v: usize, o: usize, d: usize, mut plan: FlightPlan, ferry: bool) -> u64 {
        let id = self.next_flight;
        self.next_flight += 1;
        let route = self.scenario.network.route(o, d).expect("route").clone();
        plan.dep = self.slots[o].book(plan.dep.fato, plan.dep.t_start, Movement::Departure, id);
        plan.arr = self.slots[d].book(plan.arr.fato, plan.arr.t_start, Movement::Arrival, id);
        self.corridors.insert(&route.corridor, route.direction(), plan.dep.t_start, id);
        let (capacity, crew) = self.seats(v);
        let fare_per_seat = if ferry { 0.0 } else { self.fare_per_seat(v, route.distance_km, capacity, crew) };
        self.log.push(
            LogRecord::new(self.clock, RecordKind::FlightScheduled)
                .flight(id)
                .vehicle(&self.vehicles[v].id)
                .vertidrome(self.vname(o))
                .value(route.distance_km)
                .kv("to", self.vname(d))
                .kv("dep_fato", plan.dep.fato)
                .kv("dep_t", plan.dep.t_start)
                .kv("arr_fato", plan.arr.fato)
                .kv("arr_t", plan.arr.t_start)
                .kv("t_ready", plan.t_ready)
                .kv("wait_dep", plan.wait_dep_slot)
                .kv("wait_corridor", plan.wait_corridor)
                .kv("wait_arr", plan.wait_arr_slot)
                .kv("corridor", &route.corridor)
                .kv("dir", if route.direction() == crate::network::Direction::Forward { "f" } else { "r" })
                .kv("capacity", capacity)
                .kv("fare_per_seat", fare_per_seat)
                .kv("ferry", ferry as u8),
        );
        self.flights.insert(
            id,
            Flight {
                id,
                vehicle: v,
                origin: o,
                destination: d,
                distance_km: route.distance_km,
                direction: route.direction(),
                corridor: route.corridor,
                plan,
                capacity,
                crew,
                fixed: Vec::new(),
                provisional: Vec::new(),
                status: FlightStatus::Provisional,
                ferry,
                fare_per_seat,
            },
        );
        id
    }

    /// Seat price at full load with the current battery-life estimate.
    fn fare_per_seat(&self, v: usize, distance_km: f64, capacity: u32, crew: u32) -> f64 {
        let spec = self.spec(v);
        let m = Mission::single_leg("o", "d", distance_km, (capacity + crew).min(spec.max_payload_persons));
        flight_cost(spec, &m, self.cycle_life[&spec.id], self.cost_params(v), capacity.max(1)).map_or(f64::NAN, |c| c.fare_per_seat)
    }

    fn new_flight(&mut self, r: &FlightRequest, o: usize, d: usize) -> Result<u64, RejectReason> {
        let v = self.select_vehicle(o, d, r.pax, r.t_max)?;
        let boarding = self.scenario.doc.ops.boarding_s;
        let t_ready = r.t_min.0.max(self.vehicles[v].available_from.0 + boarding).max(self.clock.0);
        let plan = self.plan_flight(v, o, d, t_ready, r.t_max.0)?;
        Ok(self.book_flight(v, o, d, plan, false))
    }

    fn offer(&mut self, r: &FlightRequest, fid: u64) -> (Mode, f64) {
        let f = &self.flights[&fid];
        let demand = &self.scenario.doc.demand;
        let access = demand.access.access_time(demand.vertiport_density).unwrap_or(0.0);
        let egress = demand.access.ground_leg(demand.vertiport_density).unwrap_or(0.0);
        let wait = (f.plan.dep.t_start - r.t_request.0) as f64 / 60.0;
        let uam = ModeAttributes { time_min: wait + f.airborne_s() as f64 / 60.0 + access + egress, cost: f.fare_per_seat * r.pax as f64 };
        let car = demand.ground.car(f.distance_km);
        let transit = demand.ground.transit(f.distance_km);
        let offer = ModeOffer { options: vec![(Mode::Uam, uam), (Mode::Car, car), (Mode::Transit, transit)] };
        let probs = mode_probabilities(&offer, &self.choice).unwrap_or_else(|_| vec![(Mode::Car, 1.0)]);
        let u: f64 = self.choice_rng.random();
        let mut acc = 0.0;
        let mut chosen = probs.last().map(|p| p.0).unwrap_or(Mode::Car);
        for (m, p) in &probs {
            acc += p;
            if u < acc {
                chosen = *m;
                break;
            }
        }
        let p_uam = probs.iter().find(|(m, _)| *m == Mode::Uam).map_or(0.0, |p| p.1);
        self.log.push(
            LogRecord::new(self.clock, RecordKind::ModeOffer)
                .request(r.id)
                .flight(fid)
                .value(p_uam)
                .kv("uam_min", uam.time_min)
                .kv("uam_cost", uam.cost)
                .kv("car_min", car.time_min)
                .kv("car_cost", car.cost)
                .kv("transit_min", transit.time_min)
                .kv("transit_cost", transit.cost)
                .kv("draw", u)
                .kv("chosen", chosen.as_str()),
        );
        (chosen, p_uam)
    }

    fn commit(&mut self, fid: u64) {
        let f = self.flights.get_mut(&fid).expect("flight");
        f.status = FlightStatus::Committed;
        let (v, t) = (f.vehicle, f.plan.dep.t_start);
        let veh = &mut self.vehicles[v];
        veh.next_flight = Some(fid);
        if veh.status == VehicleStatus::Idle {
            veh.status = VehicleStatus::Boarding;
        }
        self.schedule(SimTime(t), EventKind::FlightDeparture, Payload::Departure(fid));
    }

    pub(super) fn cancel_flight(&mut self, fid: u64, now: SimTime, why: &str) {
        let f = self.flights.get_mut(&fid).expect("flight");
        f.status = FlightStatus::Cancelled;
        let (o, d, v) = (f.origin, f.destination, f.vehicle);
        let released = self.slots[o].release(fid) + self.slots[d].release(fid);
        self.corridors.release(fid);
        self.log.push(
            LogRecord::new(now, RecordKind::FlightCancelled)
                .flight(fid)
                .vehicle(&self.vehicles[v].id)
                .vertidrome(self.vname(o))
                .value(released as f64)
                .kv("reason", why),
        );
    }

    fn note_no_vehicle(&mut self, o: usize, now: SimTime) {
        let rp = self.scenario.doc.ops.reposition.clone();
        if !rp.enabled {
            return;
        }
        let hist = &mut self.no_vehicle_log[o];
        hist.push(now.0);
        hist.retain(|t| t + rp.lookback_s > now.0);
        if (hist.len() as u32) < rp.trigger_rejections {
            return;
        }
        let inbound = self.flights.values().any(|f| {
            f.ferry && f.destination == o && matches!(f.status, FlightStatus::Committed | FlightStatus::Departed)
        });
        if inbound {
            return;
        }
        self.reposition(o, now, rp.ferry_window_s);
    }

    /// Sends the nearest available vehicle from another vertidrome to `o` empty.
    fn reposition(&mut self, o: usize, now: SimTime, window_s: u64) {
        let boarding = self.scenario.doc.ops.boarding_s;
        let net = &self.scenario.network;
        let mut cands: Vec<(f64, SimTime, usize, usize)> = Vec::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            let Some(loc) = v.location else { continue };
            if loc == o || !v.parked || v.next_flight.is_some() || !matches!(v.status, VehicleStatus::Idle | VehicleStatus::Charging) {
                continue;
            }
            let dist = net.route(loc, o).expect("route").distance_km;
            let (_, crew) = self.seats(i);
            let b = self.projected_battery(i);
            let m = Mission::single_leg(self.vname(loc), self.vname(o), dist, crew);
            if b.beyond_model_validity || !mission_feasible(self.spec(i), b.capacity_fraction, b.soc, &m).is_ok_and(|x| x.feasible) {
                continue;
            }
            cands.push((dist, v.available_from, i, loc));
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (_, avail, v, from) in cands {
            let t_ready = now.0.max(avail.0 + boarding);
            let Ok(plan) = self.plan_flight(v, from, o, t_ready, now.0 + window_s) else { continue };
            let fid = self.book_flight(v, from, o, plan, true);
            self.log.push(
                LogRecord::new(now, EventKind::RepositionDispatched)
                    .flight(fid)
                    .vehicle(&self.vehicles[v].id)
                    .vertidrome(self.vname(from))
                    .kv("to", self.vname(o)),
            );
            self.commit(fid);
            self.no_vehicle_log[o].clear();
            return;
        }
    }
}

fn slot_reason(_: SlotError) -> RejectReason {
    RejectReason::NoSlot
}

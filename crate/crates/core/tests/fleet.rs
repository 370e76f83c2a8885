use serde_json::{json, Value};
use uam_core::fleet::{FlightStatus, RejectReason, RequestOutcome, Simulation};
use uam_core::network::Movement;
use uam_core::sim::{load_scenario, RecordKind, Scenario};

fn scenario(v: Value) -> Scenario {
    load_scenario(&v.to_string()).expect("test scenario is valid")
}

fn line(dist: f64, vehicles: &[(&str, &str)], requests: Value, asc_uam: f64) -> Value {
    let vs: Vec<Value> = vehicles.iter().map(|(id, at)| json!({"id": id, "spec": "multirotor_near", "location": at})).collect();
    json!({
        "seed": 3,
        "network": {"vertidromes": [{"id": "a", "x_km": 0.0, "y_km": 0.0}, {"id": "b", "x_km": dist, "y_km": 0.0}]},
        "fleet": {"vehicles": vs},
        "demand": {"requests": requests, "choice": {"asc_uam": asc_uam}}
    })
}

fn kinds(sim: &Simulation) -> Vec<RecordKind> {
    sim.log.records().iter().map(|r| r.kind).collect()
}

#[test]
fn single_request_runs_in_kind_order() {
    let s = scenario(line(20.0, &[("v1", "a")], json!([{"t_request": 3600, "origin": "a", "destination": "b"}]), 25.0));
    let mut sim = Simulation::new(&s).unwrap();
    sim.run();
    use RecordKind::*;
    assert_eq!(
        kinds(&sim),
        vec![
            CalendarTick, RequestArrival, PoolCheck, FlightScheduled, ModeOffer, RequestOutcome, StandReleased, FlightDeparture,
            FlightArrival, FlightCost, StandAcquired, ChargeComplete, CalendarTick
        ]
    );
    let f = &sim.flights[&0];
    assert_eq!(f.status, FlightStatus::Completed);
    // Earliest departure is the window opening, 10 minutes after the request.
    assert_eq!(f.plan.dep.t_start, 3600 + 600);
    // 20 km at 120 km/h.
    assert_eq!(f.plan.arr.t_start - f.plan.dep.t_start, 600);

    let dep = sim.log.of_kind(FlightDeparture).next().unwrap();
    let used = dep.soc_before.unwrap() - dep.soc_after.unwrap();
    let e = 0.0375 + 20.0 * (0.00351 + 2.0 * 0.00006);
    // Fresh pack, so the SoC drop equals the energy fraction of C0.
    assert!((used - e).abs() < 1e-12, "{used}");
    let arr_t = sim.log.of_kind(FlightArrival).next().unwrap().t;
    let done = sim.log.of_kind(ChargeComplete).next().unwrap().t;
    assert_eq!(done - arr_t, (used * 3600.0).round() as u64);
    assert!(sim.check_invariants().is_clean());
}

#[test]
fn empty_fleet_rejects_with_no_vehicle() {
    let s = scenario(line(20.0, &[], json!([{"t_request": 100, "origin": "a", "destination": "b"}]), 0.0));
    let mut sim = Simulation::new(&s).unwrap();
    sim.run();
    assert_eq!(sim.outcomes[&0], RequestOutcome::Rejected { reason: RejectReason::NoVehicle });
    assert!(sim.flights.is_empty());
}

#[test]
fn out_of_range_leg_is_no_energy() {
    let s = scenario(line(250.0, &[("v1", "a")], json!([{"t_request": 100, "origin": "a", "destination": "b"}]), 25.0));
    let mut sim = Simulation::new(&s).unwrap();
    sim.run();
    assert_eq!(sim.outcomes[&0], RequestOutcome::Rejected { reason: RejectReason::NoEnergy });
}

#[test]
fn second_request_pools_onto_the_first_flight() {
    let reqs = json!([
        {"t_request": 1000, "origin": "a", "destination": "b"},
        {"t_request": 1000, "origin": "a", "destination": "b"}
    ]);
    let s = scenario(line(20.0, &[("v1", "a"), ("v2", "a")], reqs.clone(), 25.0));
    let mut sim = Simulation::new(&s).unwrap();
    sim.run();
    assert!(matches!(sim.outcomes[&1], RequestOutcome::Pooled { flight: 0 }), "{:?}", sim.outcomes[&1]);
    assert_eq!(sim.flights.len(), 1);
    assert_eq!(sim.flights[&0].fixed_pax(), 2);

    let mut doc = line(20.0, &[("v1", "a"), ("v2", "a")], reqs, 25.0);
    doc["ops"] = json!({"pooling": false});
    let s = scenario(doc);
    let mut sim = Simulation::new(&s).unwrap();
    sim.run();
    assert_eq!(sim.flights.len(), 2);
    assert!(matches!(sim.outcomes[&1], RequestOutcome::Accepted { flight: 1 }));
}

#[test]
fn pool_that_breaks_the_energy_budget_opens_a_new_flight() {
    // At 195 km pilot plus one passenger fits, pilot plus two does not.
    let reqs = json!([
        {"t_request": 1000, "origin": "a", "destination": "b"},
        {"t_request": 1060, "origin": "a", "destination": "b"}
    ]);
    let s = scenario(line(195.0, &[("v1", "a"), ("v2", "a")], reqs, 25.0));
    let mut sim = Simulation::new(&s).unwrap();
    sim.run();
    let check = sim.log.of_kind(RecordKind::PoolCheck).nth(1).unwrap();
    assert_eq!(check.get::<u8>("hit"), Some(0));
    assert!(matches!(sim.outcomes[&1], RequestOutcome::Accepted { flight: 1 }), "{:?}", sim.outcomes[&1]);
    assert_ne!(sim.flights[&0].vehicle, sim.flights[&1].vehicle);
    assert!(sim.check_invariants().is_clean());
}

#[test]
fn decline_cancels_and_frees_resources() {
    let s = scenario(line(20.0, &[("v1", "a")], json!([{"t_request": 100, "origin": "a", "destination": "b"}]), -25.0));
    let mut sim = Simulation::new(&s).unwrap();
    sim.run();
    assert!(matches!(sim.outcomes[&0], RequestOutcome::Declined));
    assert_eq!(sim.flights[&0].status, FlightStatus::Cancelled);
    assert_eq!(sim.log.of_kind(RecordKind::FlightCancelled).count(), 1);
    assert!(sim.slots.iter().all(|t| t.slots().next().is_none()));
    // The same slot is free again for a fresh request.
    assert_eq!(sim.slots[0].probe_for(Movement::Departure, 700), Ok((0, 700)));
    assert!(sim.vehicles[0].next_flight.is_none());
    assert!(sim.check_invariants().is_clean());
}

#[test]
fn zero_requests_log_only_calendar_ticks() {
    let mut doc = line(20.0, &[("v1", "a")], json!([]), 0.0);
    doc["horizon_s"] = json!(3 * 86_400);
    let s = scenario(doc);
    let mut sim = Simulation::new(&s).unwrap();
    sim.run();
    assert!(kinds(&sim).iter().all(|k| *k == RecordKind::CalendarTick));
    assert_eq!(sim.log.len(), 4);
    assert_eq!(sim.battery_rows.len(), 3);
    let caps: Vec<f64> = sim.battery_rows.iter().map(|r| r.capacity_fraction).collect();
    assert!(caps.windows(2).all(|w| w[1] < w[0]) && caps[0] < 1.0);
}

#[test]
fn worn_pack_is_replaced_and_fares_follow_realized_life() {
    let reqs: Vec<Value> = (0..40)
        .map(|k| {
            let (o, d) = if k % 2 == 0 { ("a", "b") } else { ("b", "a") };
            json!({"t_request": 3600 + k * 1800, "origin": o, "destination": d})
        })
        .collect();
    let mut doc = line(20.0, &[("v1", "a")], Value::Array(reqs), 25.0);
    doc["horizon_s"] = json!(2 * 86_400);
    let mut aging: Value = serde_json::from_str(include_str!("../data/calibration/aging_params.json")).unwrap();
    aging["replace_threshold"] = json!(0.995);
    doc["aging"] = aging;
    // A short-lived pack makes fares prohibitive, so riders all but ignore price here.
    doc["demand"]["choice"]["beta_cost"] = json!(-1e-9);
    let s = scenario(doc);
    let mut sim = Simulation::new(&s).unwrap();
    let before = sim.cycle_life["multirotor_near"];
    sim.run();
    let swaps: Vec<_> = sim.log.of_kind(RecordKind::BatteryReplaced).collect();
    assert!(!swaps.is_empty());
    assert!(swaps[0].capacity_fraction.unwrap() < 0.995);
    assert!(sim.vehicles[0].packs_retired >= 1);
    let after = sim.cycle_life["multirotor_near"];
    assert_ne!(before, after);
    assert_eq!(after, swaps[0].get::<f64>("fare_cycle_life").unwrap());
}

fn one_way(reposition: bool) -> Value {
    let reqs: Vec<Value> = (0..30).map(|k| json!({"t_request": 3600 + k * 900, "origin": "a", "destination": "b"})).collect();
    let mut doc = line(20.0, &[("v1", "a"), ("v2", "b"), ("v3", "b")], Value::Array(reqs), 25.0);
    doc["ops"] = json!({"reposition": {"enabled": reposition, "trigger_rejections": 1}});
    doc
}

#[test]
fn one_way_demand_pulls_ferries_back() {
    let run = |doc: Value| {
        let s = scenario(doc);
        let mut sim = Simulation::new(&s).unwrap();
        sim.run();
        assert!(sim.check_invariants().is_clean());
        let rejected = sim.outcomes.values().filter(|o| matches!(o, RequestOutcome::Rejected { .. })).count();
        (rejected, sim.flights.values().filter(|f| f.ferry && f.status == FlightStatus::Completed).count())
    };
    let (rej_off, ferries_off) = run(one_way(false));
    let (rej_on, ferries_on) = run(one_way(true));
    assert_eq!(ferries_off, 0);
    assert!(ferries_on > 0);
    assert!(rej_on < rej_off, "{rej_on} vs {rej_off}");
}

#[test]
fn balanced_demand_needs_no_ferries() {
    let reqs: Vec<Value> = (0..30)
        .map(|k| {
            let (o, d) = if k % 2 == 0 { ("a", "b") } else { ("b", "a") };
            json!({"t_request": 3600 + k * 1200, "origin": o, "destination": d})
        })
        .collect();
    let mut doc = line(20.0, &[("v1", "a"), ("v2", "b")], Value::Array(reqs), 25.0);
    doc["ops"] = json!({"reposition": {"enabled": true, "trigger_rejections": 1}});
    let s = scenario(doc);
    let mut sim = Simulation::new(&s).unwrap();
    sim.run();
    assert_eq!(sim.log.of_kind(RecordKind::RepositionDispatched).count(), 0);
    assert!(sim.outcomes.values().all(|o| matches!(o, RequestOutcome::Accepted { .. })));
}

#[test]
fn same_seed_same_log_and_different_seed_differs() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/scenarios/hamburg-like.json")).unwrap();
    let s = load_scenario(&text).unwrap();
    let csv = |s: &Scenario| {
        let mut sim = Simulation::new(s).unwrap();
        sim.run();
        let mut buf = Vec::new();
        sim.log.write_csv(&mut buf).unwrap();
        buf
    };
    let a = csv(&s);
    assert_eq!(a, csv(&s));
    assert_ne!(a, csv(&s.with_overrides(Some(s.seed() + 1), None).unwrap()));
}

#[test]
fn interrupted_run_resumes_to_the_same_log() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/scenarios/minimal.json")).unwrap();
    let s = load_scenario(&text).unwrap();
    let mut whole = Simulation::new(&s).unwrap();
    whole.run();
    let mut split = Simulation::new(&s).unwrap();
    split.run_until(uam_core::sim::SimTime(30_000));
    split.run();
    assert_eq!(whole.log, split.log);
}

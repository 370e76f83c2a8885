//! Run artifacts: summary metrics computed from the exported logs, and
//! the CSV tables written next to them.
//!
//! `compute_metrics` reads only the event log and the battery table, so
//! the same numbers can be recomputed from `events.csv` and `battery.csv`.

use crate::econ::{operator_pnl, FlightAccount, OperatorPnl};
use crate::fleet::{BatteryRow, Simulation};
use crate::network::{airside_los, AirsideLoS};
use crate::sim::{EventLog, LogRecord, RecordKind, Scenario, SECONDS_PER_DAY};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleFade {
    pub vehicle: String,
    pub final_capacity: f64,
    pub fade: f64,
    pub replacements: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub seed: u64,
    pub horizon_s: u64,
    pub vehicles: usize,
    pub requests: usize,
    /// pooled / accepted / declined / rejected
    pub outcomes: BTreeMap<String, usize>,
    pub rejections: BTreeMap<String, usize>,
    pub flights_scheduled: usize,
    pub flights_cancelled: usize,
    pub flights_flown: usize,
    pub flights_completed: usize,
    pub ferry_flights: usize,
    pub mean_flight_hours_per_vehicle_day: f64,
    pub mean_flights_per_vehicle_day: f64,
    pub max_flights_per_vehicle_day: f64,
    /// Over completed flights, ferries included.
    pub mean_mission_km: f64,
    pub mean_passenger_mission_km: f64,
    pub mean_load_factor: f64,
    pub uam_share_of_offers: f64,
    pub pnl: OperatorPnl,
    pub los: Vec<AirsideLoS>,
    pub battery: Vec<VehicleFade>,
    pub battery_replacements: usize,
    pub apron_waits: usize,
    pub anomalies: usize,
}

pub fn compute_metrics(log: &EventLog, battery: &[BatteryRow]) -> Metrics {
    let recs = log.records();
    let start = recs.iter().find(|r| r.kind == RecordKind::CalendarTick && r.t == 0);
    let seed = start.and_then(|r| r.get("seed")).unwrap_or(0);
    let horizon_s: u64 = start.and_then(|r| r.get("horizon_s")).unwrap_or(0);
    let vehicles: usize = start.and_then(|r| r.get("vehicles")).unwrap_or(0);
    let count = |k: RecordKind| log.of_kind(k).count();

    let mut outcomes: BTreeMap<String, usize> = ["pooled", "accepted", "declined", "rejected"].iter().map(|s| (s.to_string(), 0)).collect();
    let mut rejections: BTreeMap<String, usize> =
        ["no_vehicle", "no_energy", "no_slot", "window_unservable"].iter().map(|s| (s.to_string(), 0)).collect();
    for r in log.of_kind(RecordKind::RequestOutcome) {
        let m = r.detail_map();
        *outcomes.entry(m.get("outcome").unwrap_or(&"?").to_string()).or_default() += 1;
        if let Some(reason) = m.get("reason") {
            *rejections.entry(reason.to_string()).or_default() += 1;
        }
    }

    let scheduled: BTreeMap<u64, &LogRecord> = log.of_kind(RecordKind::FlightScheduled).filter_map(|r| Some((r.flight?, r))).collect();
    let departed: BTreeSet<u64> = log.of_kind(RecordKind::FlightDeparture).filter_map(|r| r.flight).collect();
    let arrivals: Vec<&LogRecord> = log.of_kind(RecordKind::FlightArrival).collect();
    let days = horizon_s as f64 / SECONDS_PER_DAY as f64;
    let airborne_h = arrivals.iter().filter_map(|r| r.value).fold(0.0, |a, b| a + b) / 3600.0;
    let per_vehicle_day = |x: f64| if vehicles > 0 && days > 0.0 { x / vehicles as f64 / days } else { 0.0 };
    let mut per_vehicle: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &arrivals {
        *per_vehicle.entry(r.vehicle.as_deref().unwrap_or("")).or_default() += 1;
    }
    let max_flights = per_vehicle.values().copied().max().unwrap_or(0) as f64;

    let mut dist_all = Vec::new();
    let mut dist_pax = Vec::new();
    let mut loads = Vec::new();
    let mut accounts = Vec::new();
    for r in log.of_kind(RecordKind::FlightCost) {
        let d: f64 = r.get("distance_km").unwrap_or(0.0);
        let pax: u32 = r.get("pax").unwrap_or(0);
        let ferry = r.get::<u8>("ferry").unwrap_or(0) == 1;
        dist_all.push(d);
        if !ferry {
            dist_pax.push(d);
            let cap: f64 = r.flight.and_then(|f| scheduled.get(&f)).and_then(|s| s.get("capacity")).unwrap_or(0.0);
            if cap > 0.0 {
                loads.push(pax as f64 / cap);
            }
        }
        accounts.push(FlightAccount {
            flight: r.flight.unwrap_or(0),
            use_case: r.detail_map().get("spec").unwrap_or(&"").to_string(),
            distance_km: d,
            seats_fixed: pax,
            revenue: r.get("revenue").unwrap_or(0.0),
            cost: r.value.unwrap_or(0.0),
            ferry,
        });
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().fold(0.0, |a, b| a + b) / v.len() as f64 };

    let offers: Vec<&LogRecord> = log.of_kind(RecordKind::ModeOffer).collect();
    let uam_chosen = offers.iter().filter(|r| r.detail_map().get("chosen") == Some(&"uam")).count();

    // Departures carry slot and corridor waits, arrivals the arrival-slot wait.
    let mut delays: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for (f, s) in &scheduled {
        if !departed.contains(f) {
            continue;
        }
        let origin = s.vertidrome.clone().unwrap_or_default();
        let dest = s.detail_map().get("to").unwrap_or(&"").to_string();
        let dep = s.get::<u64>("wait_dep").unwrap_or(0) + s.get::<u64>("wait_corridor").unwrap_or(0);
        delays.entry(origin).or_default().push(dep);
        delays.entry(dest).or_default().push(s.get("wait_arr").unwrap_or(0));
    }
    let los = delays.iter().map(|(v, d)| airside_los(v, d)).collect();

    let mut replaced: BTreeMap<String, u32> = BTreeMap::new();
    for r in log.of_kind(RecordKind::BatteryReplaced) {
        *replaced.entry(r.vehicle.clone().unwrap_or_default()).or_default() += 1;
    }
    let mut last_cap: BTreeMap<String, f64> = BTreeMap::new();
    for r in recs {
        if let (Some(v), Some(c)) = (&r.vehicle, r.capacity_fraction) {
            if r.kind != RecordKind::BatteryReplaced {
                last_cap.insert(v.clone(), c);
            } else {
                last_cap.insert(v.clone(), 1.0);
            }
        }
    }
    for b in battery {
        let newer = !replaced.contains_key(&b.vehicle);
        if newer || !last_cap.contains_key(&b.vehicle) {
            last_cap.insert(b.vehicle.clone(), b.capacity_fraction);
        }
    }
    let battery_fade = last_cap
        .iter()
        .map(|(v, c)| VehicleFade { vehicle: v.clone(), final_capacity: *c, fade: 1.0 - c, replacements: replaced.get(v).copied().unwrap_or(0) })
        .collect();

    Metrics {
        seed,
        horizon_s,
        vehicles,
        requests: count(RecordKind::RequestArrival),
        outcomes,
        rejections,
        flights_scheduled: scheduled.len(),
        flights_cancelled: count(RecordKind::FlightCancelled),
        flights_flown: departed.len(),
        flights_completed: arrivals.len(),
        ferry_flights: count(RecordKind::RepositionDispatched),
        mean_flight_hours_per_vehicle_day: per_vehicle_day(airborne_h),
        mean_flights_per_vehicle_day: per_vehicle_day(arrivals.len() as f64),
        max_flights_per_vehicle_day: if days > 0.0 { max_flights / days } else { 0.0 },
        mean_mission_km: mean(&dist_all),
        mean_passenger_mission_km: mean(&dist_pax),
        mean_load_factor: mean(&loads),
        uam_share_of_offers: if offers.is_empty() { 0.0 } else { uam_chosen as f64 / offers.len() as f64 },
        pnl: operator_pnl(&accounts),
        los,
        battery: battery_fade,
        battery_replacements: count(RecordKind::BatteryReplaced),
        apron_waits: count(RecordKind::ApronCongestion),
        anomalies: count(RecordKind::Anomaly),
    }
}

fn csv_out(path: &Path) -> Result<csv::Writer<fs::File>, csv::Error> {
    Ok(csv::Writer::from_writer(fs::File::create(path)?))
}

#[derive(Serialize)]
struct FlightRow {
    flight: u64,
    vehicle: String,
    origin: String,
    destination: String,
    ferry: u8,
    status: String,
    sched_dep: u64,
    sched_arr: u64,
    actual_dep: Option<u64>,
    actual_arr: Option<u64>,
    distance_km: f64,
    capacity: u32,
    seats_fixed: u32,
    energy_used: Option<f64>,
    fare_per_seat: f64,
    revenue: Option<f64>,
    cost: Option<f64>,
}

#[derive(Serialize)]
struct RequestRow {
    request: u64,
    t: u64,
    origin: String,
    destination: String,
    pax: u32,
    outcome: String,
    reason: String,
    flight: Option<u64>,
    mode: String,
    p_uam: Option<f64>,
}

#[derive(Serialize)]
struct VertidromeRow {
    id: String,
    x_km: f64,
    y_km: f64,
    n_fato: u32,
    n_stands: u32,
    movements: usize,
    mean_delay_s: f64,
    p95_delay_s: f64,
    grade: String,
    peak_stands: usize,
    apron_waits: usize,
}

#[derive(Serialize)]
struct CostRow {
    flight: u64,
    vehicle: String,
    spec: String,
    distance_km: f64,
    pax: u32,
    ferry: u8,
    energy: f64,
    battery: f64,
    maintenance: f64,
    crew: f64,
    capital: f64,
    insurance: f64,
    fees: f64,
    indirect: f64,
    total: f64,
    revenue: f64,
    cycle_life: f64,
}

fn flight_rows(log: &EventLog) -> Vec<FlightRow> {
    let mut rows: BTreeMap<u64, FlightRow> = BTreeMap::new();
    for r in log.records() {
        let Some(f) = r.flight else { continue };
        match r.kind {
            RecordKind::FlightScheduled => {
                let m = r.detail_map();
                rows.insert(
                    f,
                    FlightRow {
                        flight: f,
                        vehicle: r.vehicle.clone().unwrap_or_default(),
                        origin: r.vertidrome.clone().unwrap_or_default(),
                        destination: m.get("to").unwrap_or(&"").to_string(),
                        ferry: r.get("ferry").unwrap_or(0),
                        status: "scheduled".into(),
                        sched_dep: r.get("dep_t").unwrap_or(0),
                        sched_arr: r.get("arr_t").unwrap_or(0),
                        actual_dep: None,
                        actual_arr: None,
                        distance_km: r.value.unwrap_or(0.0),
                        capacity: r.get("capacity").unwrap_or(0),
                        seats_fixed: 0,
                        energy_used: None,
                        fare_per_seat: r.get("fare_per_seat").unwrap_or(0.0),
                        revenue: None,
                        cost: None,
                    },
                );
            }
            RecordKind::FlightCancelled => {
                if let Some(row) = rows.get_mut(&f) {
                    row.status = "cancelled".into();
                }
            }
            RecordKind::FlightDeparture => {
                if let Some(row) = rows.get_mut(&f) {
                    row.status = "departed".into();
                    row.actual_dep = Some(r.t);
                    row.seats_fixed = r.get("pax").unwrap_or(0);
                    row.energy_used = match (r.soc_before, r.soc_after, r.capacity_fraction) {
                        (Some(a), Some(b), Some(c)) => Some((a - b) * c),
                        _ => None,
                    };
                }
            }
            RecordKind::FlightArrival => {
                if let Some(row) = rows.get_mut(&f) {
                    row.status = "completed".into();
                    row.actual_arr = Some(r.t);
                }
            }
            RecordKind::FlightCost => {
                if let Some(row) = rows.get_mut(&f) {
                    row.revenue = r.get("revenue");
                    row.cost = r.value;
                }
            }
            _ => {}
        }
    }
    rows.into_values().collect()
}

fn request_rows(log: &EventLog) -> Vec<RequestRow> {
    let mut rows: BTreeMap<u64, RequestRow> = BTreeMap::new();
    for r in log.records() {
        let Some(q) = r.request else { continue };
        match r.kind {
            RecordKind::RequestArrival => {
                rows.insert(
                    q,
                    RequestRow {
                        request: q,
                        t: r.t,
                        origin: r.vertidrome.clone().unwrap_or_default(),
                        destination: r.detail_map().get("to").unwrap_or(&"").to_string(),
                        pax: r.get("pax").unwrap_or(1),
                        outcome: String::new(),
                        reason: String::new(),
                        flight: None,
                        mode: String::new(),
                        p_uam: None,
                    },
                );
            }
            RecordKind::RequestOutcome => {
                if let Some(row) = rows.get_mut(&q) {
                    let m = r.detail_map();
                    row.outcome = m.get("outcome").unwrap_or(&"").to_string();
                    row.reason = m.get("reason").unwrap_or(&"").to_string();
                    row.mode = m.get("mode").unwrap_or(&"").to_string();
                    row.flight = r.flight;
                    row.p_uam = r.value;
                }
            }
            _ => {}
        }
    }
    rows.into_values().collect()
}

fn cost_rows(log: &EventLog) -> Vec<CostRow> {
    log.of_kind(RecordKind::FlightCost)
        .map(|r| CostRow {
            flight: r.flight.unwrap_or(0),
            vehicle: r.vehicle.clone().unwrap_or_default(),
            spec: r.detail_map().get("spec").unwrap_or(&"").to_string(),
            distance_km: r.get("distance_km").unwrap_or(0.0),
            pax: r.get("pax").unwrap_or(0),
            ferry: r.get("ferry").unwrap_or(0),
            energy: r.get("energy").unwrap_or(0.0),
            battery: r.get("battery").unwrap_or(0.0),
            maintenance: r.get("maintenance").unwrap_or(0.0),
            crew: r.get("crew").unwrap_or(0.0),
            capital: r.get("capital").unwrap_or(0.0),
            insurance: r.get("insurance").unwrap_or(0.0),
            fees: r.get("fees").unwrap_or(0.0),
            indirect: r.get("indirect").unwrap_or(0.0),
            total: r.value.unwrap_or(0.0),
            revenue: r.get("revenue").unwrap_or(0.0),
            cycle_life: r.get("cycle_life").unwrap_or(0.0),
        })
        .collect()
}

fn vertidrome_rows(scenario: &Scenario, log: &EventLog, metrics: &Metrics) -> Vec<VertidromeRow> {
    let mut peak: BTreeMap<&str, usize> = BTreeMap::new();
    let mut waits: BTreeMap<&str, usize> = BTreeMap::new();
    for r in log.records() {
        let Some(v) = r.vertidrome.as_deref() else { continue };
        match r.kind {
            RecordKind::StandAcquired => {
                let e = peak.entry(v).or_default();
                *e = (*e).max(r.value.unwrap_or(0.0) as usize);
            }
            RecordKind::ApronCongestion => *waits.entry(v).or_default() += 1,
            _ => {}
        }
    }
    let parked = scenario.doc.fleet.vehicles.iter().fold(BTreeMap::<&str, usize>::new(), |mut m, v| {
        *m.entry(v.location.as_str()).or_default() += 1;
        m
    });
    scenario
        .network
        .vertidromes
        .iter()
        .map(|v| {
            let los = metrics.los.iter().find(|l| l.vertidrome == v.id);
            VertidromeRow {
                id: v.id.clone(),
                x_km: v.x_km,
                y_km: v.y_km,
                n_fato: v.n_fato,
                n_stands: v.n_stands,
                movements: los.map_or(0, |l| l.movements),
                mean_delay_s: los.map_or(0.0, |l| l.mean_delay_s),
                p95_delay_s: los.map_or(0.0, |l| l.p95_delay_s),
                grade: los.and_then(|l| l.grade).map_or(String::new(), |g| g.as_str().to_string()),
                peak_stands: peak.get(v.id.as_str()).copied().unwrap_or(0).max(parked.get(v.id.as_str()).copied().unwrap_or(0)),
                apron_waits: waits.get(v.id.as_str()).copied().unwrap_or(0),
            }
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv_out(path)?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const FLIGHT_COLUMNS: [&str; 17] = [
    "flight", "vehicle", "origin", "destination", "ferry", "status", "sched_dep", "sched_arr", "actual_dep", "actual_arr",
    "distance_km", "capacity", "seats_fixed", "energy_used", "fare_per_seat", "revenue", "cost",
];
pub const REQUEST_COLUMNS: [&str; 10] = ["request", "t", "origin", "destination", "pax", "outcome", "reason", "flight", "mode", "p_uam"];
pub const BATTERY_COLUMNS: [&str; 6] = ["vehicle", "day", "flights", "throughput_fec", "capacity_fraction", "limiting_factor"];
pub const VERTIDROME_COLUMNS: [&str; 11] =
    ["id", "x_km", "y_km", "n_fato", "n_stands", "movements", "mean_delay_s", "p95_delay_s", "grade", "peak_stands", "apron_waits"];
pub const COST_COLUMNS: [&str; 17] = [
    "flight", "vehicle", "spec", "distance_km", "pax", "ferry", "energy", "battery", "maintenance", "crew", "capital", "insurance",
    "fees", "indirect", "total", "revenue", "cycle_life",
];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Writes every run artifact into `dir` and returns the metrics.
pub fn write_run_artifacts(sim: &Simulation<'_>, dir: &Path) -> Result<Metrics, ReportError> {
    fs::create_dir_all(dir)?;
    let log = &sim.log;
    log.write_csv(fs::File::create(dir.join("events.csv"))?)?;
    log.write_jsonl(io::BufWriter::new(fs::File::create(dir.join("events.jsonl"))?))?;
    write_rows(&dir.join("flights.csv"), &FLIGHT_COLUMNS, &flight_rows(log))?;
    write_rows(&dir.join("requests.csv"), &REQUEST_COLUMNS, &request_rows(log))?;
    write_rows(&dir.join("battery.csv"), &BATTERY_COLUMNS, &sim.battery_rows)?;
    write_rows(&dir.join("costs.csv"), &COST_COLUMNS, &cost_rows(log))?;
    let metrics = compute_metrics(log, &sim.battery_rows);
    write_rows(&dir.join("vertidromes.csv"), &VERTIDROME_COLUMNS, &vertidrome_rows(sim.scenario, log, &metrics))?;
    fs::write(dir.join("resolved_config.json"), sim.scenario.to_json())?;
    let inv = sim.check_invariants();
    fs::write(dir.join("invariants.json"), serde_json::to_string_pretty(&inv)? + "\n")?;
    Ok(metrics)
}

/// Reads `events.csv` and `battery.csv` back and recomputes the metrics.
pub fn metrics_from_csv(dir: &Path) -> Result<Metrics, ReportError> {
    let log = EventLog::read_csv(fs::File::open(dir.join("events.csv"))?)?;
    let mut rdr = csv::Reader::from_reader(fs::File::open(dir.join("battery.csv"))?);
    let battery = rdr.deserialize().collect::<Result<Vec<BatteryRow>, _>>()?;
    Ok(compute_metrics(&log, &battery))
}

use std::fs;
use std::path::{Path, PathBuf};
use uam_core::fleet::Simulation;
use uam_core::report::{metrics_from_csv, write_run_artifacts, Metrics, FLIGHT_COLUMNS, REQUEST_COLUMNS};
use uam_core::sim::{load_scenario, load_scenario_file, Scenario};

const TABLES: [&str; 7] = ["events.csv", "flights.csv", "requests.csv", "battery.csv", "costs.csv", "vertidromes.csv", "resolved_config.json"];

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/scenarios").join(name)
}

fn run_into(s: &Scenario, dir: &Path) -> Metrics {
    let mut sim = Simulation::new(s).unwrap();
    sim.run();
    assert!(sim.check_invariants().is_clean(), "{:?}", sim.check_invariants());
    write_run_artifacts(&sim, dir).unwrap()
}

#[test]
fn bundled_scenarios_dump_to_a_fixed_point() {
    for name in ["hamburg-like.json", "suburban.json", "minimal.json"] {
        let s = load_scenario_file(&bundled(name)).unwrap();
        let dump = s.to_json();
        assert_eq!(load_scenario(&dump).unwrap().to_json(), dump, "{name}");
    }
}

#[test]
fn equal_seeds_give_identical_tables() {
    for name in ["hamburg-like.json", "suburban.json", "minimal.json"] {
        let s = load_scenario_file(&bundled(name)).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_into(&s, a.path());
        run_into(&s, b.path());
        for t in TABLES {
            assert_eq!(fs::read(a.path().join(t)).unwrap(), fs::read(b.path().join(t)).unwrap(), "{name}/{t}");
        }
    }
}

#[test]
fn resolved_config_replays_the_run() {
    let s = load_scenario_file(&bundled("hamburg-like.json")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(&s, a.path());
    let again = load_scenario_file(&a.path().join("resolved_config.json")).unwrap();
    run_into(&again, b.path());
    for t in TABLES {
        assert_eq!(fs::read(a.path().join(t)).unwrap(), fs::read(b.path().join(t)).unwrap(), "{t}");
    }
}

#[test]
fn metrics_follow_from_the_csvs() {
    for name in ["hamburg-like.json", "suburban.json"] {
        let s = load_scenario_file(&bundled(name)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = run_into(&s, dir.path());
        assert_eq!(metrics_from_csv(dir.path()).unwrap(), m, "{name}");
    }
}

#[test]
fn metrics_agree_with_the_flight_table() {
    let s = load_scenario_file(&bundled("hamburg-like.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run_into(&s, dir.path());
    let mut rdr = csv::Reader::from_path(dir.path().join("flights.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), FLIGHT_COLUMNS);
    let mut airborne = 0u64;
    let mut completed = 0;
    for row in rdr.records() {
        let row = row.unwrap();
        if &row[5] == "completed" {
            completed += 1;
            airborne += row[9].parse::<u64>().unwrap() - row[8].parse::<u64>().unwrap();
        }
    }
    assert_eq!(completed, m.flights_completed);
    let fh = airborne as f64 / 3600.0 / m.vehicles as f64;
    assert!((fh - m.mean_flight_hours_per_vehicle_day).abs() < 1e-9);
    let outcomes: usize = m.outcomes.values().sum();
    assert_eq!(outcomes, m.requests);
}

#[test]
fn zero_horizon_gives_empty_valid_artifacts() {
    let s = load_scenario_file(&bundled("hamburg-like.json")).unwrap().with_overrides(None, Some(0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run_into(&s, dir.path());
    assert_eq!((m.requests, m.flights_completed, m.mean_flight_hours_per_vehicle_day), (0, 0, 0.0));
    let requests = fs::read_to_string(dir.path().join("requests.csv")).unwrap();
    assert_eq!(requests.trim_end(), REQUEST_COLUMNS.join(","));
    let events = fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert_eq!(events.lines().count(), 2, "header plus the run-start record");
}

use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(rel)
}

fn uam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uam-sim")).args(args).env("UAM_SIM_LOG", "off").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn minimal() -> Value {
    serde_json::from_str(&fs::read_to_string(data("scenarios/minimal.json")).unwrap()).unwrap()
}

#[test]
fn validate_exit_codes() {
    for name in ["hamburg-like.json", "suburban.json", "minimal.json"] {
        let o = uam(&["validate", data(&format!("scenarios/{name}")).to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
    }

    let dir = tempfile::tempdir().unwrap();
    let mut doc = minimal();
    doc.as_object_mut().unwrap().remove("seed");
    let o = uam(&["validate", &write_json(dir.path(), "noseed.json", &doc)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));

    let mut doc = minimal();
    doc["fleet"]["specs"] = json!([{"id": "heavy", "kind": "multirotor", "tech_level": "near_term",
        "energy": {"e_fixed": 0.1, "e_km_base": 0.05, "e_km_person": 0.001}}]);
    let o = uam(&["validate", &write_json(dir.path(), "heavy.json", &doc)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("design mission infeasible"), "{}", stderr(&o));

    fs::write(dir.path().join("broken.json"), "{ \"seed\": ").unwrap();
    assert_eq!(code(&uam(&["validate", dir.path().join("broken.json").to_str().unwrap()])), 2);
    assert_eq!(code(&uam(&["validate", dir.path().join("absent.json").to_str().unwrap()])), 1);
}

#[test]
fn run_writes_every_artifact() {
    let out = tempfile::tempdir().unwrap();
    let o = uam(&["run", data("scenarios/minimal.json").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in [
        "events.csv", "events.jsonl", "flights.csv", "requests.csv", "battery.csv", "vertidromes.csv", "costs.csv", "metrics.json",
        "resolved_config.json", "invariants.json",
    ] {
        assert!(out.path().join(f).is_file(), "{f}");
    }
    let m: Value = serde_json::from_str(&fs::read_to_string(out.path().join("metrics.json")).unwrap()).unwrap();
    assert!(m["meta"]["wall_time_s"].is_number());
    let metrics = &m["metrics"];
    for key in ["flights_flown", "mean_flight_hours_per_vehicle_day", "mean_mission_km", "rejections", "pnl", "los", "battery"] {
        assert!(!metrics[key].is_null(), "{key}");
    }
    assert_eq!(metrics["flights_completed"], 2);
}

#[test]
fn seed_and_horizon_overrides() {
    let path = data("scenarios/hamburg-like.json");
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let run = |d: &Path, extra: &[&str]| {
        let mut args = vec!["run", path.to_str().unwrap(), "--out", d.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert_eq!(code(&uam(&args)), 0);
        fs::read(d.join("events.csv")).unwrap()
    };
    let a = run(dirs[0].path(), &["--seed", "5"]);
    let b = run(dirs[1].path(), &["--seed", "5"]);
    let c = run(dirs[2].path(), &["--seed", "6"]);
    assert_eq!(a, b);
    assert_ne!(a, c);

    let z = tempfile::tempdir().unwrap();
    run(z.path(), &["--horizon", "0"]);
    let flights = fs::read_to_string(z.path().join("flights.csv")).unwrap();
    assert_eq!(flights.lines().count(), 1);
    let resolved: Value = serde_json::from_str(&fs::read_to_string(z.path().join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["horizon_s"], 0);
}

#[test]
fn replicates_run_in_parallel_into_seed_dirs() {
    let out = tempfile::tempdir().unwrap();
    let path = data("scenarios/suburban.json");
    let args = ["run", path.to_str().unwrap(), "--out", out.path().to_str().unwrap()];
    let o = uam(&[&args[..], &["--seed", "10", "--replicates", "3", "--jobs", "3"]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let single = tempfile::tempdir().unwrap();
    uam(&["run", args[1], "--out", single.path().to_str().unwrap(), "--seed", "11"]);
    assert_eq!(fs::read(out.path().join("seed-11/events.csv")).unwrap(), fs::read(single.path().join("events.csv")).unwrap());
    assert!(out.path().join("seed-12/metrics.json").is_file());
}

#[test]
fn calibrate_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("energy.json");
    let o = uam(&[
        "calibrate",
        "energy",
        data("calibration/energy_tiltrotor_far.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cal: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(cal["flagged"], false);
    assert!(stderr(&o).contains("design_mission"));

    let o = uam(&["calibrate", "econ", data("calibration/fare_targets.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let tight = write_json(dir.path(), "tight.json", &json!({"bands": {"intra_city": [1.0, 2.0]}}));
    assert_eq!(code(&uam(&["calibrate", "econ", &tight])), 4);

    let empty = write_json(dir.path(), "empty.json", &json!([]));
    let o = uam(&["calibrate", "aging", &empty]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("no aging targets"));
    let one = write_json(dir.path(), "one.json", &json!({"spec": "multirotor_near", "mode": "degradation_study", "anchors": [
        {"name": "d", "legs_km": [10.0], "payload": 4, "reserve_included": false, "target_fraction": 0.1}]}));
    assert_eq!(code(&uam(&["calibrate", "energy", &one])), 4);
}

#[test]
fn aging_calibration_output_is_a_usable_aging_block() {
    let dir = tempfile::tempdir().unwrap();
    let fitted = dir.path().join("aging.json");
    let o = uam(&["calibrate", "aging", data("calibration/aging_targets.json").to_str().unwrap(), "--out", fitted.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut doc = minimal();
    doc["aging"] = serde_json::from_str(&fs::read_to_string(&fitted).unwrap()).unwrap();
    assert_eq!(code(&uam(&["validate", &write_json(dir.path(), "s.json", &doc)])), 0);
}

#[test]
fn scan_grids() {
    let dir = tempfile::tempdir().unwrap();
    let cities = data("cities/synthetic_25.json");
    let o = uam(&["scan", cities.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--jobs", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("monotone: true  favorable cell maximal: true"), "{stdout}");
    // Largest total first: low price, high density.
    let first = stdout.lines().nth(1).unwrap();
    assert!(first.contains("price   2.00") && first.contains("density  3.00"), "{first}");
    let grid = fs::read_to_string(dir.path().join("demand_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 25 * 4);

    let all: Vec<Value> = serde_json::from_str(&fs::read_to_string(&cities).unwrap()).unwrap();
    let one = write_json(dir.path(), "one.json", &Value::Array(vec![all[0].clone()]));
    let o = uam(&["scan", &one, "--prices", "3", "--densities", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let grid = fs::read_to_string(dir.path().join("demand_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2);
    assert!(grid.starts_with("city,price_level,density_level,daily_uam_trips,qualifies\n"));

    let none = write_json(dir.path(), "none.json", &json!([]));
    assert_eq!(code(&uam(&["scan", &none])), 2);
}

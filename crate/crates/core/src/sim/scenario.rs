//! Scenario documents: parsing, defaults, cross-reference validation.
//!
//! A `ScenarioDoc` is the JSON form. `load_scenario` parses it, fills in
//! derived defaults, checks every reference and returns a `Scenario` whose
//! `doc` re-serializes to the same text on every round trip.

use crate::battery::AgingParams;
use crate::demand::{AccessParams, ChoiceParams, FlightRequest, GeneratorParams, GroundModes};
use crate::econ::{CostCase, CostTable};
use crate::energy::{builtin_specs, EnergyError, VehicleSpec, VehicleSpecDoc};
use crate::network::{build_network, Network, NetworkDoc};
use crate::sim::SimTime;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon_s: u64,
    pub network: NetworkDoc,
    pub fleet: FleetDoc,
    #[serde(default)]
    pub demand: DemandDoc,
    #[serde(default)]
    pub econ: EconDoc,
    #[serde(default)]
    pub aging: AgingParams,
    #[serde(default)]
    pub ops: OpsDoc,
}

fn default_horizon() -> u64 {
    86_400
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetDoc {
    /// Extra specs on top of the bundled library; same id overrides.
    #[serde(default)]
    pub specs: Vec<VehicleSpecDoc>,
    pub vehicles: Vec<VehicleDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleDoc {
    pub id: String,
    pub spec: String,
    /// Starting vertidrome.
    pub location: String,
    #[serde(default = "one_f")]
    pub soc: f64,
}

fn one_f() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandDoc {
    #[serde(default)]
    pub requests: Vec<RequestDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorParams>,
    #[serde(default)]
    pub choice: ChoiceParams,
    #[serde(default)]
    pub ground: GroundModes,
    #[serde(default)]
    pub access: AccessParams,
    /// Vertiports per 100 km², used for access and egress times in offers.
    #[serde(default = "default_density")]
    pub vertiport_density: f64,
}

fn default_density() -> f64 {
    2.0
}

impl Default for DemandDoc {
    fn default() -> Self {
        DemandDoc {
            requests: Vec::new(),
            generator: None,
            choice: ChoiceParams::default(),
            ground: GroundModes::default(),
            access: AccessParams::default(),
            vertiport_density: default_density(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    pub t_request: u64,
    pub origin: String,
    pub destination: String,
    #[serde(default = "one_u")]
    pub pax: u32,
    /// Departure window relative to `t_request`, minutes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_min: Option<[u64; 2]>,
}

fn one_u() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconDoc {
    #[serde(default = "default_case")]
    pub case: CostCase,
    /// Flights per day assumed for the initial battery-life estimate in fares.
    #[serde(default = "default_reference_fpd")]
    pub reference_flights_per_day: u32,
    #[serde(default)]
    pub costs: CostTable,
}

fn default_case() -> CostCase {
    CostCase::Optimistic
}
fn default_reference_fpd() -> u32 {
    25
}

impl Default for EconDoc {
    fn default() -> Self {
        EconDoc { case: default_case(), reference_flights_per_day: default_reference_fpd(), costs: CostTable::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpsDoc {
    #[serde(default = "default_boarding")]
    pub boarding_s: u64,
    /// Default request window relative to the request time, minutes.
    #[serde(default = "default_window")]
    pub window_min: [u64; 2],
    /// Added to cruise time on every leg for take-off, climb, descent and landing.
    #[serde(default)]
    pub leg_overhead_s: u64,
    #[serde(default = "one_f")]
    pub charge_target_soc: f64,
    #[serde(default = "yes")]
    pub pooling: bool,
    #[serde(default)]
    pub reposition: RepositionDoc,
}

fn default_boarding() -> u64 {
    300
}
fn default_window() -> [u64; 2] {
    [10, 40]
}
fn yes() -> bool {
    true
}

impl Default for OpsDoc {
    fn default() -> Self {
        OpsDoc {
            boarding_s: default_boarding(),
            window_min: default_window(),
            leg_overhead_s: 0,
            charge_target_soc: 1.0,
            pooling: true,
            reposition: RepositionDoc::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepositionDoc {
    #[serde(default)]
    pub enabled: bool,
    /// `no_vehicle` rejections within `lookback_s` that trigger a ferry.
    #[serde(default = "default_trigger")]
    pub trigger_rejections: u32,
    #[serde(default = "hour")]
    pub lookback_s: u64,
    /// Latest ferry departure after the trigger.
    #[serde(default = "hour")]
    pub ferry_window_s: u64,
}

fn default_trigger() -> u32 {
    3
}
fn hour() -> u64 {
    3600
}

impl Default for RepositionDoc {
    fn default() -> Self {
        RepositionDoc { enabled: false, trigger_rejections: default_trigger(), lookback_s: hour(), ferry_window_s: hour() }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{key}: {message}")]
    Semantic { key: String, message: String },
    #[error("{key}: {message}")]
    Infeasible { key: String, message: String },
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Io { .. } => 1,
            ScenarioError::Parse { .. } | ScenarioError::Semantic { .. } => 2,
            ScenarioError::Infeasible { .. } => 3,
        }
    }

    fn semantic(key: impl Into<String>, message: impl ToString) -> Self {
        ScenarioError::Semantic { key: key.into(), message: message.to_string() }
    }
}

/// A validated scenario, immutable after load.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Normalised document with every default written out.
    pub doc: ScenarioDoc,
    pub network: Network,
    pub specs: BTreeMap<String, VehicleSpec>,
    /// Explicit requests from the document, sorted by (time, id).
    pub requests: Vec<FlightRequest>,
}

impl Scenario {
    pub fn seed(&self) -> u64 {
        self.doc.seed
    }

    pub fn horizon(&self) -> SimTime {
        SimTime(self.doc.horizon_s)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.doc).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn spec_of(&self, vehicle: &str) -> Option<&VehicleSpec> {
        let v = self.doc.fleet.vehicles.iter().find(|v| v.id == vehicle)?;
        self.specs.get(&v.spec)
    }

    /// Same scenario with a different seed or horizon, revalidated.
    pub fn with_overrides(&self, seed: Option<u64>, horizon_s: Option<u64>) -> Result<Scenario, ScenarioError> {
        let mut doc = self.doc.clone();
        if let Some(s) = seed {
            doc.seed = s;
        }
        if let Some(h) = horizon_s {
            doc.horizon_s = h;
        }
        resolve(doc)
    }
}

pub fn parse_doc(text: &str) -> Result<ScenarioDoc, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => {
                let key = if path == "." { "<root>".to_string() } else { path };
                ScenarioError::Semantic { key, message: inner.to_string() }
            }
            _ => ScenarioError::Parse { line: inner.line(), column: inner.column(), message: inner.to_string() },
        }
    })?;
    Ok(doc)
}

pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    resolve(parse_doc(text)?)
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
    load_scenario(&text)
}

/// Fills derived defaults and checks all cross-references.
pub fn resolve(mut doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
    for v in &mut doc.network.vertidromes {
        v.n_stands.get_or_insert(2 * v.n_fato);
    }
    let network = build_network(&doc.network).map_err(|e| ScenarioError::semantic("network.vertidromes", e))?;

    let mut specs = builtin_specs();
    for (i, s) in doc.fleet.specs.iter().enumerate() {
        let key = format!("fleet.specs[{i}]");
        match s.clone().resolve() {
            Ok(spec) => {
                specs.insert(spec.id.clone(), spec);
            }
            Err(e @ EnergyError::DesignInfeasible { .. }) => {
                return Err(ScenarioError::Infeasible { key, message: e.to_string() })
            }
            Err(e) => return Err(ScenarioError::semantic(key, e)),
        }
    }

    let mut ids = BTreeSet::new();
    let mut parked: BTreeMap<&str, u32> = BTreeMap::new();
    for (i, v) in doc.fleet.vehicles.iter().enumerate() {
        let key = |f: &str| format!("fleet.vehicles[{i}].{f}");
        if v.id.is_empty() || !ids.insert(v.id.as_str()) {
            return Err(ScenarioError::semantic(key("id"), format!("duplicate or empty vehicle id `{}`", v.id)));
        }
        if !specs.contains_key(&v.spec) {
            return Err(ScenarioError::semantic(key("spec"), format!("unknown spec {}", v.spec)));
        }
        if network.index_of(&v.location).is_none() {
            return Err(ScenarioError::semantic(key("location"), format!("unknown vertidrome {}", v.location)));
        }
        if !(0.0..=1.0).contains(&v.soc) {
            return Err(ScenarioError::semantic(key("soc"), "must lie in [0, 1]"));
        }
        *parked.entry(v.location.as_str()).or_default() += 1;
    }
    for (i, vd) in network.vertidromes.iter().enumerate() {
        let n = parked.get(vd.id.as_str()).copied().unwrap_or(0);
        if n > vd.n_stands {
            return Err(ScenarioError::semantic(
                format!("network.vertidromes[{i}].n_stands"),
                format!("{n} vehicles start at {} but it has {} stands", vd.id, vd.n_stands),
            ));
        }
    }

    let used: BTreeSet<&str> = doc.fleet.vehicles.iter().map(|v| v.spec.as_str()).collect();
    for s in &used {
        if !doc.econ.costs.specs.contains_key(*s) {
            return Err(ScenarioError::semantic("econ.costs.specs", format!("no cost parameters for spec {s}")));
        }
    }
    for (id, pair) in &doc.econ.costs.specs {
        for case in [CostCase::Optimistic, CostCase::Conservative] {
            pair.get(case).validate().map_err(|e| ScenarioError::semantic(format!("econ.costs.specs.{id}"), e))?;
        }
    }
    if doc.econ.reference_flights_per_day == 0 {
        return Err(ScenarioError::semantic("econ.reference_flights_per_day", "must be at least 1"));
    }
    doc.aging.validate().map_err(|e| ScenarioError::semantic("aging", e))?;

    doc.demand.choice.validate().map_err(|e| ScenarioError::semantic("demand.choice", e))?;
    let d = &doc.demand;
    if !(d.vertiport_density > 0.0) {
        return Err(ScenarioError::semantic("demand.vertiport_density", "must be positive"));
    }
    if !(d.access.access_speed_kmh > 0.0 && d.access.t_process_min >= 0.0) {
        return Err(ScenarioError::semantic("demand.access", "speed must be positive, processing time non-negative"));
    }
    let g = &d.ground;
    if !(g.detour_factor >= 1.0 && g.car_speed_kmh > 0.0 && g.transit_speed_kmh > 0.0) {
        return Err(ScenarioError::semantic("demand.ground", "detour factor >= 1 and positive speeds required"));
    }
    if let Some(gen) = &d.generator {
        gen.city.validate().map_err(|e| ScenarioError::semantic("demand.generator.city", e))?;
        if !(gen.addressable_fraction >= 0.0) {
            return Err(ScenarioError::semantic("demand.generator.addressable_fraction", "must be non-negative"));
        }
        if gen.window_min[0] > gen.window_min[1] {
            return Err(ScenarioError::semantic("demand.generator.window_min", "start after end"));
        }
        if gen.pax_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(ScenarioError::semantic("demand.generator.pax_weights", "weights must be non-negative"));
        }
    }

    let ops = &doc.ops;
    if ops.window_min[0] > ops.window_min[1] {
        return Err(ScenarioError::semantic("ops.window_min", "start after end"));
    }
    if !(ops.charge_target_soc > 0.0 && ops.charge_target_soc <= 1.0) {
        return Err(ScenarioError::semantic("ops.charge_target_soc", "must lie in (0, 1]"));
    }
    if ops.reposition.trigger_rejections == 0 {
        return Err(ScenarioError::semantic("ops.reposition.trigger_rejections", "must be at least 1"));
    }

    let max_pax = doc.fleet.vehicles.iter().map(|v| specs[&v.spec].max_payload_persons).max().unwrap_or(0);
    let window = ops.window_min;
    let mut next_id = doc.demand.requests.iter().filter_map(|r| r.id).max().map_or(0, |m| m + 1);
    let mut seen = BTreeSet::new();
    let mut requests = Vec::with_capacity(doc.demand.requests.len());
    for (i, r) in doc.demand.requests.iter_mut().enumerate() {
        let key = |f: &str| format!("demand.requests[{i}].{f}");
        let id = *r.id.get_or_insert_with(|| {
            next_id += 1;
            next_id - 1
        });
        if !seen.insert(id) {
            return Err(ScenarioError::semantic(key("id"), format!("duplicate request id {id}")));
        }
        let w = *r.window_min.get_or_insert(window);
        if w[0] > w[1] {
            return Err(ScenarioError::semantic(key("window_min"), "start after end"));
        }
        if network.index_of(&r.origin).is_none() {
            return Err(ScenarioError::semantic(key("origin"), format!("unknown vertidrome {}", r.origin)));
        }
        if network.index_of(&r.destination).is_none() {
            return Err(ScenarioError::semantic(key("destination"), format!("unknown vertidrome {}", r.destination)));
        }
        if r.origin == r.destination {
            return Err(ScenarioError::semantic(key("destination"), "origin and destination must differ"));
        }
        if r.pax == 0 || r.pax > max_pax.max(1) {
            return Err(ScenarioError::semantic(key("pax"), format!("must lie in [1, {}]", max_pax.max(1))));
        }
        let t = SimTime(r.t_request);
        requests.push(FlightRequest {
            id,
            t_request: t,
            origin: r.origin.clone(),
            destination: r.destination.clone(),
            pax: r.pax,
            t_min: t + w[0] * 60,
            t_max: t + w[1] * 60,
        });
    }
    requests.sort_by_key(|r| (r.t_request, r.id));
    Ok(Scenario { doc, network, specs, requests })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "seed": 7,
        "network": { "vertidromes": [ { "id": "A", "x_km": 0.0, "y_km": 0.0 } ] },
        "fleet": { "vehicles": [ { "id": "v1", "spec": "multirotor_near", "location": "A" } ] }
    }"#;

    #[test]
    fn minimal_gets_defaults() {
        let s = load_scenario(MINIMAL).unwrap();
        assert_eq!(s.doc.horizon_s, 86_400);
        assert_eq!(s.network.vertidromes[0].n_stands, 2);
        assert_eq!(s.doc.network.vertidromes[0].n_stands, Some(2));
        assert_eq!(s.doc.ops.boarding_s, 300);
        assert!(s.requests.is_empty());
    }

    #[test]
    fn unknown_spec_is_named() {
        let text = MINIMAL.replace("multirotor_near", "X9");
        let e = load_scenario(&text).unwrap_err();
        assert_eq!(e.to_string(), "fleet.vehicles[0].spec: unknown spec X9");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn missing_seed_names_the_key() {
        let text = MINIMAL.replace("\"seed\": 7,", "");
        let e = load_scenario(&text).unwrap_err();
        assert!(matches!(e, ScenarioError::Semantic { .. }));
        assert!(e.to_string().contains("seed"), "{e}");
    }

    #[test]
    fn syntax_error_has_position() {
        let e = load_scenario("{\n  \"seed\": 1,\n  oops\n}").unwrap_err();
        match e {
            ScenarioError::Parse { line, column, .. } => assert_eq!((line, column), (3, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nested_type_error_has_path() {
        let text = MINIMAL.replace("\"x_km\": 0.0", "\"x_km\": \"zero\"");
        match load_scenario(&text).unwrap_err() {
            ScenarioError::Semantic { key, .. } => assert_eq!(key, "network.vertidromes[0].x_km"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_spec_is_exit_three() {
        let text = MINIMAL.replace(
            "\"vehicles\"",
            r#""specs": [ { "id": "heavy", "kind": "multirotor", "tech_level": "near_term",
                "energy": { "e_fixed": 0.1, "e_km_base": 0.05, "e_km_person": 0.001 } } ],
               "vehicles""#,
        );
        let e = load_scenario(&text).unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
        assert!(e.to_string().contains("design mission infeasible"));
    }

    #[test]
    fn dangling_request_vertidrome() {
        let text = MINIMAL.replace(
            "\"fleet\"",
            r#""demand": { "requests": [ { "t_request": 0, "origin": "A", "destination": "Z" } ] }, "fleet""#,
        );
        let e = load_scenario(&text).unwrap_err();
        assert_eq!(e.to_string(), "demand.requests[0].destination: unknown vertidrome Z");
    }

    #[test]
    fn too_many_parked_vehicles() {
        let text = MINIMAL.replace(
            r#"{ "id": "v1", "spec": "multirotor_near", "location": "A" }"#,
            r#"{ "id": "v1", "spec": "multirotor_near", "location": "A" },
               { "id": "v2", "spec": "multirotor_near", "location": "A" },
               { "id": "v3", "spec": "multirotor_near", "location": "A" }"#,
        );
        let e = load_scenario(&text).unwrap_err();
        assert!(e.to_string().starts_with("network.vertidromes[0].n_stands"), "{e}");
    }

    #[test]
    fn normalized_dump_is_a_fixed_point() {
        let s = load_scenario(MINIMAL).unwrap();
        let once = s.to_json();
        let twice = load_scenario(&once).unwrap().to_json();
        assert_eq!(once, twice);
    }

    #[test]
    fn request_ids_and_windows_are_filled() {
        let text = MINIMAL.replace(
            "\"fleet\"",
            r#""network2": 0, "fleet""#,
        );
        assert!(load_scenario(&text).is_err(), "unknown keys are rejected");
        let text = MINIMAL
            .replace(r#"[ { "id": "A", "x_km": 0.0, "y_km": 0.0 } ]"#, r#"[ { "id": "A", "x_km": 0.0, "y_km": 0.0 }, { "id": "B", "x_km": 20.0, "y_km": 0.0 } ]"#)
            .replace(
                "\"fleet\"",
                r#""demand": { "requests": [ { "t_request": 100, "origin": "A", "destination": "B" },
                                            { "id": 9, "t_request": 50, "origin": "B", "destination": "A", "window_min": [0, 5] } ] }, "fleet""#,
            );
        let s = load_scenario(&text).unwrap();
        assert_eq!(s.requests.len(), 2);
        assert_eq!((s.requests[0].id, s.requests[0].t_min, s.requests[0].t_max), (9, SimTime(50), SimTime(350)));
        assert_eq!((s.requests[1].id, s.requests[1].t_min, s.requests[1].t_max), (10, SimTime(700), SimTime(2500)));
    }
}

//! Subcommands of the `uam-sim` binary.
//!
//! Every command returns `Ok(())` or a [`Failure`] carrying the process
//! exit code: 1 for I/O, 2 for configuration errors, 3 for infeasible
//! designs and 4 for calibration failures.

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;
use uam_core::battery::{calibrate_aging, range_checks, AgingFit, AgingParams, AgingTarget};
use uam_core::demand::{assemble_scan, scan_city, CityProfile, ScanGrid, ScanParams, ScanResult};
use uam_core::econ::{use_case_fare, CostCase, CostTable, UseCase, UseCaseFare};
use uam_core::energy::calibration::{calibrate_energy_model, EnergyCalibration, EnergyTargets};
use uam_core::energy::{builtin_specs, VehicleSpec};
use uam_core::fleet::Simulation;
use uam_core::report::{write_run_artifacts, Metrics};
use uam_core::sim::{load_scenario_file, Scenario, ScenarioError};

#[derive(Debug, Parser)]
#[command(name = "uam-sim", version, about = "Fast-time simulation of urban air mobility fleets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check a scenario without running it.
    Validate { path: PathBuf },
    /// Simulate a scenario and write the run artifacts.
    Run(RunArgs),
    /// Fit model parameters to a targets file.
    Calibrate {
        which: Which,
        targets: PathBuf,
        /// Where to write the fitted parameters; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Price and density sweep over a list of cities.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Energy,
    Aging,
    Econ,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub path: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Simulated seconds.
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Independent runs with consecutive seeds, each in `out/seed-<n>`.
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// JSON array of city profiles.
    pub cities: PathBuf,
    /// Price levels, currency per km.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 5.0])]
    pub prices: Vec<f64>,
    /// Vertiport densities per 100 km².
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 3.0])]
    pub densities: Vec<f64>,
    /// Choice, access and ground-mode settings.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn io(path: &Path, e: impl fmt::Display) -> Self {
        Failure { code: 1, message: format!("{}: {e}", path.display()) }
    }
    fn config(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
    fn calibration(message: impl Into<String>) -> Self {
        Failure { code: 4, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure { code: e.exit_code(), message: e.to_string() }
    }
}

pub fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { path } => validate(&path),
        Command::Run(args) => run(&args),
        Command::Calibrate { which, targets, out } => calibrate(which, &targets, out.as_deref()),
        Command::Scan(args) => scan(&args),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

pub fn validate(path: &Path) -> Result<(), Failure> {
    let s = load_scenario_file(path)?;
    println!(
        "ok: {} vertidromes, {} vehicles, {} scripted requests",
        s.network.vertidromes.len(),
        s.doc.fleet.vehicles.len(),
        s.requests.len()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunMeta {
    version: &'static str,
    scenario: String,
    wall_time_s: f64,
}

#[derive(Debug, Serialize)]
struct MetricsFile<'a> {
    meta: RunMeta,
    metrics: &'a Metrics,
}

/// Runs one scenario into `out` and returns its metrics.
pub fn run_once(scenario: &Scenario, source: &Path, out: &Path) -> Result<Metrics, Failure> {
    let started = Instant::now();
    let mut sim = Simulation::new(scenario).map_err(|e| Failure::config(e.to_string()))?;
    sim.run();
    let metrics = write_run_artifacts(&sim, out).map_err(|e| Failure::io(out, e))?;
    let inv = sim.check_invariants();
    if !inv.is_clean() {
        warn!("invariant violations: {inv:?}");
    }
    let meta = RunMeta {
        version: env!("CARGO_PKG_VERSION"),
        scenario: source.display().to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write(&out.join("metrics.json"), &pretty(&MetricsFile { meta, metrics: &metrics }))?;
    info!("{}: {} flights in {:.2} s", out.display(), metrics.flights_completed, started.elapsed().as_secs_f64());
    Ok(metrics)
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| Failure::config(e.to_string()))
}

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let base = load_scenario_file(&args.path)?;
    if args.replicates <= 1 {
        let s = base.with_overrides(args.seed, args.horizon)?;
        let m = run_once(&s, &args.path, &args.out)?;
        print_summary(&m);
        return Ok(());
    }
    let first = args.seed.unwrap_or(base.seed());
    let seeds: Vec<u64> = (0..args.replicates).map(|k| first + k).collect();
    let results: Vec<Result<Metrics, Failure>> = thread_pool(args.jobs)?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let s = base.with_overrides(Some(seed), args.horizon)?;
                run_once(&s, &args.path, &args.out.join(format!("seed-{seed}")))
            })
            .collect()
    });
    for (seed, r) in seeds.iter().zip(results) {
        print!("seed {seed}: ");
        print_summary(&r?);
    }
    Ok(())
}

fn print_summary(m: &Metrics) {
    println!(
        "{} requests, {} flights, {:.2} fh/vehicle/day, {:.1} km mean mission, {} rejected",
        m.requests,
        m.flights_completed,
        m.mean_flight_hours_per_vehicle_day,
        m.mean_mission_km,
        m.outcomes.get("rejected").copied().unwrap_or(0)
    );
}

pub fn calibrate(which: Which, targets: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let text = read(targets)?;
    let fitted = match which {
        Which::Energy => {
            let r = calibrate_energy(targets, &text);
            if let Ok(cal) = &r {
                for a in &cal.residuals {
                    eprintln!("{:<20} target {:.6} fitted {:.6} residual {:+.2e}", a.name, a.target, a.fitted, a.residual);
                }
            }
            pretty(&r?)
        }
        Which::Aging => {
            let fit = calibrate_aging_file(targets, &text)?;
            for c in &fit.ranges {
                eprintln!(
                    "{:<16} -> {:.2}: target [{}, {}] predicted [{}, {}] midpoint error {:+.1}%",
                    c.spec,
                    c.threshold,
                    c.min_cycles,
                    c.max_cycles,
                    c.predicted_min,
                    c.predicted_max,
                    100.0 * c.rel_error
                );
            }
            pretty(&fit.params)
        }
        Which::Econ => {
            let checks = econ_fares(targets, &text)?;
            for c in &checks {
                eprintln!("{:<12} {:.2} EUR/km (band [{:.2}, {:.2}])", c.fare.use_case, c.fare.breakdown.fare_per_km, c.band[0], c.band[1]);
            }
            pretty(&checks)
        }
    };
    match out {
        Some(p) => write(p, &fitted),
        None => {
            print!("{fitted}");
            Ok(())
        }
    }
}

fn spec_by_id(id: &str) -> Result<VehicleSpec, Failure> {
    builtin_specs().remove(id).ok_or_else(|| Failure::config(format!("unknown spec {id}")))
}

pub fn calibrate_energy(path: &Path, text: &str) -> Result<EnergyCalibration, Failure> {
    let t: EnergyTargets = parse(path, text)?;
    let spec = spec_by_id(&t.spec)?;
    let cal = calibrate_energy_model(&spec, &t.anchors, t.mode, t.tolerance).map_err(|e| Failure::calibration(e.to_string()))?;
    if cal.flagged {
        return Err(Failure::calibration(format!("residual {:.3e} exceeds tolerance {:.1e}", cal.max_abs_residual, cal.tolerance)));
    }
    Ok(cal)
}

/// Relative error allowed between a predicted and a target range midpoint.
pub const AGING_TOLERANCE: f64 = 0.10;

pub fn calibrate_aging_file(path: &Path, text: &str) -> Result<AgingFit, Failure> {
    let targets: Vec<AgingTarget> = parse(path, text)?;
    let fit = calibrate_aging(&targets, &builtin_specs(), &AgingParams::default()).map_err(|e| Failure::calibration(e.to_string()))?;
    let worst = range_checks(&targets, &fit.residuals).iter().fold(0.0f64, |w, c| w.max(c.rel_error.abs()));
    if worst > AGING_TOLERANCE {
        return Err(Failure::calibration(format!("midpoint error {:.1}% exceeds {:.0}%", 100.0 * worst, 100.0 * AGING_TOLERANCE)));
    }
    Ok(fit)
}

/// Fare bands per use case; the cost table and aging parameters default to the bundled ones.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FareTargets {
    pub bands: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub case: Option<CostCase>,
    #[serde(default)]
    pub costs: Option<CostTable>,
    #[serde(default)]
    pub aging: Option<AgingParams>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FareCheck {
    pub fare: UseCaseFare,
    pub band: [f64; 2],
    pub within: bool,
}

pub fn econ_fares(path: &Path, text: &str) -> Result<Vec<FareCheck>, Failure> {
    let t: FareTargets = parse(path, text)?;
    let costs = t.costs.unwrap_or_default();
    let aging = t.aging.unwrap_or_default();
    let case = t.case.unwrap_or(CostCase::Optimistic);
    let mut out = Vec::new();
    for (name, band) in &t.bands {
        let uc = match name.as_str() {
            "intra_city" => UseCase::intra_city(),
            "intercity" => UseCase::intercity(),
            other => return Err(Failure::config(format!("bands: unknown use case {other}"))),
        };
        let spec = spec_by_id(&uc.spec)?;
        let fare = use_case_fare(&uc, &spec, &aging, &costs, case).map_err(|e| Failure::calibration(e.to_string()))?;
        let f = fare.breakdown.fare_per_km;
        let within = f >= band[0] && f <= band[1];
        out.push(FareCheck { fare, band: *band, within });
    }
    if out.is_empty() {
        return Err(Failure::calibration("no fare bands given"));
    }
    if let Some(c) = out.iter().find(|c| !c.within) {
        return Err(Failure::calibration(format!("{} fare {:.2} outside band", c.fare.use_case, c.fare.breakdown.fare_per_km)));
    }
    Ok(out)
}

pub const GRID_COLUMNS: [&str; 5] = ["city", "price_level", "density_level", "daily_uam_trips", "qualifies"];

pub fn scan_cities(cities: &[CityProfile], grid: &ScanGrid, params: &ScanParams, jobs: usize) -> Result<ScanResult, Failure> {
    if cities.is_empty() {
        return Err(Failure::config("city list is empty"));
    }
    let per_city: Result<Vec<_>, _> =
        thread_pool(jobs)?.install(|| cities.par_iter().map(|c| scan_city(c, grid, params)).collect());
    Ok(assemble_scan(grid, per_city.map_err(|e| Failure::config(e.to_string()))?))
}

pub fn scan(args: &ScanArgs) -> Result<(), Failure> {
    let cities: Vec<CityProfile> = parse(&args.cities, &read(&args.cities)?)?;
    let params: ScanParams = match &args.params {
        Some(p) => parse(p, &read(p)?)?,
        None => ScanParams::default(),
    };
    let grid = ScanGrid { prices: args.prices.clone(), densities: args.densities.clone() };
    let result = scan_cities(&cities, &grid, &params, args.jobs)?;
    fs::create_dir_all(&args.out).map_err(|e| Failure::io(&args.out, e))?;
    let path = args.out.join("demand_grid.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Failure::io(&path, e))?;
    if result.rows.is_empty() {
        w.write_record(GRID_COLUMNS).map_err(|e| Failure::io(&path, e))?;
    }
    for r in &result.rows {
        w.serialize(r).map_err(|e| Failure::io(&path, e))?;
    }
    w.flush().map_err(|e| Failure::io(&path, e))?;
    println!("{} cities, {} cells", cities.len(), grid.prices.len() * grid.densities.len());
    for (p, d, total) in &result.ordering {
        println!("  price {p:>6.2}  density {d:>5.2}  {total:>14.1} trips/day");
    }
    println!("monotone: {}  favorable cell maximal: {}", result.monotone, result.favorable_is_max);
    if !result.monotone || !result.favorable_is_max {
        warn!("grid failed the monotonicity check");
    }
    Ok(())
}

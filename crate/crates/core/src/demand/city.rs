//! City-level expected UAM demand and the price × density scenario scan.

use super::{mode_probabilities, AccessParams, ChoiceParams, DemandError, GroundModes, Mode, ModeAttributes, ModeOffer};
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripLength {
    pub median_km: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityProfile {
    pub name: String,
    pub population: f64,
    pub gdp_per_capita: f64,
    pub area_km2: f64,
    /// Motorised trips per person and day.
    pub trip_rate: f64,
    pub trip_length: TripLength,
    /// Vertiports per 100 km².
    pub vertiport_density: f64,
}

impl CityProfile {
    pub fn validate(&self) -> Result<(), DemandError> {
        let bad = |f: &str| Err(DemandError::Invalid { field: format!("{}.{f}", self.name), reason: "must be positive".into() });
        if !(self.population > 0.0) {
            return bad("population");
        }
        if !(self.gdp_per_capita > 0.0) {
            return bad("gdp_per_capita");
        }
        if !(self.area_km2 > 0.0) {
            return bad("area_km2");
        }
        if !(self.trip_rate >= 0.0) {
            return bad("trip_rate");
        }
        if !(self.trip_length.median_km > 0.0 && self.trip_length.sigma > 0.0) {
            return bad("trip_length");
        }
        if !(self.vertiport_density >= 0.0) {
            return bad("vertiport_density");
        }
        Ok(())
    }

    pub fn daily_trips(&self) -> f64 {
        self.population * self.trip_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParams {
    #[serde(default)]
    pub choice: ChoiceParams,
    #[serde(default)]
    pub access: AccessParams,
    #[serde(default)]
    pub ground: GroundModes,
    #[serde(default = "default_uam_speed")]
    pub uam_speed_kmh: f64,
    /// Climb, descent and taxi added to every UAM flight, minutes.
    #[serde(default = "default_uam_overhead")]
    pub uam_overhead_min: f64,
    #[serde(default = "default_min_uam_km")]
    pub min_uam_km: f64,
    #[serde(default = "default_floor")]
    pub viability_floor: f64,
}

fn default_uam_speed() -> f64 {
    120.0
}
fn default_uam_overhead() -> f64 {
    3.0
}
pub(crate) fn default_min_uam_km() -> f64 {
    5.0
}
fn default_floor() -> f64 {
    1000.0
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            choice: ChoiceParams::default(),
            access: AccessParams::default(),
            ground: GroundModes::default(),
            uam_speed_kmh: default_uam_speed(),
            uam_overhead_min: default_uam_overhead(),
            min_uam_km: default_min_uam_km(),
            viability_floor: default_floor(),
        }
    }
}

impl ScanParams {
    fn offer(&self, d: f64, price_per_km: f64, density: f64) -> Result<ModeOffer, DemandError> {
        let uam_time = self.access.access_time(density)?
            + self.access.ground_leg(density)?
            + self.uam_overhead_min
            + d / self.uam_speed_kmh * 60.0;
        Ok(ModeOffer {
            options: vec![
                (Mode::Uam, ModeAttributes { time_min: uam_time, cost: price_per_km * d }),
                (Mode::Car, self.ground.car(d)),
                (Mode::Transit, self.ground.transit(d)),
            ],
        })
    }

    fn p_uam(&self, choice: &ChoiceParams, d: f64, price: f64, density: f64) -> Result<f64, DemandError> {
        Ok(mode_probabilities(&self.offer(d, price, density)?, choice)?[0].1)
    }
}

fn check_inputs(city: &CityProfile, price: f64, density: f64) -> Result<(), DemandError> {
    city.validate()?;
    if !(price >= 0.0) || !price.is_finite() {
        return Err(DemandError::Invalid { field: "price_per_km".into(), reason: "must be finite and non-negative".into() });
    }
    if !(density > 0.0) {
        return Err(DemandError::NonPositiveDensity(density));
    }
    Ok(())
}

const SIMPSON_INTERVALS: usize = 600;
const TAIL_SIGMAS: f64 = 9.0;

/// Expected daily UAM trips: total trips times the UAM share integrated over
/// trip lengths of at least `min_uam_km`. Simpson's rule in log-distance.
pub fn city_uam_demand(city: &CityProfile, price_per_km: f64, density: f64, params: &ScanParams) -> Result<f64, DemandError> {
    check_inputs(city, price_per_km, density)?;
    let choice = params.choice.for_income(city.gdp_per_capita);
    let mu = city.trip_length.median_km.ln();
    let sigma = city.trip_length.sigma;
    let lo = params.min_uam_km.max(1e-6).ln();
    let hi = mu + TAIL_SIGMAS * sigma;
    if hi <= lo {
        return Ok(0.0);
    }
    let n = SIMPSON_INTERVALS;
    let h = (hi - lo) / n as f64;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mut acc = 0.0;
    for i in 0..=n {
        let u = lo + i as f64 * h;
        let z = (u - mu) / sigma;
        let f = norm * (-0.5 * z * z).exp() * params.p_uam(&choice, u.exp(), price_per_km, density)?;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * f;
    }
    Ok(city.daily_trips() * acc * h / 3.0)
}

/// Monte Carlo estimate of the same quantity, for cross-checking.
pub fn city_uam_demand_mc<R: Rng>(
    city: &CityProfile,
    price_per_km: f64,
    density: f64,
    params: &ScanParams,
    samples: usize,
    rng: &mut R,
) -> Result<f64, DemandError> {
    check_inputs(city, price_per_km, density)?;
    let choice = params.choice.for_income(city.gdp_per_capita);
    let dist = LogNormal::new(city.trip_length.median_km.ln(), city.trip_length.sigma)
        .map_err(|e| DemandError::Invalid { field: "trip_length".into(), reason: e.to_string() })?;
    let mut acc = 0.0;
    for _ in 0..samples {
        let d = dist.sample(rng);
        if d >= params.min_uam_km {
            acc += params.p_uam(&choice, d, price_per_km, density)?;
        }
    }
    Ok(city.daily_trips() * acc / samples as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    /// Price levels in currency per km.
    #[serde(default = "default_prices")]
    pub prices: Vec<f64>,
    /// Density levels in vertiports per 100 km².
    #[serde(default = "default_densities")]
    pub densities: Vec<f64>,
}

fn default_prices() -> Vec<f64> {
    vec![2.0, 5.0]
}
fn default_densities() -> Vec<f64> {
    vec![0.5, 3.0]
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid { prices: default_prices(), densities: default_densities() }
    }
}

impl ScanGrid {
    fn sorted(&self) -> ScanGrid {
        let mut g = self.clone();
        g.prices.sort_by(f64::total_cmp);
        g.prices.dedup();
        g.densities.sort_by(f64::total_cmp);
        g.densities.dedup();
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub city: String,
    pub price_level: f64,
    pub density_level: f64,
    pub daily_uam_trips: f64,
    pub qualifies: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub prices: Vec<f64>,
    pub densities: Vec<f64>,
    pub rows: Vec<ScanRow>,
    /// `totals[i][j]` for price `i` and density `j`.
    pub totals: Vec<Vec<f64>>,
    pub qualifying: Vec<Vec<usize>>,
    /// Non-increasing in price and non-decreasing in density, per city and in total.
    pub monotone: bool,
    /// The low-price, high-density cell holds the largest total.
    pub favorable_is_max: bool,
    /// Cells as (price, density, total), largest total first.
    pub ordering: Vec<(f64, f64, f64)>,
}

/// All grid cells for one city, price-major.
pub fn scan_city(city: &CityProfile, grid: &ScanGrid, params: &ScanParams) -> Result<Vec<ScanRow>, DemandError> {
    let g = grid.sorted();
    let mut rows = Vec::with_capacity(g.prices.len() * g.densities.len());
    for &price in &g.prices {
        for &density in &g.densities {
            let trips = city_uam_demand(city, price, density, params)?;
            rows.push(ScanRow {
                city: city.name.clone(),
                price_level: price,
                density_level: density,
                daily_uam_trips: trips,
                qualifies: trips >= params.viability_floor,
            });
        }
    }
    Ok(rows)
}

fn grid_monotone(cells: &[Vec<f64>]) -> bool {
    let np = cells.len();
    let nd = cells.first().map_or(0, Vec::len);
    for i in 0..np {
        for j in 0..nd {
            if i + 1 < np && cells[i + 1][j] > cells[i][j] {
                return false;
            }
            if j + 1 < nd && cells[i][j + 1] < cells[i][j] {
                return false;
            }
        }
    }
    true
}

/// Combines per-city rows (as produced by `scan_city`, in city order) into a scan result.
pub fn assemble_scan(grid: &ScanGrid, per_city: Vec<Vec<ScanRow>>) -> ScanResult {
    let g = grid.sorted();
    let (np, nd) = (g.prices.len(), g.densities.len());
    let mut totals = vec![vec![0.0; nd]; np];
    let mut qualifying = vec![vec![0usize; nd]; np];
    let mut monotone = true;
    let mut rows = Vec::new();
    for city_rows in per_city {
        let mut cells = vec![vec![0.0; nd]; np];
        for (k, r) in city_rows.iter().enumerate() {
            let (i, j) = (k / nd, k % nd);
            cells[i][j] = r.daily_uam_trips;
            totals[i][j] += r.daily_uam_trips;
            qualifying[i][j] += r.qualifies as usize;
        }
        monotone &= grid_monotone(&cells);
        rows.extend(city_rows);
    }
    monotone &= grid_monotone(&totals);
    let mut ordering: Vec<(f64, f64, f64)> = Vec::with_capacity(np * nd);
    for (row, &price) in totals.iter().zip(&g.prices) {
        for (&t, &density) in row.iter().zip(&g.densities) {
            ordering.push((price, density, t));
        }
    }
    ordering.sort_by(|a, b| b.2.total_cmp(&a.2));
    let favorable_is_max = np == 0 || nd == 0 || {
        let fav = totals[0][nd - 1];
        totals.iter().flatten().all(|t| *t <= fav)
    };
    ScanResult { prices: g.prices, densities: g.densities, rows, totals, qualifying, monotone, favorable_is_max, ordering }
}

pub fn global_scan(cities: &[CityProfile], grid: &ScanGrid, params: &ScanParams) -> Result<ScanResult, DemandError> {
    let per_city = cities.iter().map(|c| scan_city(c, grid, params)).collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_scan(grid, per_city))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn hamburg_like() -> CityProfile {
        CityProfile {
            name: "hamburg-like".into(),
            population: 1.8e6,
            gdp_per_capita: 55_000.0,
            area_km2: 755.0,
            trip_rate: 3.0,
            trip_length: TripLength { median_km: 8.0, sigma: 0.8 },
            vertiport_density: 2.0,
        }
    }

    #[test]
    fn price_and_density_limits() {
        let p = ScanParams::default();
        let c = hamburg_like();
        let cheap = city_uam_demand(&c, 1.0, 2.0, &p).unwrap();
        let dear = city_uam_demand(&c, 8.0, 2.0, &p).unwrap();
        assert!(cheap > 10.0 * dear);
        assert!(city_uam_demand(&c, 1e6, 2.0, &p).unwrap() < 1e-9);
        assert!(city_uam_demand(&c, 3.0, 4.0, &p).unwrap() > city_uam_demand(&c, 3.0, 2.0, &p).unwrap());
        assert!(city_uam_demand(&c, 3.0, 0.0, &p).is_err());
    }

    #[test]
    fn quadrature_agrees_with_sampling() {
        let p = ScanParams::default();
        let c = hamburg_like();
        let mut rng = crate::sim::rng::stream(3, "test-demand-mc");
        for price in [1.0, 3.0] {
            let q = city_uam_demand(&c, price, 2.0, &p).unwrap();
            let mc = city_uam_demand_mc(&c, price, 2.0, &p, 400_000, &mut rng).unwrap();
            assert!((q - mc).abs() / q < 0.02, "price {price}: quadrature {q} vs mc {mc}");
        }
    }

    #[test]
    fn single_city_favorable_corner() {
        let r = global_scan(&[hamburg_like()], &ScanGrid::default(), &ScanParams::default()).unwrap();
        assert!(r.monotone && r.favorable_is_max);
        assert_eq!((r.ordering[0].0, r.ordering[0].1), (2.0, 3.0));
        assert_eq!(r.rows.len(), 4);
    }

    #[test]
    fn empty_city_list() {
        let r = global_scan(&[], &ScanGrid::default(), &ScanParams::default()).unwrap();
        assert!(r.totals.iter().flatten().all(|t| *t == 0.0));
        assert!(r.rows.is_empty());
    }

    #[test]
    fn finite_difference_monotonicity() {
        let p = ScanParams::default();
        let c = hamburg_like();
        for price in [0.5, 1.0, 2.0, 4.0, 6.0] {
            for density in [0.25, 1.0, 2.0, 5.0] {
                let base = city_uam_demand(&c, price, density, &p).unwrap();
                assert!(city_uam_demand(&c, price + 0.01, density, &p).unwrap() < base);
                assert!(city_uam_demand(&c, price, density * 1.01, &p).unwrap() > base);
            }
        }
    }
}

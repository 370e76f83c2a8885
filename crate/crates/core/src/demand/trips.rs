//! Synthetic flight requests: Poisson-thinned arrivals over a two-peak day.

use super::city::default_min_uam_km;
use super::CityProfile;
use crate::network::Network;
use crate::sim::{SimTime, SECONDS_PER_DAY};
use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlightRequest {
    pub id: u64,
    pub t_request: SimTime,
    pub origin: String,
    pub destination: String,
    pub pax: u32,
    pub t_min: SimTime,
    pub t_max: SimTime,
}

/// Relative request intensity over the day: a flat base plus two Gaussian peaks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DailyProfile {
    #[serde(default = "am")]
    pub am_peak_h: f64,
    #[serde(default = "pm")]
    pub pm_peak_h: f64,
    #[serde(default = "width")]
    pub peak_width_h: f64,
    /// Height of the flat component relative to a peak.
    #[serde(default = "base")]
    pub base_level: f64,
    #[serde(default = "start")]
    pub start_h: f64,
    #[serde(default = "end")]
    pub end_h: f64,
}

fn am() -> f64 {
    8.0
}
fn pm() -> f64 {
    17.5
}
fn width() -> f64 {
    1.5
}
fn base() -> f64 {
    0.4
}
fn start() -> f64 {
    6.0
}
fn end() -> f64 {
    23.0
}

impl Default for DailyProfile {
    fn default() -> Self {
        DailyProfile { am_peak_h: am(), pm_peak_h: pm(), peak_width_h: width(), base_level: base(), start_h: start(), end_h: end() }
    }
}

impl DailyProfile {
    pub fn shape(&self, hour: f64) -> f64 {
        if hour < self.start_h || hour >= self.end_h {
            return 0.0;
        }
        let g = |c: f64| {
            let z = (hour - c) / self.peak_width_h;
            (-0.5 * z * z).exp()
        };
        self.base_level + g(self.am_peak_h) + g(self.pm_peak_h)
    }

    /// Integral of `shape` over the day, in hours (minute midpoint rule).
    pub fn integral_h(&self) -> f64 {
        (0..24 * 60).map(|m| self.shape((m as f64 + 0.5) / 60.0)).sum::<f64>() / 60.0
    }

    fn max_shape(&self) -> f64 {
        (0..24 * 60).map(|m| self.shape(m as f64 / 60.0)).fold(0.0, f64::max) * 1.001
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    pub city: CityProfile,
    /// Share of the city's daily trips that request a UAM flight.
    pub addressable_fraction: f64,
    #[serde(default)]
    pub profile: DailyProfile,
    #[serde(default = "default_min_uam_km")]
    pub min_uam_km: f64,
    /// Relative weights for 1, 2, ... passengers per request.
    #[serde(default = "default_pax_weights")]
    pub pax_weights: Vec<f64>,
    #[serde(default = "default_window")]
    pub window_min: [u64; 2],
}

fn default_pax_weights() -> Vec<f64> {
    vec![1.0]
}
pub(crate) fn default_window() -> [u64; 2] {
    [10, 40]
}

impl GeneratorParams {
    /// Expected raw arrivals per day before distance and OD filtering.
    pub fn daily_arrivals(&self) -> f64 {
        self.city.daily_trips() * self.addressable_fraction
    }
}

/// Arrival times (seconds since scenario start) for one day.
pub fn arrival_times<R: Rng>(profile: &DailyProfile, per_day: f64, day: u64, rng: &mut R) -> Vec<u64> {
    let integral = profile.integral_h();
    if per_day <= 0.0 || integral <= 0.0 {
        return Vec::new();
    }
    let max_shape = profile.max_shape();
    // Requests per hour at the profile maximum.
    let lambda_max = per_day * max_shape / integral;
    let exp = Exp::new(lambda_max).expect("positive rate");
    let mut out = Vec::new();
    let mut h = profile.start_h;
    loop {
        h += exp.sample(rng);
        if h >= profile.end_h || h >= 24.0 {
            break;
        }
        if rng.random::<f64>() * max_shape < profile.shape(h) {
            out.push(day * SECONDS_PER_DAY + (h * 3600.0).floor() as u64);
        }
    }
    out
}

fn draw_pax<R: Rng>(weights: &[f64], rng: &mut R) -> u32 {
    let total: f64 = weights.iter().sum();
    if weights.len() <= 1 || total <= 0.0 {
        return 1;
    }
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i as u32 + 1;
        }
        x -= w;
    }
    weights.len() as u32
}

/// Requests for one day, ordered by time. Origins are uniform over the
/// network's bounding box, trip lengths follow the city distribution in a
/// uniform direction, and both ends snap to the nearest vertidrome. Trips
/// under `min_uam_km` or within one vertidrome's catchment are dropped.
pub fn trip_candidates<R: Rng>(gen: &GeneratorParams, network: &Network, day: u64, first_id: u64, rng: &mut R) -> Vec<FlightRequest> {
    let times = arrival_times(&gen.profile, gen.daily_arrivals(), day, rng);
    if times.is_empty() || network.vertidromes.len() < 2 {
        return Vec::new();
    }
    let tl = gen.city.trip_length;
    let lengths = LogNormal::new(tl.median_km.ln(), tl.sigma).expect("validated trip length");
    let (x0, y0, x1, y1) = network.bbox();
    let mut out = Vec::new();
    let mut id = first_id;
    for t in times {
        let d = lengths.sample(rng);
        let ox = x0 + rng.random::<f64>() * (x1 - x0);
        let oy = y0 + rng.random::<f64>() * (y1 - y0);
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let pax = draw_pax(&gen.pax_weights, rng);
        if d < gen.min_uam_km {
            continue;
        }
        let o = network.nearest(ox, oy);
        let k = network.nearest(ox + d * theta.cos(), oy + d * theta.sin());
        if o == k || network.route(o, k).is_none_or(|r| r.distance_km < gen.min_uam_km) {
            continue;
        }
        let t = SimTime(t);
        out.push(FlightRequest {
            id,
            t_request: t,
            origin: network.vertidromes[o].id.clone(),
            destination: network.vertidromes[k].id.clone(),
            pax,
            t_min: t + gen.window_min[0] * 60,
            t_max: t + gen.window_min[1] * 60,
        });
        id += 1;
    }
    out
}

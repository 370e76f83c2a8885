//! Vertidromes, routes and the airside resources flights compete for.

mod corridor;
mod los;
mod slots;
mod stands;

pub use corridor::{entries_separated, CorridorTable, Direction};
pub use los::{airside_los, AirsideLoS, LosGrade};
pub use slots::{slots_are_separated, Movement, Slot, SlotError, SlotTable};
pub use stands::{StandGrant, StandPool};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertidromeDoc {
    pub id: String,
    pub x_km: f64,
    pub y_km: f64,
    #[serde(default = "one")]
    pub n_fato: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_stands: Option<u32>,
    #[serde(default = "default_occupancy")]
    pub fato_occupancy_s: u64,
    #[serde(default = "default_separation")]
    pub min_separation_s: u64,
    #[serde(default = "default_c_rate")]
    pub charge_c_rate: f64,
}

fn one() -> u32 {
    1
}
fn default_occupancy() -> u64 {
    60
}
fn default_separation() -> u64 {
    90
}
fn default_c_rate() -> f64 {
    1.0
}
fn default_corridor_sep() -> u64 {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub vertidromes: Vec<VertidromeDoc>,
    #[serde(default = "default_corridor_sep")]
    pub corridor_sep_s: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertidrome {
    pub id: String,
    pub x_km: f64,
    pub y_km: f64,
    pub n_fato: u32,
    pub n_stands: u32,
    pub fato_occupancy_s: u64,
    pub min_separation_s: u64,
    pub charge_c_rate: f64,
}

impl Vertidrome {
    pub fn distance_km(&self, other: &Vertidrome) -> f64 {
        (self.x_km - other.x_km).hypot(self.y_km - other.y_km)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub origin: String,
    pub destination: String,
    pub distance_km: f64,
    /// Shared by both directions of an OD pair.
    pub corridor: String,
}

impl Route {
    pub fn direction(&self) -> Direction {
        if self.origin < self.destination {
            Direction::Forward
        } else {
            Direction::Reverse
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub vertidromes: Vec<Vertidrome>,
    pub corridor_sep_s: u64,
    index: BTreeMap<String, usize>,
    routes: BTreeMap<(usize, usize), Route>,
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("network has no vertidromes")]
    Empty,
    #[error("duplicate vertidrome id {0}")]
    DuplicateId(String),
    #[error("vertidromes {0} and {1} share a position")]
    DuplicatePosition(String, String),
    #[error("vertidrome {id}: {reason}")]
    Invalid { id: String, reason: String },
}

pub fn corridor_id(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}~{b}")
    } else {
        format!("{b}~{a}")
    }
}

pub fn build_network(doc: &NetworkDoc) -> Result<Network, NetworkError> {
    if doc.vertidromes.is_empty() {
        return Err(NetworkError::Empty);
    }
    let mut vertidromes = Vec::with_capacity(doc.vertidromes.len());
    let mut index = BTreeMap::new();
    for (i, v) in doc.vertidromes.iter().enumerate() {
        let bad = |reason: &str| NetworkError::Invalid { id: v.id.clone(), reason: reason.into() };
        if index.insert(v.id.clone(), i).is_some() {
            return Err(NetworkError::DuplicateId(v.id.clone()));
        }
        if !v.x_km.is_finite() || !v.y_km.is_finite() {
            return Err(bad("position must be finite"));
        }
        if v.n_fato == 0 {
            return Err(bad("n_fato must be at least 1"));
        }
        let n_stands = v.n_stands.unwrap_or(2 * v.n_fato);
        if n_stands == 0 {
            return Err(bad("n_stands must be at least 1"));
        }
        if v.fato_occupancy_s == 0 || v.min_separation_s == 0 {
            return Err(bad("fato_occupancy_s and min_separation_s must be positive"));
        }
        if !(v.charge_c_rate > 0.0) {
            return Err(bad("charge_c_rate must be positive"));
        }
        vertidromes.push(Vertidrome {
            id: v.id.clone(),
            x_km: v.x_km,
            y_km: v.y_km,
            n_fato: v.n_fato,
            n_stands,
            fato_occupancy_s: v.fato_occupancy_s,
            min_separation_s: v.min_separation_s,
            charge_c_rate: v.charge_c_rate,
        });
    }
    let mut routes = BTreeMap::new();
    for i in 0..vertidromes.len() {
        for j in 0..vertidromes.len() {
            if i == j {
                continue;
            }
            let (a, b) = (&vertidromes[i], &vertidromes[j]);
            let d = a.distance_km(b);
            if d < 1e-9 {
                return Err(NetworkError::DuplicatePosition(a.id.clone(), b.id.clone()));
            }
            routes.insert(
                (i, j),
                Route { origin: a.id.clone(), destination: b.id.clone(), distance_km: d, corridor: corridor_id(&a.id, &b.id) },
            );
        }
    }
    Ok(Network { vertidromes, corridor_sep_s: doc.corridor_sep_s, index, routes })
}

impl Network {
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Vertidrome> {
        self.index_of(id).map(|i| &self.vertidromes[i])
    }

    pub fn route(&self, origin: usize, destination: usize) -> Option<&Route> {
        self.routes.get(&(origin, destination))
    }

    pub fn routes(&self) -> impl Iterator<Item = &Route> {
        self.routes.values()
    }

    pub fn corridor_count(&self) -> usize {
        self.routes.len() / 2
    }

    /// Index of the vertidrome closest to a point; ties go to the lower index.
    pub fn nearest(&self, x_km: f64, y_km: f64) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, v) in self.vertidromes.iter().enumerate() {
            let d = (v.x_km - x_km).hypot(v.y_km - y_km);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Axis-aligned bounding box (min_x, min_y, max_x, max_y).
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.vertidromes.iter().fold((f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY), |b, v| {
            (b.0.min(v.x_km), b.1.min(v.y_km), b.2.max(v.x_km), b.3.max(v.y_km))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn vd(id: &str, x: f64, y: f64) -> VertidromeDoc {
        VertidromeDoc {
            id: id.into(),
            x_km: x,
            y_km: y,
            n_fato: 1,
            n_stands: None,
            fato_occupancy_s: 60,
            min_separation_s: 90,
            charge_c_rate: 1.0,
        }
    }

    #[test]
    fn two_vertidromes_one_corridor() {
        let net = build_network(&NetworkDoc { vertidromes: vec![vd("a", 0.0, 0.0), vd("b", 22.0, 0.0)], corridor_sep_s: 60 }).unwrap();
        assert_eq!(net.corridor_count(), 1);
        let r = net.route(0, 1).unwrap();
        assert_eq!(r.distance_km, 22.0);
        assert_eq!(r.corridor, net.route(1, 0).unwrap().corridor);
        assert_ne!(r.direction(), net.route(1, 0).unwrap().direction());
        assert_eq!(net.vertidromes[0].n_stands, 2);
    }

    #[test]
    fn colocated_is_an_error() {
        let e = build_network(&NetworkDoc { vertidromes: vec![vd("a", 1.0, 1.0), vd("b", 1.0, 1.0)], corridor_sep_s: 60 });
        assert!(matches!(e, Err(NetworkError::DuplicatePosition(..))));
    }

    #[test]
    fn four_nodes_six_corridors() {
        let doc = NetworkDoc {
            vertidromes: vec![vd("a", 0.0, 0.0), vd("b", 10.0, 0.0), vd("c", 0.0, 10.0), vd("d", 10.0, 10.0)],
            corridor_sep_s: 60,
        };
        let net = build_network(&doc).unwrap();
        assert_eq!(net.corridor_count(), 6);
        let mut ids: Vec<_> = net.routes().map(|r| r.corridor.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 6);
        assert_eq!(net.nearest(9.0, 9.5), 3);
    }
}

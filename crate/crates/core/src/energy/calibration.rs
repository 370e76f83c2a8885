//! Fitting the affine energy coefficients to named anchor missions.
//!
//! Unknowns are the per-leg fixed energy, the aggregate per-km energy at
//! full payload and the loiter power. Each anchor is one linear equation
//! `E(mission) = target`. When the anchors do not identify the loiter
//! power on its own, it is tied to the fixed energy at the default ratio
//! and two unknowns remain. Fewer than two identified directions is an
//! error that lists the free directions.
//!
//! The per-km aggregate is split back into empty-cabin and per-person
//! parts using the ratio already present in the vehicle spec.

use super::{mission_energy, Mission, VehicleSpec, DEFAULT_LOITER_RATIO};
use crate::optim;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Design-mission energy fractions used by the battery-life studies.
    DegradationStudy,
    /// Single-leg range points of a payload-range diagram.
    PayloadRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyAnchor {
    pub name: String,
    /// Leg distances in km.
    pub legs_km: Vec<f64>,
    pub payload: u32,
    #[serde(default = "default_true")]
    pub reserve_included: bool,
    /// Target energy as a fraction of nominal capacity.
    pub target_fraction: f64,
}

fn default_true() -> bool {
    true
}

impl EnergyAnchor {
    pub fn mission(&self) -> Mission {
        Mission {
            legs: self
                .legs_km
                .iter()
                .enumerate()
                .map(|(i, d)| super::Leg { origin: format!("a{i}"), destination: format!("a{}", i + 1), distance_km: *d })
                .collect(),
            payload: self.payload,
            reserve_included: self.reserve_included,
        }
    }

    /// Design mission of `spec` at `payload`.
    pub fn design(name: &str, spec: &VehicleSpec, payload: u32, target_fraction: f64) -> Self {
        let m = Mission::design(spec, payload);
        EnergyAnchor {
            name: name.into(),
            legs_km: m.legs.iter().map(|l| l.distance_km).collect(),
            payload,
            reserve_included: true,
            target_fraction,
        }
    }

    /// A payload-range point: at `capacity_fraction` the vehicle reaches `range_km` on one leg.
    pub fn range_point(name: &str, range_km: f64, capacity_fraction: f64, payload: u32) -> Self {
        EnergyAnchor {
            name: name.into(),
            legs_km: vec![range_km],
            payload,
            reserve_included: true,
            target_fraction: capacity_fraction,
        }
    }
}

/// Calibration targets file: one spec, one mode, a list of anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyTargets {
    pub spec: String,
    pub mode: CalibrationMode,
    pub anchors: Vec<EnergyAnchor>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorResidual {
    pub name: String,
    pub target: f64,
    pub fitted: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCalibration {
    pub spec: String,
    pub mode: CalibrationMode,
    /// True when the loiter power was tied to the fixed energy.
    pub loiter_tied: bool,
    pub coefficients: super::EnergyCoefficients,
    /// Fixed per-leg energy plus the loiter reserve.
    pub fixed_total: f64,
    /// Per-km energy at full payload.
    pub per_km_full_payload: f64,
    pub residuals: Vec<AnchorResidual>,
    pub max_abs_residual: f64,
    pub tolerance: f64,
    /// Set when any residual exceeds the tolerance.
    pub flagged: bool,
}

impl EnergyCalibration {
    pub fn apply(&self, spec: &VehicleSpec) -> VehicleSpec {
        VehicleSpec { energy: self.coefficients, ..spec.clone() }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("need at least 2 anchors, got {0}")]
    TooFewAnchors(usize),
    #[error("underdetermined anchor set; free directions over (e_fixed, e_per_km, p_loiter): {free:?}")]
    Underdetermined { free: Vec<Vec<f64>> },
    #[error("anchor {name}: {source}")]
    Anchor { name: String, source: super::EnergyError },
}

fn payload_weight(spec: &VehicleSpec, payload: u32) -> f64 {
    let (b, r) = (spec.energy.e_km_base, spec.energy.e_km_person);
    let full = b + spec.max_payload_persons as f64 * r;
    if full <= 0.0 {
        1.0
    } else {
        (b + payload as f64 * r) / full
    }
}

/// Energy of an anchor. An anchor without legs measures the reserve alone.
pub fn anchor_energy(spec: &VehicleSpec, a: &EnergyAnchor) -> Result<f64, CalibrationError> {
    let wrap = |source| CalibrationError::Anchor { name: a.name.clone(), source };
    if a.legs_km.is_empty() {
        if a.payload > spec.max_payload_persons {
            return Err(wrap(super::EnergyError::PayloadExceeded { payload: a.payload, max: spec.max_payload_persons }));
        }
        if !a.reserve_included {
            return Err(wrap(super::EnergyError::NoLegs));
        }
        return Ok(super::reserve_energy(spec) / spec.battery_capacity);
    }
    mission_energy(spec, &a.mission()).map_err(wrap)
}

/// Residuals of `spec`'s current coefficients against an anchor set.
pub fn residual_report(spec: &VehicleSpec, anchors: &[EnergyAnchor]) -> Result<Vec<AnchorResidual>, CalibrationError> {
    anchors
        .iter()
        .map(|a| {
            let fitted = anchor_energy(spec, a)?;
            Ok(AnchorResidual { name: a.name.clone(), target: a.target_fraction, fitted, residual: fitted - a.target_fraction })
        })
        .collect()
}

pub fn calibrate_energy_model(
    spec: &VehicleSpec,
    anchors: &[EnergyAnchor],
    mode: CalibrationMode,
    tolerance: f64,
) -> Result<EnergyCalibration, CalibrationError> {
    if anchors.len() < 2 {
        return Err(CalibrationError::TooFewAnchors(anchors.len()));
    }
    for a in anchors {
        anchor_energy(spec, a)?;
    }
    let c0 = spec.battery_capacity;
    let n = anchors.len();
    let mut full = DMatrix::zeros(n, 3);
    let mut b = DVector::zeros(n);
    for (i, a) in anchors.iter().enumerate() {
        let legs = a.legs_km.len() as f64;
        let dist: f64 = a.legs_km.iter().sum();
        full[(i, 0)] = legs;
        full[(i, 1)] = dist * payload_weight(spec, a.payload);
        full[(i, 2)] = if a.reserve_included { spec.reserve_loiter_min } else { 0.0 };
        b[i] = a.target_fraction * c0;
    }
    const RANK_TOL: f64 = 1e-10;
    let (e_fixed, per_km, p_loiter, tied) = if optim::rank(&full, RANK_TOL) == 3 {
        let x = optim::nnls(&full, &b);
        (x[0], x[1], x[2], false)
    } else {
        let mut tied = DMatrix::zeros(n, 2);
        for i in 0..n {
            tied[(i, 0)] = full[(i, 0)] + DEFAULT_LOITER_RATIO * full[(i, 2)];
            tied[(i, 1)] = full[(i, 1)];
        }
        if optim::rank(&tied, RANK_TOL) < 2 {
            let free = optim::null_space(&tied, RANK_TOL)
                .into_iter()
                .map(|v| vec![v[0], v[1], DEFAULT_LOITER_RATIO * v[0]])
                .collect();
            return Err(CalibrationError::Underdetermined { free });
        }
        let x = optim::nnls(&tied, &b);
        (x[0], x[1], DEFAULT_LOITER_RATIO * x[0], true)
    };

    let (base, person) = {
        let (b0, r0) = (spec.energy.e_km_base, spec.energy.e_km_person);
        let denom = b0 + spec.max_payload_persons as f64 * r0;
        if denom <= 0.0 {
            (per_km, 0.0)
        } else {
            (per_km * b0 / denom, per_km * r0 / denom)
        }
    };
    let coefficients = super::EnergyCoefficients {
        e_fixed,
        e_km_base: base,
        e_km_person: person,
        p_loiter: if tied { None } else { Some(p_loiter) },
    };
    let fitted_spec = VehicleSpec { energy: coefficients, ..spec.clone() };
    let residuals = residual_report(&fitted_spec, anchors)?;
    let max_abs_residual = residuals.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    Ok(EnergyCalibration {
        spec: spec.id.clone(),
        mode,
        loiter_tied: tied,
        coefficients,
        fixed_total: e_fixed + p_loiter * spec.reserve_loiter_min,
        per_km_full_payload: per_km,
        residuals,
        max_abs_residual,
        tolerance,
        flagged: max_abs_residual > tolerance,
    })
}

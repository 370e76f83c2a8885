//! Fitting (alpha_cal, beta0, beta1) to observed cycle-life ranges.

use super::life::{cycles_to_threshold_capped, FlightProfile, LifeError, LimitingFactor};
use super::AgingParams;
use crate::energy::{mission_energy, Mission, VehicleSpec};
use crate::optim::nelder_mead;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// One cycle-life range. The lower end is matched at full payload, the
/// upper end at a single person, linearly in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgingTarget {
    pub spec: String,
    pub flights_per_day: u32,
    pub payload: u32,
    pub threshold: f64,
    pub min_cycles: f64,
    pub max_cycles: f64,
}

impl AgingTarget {
    pub fn target_cycles(&self, spec: &VehicleSpec) -> f64 {
        let top = spec.max_payload_persons.max(2) as f64;
        let w = ((self.payload as f64 - 1.0) / (top - 1.0)).clamp(0.0, 1.0);
        self.max_cycles - w * (self.max_cycles - self.min_cycles)
    }

    pub fn profile(&self, spec: &VehicleSpec) -> FlightProfile {
        FlightProfile::design(spec, self.payload, self.flights_per_day)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResidual {
    pub spec: String,
    pub payload: u32,
    pub flights_per_day: u32,
    pub threshold: f64,
    pub dod: f64,
    pub target_cycles: f64,
    pub predicted_cycles: u64,
    pub rel_error: f64,
    pub calendar_loss: f64,
    pub cycle_loss: f64,
    pub limiting_factor: LimitingFactor,
}

/// Predicted and observed midpoint of one (spec, threshold) range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeCheck {
    pub spec: String,
    pub threshold: f64,
    pub min_cycles: f64,
    pub max_cycles: f64,
    pub predicted_min: u64,
    pub predicted_max: u64,
    pub predicted_mid: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingFit {
    pub params: AgingParams,
    pub objective: f64,
    pub evaluations: usize,
    pub residuals: Vec<TargetResidual>,
    pub ranges: Vec<RangeCheck>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("no aging targets")]
    Empty,
    #[error("need at least 3 targets spanning 2 distinct depths of discharge")]
    TooFewTargets,
    #[error("unknown spec {0}")]
    UnknownSpec(String),
    #[error("target {index}: {source}")]
    Target { index: usize, source: LifeError },
    #[error("dominance violated: {deeper} (dod {deeper_dod:.3}) expects more cycles than {shallower} (dod {shallower_dod:.3})")]
    DominanceViolated { deeper: String, deeper_dod: f64, shallower: String, shallower_dod: f64 },
    #[error("no parameters satisfy the cycle-dominance constraint; best residuals {residuals:?}")]
    Infeasible { residuals: Vec<TargetResidual> },
}

struct Prepared {
    spec: VehicleSpec,
    target: AgingTarget,
    profile: FlightProfile,
    goal: f64,
}

fn dominance_required(t: &AgingTarget, dod: f64) -> bool {
    t.flights_per_day >= 10 && dod >= 0.2
}

fn label(t: &AgingTarget) -> String {
    format!("{}@{}/p{}", t.spec, t.threshold, t.payload)
}

pub fn calibrate_aging(
    targets: &[AgingTarget],
    specs: &BTreeMap<String, VehicleSpec>,
    base: &AgingParams,
) -> Result<AgingFit, CalibrationError> {
    if targets.is_empty() {
        return Err(CalibrationError::Empty);
    }
    let mut prepared = Vec::with_capacity(targets.len());
    let mut dods = Vec::with_capacity(targets.len());
    for (index, t) in targets.iter().enumerate() {
        let spec = specs.get(&t.spec).ok_or_else(|| CalibrationError::UnknownSpec(t.spec.clone()))?.clone();
        let profile = t.profile(&spec);
        let dod = mission_energy(&spec, &Mission::design(&spec, t.payload).without_reserve())
            .map_err(|e| CalibrationError::Target { index, source: e.into() })?;
        dods.push(dod);
        let goal = t.target_cycles(&spec);
        prepared.push(Prepared { spec, target: t.clone(), profile, goal });
    }
    let mut distinct = dods.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if targets.len() < 3 || distinct.len() < 2 {
        return Err(CalibrationError::TooFewTargets);
    }
    for i in 0..prepared.len() {
        for j in 0..prepared.len() {
            let (a, b) = (&prepared[i], &prepared[j]);
            if (a.target.threshold - b.target.threshold).abs() < 1e-9 && dods[i] > dods[j] + 1e-9 && a.goal > b.goal {
                return Err(CalibrationError::DominanceViolated {
                    deeper: label(&a.target),
                    deeper_dod: dods[i],
                    shallower: label(&b.target),
                    shallower_dod: dods[j],
                });
            }
        }
    }
    let cap = prepared.iter().map(|p| p.goal).fold(0.0, f64::max) as u64 * 4 + 100;

    let with = |x: &[f64]| AgingParams { alpha_cal: x[0].exp(), beta0: x[1].exp(), beta1: x[2].exp(), ..*base };
    let objective = |x: &[f64]| -> f64 {
        let p = with(x);
        let mut sum = 0.0;
        for (k, pr) in prepared.iter().enumerate() {
            let life = match cycles_to_threshold_capped(&pr.spec, &p, &pr.profile, pr.target.threshold, cap) {
                Ok(l) => l,
                Err(_) => return f64::INFINITY,
            };
            let rel = (life.fractional_cycles - pr.goal) / pr.goal;
            sum += rel * rel;
            if dominance_required(&pr.target, dods[k]) && life.calendar_loss >= life.cycle_loss {
                let gap = (life.calendar_loss - life.cycle_loss) / life.cycle_loss.max(1e-6);
                sum += 10.0 * (1.0 + gap * gap);
            }
        }
        sum
    };

    let starts: [[f64; 3]; 4] = [[-7.0, -5.0, -4.0], [-8.0, -4.0, -3.0], [-6.0, -6.0, -3.0], [-5.0, -3.0, -6.0]];
    let mut evaluations = 0;
    let mut best: Option<crate::optim::Minimum> = None;
    for s in starts.iter() {
        let m = nelder_mead(objective, s, 0.5, 1500, 1e-12);
        evaluations += m.evaluations;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let mut best = best.expect("at least one start");
    // Restart from the best point to shake off a collapsed simplex.
    let polish = nelder_mead(objective, &best.x, 0.1, 1500, 1e-14);
    evaluations += polish.evaluations;
    if polish.value < best.value {
        best = polish;
    }

    let params = with(&best.x);
    let mut residuals = Vec::with_capacity(prepared.len());
    let mut dominance_ok = true;
    for (k, pr) in prepared.iter().enumerate() {
        let life = cycles_to_threshold_capped(&pr.spec, &params, &pr.profile, pr.target.threshold, cap)
            .map_err(|source| CalibrationError::Target { index: k, source })?;
        if dominance_required(&pr.target, dods[k]) && life.calendar_loss >= life.cycle_loss {
            dominance_ok = false;
        }
        residuals.push(TargetResidual {
            spec: pr.target.spec.clone(),
            payload: pr.target.payload,
            flights_per_day: pr.target.flights_per_day,
            threshold: pr.target.threshold,
            dod: dods[k],
            target_cycles: pr.goal,
            predicted_cycles: life.cycles,
            rel_error: (life.cycles as f64 - pr.goal) / pr.goal,
            calendar_loss: life.calendar_loss,
            cycle_loss: life.cycle_loss,
            limiting_factor: life.limiting_factor,
        });
    }
    if !dominance_ok {
        return Err(CalibrationError::Infeasible { residuals });
    }
    let ranges = range_checks(targets, &residuals);
    Ok(AgingFit { params, objective: best.value, evaluations, residuals, ranges })
}

/// Groups residuals by (spec, threshold) and compares the predicted midpoint of the range.
pub fn range_checks(targets: &[AgingTarget], residuals: &[TargetResidual]) -> Vec<RangeCheck> {
    let mut out: Vec<RangeCheck> = Vec::new();
    for (t, r) in targets.iter().zip(residuals) {
        let pos = out.iter().position(|c| c.spec == t.spec && (c.threshold - t.threshold).abs() < 1e-12);
        let c = match pos {
            Some(i) => &mut out[i],
            None => {
                out.push(RangeCheck {
                    spec: t.spec.clone(),
                    threshold: t.threshold,
                    min_cycles: t.min_cycles,
                    max_cycles: t.max_cycles,
                    predicted_min: u64::MAX,
                    predicted_max: 0,
                    predicted_mid: 0.0,
                    rel_error: 0.0,
                });
                out.last_mut().expect("just pushed")
            }
        };
        c.predicted_min = c.predicted_min.min(r.predicted_cycles);
        c.predicted_max = c.predicted_max.max(r.predicted_cycles);
    }
    for c in &mut out {
        c.predicted_mid = (c.predicted_min + c.predicted_max) as f64 / 2.0;
        let mid = (c.min_cycles + c.max_cycles) / 2.0;
        c.rel_error = (c.predicted_mid - mid) / mid;
    }
    out
}

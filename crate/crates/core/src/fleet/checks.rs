//! Post-run invariant scan over the engine state.

use super::{FlightStatus, RequestOutcome, Simulation};
use crate::sim::RecordKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub flights_checked: usize,
    pub fato_overlaps: usize,
    pub cancelled_slots_left: usize,
    pub separation_violations: usize,
    pub stand_overflows: usize,
    pub negative_soc_arrivals: usize,
    pub below_reserve_arrivals: usize,
    pub seat_violations: usize,
    pub committed_without_seat: usize,
    pub requests_without_single_outcome: usize,
}

impl InvariantReport {
    pub fn is_clean(&self) -> bool {
        *self == InvariantReport { flights_checked: self.flights_checked, ..Default::default() }
    }
}

impl Simulation<'_> {
    pub fn check_invariants(&self) -> InvariantReport {
        let mut r = InvariantReport { flights_checked: self.flights.len(), ..Default::default() };

        for table in &self.slots {
            let mut by_fato: BTreeMap<usize, Vec<&crate::network::Slot>> = BTreeMap::new();
            for s in table.slots() {
                by_fato.entry(s.fato).or_default().push(s);
                if self.flights.get(&s.owner).is_some_and(|f| f.status == FlightStatus::Cancelled) {
                    r.cancelled_slots_left += 1;
                }
            }
            for v in by_fato.values_mut() {
                v.sort_by_key(|s| s.t_start);
                r.fato_overlaps += v.windows(2).filter(|w| w[0].t_end + table.separation_s > w[1].t_start).count();
            }
        }

        let sep = self.corridors.separation_s;
        let mut entries: BTreeMap<(&str, crate::network::Direction), Vec<u64>> = BTreeMap::new();
        for f in self.flights.values().filter(|f| f.status != FlightStatus::Cancelled) {
            entries.entry((f.corridor.as_str(), f.direction)).or_default().push(f.plan.dep.t_start);
            if f.fixed_pax() > f.capacity {
                r.seat_violations += 1;
            }
            if !f.ferry && f.status != FlightStatus::Provisional && f.fixed.is_empty() {
                r.committed_without_seat += 1;
            }
        }
        for v in entries.values_mut() {
            v.sort_unstable();
            r.separation_violations += v.windows(2).filter(|w| w[1] - w[0] < sep).count();
        }

        for (pool, vd) in self.stands.iter().zip(&self.scenario.network.vertidromes) {
            if pool.peak() > vd.n_stands as usize {
                r.stand_overflows += 1;
            }
        }

        for (_, soc, reserve) in &self.arrivals {
            if *soc < 0.0 {
                r.negative_soc_arrivals += 1;
            }
            if *soc < reserve - 1e-9 {
                r.below_reserve_arrivals += 1;
            }
        }

        // Every seated request sits on exactly one flight.
        let mut seated: BTreeMap<u64, usize> = BTreeMap::new();
        for f in self.flights.values().filter(|f| f.status != FlightStatus::Cancelled) {
            for (q, _) in &f.fixed {
                *seated.entry(*q).or_default() += 1;
            }
        }
        for (q, o) in &self.outcomes {
            let expect = matches!(o, RequestOutcome::Pooled { .. } | RequestOutcome::Accepted { .. }) as usize;
            if seated.get(q).copied().unwrap_or(0) != expect {
                r.seat_violations += 1;
            }
        }

        let mut outcomes: BTreeMap<u64, usize> = BTreeMap::new();
        for rec in self.log.of_kind(RecordKind::RequestOutcome) {
            *outcomes.entry(rec.request.unwrap_or(u64::MAX)).or_default() += 1;
        }
        for rec in self.log.of_kind(RecordKind::RequestArrival) {
            if outcomes.get(&rec.request.unwrap_or(u64::MAX)).copied() != Some(1) {
                r.requests_without_single_outcome += 1;
            }
        }
        r
    }
}

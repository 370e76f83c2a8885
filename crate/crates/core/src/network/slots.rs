//! FATO slot booking: earliest conflict-free movement across all FATOs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Movement {
    Arrival,
    Departure,
}

impl Movement {
    pub fn as_str(self) -> &'static str {
        match self {
            Movement::Arrival => "arrival",
            Movement::Departure => "departure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub vertidrome: usize,
    pub fato: usize,
    pub movement: Movement,
    pub t_start: u64,
    pub t_end: u64,
    /// Owning flight.
    pub owner: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SlotError {
    #[error("no slot at or after t={t_earliest} before horizon {horizon}")]
    HorizonExhausted { t_earliest: u64, horizon: u64 },
    #[error("every FATO is held by a vehicle waiting for a stand")]
    AllHeld,
}

/// Bookings for one vertidrome. Each FATO keeps its slots sorted by start.
#[derive(Debug, Clone)]
pub struct SlotTable {
    pub vertidrome: usize,
    pub occupancy_s: u64,
    pub separation_s: u64,
    pub horizon: u64,
    fatos: Vec<Vec<Slot>>,
    /// Vehicle sitting on each FATO while it waits for a stand.
    held: Vec<Option<u64>>,
}

impl SlotTable {
    pub fn new(vertidrome: usize, n_fato: usize, occupancy_s: u64, separation_s: u64, horizon: u64) -> Self {
        SlotTable { vertidrome, occupancy_s, separation_s, horizon, fatos: vec![Vec::new(); n_fato.max(1)], held: vec![None; n_fato.max(1)] }
    }

    /// Earliest feasible start on one FATO at or after `t`.
    fn earliest_on(&self, fato: usize, t: u64) -> u64 {
        let (occ, sep) = (self.occupancy_s, self.separation_s);
        let slots = &self.fatos[fato];
        let first = slots.partition_point(|s| s.t_end + sep <= t);
        let mut t = t;
        for s in &slots[first..] {
            if s.t_end + sep <= t {
                continue;
            }
            if t + occ + sep <= s.t_start {
                break;
            }
            t = s.t_end + sep;
        }
        t
    }

    /// Earliest (fato, start) without booking. Ties go to the lower FATO.
    pub fn probe(&self, t_earliest: u64) -> Result<(usize, u64), SlotError> {
        let best = (0..self.fatos.len()).map(|f| (self.earliest_on(f, t_earliest), f)).min().expect("at least one FATO");
        if best.0 > self.horizon {
            return Err(SlotError::HorizonExhausted { t_earliest, horizon: self.horizon });
        }
        Ok((best.1, best.0))
    }

    /// Like `probe`, but arrivals skip FATOs held by a waiting vehicle.
    pub fn probe_for(&self, movement: Movement, t_earliest: u64) -> Result<(usize, u64), SlotError> {
        if movement == Movement::Departure || self.held.iter().all(|h| h.is_none()) {
            return self.probe(t_earliest);
        }
        let best = (0..self.fatos.len())
            .filter(|f| self.held[*f].is_none())
            .map(|f| (self.earliest_on(f, t_earliest), f))
            .min()
            .ok_or(SlotError::AllHeld)?;
        if best.0 > self.horizon {
            return Err(SlotError::HorizonExhausted { t_earliest, horizon: self.horizon });
        }
        Ok((best.1, best.0))
    }

    /// Marks the lowest free FATO as held by `vehicle`. None when all are held.
    pub fn hold(&mut self, vehicle: u64) -> Option<usize> {
        let f = self.held.iter().position(|h| h.is_none())?;
        self.held[f] = Some(vehicle);
        Some(f)
    }

    pub fn release_hold(&mut self, vehicle: u64) -> bool {
        match self.held.iter().position(|h| *h == Some(vehicle)) {
            Some(f) => {
                self.held[f] = None;
                true
            }
            None => false,
        }
    }

    pub fn n_fato(&self) -> usize {
        self.fatos.len()
    }

    /// Books a start returned by `probe`.
    pub fn book(&mut self, fato: usize, t_start: u64, movement: Movement, owner: u64) -> Slot {
        debug_assert_eq!(self.earliest_on(fato, t_start), t_start, "booking conflicts");
        let slot = Slot { vertidrome: self.vertidrome, fato, movement, t_start, t_end: t_start + self.occupancy_s, owner };
        let v = &mut self.fatos[fato];
        let at = v.partition_point(|s| s.t_start < t_start);
        v.insert(at, slot.clone());
        slot
    }

    pub fn request_slot(&mut self, movement: Movement, t_earliest: u64, owner: u64) -> Result<Slot, SlotError> {
        let (fato, t) = self.probe_for(movement, t_earliest)?;
        Ok(self.book(fato, t, movement, owner))
    }

    /// Drops every slot held by `owner`; returns how many were released.
    pub fn release(&mut self, owner: u64) -> usize {
        let mut n = 0;
        for v in &mut self.fatos {
            let before = v.len();
            v.retain(|s| s.owner != owner);
            n += before - v.len();
        }
        n
    }

    pub fn slots(&self) -> impl Iterator<Item = &Slot> {
        self.fatos.iter().flatten()
    }
}

/// True when a set of slots on one FATO respects occupancy and separation.
pub fn slots_are_separated(slots: &[Slot], separation_s: u64) -> bool {
    let mut v: Vec<&Slot> = slots.iter().collect();
    v.sort_by_key(|s| s.t_start);
    v.windows(2).all(|w| w[0].t_end + separation_s <= w[1].t_start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(table: &SlotTable, t_earliest: u64) -> (usize, u64) {
        let (occ, sep) = (table.occupancy_s, table.separation_s);
        for t in t_earliest.. {
            for (f, slots) in table.fatos.iter().enumerate() {
                let ok = slots.iter().all(|s| t >= s.t_end + sep || t + occ + sep <= s.t_start);
                if ok {
                    return (f, t);
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn empty_table_grants_requested_time() {
        let mut t = SlotTable::new(0, 2, 60, 90, 86_400);
        let s = t.request_slot(Movement::Departure, 500, 1).unwrap();
        assert_eq!((s.fato, s.t_start, s.t_end), (0, 500, 560));
    }

    #[test]
    fn single_fato_two_requests() {
        let mut t = SlotTable::new(0, 1, 60, 90, 86_400);
        let a = t.request_slot(Movement::Departure, 0, 1).unwrap();
        let b = t.request_slot(Movement::Arrival, 0, 2).unwrap();
        assert_eq!((a.t_start, b.t_start), (0, 150));
        assert_eq!(brute_force(&t, 0), (0, 300));
    }

    #[test]
    fn saturated_fato_capacity() {
        let mut t = SlotTable::new(0, 1, 60, 90, 86_400);
        let mut n = 0;
        while t.request_slot(Movement::Departure, 0, n).unwrap().t_start < 3600 {
            n += 1;
        }
        assert_eq!(n, 24);
        let mut t2 = SlotTable::new(0, 3, 60, 90, 86_400);
        let mut m = 0;
        while t2.request_slot(Movement::Departure, 0, m).unwrap().t_start < 3600 {
            m += 1;
        }
        assert_eq!(m, 72);
    }

    #[test]
    fn horizon_is_enforced() {
        let mut t = SlotTable::new(0, 1, 60, 90, 100);
        t.request_slot(Movement::Departure, 0, 1).unwrap();
        assert!(t.request_slot(Movement::Departure, 0, 2).is_err());
    }

    #[test]
    fn release_frees_the_slot() {
        let mut t = SlotTable::new(0, 1, 60, 90, 86_400);
        t.request_slot(Movement::Departure, 100, 7).unwrap();
        assert_eq!(t.release(7), 1);
        assert_eq!(t.request_slot(Movement::Departure, 100, 8).unwrap().t_start, 100);
    }

    #[test]
    fn held_fato_blocks_arrivals_only() {
        let mut t = SlotTable::new(0, 1, 60, 90, 86_400);
        assert_eq!(t.hold(42), Some(0));
        assert_eq!(t.hold(43), None);
        assert_eq!(t.request_slot(Movement::Arrival, 0, 1), Err(SlotError::AllHeld));
        assert_eq!(t.request_slot(Movement::Departure, 0, 2).unwrap().t_start, 0);
        assert!(t.release_hold(42));
        assert_eq!(t.request_slot(Movement::Arrival, 0, 3).unwrap().t_start, 150);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn matches_brute_force(
            n_fato in 1usize..4,
            occ in 10u64..90,
            sep in 1u64..120,
            requests in proptest::collection::vec(0u64..1500, 1..25),
            probe in 0u64..2000,
        ) {
            let mut t = SlotTable::new(0, n_fato, occ, sep, 1_000_000);
            for (i, r) in requests.iter().enumerate() {
                let expect = brute_force(&t, *r);
                let got = t.request_slot(Movement::Departure, *r, i as u64).unwrap();
                prop_assert_eq!((got.fato, got.t_start), expect);
            }
            prop_assert_eq!(t.probe(probe).unwrap(), brute_force(&t, probe));
            for f in &t.fatos {
                prop_assert!(slots_are_separated(f, sep));
            }
        }
    }
}

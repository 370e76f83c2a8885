//! Stand (parking and charging) occupancy with a FIFO wait queue.

use std::collections::{BTreeSet, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandGrant {
    Granted,
    /// Position in the queue, zero-based.
    Queued(usize),
}

#[derive(Debug, Clone, Default)]
pub struct StandPool {
    pub capacity: usize,
    occupants: BTreeSet<u64>,
    queue: VecDeque<u64>,
    peak: usize,
}

impl StandPool {
    pub fn new(capacity: usize) -> Self {
        StandPool { capacity, ..Default::default() }
    }

    pub fn acquire(&mut self, vehicle: u64) -> StandGrant {
        if self.occupants.contains(&vehicle) {
            return StandGrant::Granted;
        }
        if self.queue.is_empty() && self.occupants.len() < self.capacity {
            self.occupants.insert(vehicle);
            self.peak = self.peak.max(self.occupants.len());
            StandGrant::Granted
        } else {
            self.queue.push_back(vehicle);
            StandGrant::Queued(self.queue.len() - 1)
        }
    }

    /// Frees `vehicle`'s stand; returns the queued vehicle that takes it over.
    pub fn release(&mut self, vehicle: u64) -> Option<u64> {
        if !self.occupants.remove(&vehicle) {
            return None;
        }
        let next = self.queue.pop_front()?;
        self.occupants.insert(next);
        self.peak = self.peak.max(self.occupants.len());
        Some(next)
    }

    pub fn occupied(&self) -> usize {
        self.occupants.len()
    }

    pub fn waiting(&self) -> usize {
        self.queue.len()
    }

    pub fn peak(&self) -> usize {
        self.peak
    }

    pub fn holds(&self, vehicle: u64) -> bool {
        self.occupants.contains(&vehicle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grants_until_full_then_fifo() {
        let mut p = StandPool::new(2);
        assert_eq!(p.acquire(1), StandGrant::Granted);
        assert_eq!(p.acquire(2), StandGrant::Granted);
        assert_eq!(p.acquire(3), StandGrant::Queued(0));
        assert_eq!(p.acquire(4), StandGrant::Queued(1));
        assert_eq!(p.release(2), Some(3));
        assert_eq!(p.release(1), Some(4));
        assert_eq!(p.occupied(), 2);
        assert_eq!(p.peak(), 2);
        assert_eq!(p.release(9), None);
    }
}

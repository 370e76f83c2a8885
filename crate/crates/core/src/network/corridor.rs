//! Temporal separation of corridor entries.
//!
//! Both directions of an OD pair share a corridor but fly in separate
//! altitude layers, so only same-direction entries are compared.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Default)]
pub struct CorridorTable {
    pub separation_s: u64,
    entries: BTreeMap<(String, Direction), Vec<(u64, u64)>>,
}

impl CorridorTable {
    pub fn new(separation_s: u64) -> Self {
        CorridorTable { separation_s, entries: BTreeMap::new() }
    }

    /// Smallest ground delay that puts the entry at least `separation_s` from every active one.
    pub fn deconflict(&self, corridor: &str, dir: Direction, t_entry: u64) -> u64 {
        let sep = self.separation_s;
        let Some(list) = self.entries.get(&(corridor.to_string(), dir)) else {
            return 0;
        };
        let first = list.partition_point(|(e, _)| e + sep <= t_entry);
        let mut t = t_entry;
        for (e, _) in &list[first..] {
            if e + sep <= t {
                continue;
            }
            if t + sep <= *e {
                break;
            }
            t = e + sep;
        }
        t - t_entry
    }

    pub fn insert(&mut self, corridor: &str, dir: Direction, t_entry: u64, flight: u64) {
        let v = self.entries.entry((corridor.to_string(), dir)).or_default();
        let at = v.partition_point(|(e, _)| *e <= t_entry);
        v.insert(at, (t_entry, flight));
    }

    pub fn release(&mut self, flight: u64) {
        for v in self.entries.values_mut() {
            v.retain(|(_, f)| *f != flight);
        }
    }
}

/// Checks pairwise separation of `(corridor, direction, t_entry)` records.
pub fn entries_separated(entries: &[(String, Direction, u64)], sep: u64) -> bool {
    let mut by: BTreeMap<(&str, Direction), Vec<u64>> = BTreeMap::new();
    for (c, d, t) in entries {
        by.entry((c.as_str(), *d)).or_default().push(*t);
    }
    by.values_mut().all(|v| {
        v.sort_unstable();
        v.windows(2).all(|w| w[1] - w[0] >= sep)
    })
}

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Sub};

pub const SECONDS_PER_DAY: u64 = 86_400;

/// Whole seconds since scenario start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn secs(self) -> u64 {
        self.0
    }

    pub fn from_minutes(m: u64) -> Self {
        SimTime(m * 60)
    }

    /// Rounds a non-negative duration in seconds up to the next whole tick.
    pub fn ceil_secs(s: f64) -> u64 {
        if s <= 0.0 {
            0
        } else {
            s.ceil() as u64
        }
    }

    pub fn day(self) -> u64 {
        self.0 / SECONDS_PER_DAY
    }

    pub fn saturating_sub(self, other: SimTime) -> u64 {
        self.0.saturating_sub(other.0)
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: u64) -> SimTime {
        SimTime(self.0 + rhs)
    }
}

impl Sub<SimTime> for SimTime {
    type Output = u64;
    fn sub(self, rhs: SimTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        write!(f, "d{}+{:02}:{:02}:{:02}", s / SECONDS_PER_DAY, (s % SECONDS_PER_DAY) / 3600, (s % 3600) / 60, s % 60)
    }
}

//! Event queue with a total, deterministic processing order.
//!
//! Events are popped by `(t, kind rank, id)`. The rank order frees
//! resources before consuming them when several things happen on the
//! same tick: arrivals, charge completions and stand releases go first,
//! departures next, new requests after that.

use super::time::SimTime;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    RequestArrival,
    FlightDeparture,
    FlightArrival,
    ChargeComplete,
    BatteryReplaced,
    StandAcquired,
    StandReleased,
    RepositionDispatched,
    CalendarTick,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::RequestArrival,
        EventKind::FlightDeparture,
        EventKind::FlightArrival,
        EventKind::ChargeComplete,
        EventKind::BatteryReplaced,
        EventKind::StandAcquired,
        EventKind::StandReleased,
        EventKind::RepositionDispatched,
        EventKind::CalendarTick,
    ];

    /// Same-tick processing rank; lower goes first.
    pub fn rank(self) -> u8 {
        match self {
            EventKind::FlightArrival => 0,
            EventKind::ChargeComplete => 1,
            EventKind::StandReleased => 2,
            EventKind::FlightDeparture => 3,
            EventKind::RequestArrival => 4,
            EventKind::StandAcquired => 5,
            EventKind::BatteryReplaced => 6,
            EventKind::RepositionDispatched => 7,
            EventKind::CalendarTick => 8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::RequestArrival => "RequestArrival",
            EventKind::FlightDeparture => "FlightDeparture",
            EventKind::FlightArrival => "FlightArrival",
            EventKind::ChargeComplete => "ChargeComplete",
            EventKind::BatteryReplaced => "BatteryReplaced",
            EventKind::StandAcquired => "StandAcquired",
            EventKind::StandReleased => "StandReleased",
            EventKind::RepositionDispatched => "RepositionDispatched",
            EventKind::CalendarTick => "CalendarTick",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown event kind `{0}`")]
pub struct UnknownEventKind(pub String);

impl FromStr for EventKind {
    type Err = UnknownEventKind;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownEventKind(s.to_string()))
    }
}

pub type EventId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub t: SimTime,
    pub kind: EventKind,
}

impl Event {
    pub fn order_key(&self) -> (SimTime, u8, EventId) {
        (self.t, self.kind.rank(), self.id)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueueError {
    #[error("causality violation: event at {event} scheduled while clock is {clock}")]
    Causality { event: SimTime, clock: SimTime },
}

struct Entry<P> {
    event: Event,
    payload: P,
}

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.event.order_key() == other.event.order_key()
    }
}
impl<P> Eq for Entry<P> {}
impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<P> Ord for Entry<P> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.event.order_key().cmp(&other.event.order_key())
    }
}

/// Min-queue of events carrying an arbitrary payload.
pub struct EventQueue<P> {
    heap: BinaryHeap<Reverse<Entry<P>>>,
    clock: SimTime,
    next_id: EventId,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        EventQueue { heap: BinaryHeap::new(), clock: SimTime::ZERO, next_id: 0 }
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, t: SimTime, kind: EventKind, payload: P) -> Result<EventId, QueueError> {
        if t < self.clock {
            return Err(QueueError::Causality { event: t, clock: self.clock });
        }
        let id = self.next_id;
        self.next_id += 1;
        self.heap.push(Reverse(Entry { event: Event { id, t, kind }, payload }));
        Ok(id)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.0.event.t)
    }

    /// Pops the next event if it is due at or before `limit`, advancing the clock.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<(Event, P)> {
        if self.peek_time()? > limit {
            return None;
        }
        let Reverse(entry) = self.heap.pop()?;
        self.clock = entry.event.t;
        Some((entry.event, entry.payload))
    }

    pub fn pop(&mut self) -> Option<(Event, P)> {
        self.pop_until(SimTime(u64::MAX))
    }

    /// Moves the clock forward without popping; used when a run stops at a horizon.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.clock {
            self.clock = t;
        }
    }
}

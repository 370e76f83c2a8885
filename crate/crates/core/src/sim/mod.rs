//! Event kernel, random streams, simulation time, scenarios and the run log.

pub mod event;
pub mod log;
pub mod rng;
pub mod scenario;
pub mod time;

pub use event::{Event, EventId, EventKind, EventQueue, QueueError};
pub use log::{EventLog, LogRecord, RecordKind};
pub use scenario::{load_scenario, load_scenario_file, Scenario, ScenarioDoc, ScenarioError};
pub use time::{SimTime, SECONDS_PER_DAY};

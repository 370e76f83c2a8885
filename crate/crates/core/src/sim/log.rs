//! Append-only run log with CSV and newline-delimited JSON export.

use super::event::EventKind;
use super::time::SimTime;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io;

/// Everything the log can hold: the queue's event kinds plus the
/// bookkeeping records written by the request pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RecordKind {
    RequestArrival,
    FlightDeparture,
    FlightArrival,
    ChargeComplete,
    BatteryReplaced,
    StandAcquired,
    StandReleased,
    RepositionDispatched,
    CalendarTick,
    PoolCheck,
    FlightScheduled,
    ModeOffer,
    RequestOutcome,
    FlightCancelled,
    ApronCongestion,
    FlightCost,
    Anomaly,
}

impl From<EventKind> for RecordKind {
    fn from(k: EventKind) -> Self {
        match k {
            EventKind::RequestArrival => RecordKind::RequestArrival,
            EventKind::FlightDeparture => RecordKind::FlightDeparture,
            EventKind::FlightArrival => RecordKind::FlightArrival,
            EventKind::ChargeComplete => RecordKind::ChargeComplete,
            EventKind::BatteryReplaced => RecordKind::BatteryReplaced,
            EventKind::StandAcquired => RecordKind::StandAcquired,
            EventKind::StandReleased => RecordKind::StandReleased,
            EventKind::RepositionDispatched => RecordKind::RepositionDispatched,
            EventKind::CalendarTick => RecordKind::CalendarTick,
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One log line. Columns that do not apply to a kind stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub id: u64,
    pub t: u64,
    pub kind: RecordKind,
    pub request: Option<u64>,
    pub flight: Option<u64>,
    pub vehicle: Option<String>,
    pub vertidrome: Option<String>,
    pub soc_before: Option<f64>,
    pub soc_after: Option<f64>,
    pub capacity_fraction: Option<f64>,
    pub value: Option<f64>,
    /// `key=value` pairs separated by `;`.
    pub detail: String,
}

impl LogRecord {
    pub fn new(t: SimTime, kind: impl Into<RecordKind>) -> Self {
        LogRecord {
            id: 0,
            t: t.0,
            kind: kind.into(),
            request: None,
            flight: None,
            vehicle: None,
            vertidrome: None,
            soc_before: None,
            soc_after: None,
            capacity_fraction: None,
            value: None,
            detail: String::new(),
        }
    }

    pub fn request(mut self, r: u64) -> Self {
        self.request = Some(r);
        self
    }

    pub fn flight(mut self, f: u64) -> Self {
        self.flight = Some(f);
        self
    }

    pub fn vehicle(mut self, v: &str) -> Self {
        self.vehicle = Some(v.to_string());
        self
    }

    pub fn vertidrome(mut self, v: &str) -> Self {
        self.vertidrome = Some(v.to_string());
        self
    }

    pub fn soc(mut self, before: f64, after: f64) -> Self {
        self.soc_before = Some(before);
        self.soc_after = Some(after);
        self
    }

    pub fn capacity(mut self, c: f64) -> Self {
        self.capacity_fraction = Some(c);
        self
    }

    pub fn value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    /// Appends `key=value` to the detail field.
    pub fn kv(mut self, key: &str, value: impl fmt::Display) -> Self {
        if !self.detail.is_empty() {
            self.detail.push(';');
        }
        let _ = write!(self.detail, "{key}={value}");
        self
    }

    pub fn detail_map(&self) -> BTreeMap<&str, &str> {
        parse_detail(&self.detail)
    }

    /// Detail value parsed as `T`.
    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Option<T> {
        self.detail_map().get(key).and_then(|v| v.parse().ok())
    }
}

pub fn parse_detail(s: &str) -> BTreeMap<&str, &str> {
    s.split(';').filter_map(|kv| kv.split_once('=')).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    records: Vec<LogRecord>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record, stamping the next id. Records never go back in time.
    pub fn push(&mut self, mut rec: LogRecord) -> u64 {
        debug_assert!(self.records.last().is_none_or(|r| r.t <= rec.t), "log went back in time");
        let id = self.records.len() as u64;
        rec.id = id;
        self.records.push(rec);
        id
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_kind(&self, kind: RecordKind) -> impl Iterator<Item = &LogRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn from_records(records: Vec<LogRecord>) -> Self {
        EventLog { records }
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(r)?;
        }
        if self.records.is_empty() {
            out.write_record(CSV_HEADER)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Self, csv::Error> {
        let mut rdr = csv::Reader::from_reader(r);
        let records = rdr.deserialize().collect::<Result<Vec<LogRecord>, _>>()?;
        Ok(EventLog { records })
    }

    pub fn write_jsonl<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 12] =
    ["id", "t", "kind", "request", "flight", "vehicle", "vertidrome", "soc_before", "soc_after", "capacity_fraction", "value", "detail"];

//! Reading and writing the CSV / JSON-lines trip format.
//!
//! Columns: `trip_id,timestamp,lat,lon,speed_kmh,heading_deg,machine_id,
//! driver_id,task_id,excavator_id,event`. The first five are required. Rows
//! that fail to parse are reported and skipped.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use chrono::{DateTime, NaiveDateTime};
use serde_json::Value;

use super::{EventKind, GpsUpdate, Trip, TripEvent};
use crate::error::{Error, Result};
use crate::geo::{GeoCoord, LocalCoord};

pub const COLUMNS: [&str; 11] = [
    "trip_id",
    "timestamp",
    "lat",
    "lon",
    "speed_kmh",
    "heading_deg",
    "machine_id",
    "driver_id",
    "task_id",
    "excavator_id",
    "event",
];
const REQUIRED: [&str; 5] = ["trip_id", "timestamp", "lat", "lon", "speed_kmh"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(InputFormat::Csv),
            "jsonl" | "ndjson" => Some(InputFormat::Jsonl),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MalformedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    /// In order of first appearance of each trip id.
    pub trips: Vec<Trip>,
    pub malformed: Vec<MalformedRow>,
}

#[derive(Debug, Default)]
struct Row {
    trip_id: String,
    timestamp: f64,
    lat: f64,
    lon: f64,
    speed_kmh: f64,
    heading_deg: Option<f64>,
    machine_id: String,
    driver_id: String,
    task_id: String,
    excavator_id: Option<String>,
    event: Option<EventKind>,
}

pub fn parse_updates<R: Read>(reader: R, format: InputFormat) -> Result<ParseReport> {
    let mut builder = TripBuilder::default();
    match format {
        InputFormat::Csv => parse_csv(reader, &mut builder)?,
        InputFormat::Jsonl => parse_jsonl(reader, &mut builder)?,
    }
    Ok(builder.finish())
}

fn parse_csv<R: Read>(reader: R, builder: &mut TripBuilder) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unreadable header: {e}"),
            })
        }
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        // empty stream
        return Ok(());
    }
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    for name in REQUIRED {
        if !position.contains_key(name) {
            return Err(Error::Parse {
                line: 1,
                message: format!("missing required column `{name}`"),
            });
        }
    }
    for h in headers.iter() {
        if !COLUMNS.contains(&h) {
            log::warn!("ignoring unknown column `{h}`");
        }
    }
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(Error::Parse {
                        line,
                        message: e.to_string(),
                    });
                }
                builder.malformed(line, e.to_string());
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |name: &str| position.get(name).and_then(|&i| record.get(i)).unwrap_or("");
        match row_from_fields(field) {
            Ok(row) => builder.push(row),
            Err(reason) => builder.malformed(line, reason),
        }
    }
    Ok(())
}

fn parse_jsonl<R: Read>(reader: R, builder: &mut TripBuilder) -> Result<()> {
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                builder.malformed(line_no, e.to_string());
                continue;
            }
        };
        let Some(obj) = value.as_object() else {
            builder.malformed(line_no, "not a JSON object".into());
            continue;
        };
        let texts: HashMap<&str, String> = COLUMNS
            .iter()
            .filter_map(|&k| {
                let v = obj.get(k)?;
                let s = match v {
                    Value::Null => return None,
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                Some((k, s))
            })
            .collect();
        match row_from_fields(|name| texts.get(name).map_or("", String::as_str)) {
            Ok(row) => builder.push(row),
            Err(reason) => builder.malformed(line_no, reason),
        }
    }
    Ok(())
}

fn row_from_fields<'a>(field: impl Fn(&str) -> &'a str) -> std::result::Result<Row, String> {
    let number = |name: &str| -> std::result::Result<f64, String> {
        let raw = field(name);
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad `{name}` value {raw:?}"))
    };
    let optional = |name: &str| Some(field(name).to_string()).filter(|s| !s.is_empty());

    let trip_id = field("trip_id").to_string();
    if trip_id.is_empty() {
        return Err("empty trip_id".into());
    }
    let timestamp = parse_timestamp(field("timestamp"))?;
    let speed_kmh = number("speed_kmh")?;
    if speed_kmh < 0.0 {
        return Err(format!("negative speed {speed_kmh}"));
    }
    let heading_deg = match field("heading_deg") {
        "" => None,
        _ => Some(number("heading_deg")?),
    };
    let event = match field("event") {
        "" => None,
        "load" => Some(EventKind::Load),
        "dropoff" => Some(EventKind::Dropoff),
        other => return Err(format!("unknown event {other:?}")),
    };
    Ok(Row {
        trip_id,
        timestamp,
        lat: number("lat")?,
        lon: number("lon")?,
        speed_kmh,
        heading_deg,
        machine_id: field("machine_id").to_string(),
        driver_id: field("driver_id").to_string(),
        task_id: field("task_id").to_string(),
        excavator_id: optional("excavator_id"),
        event,
    })
}

/// Epoch seconds, RFC 3339, or a naive ISO-8601 datetime taken as UTC.
fn parse_timestamp(raw: &str) -> std::result::Result<f64, String> {
    if let Ok(v) = raw.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    let from_dt = |secs: i64, nanos: u32| secs as f64 + f64::from(nanos) * 1e-9;
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Ok(from_dt(dt.timestamp(), dt.timestamp_subsec_nanos()));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            let utc = dt.and_utc();
            return Ok(from_dt(utc.timestamp(), utc.timestamp_subsec_nanos()));
        }
    }
    Err(format!("bad `timestamp` value {raw:?}"))
}

#[derive(Default)]
struct TripBuilder {
    trips: Vec<Trip>,
    by_id: HashMap<String, usize>,
    malformed: Vec<MalformedRow>,
}

impl TripBuilder {
    fn malformed(&mut self, line: usize, reason: String) {
        log::debug!("skipping line {line}: {reason}");
        self.malformed.push(MalformedRow { line, reason });
    }

    fn push(&mut self, row: Row) {
        let slot = match self.by_id.get(&row.trip_id) {
            Some(&i) => i,
            None => {
                let mut trip = Trip::new(row.trip_id.clone());
                trip.machine_id = row.machine_id.clone();
                trip.driver_id = row.driver_id.clone();
                trip.task_id = row.task_id.clone();
                trip.excavator_id = row.excavator_id.clone();
                self.by_id.insert(row.trip_id.clone(), self.trips.len());
                self.trips.push(trip);
                self.trips.len() - 1
            }
        };
        let trip = &mut self.trips[slot];
        if trip.excavator_id.is_none() {
            trip.excavator_id = row.excavator_id;
        }
        let geo = GeoCoord::new(row.lat, row.lon);
        let event = TripEvent {
            timestamp: row.timestamp,
            geo,
            local: LocalCoord::default(),
        };
        match row.event {
            Some(EventKind::Load) if trip.load_event.is_none() => trip.load_event = Some(event),
            Some(EventKind::Dropoff) if trip.dropoff_event.is_none() => trip.dropoff_event = Some(event),
            _ => {}
        }
        trip.updates.push(GpsUpdate {
            timestamp: row.timestamp,
            geo,
            local: LocalCoord::default(),
            speed_kmh: row.speed_kmh,
            raw_heading_deg: row.heading_deg,
        });
    }

    fn finish(mut self) -> ParseReport {
        for trip in &mut self.trips {
            trip.sort_updates();
        }
        ParseReport {
            trips: self.trips,
            malformed: self.malformed,
        }
    }
}

fn event_at(trip: &Trip, u: &GpsUpdate) -> &'static str {
    let hit = |e: &Option<TripEvent>| e.is_some_and(|e| e.timestamp == u.timestamp && e.geo == u.geo);
    if hit(&trip.load_event) {
        "load"
    } else if hit(&trip.dropoff_event) {
        "dropoff"
    } else {
        ""
    }
}

/// Rows of a trip in time order, stationary fixes included.
fn rows(trip: &Trip) -> Vec<&GpsUpdate> {
    let mut all: Vec<&GpsUpdate> = trip.updates.iter().chain(trip.stationary.iter()).collect();
    all.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    all
}

pub fn write_csv<W: Write>(trips: &[Trip], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COLUMNS)?;
    for trip in trips {
        for u in rows(trip) {
            w.write_record([
                trip.trip_id.clone(),
                u.timestamp.to_string(),
                u.geo.lat.to_string(),
                u.geo.lon.to_string(),
                u.speed_kmh.to_string(),
                u.raw_heading_deg.map(|h| h.to_string()).unwrap_or_default(),
                trip.machine_id.clone(),
                trip.driver_id.clone(),
                trip.task_id.clone(),
                trip.excavator_id.clone().unwrap_or_default(),
                event_at(trip, u).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn write_jsonl<W: Write>(trips: &[Trip], mut writer: W) -> Result<()> {
    for trip in trips {
        for u in rows(trip) {
            let mut obj = serde_json::Map::new();
            obj.insert("trip_id".into(), Value::from(trip.trip_id.clone()));
            obj.insert("timestamp".into(), Value::from(u.timestamp));
            obj.insert("lat".into(), Value::from(u.geo.lat));
            obj.insert("lon".into(), Value::from(u.geo.lon));
            obj.insert("speed_kmh".into(), Value::from(u.speed_kmh));
            if let Some(h) = u.raw_heading_deg {
                obj.insert("heading_deg".into(), Value::from(h));
            }
            obj.insert("machine_id".into(), Value::from(trip.machine_id.clone()));
            obj.insert("driver_id".into(), Value::from(trip.driver_id.clone()));
            obj.insert("task_id".into(), Value::from(trip.task_id.clone()));
            if let Some(x) = &trip.excavator_id {
                obj.insert("excavator_id".into(), Value::from(x.clone()));
            }
            obj.insert("event".into(), Value::from(event_at(trip, u)));
            serde_json::to_writer(&mut writer, &Value::Object(obj))?;
            writer.write_all(b"\n").map_err(|e| Error::io("<jsonl output>", e))?;
        }
    }
    Ok(())
}

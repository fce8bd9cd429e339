//! External data schemas, log parsing and model persistence.
//!
//! Interchange is JSONL for sensor, annotation and query logs and CSV for ad
//! events and daily patient counts. Timestamps are UTC milliseconds.

mod artifact;
mod parse;

use std::cmp::Ordering;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use unicode_normalization::UnicodeNormalization;

pub use artifact::{load_model, save_model, Model, ModelArtifact, ModelKind, MODEL_VERSION};
pub use parse::{
    group_streams, normalize_query_events, parse_ad_csv, parse_annotations, parse_holidays,
    parse_patient_csv, parse_queries, parse_sensor_log, parse_sensor_str, write_ad_csv,
    write_annotations, write_patient_csv, write_queries, write_sensor_log, Parsed, MALFORMED_LIMIT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Accelerometer,
    Barometer,
    Battery,
    Location,
    Network,
    Weather,
    Screen,
}

impl SensorKind {
    /// Feature-block order.
    pub const ALL: [SensorKind; 7] = [
        SensorKind::Accelerometer,
        SensorKind::Barometer,
        SensorKind::Battery,
        SensorKind::Location,
        SensorKind::Network,
        SensorKind::Weather,
        SensorKind::Screen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Accelerometer => "accelerometer",
            SensorKind::Barometer => "barometer",
            SensorKind::Battery => "battery",
            SensorKind::Location => "location",
            SensorKind::Network => "network",
            SensorKind::Weather => "weather",
            SensorKind::Screen => "screen",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkType {
    None,
    Wifi,
    Mobile,
}

impl NetworkType {
    pub fn code(self) -> f64 {
        match self {
            NetworkType::None => 0.0,
            NetworkType::Wifi => 1.0,
            NetworkType::Mobile => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreenEvent {
    On,
    Off,
    Unlock,
    Interaction,
}

/// Number of weather condition groups (clear, clouds, rain, drizzle,
/// thunderstorm, snow, mist, fog, haze, dust).
pub const WEATHER_TYPES: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accel {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Accel {
    pub fn magnitude(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryReading {
    pub level: f64,
    pub charging: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoFix {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherReading {
    pub code: u8,
    pub temperature: f64,
    pub humidity: f64,
    pub pressure: f64,
    pub wind: f64,
    pub cloudiness: f64,
    pub precipitation: f64,
    pub visibility: f64,
}

/// One sensor reading without its owner and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reading {
    Accelerometer(Accel),
    Barometer(f64),
    Battery(BatteryReading),
    Location(GeoFix),
    Network(NetworkType),
    Weather(WeatherReading),
    Screen(ScreenEvent),
}

impl Reading {
    pub fn kind(&self) -> SensorKind {
        match self {
            Reading::Accelerometer(_) => SensorKind::Accelerometer,
            Reading::Barometer(_) => SensorKind::Barometer,
            Reading::Battery(_) => SensorKind::Battery,
            Reading::Location(_) => SensorKind::Location,
            Reading::Network(_) => SensorKind::Network,
            Reading::Weather(_) => SensorKind::Weather,
            Reading::Screen(_) => SensorKind::Screen,
        }
    }

    fn sort_key(&self) -> Vec<f64> {
        match *self {
            Reading::Accelerometer(a) => vec![a.x, a.y, a.z],
            Reading::Barometer(p) => vec![p],
            Reading::Battery(b) => vec![b.level, f64::from(u8::from(b.charging))],
            Reading::Location(g) => vec![g.lat, g.lon],
            Reading::Network(n) => vec![n.code()],
            Reading::Weather(w) => vec![
                f64::from(w.code),
                w.temperature,
                w.humidity,
                w.pressure,
                w.wind,
                w.cloudiness,
                w.precipitation,
                w.visibility,
            ],
            Reading::Screen(e) => vec![e as u8 as f64],
        }
    }

    /// Total order used to make ingestion independent of input line order.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.kind().cmp(&other.kind()).then_with(|| {
            let (a, b) = (self.sort_key(), other.sort_key());
            a.iter()
                .zip(&b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }

    fn validate(&self) -> Result<(), String> {
        let finite = self.sort_key().iter().all(|v| v.is_finite());
        if !finite {
            return Err("non-finite value".into());
        }
        match self {
            Reading::Battery(b) if !(0.0..=100.0).contains(&b.level) => {
                Err(format!("battery level {} outside [0,100]", b.level))
            }
            Reading::Weather(w) if !(0.0..=100.0).contains(&w.humidity) => {
                Err(format!("humidity {} outside [0,100]", w.humidity))
            }
            Reading::Weather(w) if w.code >= WEATHER_TYPES => {
                Err(format!("weather code {} unknown", w.code))
            }
            Reading::Location(g) if g.lat.abs() > 90.0 || g.lon.abs() > 180.0 => {
                Err("coordinates out of range".into())
            }
            _ => Ok(()),
        }
    }
}

/// One line of a sensor log.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSample {
    pub user_id: String,
    pub ts: i64,
    pub reading: Reading,
}

impl Serialize for SensorSample {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("user", &self.user_id)?;
        m.serialize_entry("sensor", self.reading.kind().name())?;
        m.serialize_entry("ts", &self.ts)?;
        match &self.reading {
            Reading::Accelerometer(a) => {
                m.serialize_entry("x", &a.x)?;
                m.serialize_entry("y", &a.y)?;
                m.serialize_entry("z", &a.z)?;
            }
            Reading::Barometer(p) => m.serialize_entry("hpa", p)?,
            Reading::Battery(b) => {
                m.serialize_entry("level", &b.level)?;
                m.serialize_entry("charging", &b.charging)?;
            }
            Reading::Location(g) => {
                m.serialize_entry("lat", &g.lat)?;
                m.serialize_entry("lon", &g.lon)?;
            }
            Reading::Network(n) => m.serialize_entry("network", n)?,
            Reading::Weather(w) => {
                m.serialize_entry("code", &w.code)?;
                m.serialize_entry("temp", &w.temperature)?;
                m.serialize_entry("humidity", &w.humidity)?;
                m.serialize_entry("pressure", &w.pressure)?;
                m.serialize_entry("wind", &w.wind)?;
                m.serialize_entry("clouds", &w.cloudiness)?;
                m.serialize_entry("precip", &w.precipitation)?;
                m.serialize_entry("visibility", &w.visibility)?;
            }
            Reading::Screen(e) => m.serialize_entry("event", e)?,
        }
        m.end()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timed<T> {
    pub ts: i64,
    pub value: T,
}

/// Time-ordered readings of one sensor.
#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Accelerometer(Vec<Timed<Accel>>),
    Barometer(Vec<Timed<f64>>),
    Battery(Vec<Timed<BatteryReading>>),
    Location(Vec<Timed<GeoFix>>),
    Network(Vec<Timed<NetworkType>>),
    Weather(Vec<Timed<WeatherReading>>),
    Screen(Vec<Timed<ScreenEvent>>),
}

macro_rules! series_dispatch {
    ($self:expr, $v:ident => $body:expr) => {
        match $self {
            Series::Accelerometer($v) => $body,
            Series::Barometer($v) => $body,
            Series::Battery($v) => $body,
            Series::Location($v) => $body,
            Series::Network($v) => $body,
            Series::Weather($v) => $body,
            Series::Screen($v) => $body,
        }
    };
}

impl Series {
    pub fn empty(kind: SensorKind) -> Self {
        match kind {
            SensorKind::Accelerometer => Series::Accelerometer(Vec::new()),
            SensorKind::Barometer => Series::Barometer(Vec::new()),
            SensorKind::Battery => Series::Battery(Vec::new()),
            SensorKind::Location => Series::Location(Vec::new()),
            SensorKind::Network => Series::Network(Vec::new()),
            SensorKind::Weather => Series::Weather(Vec::new()),
            SensorKind::Screen => Series::Screen(Vec::new()),
        }
    }

    pub fn kind(&self) -> SensorKind {
        match self {
            Series::Accelerometer(_) => SensorKind::Accelerometer,
            Series::Barometer(_) => SensorKind::Barometer,
            Series::Battery(_) => SensorKind::Battery,
            Series::Location(_) => SensorKind::Location,
            Series::Network(_) => SensorKind::Network,
            Series::Weather(_) => SensorKind::Weather,
            Series::Screen(_) => SensorKind::Screen,
        }
    }

    pub fn len(&self) -> usize {
        series_dispatch!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn timestamps(&self) -> Vec<i64> {
        series_dispatch!(self, v => v.iter().map(|t| t.ts).collect())
    }

    /// Appends a reading; panics if the reading belongs to another sensor.
    pub fn push(&mut self, ts: i64, reading: Reading) {
        match (self, reading) {
            (Series::Accelerometer(v), Reading::Accelerometer(r)) => v.push(Timed { ts, value: r }),
            (Series::Barometer(v), Reading::Barometer(r)) => v.push(Timed { ts, value: r }),
            (Series::Battery(v), Reading::Battery(r)) => v.push(Timed { ts, value: r }),
            (Series::Location(v), Reading::Location(r)) => v.push(Timed { ts, value: r }),
            (Series::Network(v), Reading::Network(r)) => v.push(Timed { ts, value: r }),
            (Series::Weather(v), Reading::Weather(r)) => v.push(Timed { ts, value: r }),
            (Series::Screen(v), Reading::Screen(r)) => v.push(Timed { ts, value: r }),
            (s, r) => panic!("reading {:?} pushed onto {:?} series", r.kind(), s.kind()),
        }
    }

    pub fn reading(&self, i: usize) -> (i64, Reading) {
        match self {
            Series::Accelerometer(v) => (v[i].ts, Reading::Accelerometer(v[i].value)),
            Series::Barometer(v) => (v[i].ts, Reading::Barometer(v[i].value)),
            Series::Battery(v) => (v[i].ts, Reading::Battery(v[i].value)),
            Series::Location(v) => (v[i].ts, Reading::Location(v[i].value)),
            Series::Network(v) => (v[i].ts, Reading::Network(v[i].value)),
            Series::Weather(v) => (v[i].ts, Reading::Weather(v[i].value)),
            Series::Screen(v) => (v[i].ts, Reading::Screen(v[i].value)),
        }
    }
}

/// All readings of one sensor for one user, sorted by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorStream {
    pub user_id: String,
    pub series: Series,
}

impl SensorStream {
    pub fn sensor(&self) -> SensorKind {
        self.series.kind()
    }

    pub fn samples(&self) -> impl Iterator<Item = SensorSample> + '_ {
        (0..self.series.len()).map(move |i| {
            let (ts, reading) = self.series.reading(i);
            SensorSample {
                user_id: self.user_id.clone(),
                ts,
                reading,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoodAnnotation {
    #[serde(rename = "user")]
    pub user_id: String,
    pub ts: i64,
    pub likert: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryEvent {
    #[serde(rename = "user")]
    pub user_id: String,
    pub ts: i64,
    #[serde(rename = "q")]
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdEvent {
    pub ts: i64,
    #[serde(rename = "user")]
    pub user_id: String,
    #[serde(rename = "ad")]
    pub ad_id: String,
    #[serde(with = "bool_as_digit")]
    pub clicked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientCount {
    pub date: chrono::NaiveDate,
    pub count: u64,
}

mod bool_as_digit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!(
                "clicked must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// Canonical query form: NFC, lower-cased, trimmed, inner whitespace collapsed.
/// Returns `None` when nothing is left.
pub fn normalize_query(raw: &str) -> Option<String> {
    let folded: String = raw.nfc().collect::<String>().to_lowercase();
    let joined = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    if joined.is_empty() {
        None
    } else {
        Some(joined)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_normalization() {
        assert_eq!(
            normalize_query("  Weather   TOKYO \t").as_deref(),
            Some("weather tokyo")
        );
        assert_eq!(normalize_query(" \n "), None);
        // decomposed e + combining acute composes to U+00E9
        assert_eq!(normalize_query("Cafe\u{301}").as_deref(), Some("caf\u{e9}"));
    }

    #[test]
    fn sample_serializes_in_documented_field_order() {
        let s = SensorSample {
            user_id: "u1".into(),
            ts: 1_572_566_400_000,
            reading: Reading::Accelerometer(Accel {
                x: 0.01,
                y: -0.98,
                z: 0.12,
            }),
        };
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"user":"u1","sensor":"accelerometer","ts":1572566400000,"x":0.01,"y":-0.98,"z":0.12}"#
        );
    }

    #[test]
    fn reading_validation() {
        assert!(Reading::Battery(BatteryReading {
            level: 101.0,
            charging: false
        })
        .validate()
        .is_err());
        assert!(Reading::Battery(BatteryReading {
            level: 100.0,
            charging: true
        })
        .validate()
        .is_ok());
        assert!(Reading::Barometer(f64::NAN).validate().is_err());
    }
}

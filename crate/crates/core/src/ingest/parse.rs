use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{
    normalize_query, Accel, AdEvent, BatteryReading, GeoFix, MoodAnnotation, NetworkType,
    PatientCount, QueryEvent, Reading, ScreenEvent, SensorKind, SensorSample, SensorStream, Series,
    WeatherReading,
};
use crate::{Error, Result};

/// Fraction of malformed records above which a file is rejected.
pub const MALFORMED_LIMIT: f64 = 0.5;

/// Parsed records plus the number of skipped lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub malformed: usize,
    pub total: usize,
}

impl<T> Parsed<T> {
    fn check(self, path: &Path) -> Result<Self> {
        if self.total > 0 && self.malformed as f64 > MALFORMED_LIMIT * self.total as f64 {
            return Err(Error::TooManyMalformed {
                path: path.to_path_buf(),
                malformed: self.malformed,
                total: self.total,
            });
        }
        if self.malformed > 0 {
            log::warn!(
                "{}: skipped {} malformed of {} records",
                path.display(),
                self.malformed,
                self.total
            );
        }
        Ok(self)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_jsonl<T, F>(text: &str, convert: F) -> Parsed<T>
where
    T: Send,
    F: Fn(&str) -> std::result::Result<T, String> + Sync,
{
    let results: Vec<std::result::Result<T, String>> = text
        .par_lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| convert(l))
        .collect();
    let total = results.len();
    let mut records = Vec::with_capacity(total);
    let mut malformed = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => records.push(v),
            Err(msg) => {
                if malformed < 5 {
                    log::debug!("record {}: {msg}", i + 1);
                }
                malformed += 1;
            }
        }
    }
    Parsed {
        records,
        malformed,
        total,
    }
}

#[derive(Deserialize)]
struct RawSensorLine {
    user: String,
    sensor: SensorKind,
    ts: i64,
    x: Option<f64>,
    y: Option<f64>,
    z: Option<f64>,
    hpa: Option<f64>,
    level: Option<f64>,
    charging: Option<bool>,
    lat: Option<f64>,
    lon: Option<f64>,
    network: Option<NetworkType>,
    code: Option<u8>,
    temp: Option<f64>,
    humidity: Option<f64>,
    pressure: Option<f64>,
    wind: Option<f64>,
    clouds: Option<f64>,
    precip: Option<f64>,
    visibility: Option<f64>,
    event: Option<ScreenEvent>,
}

fn need<T>(v: Option<T>, field: &str, sensor: SensorKind) -> std::result::Result<T, String> {
    v.ok_or_else(|| format!("{} record missing {field:?}", sensor.name()))
}

impl RawSensorLine {
    fn into_sample(self) -> std::result::Result<SensorSample, String> {
        let s = self.sensor;
        let reading = match s {
            SensorKind::Accelerometer => Reading::Accelerometer(Accel {
                x: need(self.x, "x", s)?,
                y: need(self.y, "y", s)?,
                z: need(self.z, "z", s)?,
            }),
            SensorKind::Barometer => Reading::Barometer(need(self.hpa, "hpa", s)?),
            SensorKind::Battery => Reading::Battery(BatteryReading {
                level: need(self.level, "level", s)?,
                charging: need(self.charging, "charging", s)?,
            }),
            SensorKind::Location => Reading::Location(GeoFix {
                lat: need(self.lat, "lat", s)?,
                lon: need(self.lon, "lon", s)?,
            }),
            SensorKind::Network => Reading::Network(need(self.network, "network", s)?),
            SensorKind::Weather => Reading::Weather(WeatherReading {
                code: need(self.code, "code", s)?,
                temperature: need(self.temp, "temp", s)?,
                humidity: need(self.humidity, "humidity", s)?,
                pressure: need(self.pressure, "pressure", s)?,
                wind: need(self.wind, "wind", s)?,
                cloudiness: need(self.clouds, "clouds", s)?,
                precipitation: need(self.precip, "precip", s)?,
                visibility: need(self.visibility, "visibility", s)?,
            }),
            SensorKind::Screen => Reading::Screen(need(self.event, "event", s)?),
        };
        reading.validate()?;
        if self.user.is_empty() {
            return Err("empty user id".into());
        }
        Ok(SensorSample {
            user_id: self.user,
            ts: self.ts,
            reading,
        })
    }
}

/// Parses sensor JSONL text without the malformed-fraction check.
pub fn parse_sensor_str(text: &str) -> Parsed<SensorSample> {
    parse_jsonl(text, |line| {
        serde_json::from_str::<RawSensorLine>(line)
            .map_err(|e| e.to_string())?
            .into_sample()
    })
}

/// Groups samples into per-(user, sensor) streams sorted by timestamp.
/// Equal timestamps are ordered by value so the result does not depend on
/// input order.
pub fn group_streams(samples: Vec<SensorSample>) -> Vec<SensorStream> {
    let mut groups: BTreeMap<(String, SensorKind), Vec<(i64, Reading)>> = BTreeMap::new();
    for s in samples {
        groups
            .entry((s.user_id, s.reading.kind()))
            .or_default()
            .push((s.ts, s.reading));
    }
    groups
        .into_par_iter()
        .map(|((user_id, kind), mut rows)| {
            rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.total_cmp(&b.1)));
            let mut series = Series::empty(kind);
            for (ts, r) in rows {
                series.push(ts, r);
            }
            SensorStream { user_id, series }
        })
        .collect()
}

/// Reads a sensor JSONL log into sorted streams.
pub fn parse_sensor_log(path: &Path) -> Result<Parsed<SensorStream>> {
    let text = read(path)?;
    let parsed = parse_sensor_str(&text).check(path)?;
    Ok(Parsed {
        records: group_streams(parsed.records),
        malformed: parsed.malformed,
        total: parsed.total,
    })
}

pub fn parse_annotations(path: &Path) -> Result<Parsed<MoodAnnotation>> {
    let text = read(path)?;
    let mut parsed = parse_jsonl(&text, |line| {
        let a: MoodAnnotation = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if !(1..=7).contains(&a.likert) {
            return Err(format!("likert {} outside 1..7", a.likert));
        }
        Ok(a)
    })
    .check(path)?;
    parsed
        .records
        .sort_by(|a, b| (&a.user_id, a.ts, a.likert).cmp(&(&b.user_id, b.ts, b.likert)));
    Ok(parsed)
}

pub fn parse_queries(path: &Path) -> Result<Parsed<QueryEvent>> {
    let text = read(path)?;
    let mut parsed = parse_jsonl(&text, |line| {
        let mut q: QueryEvent = serde_json::from_str(line).map_err(|e| e.to_string())?;
        q.query = normalize_query(&q.query).ok_or("empty query after normalization")?;
        Ok(q)
    })
    .check(path)?;
    sort_queries(&mut parsed.records);
    Ok(parsed)
}

fn sort_queries(rows: &mut [QueryEvent]) {
    rows.sort_by(|a, b| (&a.user_id, a.ts, &a.query).cmp(&(&b.user_id, b.ts, &b.query)));
}

/// In-memory counterpart of [`parse_queries`]: normalizes, drops queries
/// that normalize to nothing and sorts. Returns the number dropped.
pub fn normalize_query_events(events: &[QueryEvent]) -> (Vec<QueryEvent>, usize) {
    let mut out: Vec<QueryEvent> = events
        .iter()
        .filter_map(|e| normalize_query(&e.query).map(|query| QueryEvent { query, ..e.clone() }))
        .collect();
    let dropped = events.len() - out.len();
    sort_queries(&mut out);
    (out, dropped)
}

fn parse_csv<T: DeserializeOwned>(path: &Path) -> Result<Parsed<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse(format!("{}: {other:?}", path.display())),
        })?;
    let mut records = Vec::new();
    let (mut malformed, mut total) = (0, 0);
    for row in reader.deserialize::<T>() {
        total += 1;
        match row {
            Ok(r) => records.push(r),
            Err(_) => malformed += 1,
        }
    }
    Parsed {
        records,
        malformed,
        total,
    }
    .check(path)
}

pub fn parse_ad_csv(path: &Path) -> Result<Parsed<AdEvent>> {
    let mut parsed = parse_csv::<AdEvent>(path)?;
    parsed.records.sort_by(|a, b| {
        (&a.ad_id, a.ts, &a.user_id, a.clicked).cmp(&(&b.ad_id, b.ts, &b.user_id, b.clicked))
    });
    Ok(parsed)
}

pub fn parse_patient_csv(path: &Path) -> Result<Parsed<PatientCount>> {
    let mut parsed = parse_csv::<PatientCount>(path)?;
    parsed.records.sort_by_key(|p| p.date);
    Ok(parsed)
}

/// One ISO date per line; blank lines and `#` comments ignored.
pub fn parse_holidays(path: &Path) -> Result<Vec<NaiveDate>> {
    let text = read(path)?;
    let mut out = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(crate::time::parse_date)
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(
        fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn write_jsonl<'a, T: serde::Serialize + 'a>(
    path: &Path,
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let mut w = create(path)?;
    for row in rows {
        serde_json::to_writer(&mut w, &row).map_err(|e| Error::Parse(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_sensor_log(path: &Path, streams: &[SensorStream]) -> Result<()> {
    write_jsonl(path, streams.iter().flat_map(|s| s.samples()))
}

pub fn write_annotations(path: &Path, rows: &[MoodAnnotation]) -> Result<()> {
    write_jsonl(path, rows)
}

pub fn write_queries(path: &Path, rows: &[QueryEvent]) -> Result<()> {
    write_jsonl(path, rows)
}

fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_ad_csv(path: &Path, rows: &[AdEvent]) -> Result<()> {
    write_csv(path, rows)
}

pub fn write_patient_csv(path: &Path, rows: &[PatientCount]) -> Result<()> {
    write_csv(path, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_yields_nothing() {
        let f = temp_file("");
        let p = parse_sensor_log(f.path()).unwrap();
        assert!(p.records.is_empty());
        assert_eq!(p.malformed, 0);
    }

    #[test]
    fn one_valid_one_malformed() {
        let f = temp_file(concat!(
            r#"{"user":"u1","sensor":"accelerometer","ts":1572566400000,"x":0.01,"y":-0.98,"z":0.12}"#,
            "\n",
            r#"{"user":"u1","sensor":"accelerometer","ts":1572566400100,"x":0.01}"#,
            "\n"
        ));
        let p = parse_sensor_log(f.path()).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.records[0].series.len(), 1);
        assert_eq!(p.malformed, 1);
    }

    #[test]
    fn mostly_garbage_is_fatal() {
        let f = temp_file(concat!(
            r#"{"user":"u1","sensor":"barometer","ts":1,"hpa":1013.0}"#,
            "\nnot json\n{}\n"
        ));
        assert!(matches!(
            parse_sensor_log(f.path()),
            Err(Error::TooManyMalformed {
                malformed: 2,
                total: 3,
                ..
            })
        ));
    }

    #[test]
    fn missing_file_names_path() {
        let err = parse_sensor_log(Path::new("/nonexistent/sensors.jsonl")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/sensors.jsonl"));
    }

    #[test]
    fn out_of_range_values_are_malformed() {
        let text = concat!(
            r#"{"user":"u","sensor":"battery","ts":1,"level":120.0,"charging":false}"#,
            "\n",
            r#"{"user":"u","sensor":"battery","ts":2,"level":50.0,"charging":false}"#,
            "\n"
        );
        let p = parse_sensor_str(text);
        assert_eq!((p.records.len(), p.malformed), (1, 1));
    }

    #[test]
    fn annotations_reject_bad_likert() {
        let f = temp_file("{\"user\":\"u1\",\"ts\":1572570000000,\"likert\":5}\n{\"user\":\"u1\",\"ts\":1,\"likert\":9}\n");
        let p = parse_annotations(f.path()).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.malformed, 1);
    }

    #[test]
    fn queries_are_normalized() {
        let f = temp_file("{\"user\":\"u1\",\"ts\":1572571000000,\"q\":\"  Weather  Tokyo\"}\n");
        let p = parse_queries(f.path()).unwrap();
        assert_eq!(p.records[0].query, "weather tokyo");
    }

    #[test]
    fn ad_csv_round_trip() {
        let rows = vec![
            AdEvent {
                ts: 5,
                user_id: "u2".into(),
                ad_id: "a1".into(),
                clicked: true,
            },
            AdEvent {
                ts: 3,
                user_id: "u1".into(),
                ad_id: "a1".into(),
                clicked: false,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ads.csv");
        write_ad_csv(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("ts,user,ad,clicked\n5,u2,a1,1\n"));
        let back = parse_ad_csv(&path).unwrap();
        assert_eq!(back.records, vec![rows[1].clone(), rows[0].clone()]);
    }

    #[test]
    fn ad_csv_rejects_bad_click_flag() {
        let f = temp_file("ts,user,ad,clicked\n1,u,a,1\n2,u,a,2\n3,u,a,0\n");
        let p = parse_ad_csv(f.path()).unwrap();
        assert_eq!((p.records.len(), p.malformed), (2, 1));
    }

    #[test]
    fn patient_csv() {
        let f = temp_file("date,count\n2020-04-26,9577\n2020-04-25,-3\n2020-04-24,100\n");
        let p = parse_patient_csv(f.path()).unwrap();
        assert_eq!(p.records.len(), 2);
        assert_eq!(p.records[1].count, 9577);
    }

    #[test]
    fn holidays_file() {
        let f = temp_file("# marine day\n2019-07-15\n\n2019-07-15\n");
        assert_eq!(
            parse_holidays(f.path()).unwrap(),
            vec![NaiveDate::from_ymd_opt(2019, 7, 15).unwrap()]
        );
    }
}

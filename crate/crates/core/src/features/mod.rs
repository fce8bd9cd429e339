//! Three-hour feature frames.
//!
//! Streams are cut into local-time windows aligned to midnight. Each window
//! yields one 113-wide vector: accelerometer 23, barometer 5, battery 7,
//! location 12, network 5, weather 50, screen 11. A sensor with no readings
//! in the window contributes zeros and a cleared presence bit.

pub mod blocks;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::ingest::{GeoFix, MoodAnnotation, SensorKind, SensorStream, Series, Timed};
use crate::time::{WindowGrid, WindowKey};
use crate::{Error, Result};
use blocks::{Cell, WindowSpan};

pub const FEATURE_COUNT: usize = 113;

/// Number of features each sensor contributes, in block order.
pub const SENSOR_WIDTHS: [(SensorKind, usize); 7] = [
    (SensorKind::Accelerometer, blocks::ACCEL_WIDTH),
    (SensorKind::Barometer, blocks::BAROMETER_WIDTH),
    (SensorKind::Battery, blocks::BATTERY_WIDTH),
    (SensorKind::Location, blocks::LOCATION_WIDTH),
    (SensorKind::Network, blocks::NETWORK_WIDTH),
    (SensorKind::Weather, blocks::WEATHER_WIDTH),
    (SensorKind::Screen, blocks::SCREEN_WIDTH),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureSpec {
    pub name: String,
    pub sensor: SensorKind,
    pub index: usize,
}

fn build_order() -> Vec<FeatureSpec> {
    let mut names: Vec<(SensorKind, String)> = Vec::with_capacity(FEATURE_COUNT);
    let mut push = |s: SensorKind, n: String| names.push((s, n));
    use SensorKind::*;

    for stat in ["mean", "std", "median", "min", "max"] {
        push(Accelerometer, format!("accel_mag_{stat}"));
    }
    for stat in ["mean", "var", "skew", "kurt"] {
        for axis in ["x", "y", "z"] {
            push(Accelerometer, format!("accel_{stat}_{axis}"));
        }
    }
    for stat in ["corr", "cov"] {
        for pair in ["xy", "yz", "zx"] {
            push(Accelerometer, format!("accel_{stat}_{pair}"));
        }
    }
    for stat in ["mean", "std", "median", "min", "max"] {
        push(Barometer, format!("baro_{stat}"));
    }
    for stat in ["mean", "std", "median", "min", "max"] {
        push(Battery, format!("battery_{stat}"));
    }
    push(Battery, "battery_charge_count".into());
    push(Battery, "battery_charge_minutes".into());
    for n in [
        "entropy",
        "transitions",
        "moving_time_pct",
        "total_distance_km",
        "radius_gyration_km",
        "max_displacement_km",
        "unique_clusters",
        "top_cluster_ratio",
        "mean_speed_kmh",
        "max_speed_kmh",
        "std_speed_kmh",
        "home_ratio",
    ] {
        push(Location, format!("loc_{n}"));
    }
    for n in [
        "wifi_count",
        "mobile_count",
        "most_frequent",
        "wifi_rate",
        "mobile_rate",
    ] {
        push(Network, format!("net_{n}"));
    }
    for t in [
        "clear",
        "clouds",
        "rain",
        "drizzle",
        "thunderstorm",
        "snow",
        "mist",
        "fog",
        "haze",
        "dust",
    ] {
        push(Weather, format!("weather_is_{t}"));
    }
    for ch in blocks::WEATHER_CHANNELS {
        for stat in ["mean", "std", "median", "min", "max"] {
            push(Weather, format!("weather_{ch}_{stat}"));
        }
    }
    for n in [
        "on_count",
        "off_count",
        "unlock_count",
        "interaction_count",
        "unlocks_per_min",
        "interactions_per_min",
        "on_minutes",
        "mean_session_min",
        "max_session_min",
        "first_unlock_min",
        "on_ratio",
    ] {
        push(Screen, format!("screen_{n}"));
    }
    names
        .into_iter()
        .enumerate()
        .map(|(index, (sensor, name))| FeatureSpec {
            name,
            sensor,
            index,
        })
        .collect()
}

/// The fixed feature order. Column order of exported frames follows it.
pub fn feature_order() -> &'static [FeatureSpec] {
    static ORDER: OnceLock<Vec<FeatureSpec>> = OnceLock::new();
    ORDER.get_or_init(build_order)
}

/// Offset of a sensor's block in the feature vector.
pub fn block_offset(sensor: SensorKind) -> usize {
    SENSOR_WIDTHS
        .iter()
        .take_while(|(s, _)| *s != sensor)
        .map(|(_, w)| w)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    pub user_id: String,
    pub window: WindowKey,
    pub features: Vec<f64>,
    /// Indexed by [`SensorKind::index`].
    pub presence: [bool; 7],
    pub likert: Option<u8>,
}

/// Sample index ranges of one user's window, per sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSkeleton {
    pub user_id: String,
    pub window: WindowKey,
    pub ranges: [Option<(usize, usize)>; 7],
}

fn window_ranges(ts: &[i64], grid: &WindowGrid) -> Vec<(WindowKey, usize, usize)> {
    let mut out: Vec<(WindowKey, usize, usize)> = Vec::new();
    for (i, t) in ts.iter().enumerate() {
        let key = grid.window_of(*t);
        match out.last_mut() {
            Some(last) if last.0 == key => last.2 = i + 1,
            _ => out.push((key, i, i + 1)),
        }
    }
    out
}

/// Assigns every sample to exactly one window. `streams` must be sorted by
/// timestamp within each stream; output is sorted by `(user, window)`.
pub fn partition_windows(streams: &[SensorStream], grid: &WindowGrid) -> Vec<FrameSkeleton> {
    let mut frames: BTreeMap<(String, WindowKey), [Option<(usize, usize)>; 7]> = BTreeMap::new();
    for stream in streams {
        let idx = stream.sensor().index();
        for (key, a, b) in window_ranges(&stream.series.timestamps(), grid) {
            let slot = &mut frames
                .entry((stream.user_id.clone(), key))
                .or_insert([None; 7])[idx];
            // a sorted stream visits each window once
            debug_assert!(slot.is_none(), "stream not sorted");
            *slot = Some((a, b));
        }
    }
    frames
        .into_iter()
        .map(|((user_id, window), ranges)| FrameSkeleton {
            user_id,
            window,
            ranges,
        })
        .collect()
}

/// Most-dwelled cell during local night hours (00:00-06:00), falling back
/// to the most frequent cell overall.
fn home_cell(fixes: &[Timed<GeoFix>], grid: &WindowGrid) -> Option<Cell> {
    use chrono::Timelike;
    let mut night: HashMap<Cell, usize> = HashMap::new();
    let mut all: HashMap<Cell, usize> = HashMap::new();
    for f in fixes {
        let c = blocks::cell_of(&f.value);
        *all.entry(c).or_default() += 1;
        if grid.local(f.ts).hour() < 6 {
            *night.entry(c).or_default() += 1;
        }
    }
    let best = |m: HashMap<Cell, usize>| {
        m.into_iter()
            .max_by_key(|(c, n)| (*n, std::cmp::Reverse(*c)))
            .map(|(c, _)| c)
    };
    best(night).or_else(|| best(all))
}

struct UserStreams<'a> {
    by_sensor: [Option<&'a SensorStream>; 7],
    home: Option<Cell>,
}

fn compute_frame(skel: &FrameSkeleton, user: &UserStreams<'_>, grid: &WindowGrid) -> FeatureFrame {
    let (start_ms, end_ms) = grid.bounds(skel.window);
    let span = WindowSpan { start_ms, end_ms };
    let mut features = vec![0.0; FEATURE_COUNT];
    let mut presence = [false; 7];
    for (sensor, width) in SENSOR_WIDTHS {
        let idx = sensor.index();
        let (Some((a, b)), Some(stream)) = (skel.ranges[idx], user.by_sensor[idx]) else {
            continue;
        };
        presence[idx] = b > a;
        let off = block_offset(sensor);
        let dst = &mut features[off..off + width];
        match &stream.series {
            Series::Accelerometer(v) => dst.copy_from_slice(&blocks::accelerometer(&v[a..b])),
            Series::Barometer(v) => dst.copy_from_slice(&blocks::barometer(&v[a..b])),
            Series::Battery(v) => dst.copy_from_slice(&blocks::battery(&v[a..b], span)),
            Series::Location(v) => {
                dst.copy_from_slice(&blocks::location(&v[a..b], span, user.home))
            }
            Series::Network(v) => dst.copy_from_slice(&blocks::network(&v[a..b], span)),
            Series::Weather(v) => dst.copy_from_slice(&blocks::weather(&v[a..b])),
            Series::Screen(v) => dst.copy_from_slice(&blocks::screen(&v[a..b], span)),
        }
    }
    FeatureFrame {
        user_id: skel.user_id.clone(),
        window: skel.window,
        features,
        presence,
        likert: None,
    }
}

/// Windows every stream and computes one frame per `(user, window)` that
/// has at least one reading. Output sorted by `(user, window)`.
pub fn extract_frames(streams: &[SensorStream], grid: &WindowGrid) -> Vec<FeatureFrame> {
    let mut users: BTreeMap<&str, UserStreams<'_>> = BTreeMap::new();
    for s in streams {
        let entry = users.entry(s.user_id.as_str()).or_insert(UserStreams {
            by_sensor: [None; 7],
            home: None,
        });
        entry.by_sensor[s.sensor().index()] = Some(s);
    }
    for u in users.values_mut() {
        if let Some(Series::Location(fixes)) =
            u.by_sensor[SensorKind::Location.index()].map(|s| &s.series)
        {
            u.home = home_cell(fixes, grid);
        }
    }
    let skeletons = partition_windows(streams, grid);
    skeletons
        .par_iter()
        .map(|sk| compute_frame(sk, &users[sk.user_id.as_str()], grid))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AttachReport {
    pub attached: usize,
    pub replaced: usize,
    pub dropped: usize,
}

/// Labels frames with the annotation answered inside them. When a window has
/// several answers the latest one wins; answers outside every data window
/// are dropped and counted.
pub fn attach_annotations(
    frames: &mut [FeatureFrame],
    annotations: &[MoodAnnotation],
    grid: &WindowGrid,
) -> AttachReport {
    let index: HashMap<(&str, WindowKey), usize> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| ((f.user_id.as_str(), f.window), i))
        .collect();
    let mut order: Vec<&MoodAnnotation> = annotations.iter().collect();
    order.sort_by_key(|a| a.ts);
    let mut report = AttachReport::default();
    let mut targets: Vec<(usize, u8)> = Vec::new();
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for a in order {
        match index.get(&(a.user_id.as_str(), grid.window_of(a.ts))) {
            Some(&i) => {
                if !seen.insert(i) {
                    report.replaced += 1;
                }
                targets.push((i, a.likert));
            }
            None => report.dropped += 1,
        }
    }
    for (i, likert) in targets {
        frames[i].likert = Some(likert);
    }
    report.attached = seen.len();
    if report.dropped > 0 {
        log::warn!(
            "{} annotations fell outside every data window",
            report.dropped
        );
    }
    report
}

fn mask_string(presence: &[bool; 7]) -> String {
    presence
        .iter()
        .map(|p| if *p { '1' } else { '0' })
        .collect()
}

/// Writes frames as CSV: `user,window,mask,likert` then all 113 features
/// in [`feature_order`].
pub fn write_frames_csv(path: &Path, frames: &[FeatureFrame]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let header: Vec<&str> = ["user", "window", "mask", "likert"]
        .into_iter()
        .chain(feature_order().iter().map(|f| f.name.as_str()))
        .collect();
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for f in frames {
        let likert = f.likert.map(|l| l.to_string()).unwrap_or_default();
        write!(
            w,
            "{},{},{},{}",
            f.user_id,
            f.window,
            mask_string(&f.presence),
            likert
        )
        .map_err(io)?;
        for v in &f.features {
            write!(w, ",{v:?}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_frames_csv(path: &Path) -> Result<Vec<FeatureFrame>> {
    let mut reader =
        csv::ReaderBuilder::new()
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::Parse(format!("{}: {other:?}", path.display())),
            })?;
    let bad = |msg: String| Error::Parse(format!("{}: {msg}", path.display()));
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let expected: Vec<&str> = ["user", "window", "mask", "likert"]
        .into_iter()
        .chain(feature_order().iter().map(|f| f.name.as_str()))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(bad("feature header does not match the feature order".into()));
    }
    let mut frames = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let ctx = |m: &str| bad(format!("row {}: {m}", line + 2));
        let mask = &row[2];
        if mask.len() != 7 || !mask.chars().all(|c| c == '0' || c == '1') {
            return Err(ctx("bad presence mask"));
        }
        let mut presence = [false; 7];
        for (i, c) in mask.chars().enumerate() {
            presence[i] = c == '1';
        }
        let likert = match &row[3] {
            "" => None,
            s => Some(
                s.parse::<u8>()
                    .ok()
                    .filter(|l| (1..=7).contains(l))
                    .ok_or_else(|| ctx("bad likert"))?,
            ),
        };
        let features = row
            .iter()
            .skip(4)
            .map(|s| s.parse::<f64>().map_err(|_| ctx("bad feature value")))
            .collect::<Result<Vec<_>>>()?;
        frames.push(FeatureFrame {
            user_id: row[0].to_string(),
            window: row[1].parse()?,
            features,
            presence,
            likert,
        });
    }
    Ok(frames)
}

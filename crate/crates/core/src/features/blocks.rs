//! Per-sensor feature blocks. Each function maps the readings that fall in
//! one window to a fixed-width block; widths are checked against the
//! feature order in `mod.rs`.

use std::collections::BTreeMap;

use crate::ingest::{
    Accel, BatteryReading, GeoFix, NetworkType, ScreenEvent, Timed, WeatherReading, WEATHER_TYPES,
};
use crate::stats;
use crate::time::{MS_PER_HOUR, MS_PER_MINUTE};

pub const ACCEL_WIDTH: usize = 23;
pub const BAROMETER_WIDTH: usize = 5;
pub const BATTERY_WIDTH: usize = 7;
pub const LOCATION_WIDTH: usize = 12;
pub const NETWORK_WIDTH: usize = 5;
pub const WEATHER_WIDTH: usize = 50;
pub const SCREEN_WIDTH: usize = 11;

/// Consecutive-fix speed above which a user counts as moving.
pub const MOVING_SPEED_KMH: f64 = 1.0;
const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Half-open UTC bounds of the window being summarised.
#[derive(Debug, Clone, Copy)]
pub struct WindowSpan {
    pub start_ms: i64,
    pub end_ms: i64,
}

impl WindowSpan {
    pub fn minutes(&self) -> f64 {
        (self.end_ms - self.start_ms) as f64 / MS_PER_MINUTE as f64
    }
}

pub fn accelerometer(samples: &[Timed<Accel>]) -> [f64; ACCEL_WIDTH] {
    let xs: Vec<f64> = samples.iter().map(|s| s.value.x).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.value.y).collect();
    let zs: Vec<f64> = samples.iter().map(|s| s.value.z).collect();
    let mags: Vec<f64> = samples.iter().map(|s| s.value.magnitude()).collect();
    let axes = [&xs, &ys, &zs];
    let pairs = [(&xs, &ys), (&ys, &zs), (&zs, &xs)];

    let mut out = [0.0; ACCEL_WIDTH];
    out[..5].copy_from_slice(&stats::five_number(&mags));
    for (i, a) in axes.iter().enumerate() {
        out[5 + i] = stats::mean(a);
        out[8 + i] = stats::variance(a);
        out[11 + i] = stats::skewness(a);
        out[14 + i] = stats::excess_kurtosis(a);
    }
    for (i, (a, b)) in pairs.iter().enumerate() {
        out[17 + i] = stats::correlation(a, b);
        out[20 + i] = stats::covariance(a, b);
    }
    out
}

pub fn barometer(samples: &[Timed<f64>]) -> [f64; BAROMETER_WIDTH] {
    let v: Vec<f64> = samples.iter().map(|s| s.value).collect();
    stats::five_number(&v)
}

/// `[level mean, std, median, min, max, charge episodes, charging minutes]`.
/// A charging reading is assumed to hold until the next reading or window end.
pub fn battery(samples: &[Timed<BatteryReading>], span: WindowSpan) -> [f64; BATTERY_WIDTH] {
    let levels: Vec<f64> = samples.iter().map(|s| s.value.level).collect();
    let mut out = [0.0; BATTERY_WIDTH];
    out[..5].copy_from_slice(&stats::five_number(&levels));

    let mut episodes = 0usize;
    let mut charging_ms = 0i64;
    let mut was_charging = false;
    for (i, s) in samples.iter().enumerate() {
        if s.value.charging {
            if !was_charging {
                episodes += 1;
            }
            let until = samples.get(i + 1).map_or(span.end_ms, |n| n.ts);
            charging_ms += (until - s.ts).max(0);
        }
        was_charging = s.value.charging;
    }
    out[5] = episodes as f64;
    out[6] = charging_ms as f64 / MS_PER_MINUTE as f64;
    out
}

/// Grid cell of roughly 110 m: coordinates snapped to three decimals.
pub type Cell = (i64, i64);

pub fn cell_of(fix: &GeoFix) -> Cell {
    (
        (fix.lat * 1000.0).round() as i64,
        (fix.lon * 1000.0).round() as i64,
    )
}

pub fn haversine_km(a: &GeoFix, b: &GeoFix) -> f64 {
    let (la1, la2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = la2 - la1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + la1.cos() * la2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Shannon entropy (natural log) of a weight distribution.
pub fn entropy(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| {
            let p = w / total;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Location block; `home` is the user's most-visited night-time cell.
///
/// Order: entropy, cluster transitions, moving time %, total distance km,
/// radius of gyration km, max displacement km, unique clusters, top-cluster
/// time ratio, mean/max/std speed km/h, home time ratio.
pub fn location(
    samples: &[Timed<GeoFix>],
    span: WindowSpan,
    home: Option<Cell>,
) -> [f64; LOCATION_WIDTH] {
    let mut out = [0.0; LOCATION_WIDTH];
    if samples.is_empty() {
        return out;
    }
    let cells: Vec<Cell> = samples.iter().map(|s| cell_of(&s.value)).collect();

    let mut dwell: BTreeMap<Cell, f64> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let until = samples.get(i + 1).map_or(span.end_ms, |n| n.ts);
        *dwell.entry(cells[i]).or_default() += (until - s.ts).max(0) as f64;
    }
    if dwell.values().sum::<f64>() <= 0.0 {
        dwell.values_mut().for_each(|v| *v = 0.0);
        for c in &cells {
            *dwell.entry(*c).or_default() += 1.0;
        }
    }
    let weights: Vec<f64> = dwell.values().copied().collect();
    let total: f64 = weights.iter().sum();

    let transitions = cells.windows(2).filter(|w| w[0] != w[1]).count();

    let mut speeds = Vec::new();
    let (mut moving_ms, mut paired_ms, mut distance) = (0.0, 0.0, 0.0);
    for w in samples.windows(2) {
        let d = haversine_km(&w[0].value, &w[1].value);
        distance += d;
        let dt = (w[1].ts - w[0].ts) as f64;
        if dt > 0.0 {
            let speed = d / (dt / MS_PER_HOUR as f64);
            speeds.push(speed);
            paired_ms += dt;
            if speed > MOVING_SPEED_KMH {
                moving_ms += dt;
            }
        }
    }

    let n = samples.len() as f64;
    let centroid = GeoFix {
        lat: samples.iter().map(|s| s.value.lat).sum::<f64>() / n,
        lon: samples.iter().map(|s| s.value.lon).sum::<f64>() / n,
    };
    let rog = (samples
        .iter()
        .map(|s| haversine_km(&s.value, &centroid).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let first = samples[0].value;
    let max_disp = samples
        .iter()
        .map(|s| haversine_km(&first, &s.value))
        .fold(0.0, f64::max);

    out[0] = entropy(&weights);
    out[1] = transitions as f64;
    out[2] = if paired_ms > 0.0 {
        100.0 * moving_ms / paired_ms
    } else {
        0.0
    };
    out[3] = distance;
    out[4] = rog;
    out[5] = max_disp;
    out[6] = dwell.len() as f64;
    out[7] = weights.iter().copied().fold(0.0, f64::max) / total;
    out[8] = stats::mean(&speeds);
    out[9] = stats::max(&speeds);
    out[10] = stats::std_dev(&speeds);
    out[11] = home.and_then(|h| dwell.get(&h)).map_or(0.0, |w| w / total);
    out
}

/// `[wifi connections, mobile connections, most frequent type code, wifi
/// time rate, mobile time rate]`. Each event's state holds until the next
/// event or the window end; rates are over the span from the first event.
pub fn network(samples: &[Timed<NetworkType>], span: WindowSpan) -> [f64; NETWORK_WIDTH] {
    let mut out = [0.0; NETWORK_WIDTH];
    if samples.is_empty() {
        return out;
    }
    let mut durations = [0i64; 3];
    for (i, s) in samples.iter().enumerate() {
        let until = samples.get(i + 1).map_or(span.end_ms, |n| n.ts);
        durations[s.value.code() as usize] += (until - s.ts).max(0);
    }
    let covered: i64 = durations.iter().sum();
    out[0] = samples
        .iter()
        .filter(|s| s.value == NetworkType::Wifi)
        .count() as f64;
    out[1] = samples
        .iter()
        .filter(|s| s.value == NetworkType::Mobile)
        .count() as f64;
    let most = if covered > 0 {
        (0..3)
            .max_by_key(|&i| (durations[i], std::cmp::Reverse(i)))
            .unwrap_or(0)
    } else {
        samples[samples.len() - 1].value.code() as usize
    };
    out[2] = most as f64;
    if covered > 0 {
        out[3] = durations[1] as f64 / covered as f64;
        out[4] = durations[2] as f64 / covered as f64;
    } else {
        out[3] = f64::from(u8::from(most == 1));
        out[4] = f64::from(u8::from(most == 2));
    }
    out
}

pub const WEATHER_CHANNELS: [&str; 8] = [
    "temp",
    "humidity",
    "pressure",
    "wind",
    "clouds",
    "precip",
    "visibility",
    "temp_rate",
];

/// One-hot dominant weather group, then `[mean, std, median, min, max]` for
/// each channel in [`WEATHER_CHANNELS`] order. `temp_rate` is the per-minute
/// first difference of temperature between consecutive readings.
pub fn weather(samples: &[Timed<WeatherReading>]) -> [f64; WEATHER_WIDTH] {
    let mut out = [0.0; WEATHER_WIDTH];
    if samples.is_empty() {
        return out;
    }
    let mut counts = [0usize; WEATHER_TYPES as usize];
    for s in samples {
        counts[usize::from(s.value.code)] += 1;
    }
    let dominant = (0..counts.len())
        .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
        .unwrap_or(0);
    out[dominant] = 1.0;

    let pick =
        |f: fn(&WeatherReading) -> f64| samples.iter().map(|s| f(&s.value)).collect::<Vec<f64>>();
    let temp_rate: Vec<f64> = samples
        .windows(2)
        .filter(|w| w[1].ts > w[0].ts)
        .map(|w| {
            (w[1].value.temperature - w[0].value.temperature)
                / ((w[1].ts - w[0].ts) as f64 / MS_PER_MINUTE as f64)
        })
        .collect();
    let channels = [
        pick(|w| w.temperature),
        pick(|w| w.humidity),
        pick(|w| w.pressure),
        pick(|w| w.wind),
        pick(|w| w.cloudiness),
        pick(|w| w.precipitation),
        pick(|w| w.visibility),
        temp_rate,
    ];
    for (i, ch) in channels.iter().enumerate() {
        let at = WEATHER_TYPES as usize + 5 * i;
        out[at..at + 5].copy_from_slice(&stats::five_number(ch));
    }
    out
}

/// Order: on, off, unlock, interaction counts; unlocks and interactions per
/// minute of window; screen-on minutes; mean and max on-session minutes;
/// minutes until first unlock (window length if none); on-time ratio.
pub fn screen(samples: &[Timed<ScreenEvent>], span: WindowSpan) -> [f64; SCREEN_WIDTH] {
    let mut out = [0.0; SCREEN_WIDTH];
    let window_min = span.minutes();
    let count = |e: ScreenEvent| samples.iter().filter(|s| s.value == e).count() as f64;
    out[0] = count(ScreenEvent::On);
    out[1] = count(ScreenEvent::Off);
    out[2] = count(ScreenEvent::Unlock);
    out[3] = count(ScreenEvent::Interaction);
    if window_min > 0.0 {
        out[4] = out[2] / window_min;
        out[5] = out[3] / window_min;
    }

    let mut sessions = Vec::new();
    let mut on_since: Option<i64> = None;
    for s in samples {
        match s.value {
            ScreenEvent::On | ScreenEvent::Unlock | ScreenEvent::Interaction => {
                on_since.get_or_insert(s.ts);
            }
            ScreenEvent::Off => {
                if let Some(t) = on_since.take() {
                    sessions.push((s.ts - t) as f64 / MS_PER_MINUTE as f64);
                }
            }
        }
    }
    if let Some(t) = on_since {
        sessions.push((span.end_ms - t).max(0) as f64 / MS_PER_MINUTE as f64);
    }
    let on_minutes: f64 = sessions.iter().sum();
    out[6] = on_minutes;
    out[7] = stats::mean(&sessions);
    out[8] = stats::max(&sessions);
    out[9] = samples
        .iter()
        .find(|s| s.value == ScreenEvent::Unlock)
        .map_or(window_min, |s| {
            (s.ts - span.start_ms) as f64 / MS_PER_MINUTE as f64
        });
    out[10] = if window_min > 0.0 {
        on_minutes / window_min
    } else {
        0.0
    };
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPAN: WindowSpan = WindowSpan {
        start_ms: 0,
        end_ms: 3 * MS_PER_HOUR,
    };

    fn timed<T>(v: impl IntoIterator<Item = (i64, T)>) -> Vec<Timed<T>> {
        v.into_iter()
            .map(|(ts, value)| Timed { ts, value })
            .collect()
    }

    #[test]
    fn constant_gravity_accel() {
        let s = timed((0..10).map(|i| {
            (
                i * 100,
                Accel {
                    x: 0.0,
                    y: 0.0,
                    z: 1.0,
                },
            )
        }));
        let f = accelerometer(&s);
        assert_eq!(&f[..5], &[1.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(&f[5..8], &[0.0, 0.0, 1.0]);
        assert!(f[8..].iter().all(|v| *v == 0.0), "{f:?}");
    }

    /// Brute-force reference for the two-sample case, computed independently
    /// of the `stats` helpers.
    #[test]
    fn two_sample_accel_against_hand_values() {
        let s = timed([
            (
                0,
                Accel {
                    x: 1.0,
                    y: 0.0,
                    z: 0.0,
                },
            ),
            (
                1,
                Accel {
                    x: 0.0,
                    y: 1.0,
                    z: 0.0,
                },
            ),
        ]);
        let f = accelerometer(&s);
        assert_eq!(f[0], 1.0);
        assert_eq!(f[1], 0.0);
        // x = {1,0}, y = {0,1}: E[xy] = 0, E[x]E[y] = 1/4
        let cov_xy = (1.0 * 0.0 + 0.0 * 1.0) / 2.0 - 0.5 * 0.5;
        assert_eq!(cov_xy, -0.25);
        assert!((f[20] - cov_xy).abs() < 1e-15);
        assert!((f[17] + 1.0).abs() < 1e-12, "corr xy {}", f[17]);
        assert_eq!(f[8], 0.25);
    }

    #[test]
    fn constant_battery() {
        let s = timed((0..6).map(|i| {
            (
                i * 1000,
                BatteryReading {
                    level: 80.0,
                    charging: false,
                },
            )
        }));
        assert_eq!(battery(&s, SPAN), [80.0, 0.0, 80.0, 80.0, 80.0, 0.0, 0.0]);
    }

    #[test]
    fn battery_counts_charge_episodes() {
        let m = MS_PER_MINUTE;
        let s = timed([
            (
                0,
                BatteryReading {
                    level: 20.0,
                    charging: true,
                },
            ),
            (
                10 * m,
                BatteryReading {
                    level: 30.0,
                    charging: false,
                },
            ),
            (
                20 * m,
                BatteryReading {
                    level: 29.0,
                    charging: true,
                },
            ),
        ]);
        let f = battery(&s, SPAN);
        assert_eq!(f[5], 2.0);
        assert_eq!(f[6], 10.0 + 160.0);
    }

    #[test]
    fn single_place_location() {
        let p = GeoFix {
            lat: 35.6812,
            lon: 139.7671,
        };
        let s = timed((0..5).map(|i| (i * 180_000, p)));
        let f = location(&s, SPAN, Some(cell_of(&p)));
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], 0.0);
        assert_eq!(f[2], 0.0);
        assert_eq!(f[6], 1.0);
        assert_eq!(f[11], 1.0);
    }

    #[test]
    fn single_fix_location() {
        let s = timed([(
            0,
            GeoFix {
                lat: 35.0,
                lon: 139.0,
            },
        )]);
        let f = location(&s, SPAN, None);
        assert_eq!(f[0], 0.0);
        assert_eq!(&f[3..6], &[0.0, 0.0, 0.0]);
        assert_eq!(&f[8..11], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn even_split_entropy_is_ln2() {
        let half = 90 * MS_PER_MINUTE;
        let a = GeoFix {
            lat: 35.0,
            lon: 139.0,
        };
        let b = GeoFix {
            lat: 35.01,
            lon: 139.0,
        };
        let s = timed([(0, a), (half, b)]);
        let f = location(&s, SPAN, None);
        assert!((f[0] - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(f[1], 1.0);
        assert_eq!(f[6], 2.0);
        assert!((f[7] - 0.5).abs() < 1e-12);
        // ~1.11 km in 90 minutes is about 0.74 km/h, below the moving cutoff
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn haversine_one_degree_latitude() {
        let d = haversine_km(
            &GeoFix { lat: 0.0, lon: 0.0 },
            &GeoFix { lat: 1.0, lon: 0.0 },
        );
        assert!((d - 111.195).abs() < 0.01, "{d}");
    }

    #[test]
    fn all_wifi_network() {
        let s = timed([(10, NetworkType::Wifi), (5000, NetworkType::Wifi)]);
        let f = network(&s, SPAN);
        assert_eq!(f, [2.0, 0.0, NetworkType::Wifi.code(), 1.0, 0.0]);
    }

    #[test]
    fn network_rates_bounded() {
        let m = MS_PER_MINUTE;
        let s = timed([
            (0, NetworkType::Wifi),
            (60 * m, NetworkType::None),
            (90 * m, NetworkType::Mobile),
        ]);
        let f = network(&s, SPAN);
        assert!((f[3] - 1.0 / 3.0).abs() < 1e-12);
        assert!((f[4] - 0.5).abs() < 1e-12);
        assert!(f[3] + f[4] <= 1.0);
        assert_eq!(f[2], NetworkType::Mobile.code());
    }

    #[test]
    fn six_unlocks_per_three_hours() {
        let s = timed((0..6).map(|i| (i * 20 * MS_PER_MINUTE, ScreenEvent::Unlock)));
        let f = screen(&s, SPAN);
        assert_eq!(f[2], 6.0);
        assert!((f[4] - 1.0 / 30.0).abs() < 1e-15);
        assert_eq!(f[9], 0.0);
    }

    #[test]
    fn screen_sessions() {
        let m = MS_PER_MINUTE;
        let s = timed([
            (10 * m, ScreenEvent::On),
            (11 * m, ScreenEvent::Unlock),
            (20 * m, ScreenEvent::Off),
            (170 * m, ScreenEvent::On),
        ]);
        let f = screen(&s, SPAN);
        assert_eq!(f[6], 20.0);
        assert_eq!(f[7], 10.0);
        assert_eq!(f[8], 10.0);
        assert_eq!(f[9], 11.0);
        assert!((f[10] - 20.0 / 180.0).abs() < 1e-12);
    }

    #[test]
    fn weather_one_hot_and_rate() {
        let w = |code, temperature| WeatherReading {
            code,
            temperature,
            humidity: 50.0,
            pressure: 1010.0,
            wind: 2.0,
            cloudiness: 20.0,
            precipitation: 0.0,
            visibility: 10_000.0,
        };
        let s = timed([
            (0, w(2, 20.0)),
            (60 * MS_PER_MINUTE, w(2, 23.0)),
            (120 * MS_PER_MINUTE, w(1, 23.0)),
        ]);
        let f = weather(&s);
        assert_eq!(f[2], 1.0);
        assert_eq!(f[..10].iter().sum::<f64>(), 1.0);
        let rate = &f[10 + 5 * 7..];
        assert!((rate[0] - 0.025).abs() < 1e-12);
        assert_eq!(rate[4], 0.05);
    }
}

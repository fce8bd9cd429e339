use chrono::{Duration, NaiveDate, NaiveTime};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use rayon::prelude::*;

use super::{GroundTruth, PlantedAd, SynthConfig, SyntheticDataset};
use crate::ingest::{
    Accel, AdEvent, BatteryReading, GeoFix, MoodAnnotation, NetworkType, PatientCount, QueryEvent,
    ScreenEvent, SensorStream, Series, Timed, WeatherReading,
};
use crate::rng::{self, StreamRng};
use crate::time::{effective_monday, is_weekend, WindowGrid, WindowKey};
use crate::Result;

/// Local prompt hours of the daily mood questionnaire.
pub const PROMPT_HOURS: [u32; 6] = [8, 10, 12, 14, 16, 18];
pub const WINDOWS_PER_DAY: usize = 8;

pub fn user_id(i: usize) -> String {
    format!("u{i:04}")
}

pub fn ad_id(i: usize) -> String {
    format!("ad{i:03}")
}

pub fn positive_word(i: usize) -> String {
    format!("bright {i:04}")
}

pub fn negative_word(i: usize) -> String {
    format!("gloom {i:04}")
}

pub fn neutral_word(i: usize) -> String {
    format!("topic {i:04}")
}

/// Likert answer a user with latent mood `m` gives.
pub fn likert_of(m: f64) -> u8 {
    (4.0 + 3.0 * m).round().clamp(1.0, 7.0) as u8
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn gauss(r: &mut StreamRng, sd: f64) -> f64 {
    if sd <= 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sd).expect("positive sd").sample(r)
}

fn poisson(r: &mut StreamRng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(r) as u64
}

struct Calendar {
    dates: Vec<NaiveDate>,
    weekly: Vec<f64>,
    wave: Vec<f64>,
    expected_patients: Vec<f64>,
    peaks: Vec<f64>,
    effective_mondays: Vec<NaiveDate>,
}

fn calendar(cfg: &SynthConfig) -> Calendar {
    let dates: Vec<NaiveDate> = (0..cfg.n_days)
        .map(|d| cfg.start_date + Duration::days(d as i64))
        .collect();
    let mut effective_mondays = Vec::new();
    let weekly = dates
        .iter()
        .map(|&d| {
            if effective_monday(d, &cfg.holidays) == Some(d) {
                effective_mondays.push(d);
                -cfg.mood.monday_offset
            } else if is_weekend(d) || cfg.holidays.contains(&d) {
                cfg.mood.weekend_lift
            } else {
                0.0
            }
        })
        .collect();
    let mut r = rng::stream(cfg.seed, &["synth-waves".into()]);
    let peaks: Vec<f64> = cfg
        .patients
        .waves
        .iter()
        .map(|w| match cfg.patients.randomize_peaks_margin {
            Some(m) => r.random_range(m as f64..(cfg.n_days - m) as f64),
            None => w.peak_day,
        })
        .collect();
    let expected_wave: Vec<f64> = (0..cfg.n_days)
        .map(|d| {
            cfg.patients
                .waves
                .iter()
                .zip(&peaks)
                .map(|(w, p)| {
                    w.amplitude
                        * (-(d as f64 - p).powi(2) / (2.0 * w.width_days * w.width_days)).exp()
                })
                .sum()
        })
        .collect();
    let max = expected_wave.iter().copied().fold(0.0, f64::max);
    let wave = expected_wave
        .iter()
        .map(|v| if max > 0.0 { v / max } else { 0.0 })
        .collect();
    let expected_patients = expected_wave
        .iter()
        .map(|v| cfg.patients.baseline + v)
        .collect();
    Calendar {
        dates,
        weekly,
        wave,
        expected_patients,
        peaks,
        effective_mondays,
    }
}

/// Country-wide weather, one reading per window.
fn weather(cfg: &SynthConfig) -> Vec<WeatherReading> {
    let mut r = rng::stream(cfg.seed, &["synth-weather".into()]);
    let mut code: u8 = 0;
    let mut out = Vec::with_capacity(cfg.n_days * WINDOWS_PER_DAY);
    for _day in 0..cfg.n_days {
        let base = 24.0 + gauss(&mut r, 2.0);
        for slot in 0..WINDOWS_PER_DAY {
            if r.random_bool(0.3) {
                code = r.random_range(0..crate::ingest::WEATHER_TYPES);
            }
            let hour = (slot * 3) as f64 + 1.5;
            let wet = matches!(code, 2..=5);
            out.push(WeatherReading {
                code,
                temperature: base
                    + 4.0 * ((hour - 9.0) / 24.0 * std::f64::consts::TAU).sin()
                    + gauss(&mut r, 0.5),
                humidity: (60.0 + gauss(&mut r, 12.0) + if wet { 25.0 } else { 0.0 })
                    .clamp(0.0, 100.0),
                pressure: 1010.0 + gauss(&mut r, 4.0),
                wind: gauss(&mut r, 2.0).abs() + 1.0,
                cloudiness: if code == 0 {
                    r.random_range(0.0..20.0)
                } else {
                    r.random_range(20.0..100.0)
                },
                precipitation: if wet { r.random_range(0.1..8.0) } else { 0.0 },
                visibility: if (6..=9).contains(&code) {
                    r.random_range(500.0..4000.0)
                } else {
                    10_000.0
                },
            });
        }
    }
    out
}

/// Evenly spaced sample times inside `[start, end)`.
fn even_times(start: i64, end: i64, n: usize) -> impl Iterator<Item = i64> {
    let len = end - start;
    (0..n).map(move |i| start + (len * i as i64) / n as i64)
}

/// Strictly increasing random times inside `[start, end)`.
fn random_times(r: &mut StreamRng, start: i64, end: i64, n: usize) -> Vec<i64> {
    let mut ts: Vec<i64> = (0..n).map(|_| r.random_range(start..end)).collect();
    ts.sort_unstable();
    ts.dedup();
    ts
}

struct UserOutput {
    streams: Vec<SensorStream>,
    annotations: Vec<MoodAnnotation>,
    queries: Vec<QueryEvent>,
    moods: Vec<f64>,
    /// Window indices with at least one query.
    active_windows: Vec<usize>,
}

fn cell_center(lat: f64, lon: f64) -> GeoFix {
    GeoFix {
        lat: (lat * 1000.0).floor() / 1000.0 + 0.0005,
        lon: (lon * 1000.0).floor() / 1000.0 + 0.0005,
    }
}

fn generate_user(
    cfg: &SynthConfig,
    grid: &WindowGrid,
    cal: &Calendar,
    weather: &[WeatherReading],
    u: usize,
) -> UserOutput {
    let uid = user_id(u);
    let stream = |name: &str| rng::stream(cfg.seed, &[name.into(), u.into()]);
    let n_windows = cfg.n_days * WINDOWS_PER_DAY;

    let mut r = stream("synth-mood");
    let bias = gauss(&mut r, cfg.mood.user_bias_sigma);
    let stationary = cfg.mood.noise_sigma / (1.0 - cfg.mood.ar_coef * cfg.mood.ar_coef).sqrt();
    let mut ar = gauss(&mut r, stationary);
    let mut moods = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        if w > 0 {
            ar = cfg.mood.ar_coef * ar + gauss(&mut r, cfg.mood.noise_sigma);
        }
        let d = w / WINDOWS_PER_DAY;
        let z = bias + ar + cal.weekly[d] - cfg.mood.national_coupling * cal.wave[d];
        moods.push(z.tanh());
    }

    let window_key = |w: usize| {
        WindowKey::new(
            cal.dates[w / WINDOWS_PER_DAY],
            (3 * (w % WINDOWS_PER_DAY)) as u8,
        )
    };
    let spans: Vec<(i64, i64)> = (0..n_windows).map(|w| grid.bounds(window_key(w))).collect();

    let streams = generate_sensors(
        cfg,
        &uid,
        &moods,
        &spans,
        weather,
        &mut stream("synth-sensors"),
    );

    let mut r = stream("synth-annotations");
    let mut annotations = Vec::new();
    for date in &cal.dates {
        for h in PROMPT_HOURS {
            if !r.random_bool(cfg.annotation_compliance) {
                continue;
            }
            let ts =
                grid.utc_ms(date.and_time(NaiveTime::from_hms_opt(h, 0, 0).expect("valid hour")));
            let w = (date.signed_duration_since(cfg.start_date).num_days() as usize)
                * WINDOWS_PER_DAY
                + (h / 3) as usize;
            annotations.push(MoodAnnotation {
                user_id: uid.clone(),
                ts,
                likert: likert_of(moods[w]),
            });
        }
    }

    let q = &cfg.queries;
    let mut r = stream("synth-queries");
    let mut queries = Vec::new();
    let mut active_windows = Vec::new();
    for (w, &(start, end)) in spans.iter().enumerate() {
        if !r.random_bool(q.activity[w % WINDOWS_PER_DAY]) {
            continue;
        }
        active_windows.push(w);
        let n = 1 + poisson(&mut r, q.queries_per_session - 1.0);
        let p_pos = sigmoid(q.polarity_sharpness * moods[w]);
        let mut window_queries: Vec<QueryEvent> = (0..n)
            .map(|_| {
                let word = if r.random_bool(q.sentiment_share) {
                    if r.random_bool(p_pos) {
                        positive_word(r.random_range(0..q.n_positive_words))
                    } else {
                        negative_word(r.random_range(0..q.n_negative_words))
                    }
                } else {
                    neutral_word(r.random_range(0..q.n_neutral_words))
                };
                let raw = if r.random_bool(q.noise_rate) {
                    match r.random_range(0..3) {
                        0 => word.to_uppercase(),
                        1 => format!("  {}\t", word.replace(' ', "   ")),
                        _ => word.replacen('o', "O", 1),
                    }
                } else {
                    word
                };
                QueryEvent {
                    user_id: uid.clone(),
                    ts: r.random_range(start..end),
                    query: raw,
                }
            })
            .collect();
        window_queries.sort_by(|a, b| (a.ts, &a.query).cmp(&(b.ts, &b.query)));
        queries.extend(window_queries);
    }

    UserOutput {
        streams,
        annotations,
        queries,
        moods,
        active_windows,
    }
}

fn generate_sensors(
    cfg: &SynthConfig,
    uid: &str,
    moods: &[f64],
    spans: &[(i64, i64)],
    weather: &[WeatherReading],
    r: &mut StreamRng,
) -> Vec<SensorStream> {
    let s = &cfg.sensors;
    let k = s.coupling;
    let home = cell_center(
        35.6 + r.random_range(0.0..0.2),
        139.6 + r.random_range(0.0..0.2),
    );
    let places: Vec<GeoFix> = (0..6)
        .map(|_| {
            cell_center(
                home.lat + r.random_range(-0.05..0.05),
                home.lon + r.random_range(-0.05..0.05),
            )
        })
        .collect();
    let baro_base = 1010.0 + gauss(r, 3.0);
    let mut battery_level: f64 = r.random_range(40.0..100.0);

    let mut accel = Vec::new();
    let mut baro = Vec::new();
    let mut battery = Vec::new();
    let mut location = Vec::new();
    let mut network = Vec::new();
    let mut weather_out = Vec::new();
    let mut screen = Vec::new();

    for (w, (&(start, end), &m)) in spans.iter().zip(moods).enumerate() {
        // Accelerometer: random device orientation, mood-scaled motion.
        let (theta, phi) = (
            r.random_range(0.0..std::f64::consts::PI),
            r.random_range(0.0..std::f64::consts::TAU),
        );
        let g = [
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        ];
        let activity = 0.08 * (0.5 * k * m + gauss(r, 0.25)).exp();
        for ts in even_times(start, end, s.accelerometer_per_window) {
            let value = Accel {
                x: g[0] + gauss(r, activity),
                y: g[1] + gauss(r, activity),
                z: g[2] + gauss(r, activity),
            };
            accel.push(Timed { ts, value });
        }

        let drift = gauss(r, 1.0);
        for ts in even_times(start, end, s.barometer_per_window) {
            baro.push(Timed {
                ts,
                value: baro_base + drift + gauss(r, 0.2),
            });
        }

        let charging = battery_level < 30.0 || r.random_bool(0.15);
        for ts in even_times(start, end, s.battery_per_window) {
            battery_level = if charging {
                battery_level + r.random_range(0.5..3.0)
            } else {
                battery_level - r.random_range(0.1..1.5)
            };
            battery_level = battery_level.clamp(1.0, 100.0);
            battery.push(Timed {
                ts,
                value: BatteryReading {
                    level: battery_level.round(),
                    charging,
                },
            });
        }

        // Location: more distinct places when mood is high; night at home.
        let p_out = (0.25 + 0.25 * k * m).clamp(0.0, 1.0);
        let n_places = if w % WINDOWS_PER_DAY < 2 {
            1
        } else {
            1 + Binomial::new(3, p_out)
                .expect("valid probability")
                .sample(r) as usize
        };
        let mut visit: Vec<GeoFix> = vec![home];
        let mut others = places.clone();
        others.shuffle(r);
        visit.extend(others.into_iter().take(n_places - 1));
        let n_loc = s.location_per_window;
        for (i, ts) in even_times(start, end, n_loc).enumerate() {
            let p = visit[(i * n_places) / n_loc.max(1)];
            let value = GeoFix {
                lat: p.lat + r.random_range(-0.0002..0.0002),
                lon: p.lon + r.random_range(-0.0002..0.0002),
            };
            location.push(Timed { ts, value });
        }

        // Network: wifi share rises with mood.
        let p_wifi = (0.55 + 0.3 * k * m).clamp(0.0, 1.0);
        let mut net_ts = random_times(r, start, end, s.network_events_per_window);
        while net_ts.len() < s.network_events_per_window {
            net_ts = random_times(r, start, end, s.network_events_per_window);
        }
        for ts in net_ts {
            let value = if r.random_bool(p_wifi) {
                NetworkType::Wifi
            } else if r.random_bool(0.9) {
                NetworkType::Mobile
            } else {
                NetworkType::None
            };
            network.push(Timed { ts, value });
        }

        for ts in even_times(start, end, s.weather_per_window) {
            weather_out.push(Timed {
                ts,
                value: weather[w],
            });
        }

        // Screen: more unlocks when mood is low.
        let unlocks = poisson(r, s.unlock_rate * (-0.6 * k * m).exp()) as usize;
        let starts = random_times(r, start, end - 60_000, unlocks);
        for (i, &t) in starts.iter().enumerate() {
            let limit = starts.get(i + 1).copied().unwrap_or(end) - 1;
            let off = (t + r.random_range(20_000..600_000)).min(limit);
            let mut push = |ts: i64, value| {
                if screen.last().is_none_or(|l: &Timed<ScreenEvent>| l.ts < ts) && ts <= off {
                    screen.push(Timed { ts, value });
                }
            };
            push(t, ScreenEvent::On);
            push(t + 1_000, ScreenEvent::Unlock);
            push(t + 5_000, ScreenEvent::Interaction);
            push(off, ScreenEvent::Off);
        }
    }

    let series = [
        Series::Accelerometer(accel),
        Series::Barometer(baro),
        Series::Battery(battery),
        Series::Location(location),
        Series::Network(network),
        Series::Weather(weather_out),
        Series::Screen(screen),
    ];
    series
        .into_iter()
        .filter(|s| !s.is_empty())
        .map(|series| SensorStream {
            user_id: uid.to_string(),
            series,
        })
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SyntheticDataset> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let cal = calendar(cfg);
    let weather = weather(cfg);
    let users: Vec<UserOutput> = (0..cfg.n_users)
        .into_par_iter()
        .map(|u| generate_user(cfg, &grid, &cal, &weather, u))
        .collect();

    let mut streams = Vec::new();
    let mut annotations = Vec::new();
    let mut queries = Vec::new();
    let mut window_mood = Vec::with_capacity(users.len());
    for u in &users {
        streams.extend(u.streams.iter().cloned());
        annotations.extend(u.annotations.iter().cloned());
        queries.extend(u.queries.iter().cloned());
        window_mood.push(u.moods.clone());
    }
    debug_assert!(streams
        .windows(2)
        .all(|w| (&w[0].user_id, w[0].sensor()) < (&w[1].user_id, w[1].sensor())));

    let (ad_events, planted_ads) = generate_ads(cfg, &grid, &cal, &users);

    let mut r = rng::stream(cfg.seed, &["synth-patients".into()]);
    let patients = cal
        .dates
        .iter()
        .zip(&cal.expected_patients)
        .map(|(&date, &e)| PatientCount {
            date,
            count: (e + gauss(&mut r, cfg.patients.noise_sd)).round().max(0.0) as u64,
        })
        .collect();

    let truth = GroundTruth {
        seed: cfg.seed,
        start_date: cfg.start_date,
        n_days: cfg.n_days,
        timezone: cfg.timezone.clone(),
        windows_per_day: WINDOWS_PER_DAY,
        user_ids: (0..cfg.n_users).map(user_id).collect(),
        window_mood,
        planted_ads,
        wave: cal.wave.clone(),
        wave_peaks: cal.peaks.clone(),
        national_coupling: cfg.mood.national_coupling,
        expected_patients: cal.expected_patients.clone(),
        weekly_offset: cal.weekly.clone(),
        holidays: cfg.holidays.clone(),
        effective_mondays: cal.effective_mondays.clone(),
    };
    Ok(SyntheticDataset {
        config: cfg.clone(),
        streams,
        annotations,
        queries,
        ad_events,
        patients,
        truth,
    })
}

fn generate_ads(
    cfg: &SynthConfig,
    grid: &WindowGrid,
    cal: &Calendar,
    users: &[UserOutput],
) -> (Vec<AdEvent>, Vec<PlantedAd>) {
    let a = &cfg.ads;
    if a.n_ads == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut r = rng::stream(cfg.seed, &["synth-ad-plan".into()]);
    let mut order: Vec<usize> = (0..a.n_ads).collect();
    order.shuffle(&mut r);
    let mut directions = vec![0i8; a.n_ads];
    for &i in order.iter().take(a.n_mood_effective) {
        directions[i] = if r.random_bool(0.5) { 1 } else { -1 };
    }
    let planted: Vec<PlantedAd> = (0..a.n_ads)
        .filter(|&i| directions[i] != 0)
        .map(|i| PlantedAd {
            ad_id: ad_id(i),
            direction: directions[i],
        })
        .collect();

    // Active (user, window) pairs per day: ads are shown next to searches.
    let mut active_by_day: Vec<Vec<(usize, usize)>> = vec![Vec::new(); cfg.n_days];
    for (u, out) in users.iter().enumerate() {
        for &w in &out.active_windows {
            active_by_day[w / WINDOWS_PER_DAY].push((u, w));
        }
    }

    let jobs: Vec<(usize, usize)> = (0..a.n_ads)
        .flat_map(|ad| (a.start_offset_days..a.start_offset_days + a.days).map(move |d| (ad, d)))
        .collect();
    let mut events: Vec<AdEvent> = jobs
        .par_iter()
        .flat_map_iter(|&(ad, d)| {
            let mut r = rng::stream(cfg.seed, &["synth-ad".into(), ad.into(), d.into()]);
            let pool = &active_by_day[d];
            let name = ad_id(ad);
            let dir = f64::from(directions[ad]);
            let mut out = Vec::with_capacity(if pool.is_empty() {
                0
            } else {
                a.impressions_per_day
            });
            if pool.is_empty() {
                log::warn!(
                    "no search activity on {}; ad {name} gets no impressions",
                    cal.dates[d]
                );
                return out.into_iter();
            }
            for _ in 0..a.impressions_per_day {
                let (u, w) = pool[r.random_range(0..pool.len())];
                let key = WindowKey::new(
                    cal.dates[w / WINDOWS_PER_DAY],
                    (3 * (w % WINDOWS_PER_DAY)) as u8,
                );
                let (start, end) = grid.bounds(key);
                let mood01 = (users[u].moods[w] + 1.0) / 2.0;
                let p = (a.ctr_base + dir * a.ctr_mood_slope * (mood01 - 0.5)).clamp(0.0, 1.0);
                out.push(AdEvent {
                    ts: r.random_range(start..end),
                    user_id: user_id(u),
                    ad_id: name.clone(),
                    clicked: r.random_bool(p),
                });
            }
            out.into_iter()
        })
        .collect();
    events.sort_by(|x, y| {
        (&x.ad_id, x.ts, &x.user_id, x.clicked).cmp(&(&y.ad_id, y.ts, &y.user_id, y.clicked))
    });
    (events, planted)
}

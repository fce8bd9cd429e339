use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ingest::SensorKind;
use crate::time::WindowGrid;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_days: usize,
    pub start_date: NaiveDate,
    pub timezone: String,
    pub seed: u64,
    /// Probability that a prompt is answered.
    pub annotation_compliance: f64,
    pub holidays: Vec<NaiveDate>,
    pub mood: MoodProcess,
    pub sensors: SensorSpec,
    pub queries: QuerySpec,
    pub ads: AdSpec,
    pub patients: PatientSpec,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 200,
            n_days: 28,
            start_date: NaiveDate::from_ymd_opt(2019, 7, 1).expect("valid date"),
            timezone: "Asia/Tokyo".into(),
            seed: 42,
            annotation_compliance: 0.3,
            holidays: vec![NaiveDate::from_ymd_opt(2019, 7, 15).expect("valid date")],
            mood: MoodProcess::default(),
            sensors: SensorSpec::default(),
            queries: QuerySpec::default(),
            ads: AdSpec::default(),
            patients: PatientSpec::default(),
        }
    }
}

/// Latent mood of a user window is
/// `tanh(user_bias + ar + weekly(day) - national_coupling * wave(day))`,
/// where `ar` is an AR(1) process over consecutive windows and `wave` is the
/// patient wave scaled to a peak of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoodProcess {
    pub ar_coef: f64,
    pub noise_sigma: f64,
    pub user_bias_sigma: f64,
    /// Subtracted on each week's first working day.
    pub monday_offset: f64,
    /// Added on weekends and holidays.
    pub weekend_lift: f64,
    pub national_coupling: f64,
}

impl Default for MoodProcess {
    fn default() -> Self {
        Self {
            ar_coef: 0.7,
            noise_sigma: 0.35,
            user_bias_sigma: 0.3,
            monday_offset: 0.3,
            weekend_lift: 0.15,
            national_coupling: 0.8,
        }
    }
}

/// Samples per 3-hour window for fixed-rate sensors, plus mood couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSpec {
    pub accelerometer_per_window: usize,
    pub barometer_per_window: usize,
    pub battery_per_window: usize,
    pub location_per_window: usize,
    pub weather_per_window: usize,
    pub network_events_per_window: usize,
    /// Mean unlocks per window at neutral mood.
    pub unlock_rate: f64,
    /// Scales every sensor-mood coupling; 0 makes sensors uninformative.
    pub coupling: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            accelerometer_per_window: 24,
            barometer_per_window: 4,
            battery_per_window: 4,
            location_per_window: 6,
            weather_per_window: 2,
            network_events_per_window: 3,
            unlock_rate: 4.0,
            coupling: 1.0,
        }
    }
}

impl SensorSpec {
    /// Full collection rates: accelerometer 10 Hz,
    /// barometer and battery 1 Hz, location every 180 s, weather every 60 s.
    pub fn full_rate() -> Self {
        let secs = 3 * 3600;
        Self {
            accelerometer_per_window: secs * 10,
            barometer_per_window: secs,
            battery_per_window: secs,
            location_per_window: secs / 180,
            weather_per_window: secs / 60,
            ..Self::default()
        }
    }

    /// Fixed count per window, `None` for event-driven sensors.
    pub fn per_window(&self, kind: SensorKind) -> Option<usize> {
        match kind {
            SensorKind::Accelerometer => Some(self.accelerometer_per_window),
            SensorKind::Barometer => Some(self.barometer_per_window),
            SensorKind::Battery => Some(self.battery_per_window),
            SensorKind::Location => Some(self.location_per_window),
            SensorKind::Weather => Some(self.weather_per_window),
            SensorKind::Network => Some(self.network_events_per_window),
            SensorKind::Screen => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuerySpec {
    pub n_positive_words: usize,
    pub n_negative_words: usize,
    pub n_neutral_words: usize,
    /// Probability that a window has any search activity, per window slot.
    pub activity: Vec<f64>,
    /// Mean queries in an active window (at least one).
    pub queries_per_session: f64,
    /// Probability that a query carries sentiment.
    pub sentiment_share: f64,
    /// Steepness of the positive-word probability `sigmoid(k * mood)`.
    pub polarity_sharpness: f64,
    /// Probability of case or whitespace noise on a raw query.
    pub noise_rate: f64,
}

impl Default for QuerySpec {
    fn default() -> Self {
        Self {
            n_positive_words: 1000,
            n_negative_words: 1000,
            n_neutral_words: 5000,
            activity: vec![0.15, 0.1, 0.6, 0.8, 0.8, 0.8, 0.9, 0.7],
            queries_per_session: 3.0,
            sentiment_share: 0.5,
            polarity_sharpness: 3.0,
            noise_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdSpec {
    pub n_ads: usize,
    pub n_mood_effective: usize,
    pub days: usize,
    /// Campaign start, in days after the dataset start.
    pub start_offset_days: usize,
    pub impressions_per_day: usize,
    pub ctr_base: f64,
    /// Click probability is `ctr_base + direction * slope * (mood01 - 0.5)`.
    pub ctr_mood_slope: f64,
}

impl Default for AdSpec {
    fn default() -> Self {
        Self {
            n_ads: 20,
            n_mood_effective: 5,
            days: 14,
            start_offset_days: 7,
            impressions_per_day: 2000,
            ctr_base: 0.1,
            ctr_mood_slope: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatientSpec {
    pub baseline: f64,
    pub noise_sd: f64,
    pub waves: Vec<Wave>,
    /// When set, each wave's peak is redrawn uniformly inside the dataset,
    /// away from the edges by this many days.
    pub randomize_peaks_margin: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wave {
    /// Days after the dataset start.
    pub peak_day: f64,
    pub width_days: f64,
    pub amplitude: f64,
}

impl Default for PatientSpec {
    fn default() -> Self {
        Self {
            baseline: 50.0,
            noise_sd: 10.0,
            waves: vec![Wave {
                peak_day: 14.0,
                width_days: 4.0,
                amplitude: 500.0,
            }],
            randomize_peaks_margin: Some(6),
        }
    }
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} is not a probability")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} = {v} must be finite and non-negative"
        )))
    }
}

impl SynthConfig {
    /// Full study scale: 460 users for 90 days.
    pub fn study_scale() -> Self {
        Self {
            n_users: 460,
            n_days: 90,
            ..Self::default()
        }
    }

    pub fn grid(&self) -> Result<WindowGrid> {
        WindowGrid::three_hour(&self.timezone)
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start_date + chrono::Duration::days(self.n_days as i64 - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_days == 0 {
            return Err(Error::Config("n_users and n_days must be positive".into()));
        }
        self.grid()?;
        check_prob("annotation_compliance", self.annotation_compliance)?;
        let m = &self.mood;
        if !(m.ar_coef.abs() < 1.0) {
            return Err(Error::Config(format!(
                "mood.ar_coef = {} must lie in (-1, 1)",
                m.ar_coef
            )));
        }
        for (n, v) in [
            ("mood.noise_sigma", m.noise_sigma),
            ("mood.user_bias_sigma", m.user_bias_sigma),
            ("mood.monday_offset", m.monday_offset),
            ("mood.weekend_lift", m.weekend_lift),
            ("mood.national_coupling", m.national_coupling),
            ("sensors.unlock_rate", self.sensors.unlock_rate),
            ("sensors.coupling", self.sensors.coupling),
            (
                "queries.queries_per_session",
                self.queries.queries_per_session,
            ),
            (
                "queries.polarity_sharpness",
                self.queries.polarity_sharpness,
            ),
            ("patients.baseline", self.patients.baseline),
            ("patients.noise_sd", self.patients.noise_sd),
        ] {
            check_nonneg(n, v)?;
        }
        let q = &self.queries;
        if q.activity.len() != 8 {
            return Err(Error::Config(format!(
                "queries.activity needs 8 window slots, got {}",
                q.activity.len()
            )));
        }
        for a in &q.activity {
            check_prob("queries.activity", *a)?;
        }
        check_prob("queries.sentiment_share", q.sentiment_share)?;
        check_prob("queries.noise_rate", q.noise_rate)?;
        if q.queries_per_session < 1.0 {
            return Err(Error::Config(
                "queries.queries_per_session must be at least 1".into(),
            ));
        }
        if q.sentiment_share > 0.0 && (q.n_positive_words == 0 || q.n_negative_words == 0) {
            return Err(Error::Config(
                "sentiment queries need positive and negative words".into(),
            ));
        }
        if q.sentiment_share < 1.0 && q.n_neutral_words == 0 {
            return Err(Error::Config("neutral queries need neutral words".into()));
        }
        let a = &self.ads;
        if a.n_mood_effective > a.n_ads {
            return Err(Error::Config(format!(
                "ads.n_mood_effective = {} exceeds ads.n_ads = {}",
                a.n_mood_effective, a.n_ads
            )));
        }
        if a.n_ads > 0 && a.start_offset_days + a.days > self.n_days {
            return Err(Error::Config(format!(
                "ad campaign days {}..{} run past the {}-day dataset",
                a.start_offset_days,
                a.start_offset_days + a.days,
                self.n_days
            )));
        }
        check_prob("ads.ctr_base", a.ctr_base)?;
        check_nonneg("ads.ctr_mood_slope", a.ctr_mood_slope)?;
        check_prob(
            "ads.ctr_base - slope/2",
            a.ctr_base - a.ctr_mood_slope / 2.0,
        )?;
        check_prob(
            "ads.ctr_base + slope/2",
            a.ctr_base + a.ctr_mood_slope / 2.0,
        )?;
        for w in &self.patients.waves {
            check_nonneg("patients.waves.amplitude", w.amplitude)?;
            if !(w.width_days > 0.0) {
                return Err(Error::Config(
                    "patients.waves.width_days must be positive".into(),
                ));
            }
        }
        if let Some(margin) = self.patients.randomize_peaks_margin {
            if 2 * margin >= self.n_days {
                return Err(Error::Config(format!(
                    "peak margin {margin} leaves no room in {} days",
                    self.n_days
                )));
            }
        }
        Ok(())
    }
}

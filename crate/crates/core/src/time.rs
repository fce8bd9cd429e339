//! Local-time window alignment.
//!
//! All timestamps are UTC milliseconds. A dataset carries one IANA timezone
//! and windows are aligned to local midnight, so a window is identified by
//! its local date and local start hour.

use std::fmt;
use std::str::FromStr;

use chrono::{
    DateTime, Datelike, Duration, LocalResult, NaiveDate, NaiveDateTime, TimeZone, Timelike, Utc,
    Weekday,
};
use chrono_tz::Tz;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

pub const MS_PER_MINUTE: i64 = 60_000;
pub const MS_PER_HOUR: i64 = 3_600_000;

/// Identifies one local-time window: `[date hour:00, date hour+len:00)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WindowKey {
    pub date: NaiveDate,
    pub hour: u8,
}

impl WindowKey {
    pub fn new(date: NaiveDate, hour: u8) -> Self {
        Self { date, hour }
    }

    pub fn local_start(&self) -> NaiveDateTime {
        self.date
            .and_hms_opt(u32::from(self.hour), 0, 0)
            .expect("hour < 24")
    }
}

impl fmt::Display for WindowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}T{:02}:00", self.date.format("%Y-%m-%d"), self.hour)
    }
}

impl FromStr for WindowKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dt = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M")
            .map_err(|e| Error::Parse(format!("bad window key {s:?}: {e}")))?;
        if dt.minute() != 0 {
            return Err(Error::Parse(format!("window key {s:?} not on the hour")));
        }
        Ok(Self {
            date: dt.date(),
            hour: dt.hour() as u8,
        })
    }
}

impl Serialize for WindowKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WindowKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Timezone plus window length; converts UTC instants to local windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowGrid {
    tz: Tz,
    hours: u32,
}

impl WindowGrid {
    pub fn new(tz_name: &str, hours: u32) -> Result<Self, Error> {
        let tz: Tz = tz_name
            .parse()
            .map_err(|_| Error::Config(format!("unknown IANA timezone {tz_name:?}")))?;
        if hours == 0 || 24 % hours != 0 {
            return Err(Error::Config(format!(
                "window length {hours}h does not divide a day"
            )));
        }
        Ok(Self { tz, hours })
    }

    /// Three-hour windows in the given zone.
    pub fn three_hour(tz_name: &str) -> Result<Self, Error> {
        Self::new(tz_name, 3)
    }

    pub fn tz(&self) -> Tz {
        self.tz
    }

    pub fn hours(&self) -> u32 {
        self.hours
    }

    pub fn windows_per_day(&self) -> u32 {
        24 / self.hours
    }

    pub fn local(&self, ts_ms: i64) -> NaiveDateTime {
        let utc = DateTime::<Utc>::from_timestamp_millis(ts_ms).expect("timestamp in chrono range");
        utc.with_timezone(&self.tz).naive_local()
    }

    pub fn local_date(&self, ts_ms: i64) -> NaiveDate {
        self.local(ts_ms).date()
    }

    pub fn window_of(&self, ts_ms: i64) -> WindowKey {
        let local = self.local(ts_ms);
        let hour = local.hour() / self.hours * self.hours;
        WindowKey {
            date: local.date(),
            hour: hour as u8,
        }
    }

    /// UTC milliseconds for a local wall-clock time. Nonexistent local times
    /// (DST gaps) resolve to the first instant after the gap.
    pub fn utc_ms(&self, local: NaiveDateTime) -> i64 {
        match self.tz.from_local_datetime(&local) {
            LocalResult::Single(t) => t.timestamp_millis(),
            LocalResult::Ambiguous(a, _) => a.timestamp_millis(),
            LocalResult::None => {
                let mut probe = local;
                loop {
                    probe += Duration::minutes(1);
                    if let Some(t) = self.tz.from_local_datetime(&probe).earliest() {
                        return t.timestamp_millis();
                    }
                }
            }
        }
    }

    /// Half-open UTC bounds of a window.
    pub fn bounds(&self, key: WindowKey) -> (i64, i64) {
        let start = key.local_start();
        let end = start + Duration::hours(i64::from(self.hours));
        (self.utc_ms(start), self.utc_ms(end))
    }

    pub fn day_bounds(&self, date: NaiveDate) -> (i64, i64) {
        let start = date.and_hms_opt(0, 0, 0).expect("midnight");
        (self.utc_ms(start), self.utc_ms(start + Duration::days(1)))
    }

    /// All window keys of a local date, in order.
    pub fn windows_of_day(&self, date: NaiveDate) -> impl Iterator<Item = WindowKey> + '_ {
        (0..self.windows_per_day()).map(move |i| WindowKey {
            date,
            hour: (i * self.hours) as u8,
        })
    }
}

/// First Sunday on or after January 1st of `year`.
pub fn first_sunday(year: i32) -> NaiveDate {
    let jan1 = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    let offset = (7 - jan1.weekday().num_days_from_sunday()) % 7;
    jan1 + Duration::days(i64::from(offset))
}

/// The first working day of the Monday-started week containing `date`:
/// Monday unless it is a holiday, then Tuesday, and so on through Friday.
pub fn effective_monday(date: NaiveDate, holidays: &[NaiveDate]) -> Option<NaiveDate> {
    let monday = date - Duration::days(i64::from(date.weekday().num_days_from_monday()));
    (0..5)
        .map(|i| monday + Duration::days(i))
        .find(|d| !holidays.contains(d))
}

pub fn is_weekend(date: NaiveDate) -> bool {
    matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

pub fn parse_date(s: &str) -> Result<NaiveDate, Error> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::Parse(format!("bad date {s:?}: {e}")))
}

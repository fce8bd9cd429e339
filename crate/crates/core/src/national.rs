//! Daily national mood series and its analyses.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::ingest::PatientCount;
use crate::qmm::{score_sessions, LogRegModel, Session, SessionScore};
use crate::time::{effective_monday, first_sunday};
use crate::{stats, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    FirstSunday,
    RelativeToYear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub date: NaiveDate,
    pub score: f64,
    pub n_users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoodSeries {
    /// Strictly increasing dates.
    pub points: Vec<SeriesPoint>,
    /// Requested dates without any active user.
    pub gaps: Vec<NaiveDate>,
    pub normalization: Normalization,
}

impl MoodSeries {
    pub fn get(&self, date: NaiveDate) -> Option<&SeriesPoint> {
        self.points
            .binary_search_by_key(&date, |p| p.date)
            .ok()
            .map(|i| &self.points[i])
    }

    pub fn scores(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.score).collect()
    }
}

/// Mean of a user's session scores for one day; `None` without sessions.
pub fn daily_user_score(session_scores: &[f64]) -> Option<f64> {
    (!session_scores.is_empty()).then(|| stats::mean(session_scores))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserDayScore {
    pub user_id: String,
    pub date: NaiveDate,
    pub score: f64,
    pub sessions: usize,
}

/// One score per (user, local date) with at least one non-empty session.
pub fn daily_user_scores(sessions: &[Session], model: &LogRegModel) -> Vec<UserDayScore> {
    user_day_scores(&score_sessions(sessions, model))
}

/// Groups already scored sessions by user and local date.
pub fn user_day_scores(scores: &[SessionScore]) -> Vec<UserDayScore> {
    let mut by_day: BTreeMap<(&str, NaiveDate), Vec<f64>> = BTreeMap::new();
    for s in scores.iter().filter(|s| s.n_queries > 0) {
        by_day
            .entry((s.user_id.as_str(), s.window.date))
            .or_default()
            .push(s.score);
    }
    by_day
        .into_iter()
        .filter_map(|((user, date), scores)| {
            daily_user_score(&scores).map(|score| UserDayScore {
                user_id: user.to_string(),
                date,
                score,
                sessions: scores.len(),
            })
        })
        .collect()
}

/// Unweighted mean over active users per day in `[from, to]`. A user id
/// counts once per day; repeated rows for the same user are averaged first.
pub fn daily_national_score(
    scores: &[UserDayScore],
    from: NaiveDate,
    to: NaiveDate,
) -> Result<MoodSeries> {
    if to < from {
        return Err(Error::InvalidInput(format!(
            "date range {from}..{to} is empty"
        )));
    }
    let mut per_user: BTreeMap<(NaiveDate, &str), Vec<f64>> = BTreeMap::new();
    for s in scores.iter().filter(|s| s.date >= from && s.date <= to) {
        per_user
            .entry((s.date, s.user_id.as_str()))
            .or_default()
            .push(s.score);
    }
    let mut per_day: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for ((date, _), v) in per_user {
        per_day.entry(date).or_default().push(stats::mean(&v));
    }
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    let mut d = from;
    while d <= to {
        match per_day.get(&d) {
            Some(v) => points.push(SeriesPoint {
                date: d,
                score: stats::mean(v),
                n_users: v.len(),
            }),
            None => gaps.push(d),
        }
        d += Duration::days(1);
    }
    if !gaps.is_empty() {
        log::warn!("{} day(s) without active users left as gaps", gaps.len());
    }
    Ok(MoodSeries {
        points,
        gaps,
        normalization: Normalization::Raw,
    })
}

/// Divides every point by the series value on `year`'s first Sunday.
pub fn normalize_first_sunday(series: &MoodSeries, year: i32) -> Result<MoodSeries> {
    let base_date = first_sunday(year);
    let base = series
        .get(base_date)
        .ok_or_else(|| {
            Error::InsufficientData(format!(
                "series has no value on {base_date}, the first Sunday of {year}"
            ))
        })?
        .score;
    if base == 0.0 || !base.is_finite() {
        return Err(Error::InvalidInput(format!(
            "first-Sunday score on {base_date} is {base}"
        )));
    }
    Ok(MoodSeries {
        points: series
            .points
            .iter()
            .map(|p| SeriesPoint {
                score: p.score / base,
                ..*p
            })
            .collect(),
        gaps: series.gaps.clone(),
        normalization: Normalization::FirstSunday,
    })
}

/// Index of a Sunday counted from its year's first Sunday.
fn sunday_index(date: NaiveDate) -> i64 {
    (date - first_sunday(date.year())).num_days() / 7
}

/// Sunday-by-Sunday ratio `target / base`, matched by the Sunday's index
/// within its year. Unmatched Sundays are skipped.
pub fn relative_series(target: &MoodSeries, base: &MoodSeries) -> MoodSeries {
    let base_by_week: HashMap<i64, f64> = base
        .points
        .iter()
        .filter(|p| p.date.weekday() == Weekday::Sun && p.date >= first_sunday(p.date.year()))
        .map(|p| (sunday_index(p.date), p.score))
        .collect();
    let mut points = Vec::new();
    let mut skipped = 0;
    for p in target
        .points
        .iter()
        .filter(|p| p.date.weekday() == Weekday::Sun && p.date >= first_sunday(p.date.year()))
    {
        match base_by_week.get(&sunday_index(p.date)) {
            Some(&b) if b != 0.0 => points.push(SeriesPoint {
                score: p.score / b,
                ..*p
            }),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} Sunday(s) without a matching base week skipped");
    }
    MoodSeries {
        points,
        gaps: Vec::new(),
        normalization: Normalization::RelativeToYear,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekdayProfile {
    /// Mean score per weekday, Monday first. With holidays given, slot 0 holds
    /// each week's first working day and holidays are left out.
    pub means: [f64; 7],
    pub counts: [usize; 7],
    pub holiday_adjusted: bool,
}

impl WeekdayProfile {
    /// Weekday with the lowest mean (ties to the earliest).
    pub fn argmin(&self) -> Weekday {
        let i = (0..7)
            .filter(|&i| self.counts[i] > 0)
            .min_by(|&a, &b| self.means[a].total_cmp(&self.means[b]).then(a.cmp(&b)))
            .unwrap_or(0);
        Weekday::try_from(i as u8).expect("0..7")
    }
}

pub fn weekday_profile(series: &MoodSeries, holidays: &[NaiveDate]) -> Result<WeekdayProfile> {
    if series.points.len() < 28 {
        return Err(Error::InsufficientData(format!(
            "weekday profile needs 4 weeks, series has {} days",
            series.points.len()
        )));
    }
    let mut sums = [0.0; 7];
    let mut counts = [0usize; 7];
    for p in &series.points {
        if holidays.contains(&p.date) {
            continue;
        }
        let slot = if effective_monday(p.date, holidays) == Some(p.date) {
            0
        } else {
            p.date.weekday().num_days_from_monday() as usize
        };
        sums[slot] += p.score;
        counts[slot] += 1;
    }
    let means = std::array::from_fn(|i| {
        if counts[i] > 0 {
            sums[i] / counts[i] as f64
        } else {
            0.0
        }
    });
    Ok(WeekdayProfile {
        means,
        counts,
        holiday_adjusted: !holidays.is_empty(),
    })
}

/// Lowest-scoring date among the given week's points (Monday-started).
pub fn week_argmin(series: &MoodSeries, any_day: NaiveDate) -> Option<NaiveDate> {
    let monday = any_day - Duration::days(i64::from(any_day.weekday().num_days_from_monday()));
    series
        .points
        .iter()
        .filter(|p| p.date >= monday && p.date < monday + Duration::days(7))
        .min_by(|a, b| a.score.total_cmp(&b.score))
        .map(|p| p.date)
}

/// Like [`week_argmin`], but on residuals from a centered 7-day moving
/// average, so a slow trend across the week does not hide the weekly dip.
pub fn detrended_week_argmin(series: &MoodSeries, any_day: NaiveDate) -> Option<NaiveDate> {
    let monday = any_day - Duration::days(i64::from(any_day.weekday().num_days_from_monday()));
    series
        .points
        .iter()
        .filter(|p| p.date >= monday && p.date < monday + Duration::days(7))
        .map(|p| {
            let near: Vec<f64> = series
                .points
                .iter()
                .filter(|q| (q.date - p.date).num_days().abs() <= 3)
                .map(|q| q.score)
                .collect();
            (p.date, p.score - stats::mean(&near))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(d, _)| d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagCorrelation {
    pub lag: i64,
    pub n: usize,
    /// `None` when either side has zero variance.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub r: Option<f64>,
    /// Mood on day d against patients on day d - lag.
    pub lags: Vec<LagCorrelation>,
}

pub fn mood_patient_correlation(
    series: &MoodSeries,
    patients: &[PatientCount],
) -> Result<CorrelationReport> {
    let counts: HashMap<NaiveDate, f64> =
        patients.iter().map(|p| (p.date, p.count as f64)).collect();
    let at_lag = |lag: i64| {
        let (m, c): (Vec<f64>, Vec<f64>) = series
            .points
            .iter()
            .filter_map(|p| {
                counts
                    .get(&(p.date - Duration::days(lag)))
                    .map(|c| (p.score, *c))
            })
            .unzip();
        LagCorrelation {
            lag,
            n: m.len(),
            r: stats::pearson(&m, &c),
        }
    };
    let lags: Vec<LagCorrelation> = (0..=7).map(at_lag).collect();
    let zero = lags[0];
    if zero.n < 8 {
        return Err(Error::InsufficientData(format!(
            "only {} overlapping days between mood and patient series",
            zero.n
        )));
    }
    if zero.r.is_none() {
        log::warn!("correlation undefined: one series has zero variance");
    }
    Ok(CorrelationReport {
        n: zero.n,
        r: zero.r,
        lags,
    })
}

/// `date,score,n_users`
pub fn write_series(path: &Path, series: &MoodSeries) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let io = |e| Error::io(path, e);
    writeln!(w, "date,score,n_users").map_err(io)?;
    for p in &series.points {
        writeln!(w, "{},{:?},{}", p.date, p.score, p.n_users).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_series(path: &Path, normalization: Normalization) -> Result<MoodSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse(format!("{}: {other:?}", path.display())),
        })?;
    let mut points: Vec<SeriesPoint> = reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    points.sort_by_key(|p| p.date);
    if points.windows(2).any(|w| w[0].date == w[1].date) {
        return Err(Error::Parse(format!("{}: duplicate dates", path.display())));
    }
    Ok(MoodSeries {
        points,
        gaps: Vec::new(),
        normalization,
    })
}

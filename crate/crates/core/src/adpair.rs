//! Pairwise mood-effectiveness statistic over ad logs.
//!
//! For every ad and day, random record pairs are drawn; when exactly one of
//! the two was clicked, the pair is a "positive" win if the clicker's mood
//! score is strictly higher and a "negative" win if strictly lower. The day
//! goes to whichever side won more pairs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::ingest::AdEvent;
use crate::qmm::{score_sessions, LogRegModel, Session, SessionScore};
use crate::rng::{self, StreamRng};
use crate::time::{WindowGrid, WindowKey};
use crate::{stats, Error, Result};

/// A day is a clear win when one side takes at least this many of 14 days.
pub const EFFECTIVE_DAYS: u32 = 13;
pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAdRecord {
    pub ts: i64,
    #[serde(rename = "user")]
    pub user_id: String,
    #[serde(rename = "ad")]
    pub ad_id: String,
    pub clicked: bool,
    pub mood_score: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct JoinReport {
    pub joined: usize,
    pub dropped: usize,
}

/// Attaches the user's session score for the window containing each event.
/// Events whose window has no query session are dropped and counted.
pub fn score_ad_records(
    events: &[AdEvent],
    model: &LogRegModel,
    sessions: &[Session],
    grid: &WindowGrid,
) -> Result<(Vec<ScoredAdRecord>, JoinReport)> {
    join_ad_scores(events, &score_sessions(sessions, model), grid)
}

/// Same join from precomputed session scores.
pub fn join_ad_scores(
    events: &[AdEvent],
    scores: &[SessionScore],
    grid: &WindowGrid,
) -> Result<(Vec<ScoredAdRecord>, JoinReport)> {
    let scores: HashMap<(&str, WindowKey), f64> = scores
        .iter()
        .map(|s| ((s.user_id.as_str(), s.window), s.score))
        .collect();
    let mut report = JoinReport::default();
    let mut out = Vec::with_capacity(events.len());
    for e in events {
        match scores.get(&(e.user_id.as_str(), grid.window_of(e.ts))) {
            Some(&mood_score) => {
                report.joined += 1;
                out.push(ScoredAdRecord {
                    ts: e.ts,
                    user_id: e.user_id.clone(),
                    ad_id: e.ad_id.clone(),
                    clicked: e.clicked,
                    mood_score,
                });
            }
            None => report.dropped += 1,
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientData(format!(
            "none of {} ad events falls in a window with search activity",
            events.len()
        )));
    }
    Ok((out, report))
}

/// A record reduced to what the pairwise comparison needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRecord {
    pub clicked: bool,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayWinner {
    Positive,
    Negative,
    Tie,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounts {
    pub positive_wins: u64,
    pub negative_wins: u64,
    pub ties_discarded: u64,
}

impl PairCounts {
    pub fn effective(&self) -> u64 {
        self.positive_wins + self.negative_wins
    }

    /// Share of positive wins among decided pairs.
    pub fn positive_ratio(&self) -> Option<f64> {
        (self.effective() > 0).then(|| self.positive_wins as f64 / self.effective() as f64)
    }

    pub fn winner(&self) -> DayWinner {
        match self.positive_wins.cmp(&self.negative_wins) {
            std::cmp::Ordering::Greater => DayWinner::Positive,
            std::cmp::Ordering::Less => DayWinner::Negative,
            std::cmp::Ordering::Equal => DayWinner::Tie,
        }
    }
}

/// Runs `trials` draws of two distinct records.
pub fn sample_pairs(records: &[PairRecord], trials: u64, rng: &mut StreamRng) -> PairCounts {
    let n = records.len();
    let mut c = PairCounts::default();
    if n < 2 {
        return c;
    }
    for _ in 0..trials {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (records[i], records[j]);
        if a.clicked == b.clicked {
            continue;
        }
        let (clicked, other) = if a.clicked {
            (a.score, b.score)
        } else {
            (b.score, a.score)
        };
        if clicked > other {
            c.positive_wins += 1;
        } else if clicked < other {
            c.negative_wins += 1;
        } else {
            c.ties_discarded += 1;
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayResult {
    #[serde(rename = "ad")]
    pub ad_id: String,
    pub date: NaiveDate,
    pub records: usize,
    pub trials_requested: u64,
    pub positive_wins: u64,
    pub negative_wins: u64,
    pub ties_discarded: u64,
    pub trials_effective: u64,
    pub winner: DayWinner,
}

fn day_stream(seed: u64, ad_id: &str, date: NaiveDate) -> StreamRng {
    let d = date.to_string();
    rng::stream(
        seed,
        &["adpair-day".into(), ad_id.into(), d.as_str().into()],
    )
}

/// The pairwise statistic for one ad on one day, on its own RNG stream.
pub fn pairwise_day(
    ad_id: &str,
    date: NaiveDate,
    records: &[PairRecord],
    trials: u64,
    seed: u64,
) -> Result<DayResult> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "ad {ad_id} on {date} has {} record(s); at least 2 are needed",
            records.len()
        )));
    }
    let c = sample_pairs(records, trials, &mut day_stream(seed, ad_id, date));
    Ok(DayResult {
        ad_id: ad_id.to_string(),
        date,
        records: records.len(),
        trials_requested: trials,
        positive_wins: c.positive_wins,
        negative_wins: c.negative_wins,
        ties_discarded: c.ties_discarded,
        trials_effective: c.effective(),
        winner: c.winner(),
    })
}

/// Exact positive ratio over all clicked x non-clicked pairs. `Ok(None)` when
/// every such pair is tied.
pub fn exhaustive_positive_ratio(records: &[PairRecord]) -> Result<Option<f64>> {
    let clicked: Vec<f64> = records
        .iter()
        .filter(|r| r.clicked)
        .map(|r| r.score)
        .collect();
    let mut other: Vec<f64> = records
        .iter()
        .filter(|r| !r.clicked)
        .map(|r| r.score)
        .collect();
    if clicked.is_empty() || other.is_empty() {
        return Err(Error::InsufficientData(
            "exhaustive ratio needs clicked and non-clicked records".into(),
        ));
    }
    other.sort_by(f64::total_cmp);
    let (mut wins, mut losses) = (0u64, 0u64);
    for c in clicked {
        let below = other.partition_point(|o| *o < c) as u64;
        let not_above = other.partition_point(|o| *o <= c) as u64;
        wins += below;
        losses += other.len() as u64 - not_above;
    }
    Ok((wins + losses > 0).then(|| wins as f64 / (wins + losses) as f64))
}

/// Groups records into `(ad, local date)` buckets.
pub fn group_by_ad_day(
    records: &[ScoredAdRecord],
    grid: &WindowGrid,
) -> BTreeMap<(String, NaiveDate), Vec<PairRecord>> {
    let mut map: BTreeMap<(String, NaiveDate), Vec<PairRecord>> = BTreeMap::new();
    for r in records {
        map.entry((r.ad_id.clone(), grid.local_date(r.ts)))
            .or_default()
            .push(PairRecord {
                clicked: r.clicked,
                score: r.mood_score,
            });
    }
    map
}

/// Day results for every (ad, day) bucket. Buckets with fewer than two
/// records are skipped with a warning.
pub fn analyze_days(
    records: &[ScoredAdRecord],
    grid: &WindowGrid,
    trials: u64,
    seed: u64,
) -> Vec<DayResult> {
    let groups: Vec<((String, NaiveDate), Vec<PairRecord>)> =
        group_by_ad_day(records, grid).into_iter().collect();
    groups
        .par_iter()
        .filter_map(
            |((ad, date), recs)| match pairwise_day(ad, *date, recs, trials, seed) {
                Ok(d) => Some(d),
                Err(e) => {
                    log::warn!("{e}");
                    None
                }
            },
        )
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    #[serde(rename = "ad")]
    pub ad_id: String,
    pub days: u32,
    pub n_positive_days: u32,
    pub n_negative_days: u32,
    pub n_tie_days: u32,
    /// `"k/days"` with `k = n_positive_days`.
    pub bucket: String,
    pub mood_effective: bool,
}

/// Tied days count as non-positive.
pub fn campaign_summary(ad_id: &str, days: &[DayResult]) -> CampaignSummary {
    let count = |w: DayWinner| days.iter().filter(|d| d.winner == w).count() as u32;
    let (pos, neg, tie) = (
        count(DayWinner::Positive),
        count(DayWinner::Negative),
        count(DayWinner::Tie),
    );
    let n = days.len() as u32;
    CampaignSummary {
        ad_id: ad_id.to_string(),
        days: n,
        n_positive_days: pos,
        n_negative_days: neg,
        n_tie_days: tie,
        bucket: format!("{pos}/{n}"),
        mood_effective: is_mood_effective(pos, neg, n),
    }
}

/// At least 13 of 14 days to one side, scaled for other campaign lengths.
pub fn is_mood_effective(positive_days: u32, negative_days: u32, days: u32) -> bool {
    let need = days.saturating_sub(14 - EFFECTIVE_DAYS).max(1);
    days > 0 && (positive_days >= need || negative_days >= need)
}

pub fn summarize_campaigns(days: &[DayResult]) -> Vec<CampaignSummary> {
    let mut by_ad: BTreeMap<&str, Vec<DayResult>> = BTreeMap::new();
    for d in days {
        by_ad.entry(d.ad_id.as_str()).or_default().push(d.clone());
    }
    by_ad
        .into_iter()
        .map(|(ad, ds)| campaign_summary(ad, &ds))
        .collect()
}

/// `C(days, k)` for every k, exactly. The common denominator is `2^days`.
pub fn binomial_numerators(days: u32) -> Result<Vec<u128>> {
    if days == 0 || days > 126 {
        return Err(Error::InvalidInput(format!(
            "binomial baseline supports 1..=126 days, got {days}"
        )));
    }
    let mut row = vec![1u128];
    for k in 1..=days as u128 {
        let prev = *row.last().expect("non-empty");
        row.push(prev * (days as u128 - k + 1) / k);
    }
    Ok(row)
}

/// Probability of exactly k positive days under fair coin flips.
pub fn binomial_baseline(days: u32) -> Result<Vec<f64>> {
    let denom = (1u128 << days) as f64;
    Ok(binomial_numerators(days)?
        .into_iter()
        .map(|c| c as f64 / denom)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionRow {
    pub k: u32,
    pub observed: u64,
    pub observed_fraction: f64,
    pub baseline: f64,
}

/// Histogram of positive-day counts over campaigns of exactly `days` days.
pub fn positive_day_distribution(
    summaries: &[CampaignSummary],
    days: u32,
) -> Result<Vec<DistributionRow>> {
    let base = binomial_baseline(days)?;
    let mut counts = vec![0u64; days as usize + 1];
    for s in summaries.iter().filter(|s| s.days == days) {
        counts[s.n_positive_days as usize] += 1;
    }
    let total: u64 = counts.iter().sum();
    Ok((0..=days)
        .map(|k| DistributionRow {
            k,
            observed: counts[k as usize],
            observed_fraction: if total > 0 {
                counts[k as usize] as f64 / total as f64
            } else {
                0.0
            },
            baseline: base[k as usize],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins after pooling, as inclusive index ranges.
    pub bins: Vec<(usize, usize)>,
}

/// Pearson goodness of fit. Adjacent bins are pooled left to right until
/// each has expected count of at least 5; a short remainder joins the last bin.
pub fn chi_square_goodness(observed: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::InvalidInput(
            "observed and expected bins differ in length".into(),
        ));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::InsufficientData(
            "chi-square test on zero observations".into(),
        ));
    }
    let mut groups: Vec<(usize, usize, f64, f64)> = Vec::new();
    let mut start = 0;
    let (mut o, mut e) = (0.0, 0.0);
    for i in 0..observed.len() {
        o += observed[i] as f64;
        e += probs[i] * n as f64;
        if e >= 5.0 {
            groups.push((start, i, o, e));
            start = i + 1;
            o = 0.0;
            e = 0.0;
        }
    }
    if start < observed.len() {
        match groups.last_mut() {
            Some(last) => {
                last.1 = observed.len() - 1;
                last.2 += o;
                last.3 += e;
            }
            None => groups.push((0, observed.len() - 1, o, e)),
        }
    }
    let statistic: f64 = groups
        .iter()
        .map(|(_, _, o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = groups.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .sf(statistic)
    };
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value,
        bins: groups.iter().map(|g| (g.0, g.1)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub trials: u64,
    pub mean_ratio: f64,
    pub stdev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub points: Vec<ConvergencePoint>,
    /// Slope of log(stdev) against log(trials).
    pub log_log_slope: Option<f64>,
}

/// Spread of the sampled positive ratio across independent repetitions.
pub fn convergence_stdev(
    records: &[PairRecord],
    trial_counts: &[u64],
    repetitions: usize,
    seed: u64,
) -> Result<Convergence> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(
            "convergence diagnostic needs at least 2 records".into(),
        ));
    }
    let points: Vec<ConvergencePoint> = trial_counts
        .par_iter()
        .map(|&t| {
            let ratios: Vec<f64> = (0..repetitions)
                .filter_map(|rep| {
                    let mut r =
                        rng::stream(seed, &["adpair-convergence".into(), t.into(), rep.into()]);
                    sample_pairs(records, t, &mut r).positive_ratio()
                })
                .collect();
            ConvergencePoint {
                trials: t,
                mean_ratio: stats::mean(&ratios),
                stdev: stats::sample_std_dev(&ratios),
            }
        })
        .collect();
    let usable: Vec<&ConvergencePoint> = points.iter().filter(|p| p.stdev > 0.0).collect();
    let xs: Vec<f64> = usable.iter().map(|p| (p.trials as f64).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.stdev.ln()).collect();
    let log_log_slope = if usable.len() >= 2 {
        stats::ols_slope(&xs, &ys)
    } else {
        None
    };
    Ok(Convergence {
        points,
        log_log_slope,
    })
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(std::io::BufWriter::new(
        fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// `ad,date,records,trials,wins,losses,ties,winner`
pub fn write_day_results(path: &Path, days: &[DayResult]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "ad,date,records,trials,wins,losses,ties,winner").map_err(io)?;
    for d in days {
        let winner = match d.winner {
            DayWinner::Positive => "positive",
            DayWinner::Negative => "negative",
            DayWinner::Tie => "tie",
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            d.ad_id,
            d.date,
            d.records,
            d.trials_requested,
            d.positive_wins,
            d.negative_wins,
            d.ties_discarded,
            winner
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `ad,days,positive_days,negative_days,tie_days,bucket,mood_effective`
pub fn write_campaigns(path: &Path, rows: &[CampaignSummary]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(
        w,
        "ad,days,positive_days,negative_days,tie_days,bucket,mood_effective"
    )
    .map_err(io)?;
    for s in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.ad_id,
            s.days,
            s.n_positive_days,
            s.n_negative_days,
            s.n_tie_days,
            s.bucket,
            u8::from(s.mood_effective)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_campaigns(path: &Path) -> Result<Vec<CampaignSummary>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad =
        |line: usize| Error::Parse(format!("{}:{line}: malformed campaign row", path.display()));
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let f: Vec<&str> = l.split(',').collect();
            let num = |s: &str| s.trim().parse::<u32>().map_err(|_| bad(n + 1));
            if f.len() != 7 {
                return Err(bad(n + 1));
            }
            Ok(CampaignSummary {
                ad_id: f[0].to_string(),
                days: num(f[1])?,
                n_positive_days: num(f[2])?,
                n_negative_days: num(f[3])?,
                n_tie_days: num(f[4])?,
                bucket: f[5].to_string(),
                mood_effective: num(f[6])? == 1,
            })
        })
        .collect()
}

/// `k,observed,observed_fraction,baseline`
pub fn write_distribution(path: &Path, rows: &[DistributionRow]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "k,observed,observed_fraction,baseline").map_err(io)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:?},{:?}",
            r.k, r.observed, r.observed_fraction, r.baseline
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(clicked: bool, score: f64) -> PairRecord {
        PairRecord { clicked, score }
    }

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2019, 7, 1).unwrap()
    }

    #[test]
    fn forced_single_pair() {
        let d = pairwise_day("a", day(), &[rec(true, 0.9), rec(false, 0.1)], 1000, 0).unwrap();
        assert_eq!(
            (d.positive_wins, d.negative_wins, d.ties_discarded),
            (1000, 0, 0)
        );
        assert_eq!(d.winner, DayWinner::Positive);
    }

    #[test]
    fn equal_scores_are_all_ties() {
        let recs = [
            rec(true, 0.5),
            rec(false, 0.5),
            rec(false, 0.5),
            rec(true, 0.5),
        ];
        let d = pairwise_day("a", day(), &recs, 5000, 1).unwrap();
        assert_eq!((d.positive_wins, d.negative_wins), (0, 0));
        assert!(d.ties_discarded > 0);
        assert_eq!(d.winner, DayWinner::Tie);
        assert_eq!(exhaustive_positive_ratio(&recs).unwrap(), None);
    }

    #[test]
    fn too_few_records_names_the_day() {
        let e = pairwise_day("ad7", day(), &[rec(true, 0.1)], 10, 0).unwrap_err();
        assert!(e.to_string().contains("2019-07-01") && e.to_string().contains("ad7"));
    }

    #[test]
    fn exhaustive_oracles() {
        assert_eq!(
            exhaustive_positive_ratio(&[rec(true, 0.9), rec(false, 0.1)]).unwrap(),
            Some(1.0)
        );
        assert_eq!(
            exhaustive_positive_ratio(&[rec(true, 0.1), rec(false, 0.9)]).unwrap(),
            Some(0.0)
        );
        assert_eq!(
            exhaustive_positive_ratio(&[rec(true, 0.6), rec(true, 0.2), rec(false, 0.4)]).unwrap(),
            Some(0.5)
        );
        assert!(exhaustive_positive_ratio(&[rec(true, 0.6)]).is_err());
    }

    #[test]
    fn fully_separated_sets_sample_to_one() {
        let recs = [
            rec(true, 0.8),
            rec(true, 0.7),
            rec(true, 0.6),
            rec(false, 0.5),
            rec(false, 0.4),
            rec(false, 0.3),
        ];
        let d = pairwise_day("a", day(), &recs, 1_000_000, 3).unwrap();
        assert_eq!(d.negative_wins, 0);
        assert!(d.positive_wins > 0);
        assert_eq!(exhaustive_positive_ratio(&recs).unwrap(), Some(1.0));
    }

    #[test]
    fn sign_flip_swaps_wins() {
        let recs: Vec<PairRecord> = (0..30)
            .map(|i| rec(i % 3 == 0, ((i * 7) % 11) as f64 / 11.0))
            .collect();
        let flipped: Vec<PairRecord> = recs.iter().map(|r| rec(r.clicked, 1.0 - r.score)).collect();
        let a = pairwise_day("x", day(), &recs, 20_000, 5).unwrap();
        let b = pairwise_day("x", day(), &flipped, 20_000, 5).unwrap();
        assert_eq!(
            (a.positive_wins, a.negative_wins, a.ties_discarded),
            (b.negative_wins, b.positive_wins, b.ties_discarded)
        );
    }

    #[test]
    fn binomial_values() {
        let nums = binomial_numerators(14).unwrap();
        assert_eq!(nums[14], 1);
        assert_eq!(nums[7], 3432);
        assert_eq!(nums.iter().sum::<u128>(), 16384);
        let p = binomial_baseline(14).unwrap();
        assert_eq!(p[14], 1.0 / 16384.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(binomial_baseline(0).is_err());
    }

    fn day_result(winner: DayWinner) -> DayResult {
        DayResult {
            ad_id: "a".into(),
            date: day(),
            records: 2,
            trials_requested: 1,
            positive_wins: 0,
            negative_wins: 0,
            ties_discarded: 0,
            trials_effective: 0,
            winner,
        }
    }

    #[test]
    fn campaign_buckets() {
        let all: Vec<DayResult> = (0..14).map(|_| day_result(DayWinner::Positive)).collect();
        let s = campaign_summary("a", &all);
        assert_eq!(s.bucket, "14/14");
        assert!(s.mood_effective);
        let alt: Vec<DayResult> = (0..14)
            .map(|i| {
                day_result(if i % 2 == 0 {
                    DayWinner::Positive
                } else {
                    DayWinner::Negative
                })
            })
            .collect();
        let s = campaign_summary("a", &alt);
        assert_eq!(s.bucket, "7/14");
        assert!(!s.mood_effective);
        let mut with_tie: Vec<DayResult> =
            (0..13).map(|_| day_result(DayWinner::Negative)).collect();
        with_tie.push(day_result(DayWinner::Tie));
        let s = campaign_summary("a", &with_tie);
        assert_eq!((s.n_positive_days, s.n_tie_days), (0, 1));
        assert!(s.mood_effective);
    }

    #[test]
    fn chi_square_pools_small_bins() {
        let p = binomial_baseline(14).unwrap();
        let expected: Vec<u64> = p.iter().map(|q| (q * 200.0).round() as u64).collect();
        let r = chi_square_goodness(&expected, &p).unwrap();
        assert!(r.p_value > 0.99, "{r:?}");
        assert!(r.bins.len() < 15);
        let skewed: Vec<u64> = (0..15).map(|k| if k == 14 { 200 } else { 0 }).collect();
        assert!(chi_square_goodness(&skewed, &p).unwrap().p_value < 1e-6);
    }

    #[test]
    fn convergence_decays() {
        let recs: Vec<PairRecord> = (0..50)
            .map(|i| rec(i % 2 == 0, ((i * 13) % 17) as f64))
            .collect();
        let c = convergence_stdev(&recs, &[100, 1000, 10_000], 30, 1).unwrap();
        let slope = c.log_log_slope.unwrap();
        assert!((-0.65..=-0.35).contains(&slope), "{slope}");
    }
}

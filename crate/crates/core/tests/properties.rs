//! Property tests for invariants that hold for any input.

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate};
use proptest::prelude::*;

use moodpipe::adpair::{
    binomial_baseline, exhaustive_positive_ratio, sample_pairs, PairCounts, PairRecord,
};
use moodpipe::features::blocks;
use moodpipe::ingest::QueryEvent;
use moodpipe::ingest::{
    group_streams, parse_sensor_str, write_sensor_log, Accel, Reading, SensorSample, Timed,
};
use moodpipe::national::{normalize_first_sunday, MoodSeries, Normalization, SeriesPoint};
use moodpipe::qmm::{build_sessions, LogRegModel, SessionMode, SessionOptions, Vocabulary};
use moodpipe::rng;
use moodpipe::smm::{FrameLabel, MoodLabel};
use moodpipe::time::WindowGrid;

fn accel_samples() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64, -20.0..20.0f64), 0..200)
}

fn rotation() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0..1.0f64).prop_filter("non-degenerate", |q| {
        q.iter().map(|v| v * v).sum::<f64>() > 1e-3
    })
}

fn rotate(q: [f64; 4], v: (f64, f64, f64)) -> Accel {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    let (a, b, c) = v;
    Accel {
        x: (1.0 - 2.0 * (y * y + z * z)) * a
            + 2.0 * (x * y - z * w) * b
            + 2.0 * (x * z + y * w) * c,
        y: 2.0 * (x * y + z * w) * a
            + (1.0 - 2.0 * (x * x + z * z)) * b
            + 2.0 * (y * z - x * w) * c,
        z: 2.0 * (x * z - y * w) * a
            + 2.0 * (y * z + x * w) * b
            + (1.0 - 2.0 * (x * x + y * y)) * c,
    }
}

fn timed(v: &[Accel]) -> Vec<Timed<Accel>> {
    v.iter()
        .enumerate()
        .map(|(i, a)| Timed {
            ts: i as i64 * 100,
            value: *a,
        })
        .collect()
}

fn series(scores: &[f64], start: NaiveDate) -> MoodSeries {
    MoodSeries {
        points: scores
            .iter()
            .enumerate()
            .map(|(i, s)| SeriesPoint {
                date: start + Duration::days(i as i64),
                score: *s,
                n_users: 10,
            })
            .collect(),
        gaps: Vec::new(),
        normalization: Normalization::Raw,
    }
}

fn records() -> impl Strategy<Value = Vec<PairRecord>> {
    prop::collection::vec((any::<bool>(), -10i32..10), 2..60).prop_map(|v| {
        v.into_iter()
            .map(|(clicked, s)| PairRecord {
                clicked,
                score: f64::from(s) / 10.0,
            })
            .collect()
    })
}

fn counts_with(records: &[PairRecord], seed: u64) -> PairCounts {
    sample_pairs(records, 2000, &mut rng::stream(seed, &["prop".into()]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn accelerometer_block_is_finite_and_magnitudes_rotation_invariant(
        raw in accel_samples(),
        q in rotation(),
    ) {
        let orig: Vec<Accel> = raw.iter().map(|&(x, y, z)| Accel { x, y, z }).collect();
        let rot: Vec<Accel> = raw.iter().map(|&v| rotate(q, v)).collect();
        let a = blocks::accelerometer(&timed(&orig));
        let b = blocks::accelerometer(&timed(&rot));
        prop_assert!(a.iter().all(|v| v.is_finite()));
        for k in 0..5 {
            prop_assert!((a[k] - b[k]).abs() <= 1e-9 * (1.0 + a[k].abs()), "feature {k}: {} vs {}", a[k], b[k]);
        }
    }

    #[test]
    fn sensor_ingestion_ignores_line_order(
        rows in prop::collection::vec((0u8..3, 0i64..50, any::<bool>(), -5i32..5), 1..80),
        shuffle_seed in any::<u64>(),
    ) {
        let samples: Vec<SensorSample> = rows
            .iter()
            .map(|&(u, t, baro, v)| SensorSample {
                user_id: format!("u{u}"),
                ts: 1_561_939_200_000 + t * 1000,
                reading: if baro {
                    Reading::Barometer(1000.0 + f64::from(v))
                } else {
                    Reading::Accelerometer(Accel { x: f64::from(v), y: 0.5, z: -1.0 })
                },
            })
            .collect();
        let streams = group_streams(samples);
        let file = tempfile::NamedTempFile::new().unwrap();
        write_sensor_log(file.path(), &streams).unwrap();
        let text = std::fs::read_to_string(file.path()).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        use rand::seq::SliceRandom;
        lines.shuffle(&mut rng::stream(shuffle_seed, &["shuffle".into()]));
        let parsed = parse_sensor_str(&lines.join("\n"));
        prop_assert_eq!(parsed.malformed, 0);
        prop_assert_eq!(group_streams(parsed.records), streams);
    }

    #[test]
    fn adding_a_positive_query_never_lowers_the_score(
        weights in prop::collection::vec(-3.0..3.0f64, 6),
        intercept in -2.0..2.0f64,
        present in prop::collection::btree_set(0usize..6, 0..6),
        extra in 0usize..6,
    ) {
        let vocab = Vocabulary::from_entries((0..6).map(|i| (format!("q{i}"), 5)).collect(), 1, 100);
        let mut model = LogRegModel::intercept_only(vocab, intercept, 0.0);
        for i in 0..6 {
            let k = model.vocabulary.get(&format!("q{i}")).unwrap();
            model.weights[k] = weights[i];
        }
        let names: Vec<String> = present.iter().map(|i| format!("q{i}")).collect();
        let before = model.score_queries(names.iter().map(String::as_str));
        let mut with = names.clone();
        with.push(format!("q{extra}"));
        let after = model.score_queries(with.iter().map(String::as_str));
        if weights[extra] >= 0.0 || present.contains(&extra) {
            prop_assert!(after >= before);
        } else {
            prop_assert!(after < before);
        }
        prop_assert!((0.0..=1.0).contains(&after));
    }

    #[test]
    fn sign_flip_swaps_wins(recs in records(), seed in any::<u64>()) {
        let flipped: Vec<PairRecord> = recs.iter().map(|r| PairRecord { score: -r.score, ..*r }).collect();
        let a = counts_with(&recs, seed);
        let b = counts_with(&flipped, seed);
        prop_assert_eq!(a.positive_wins, b.negative_wins);
        prop_assert_eq!(a.negative_wins, b.positive_wins);
        prop_assert_eq!(a.ties_discarded, b.ties_discarded);
    }

    #[test]
    fn monotone_relabel_keeps_counts(recs in records(), seed in any::<u64>(), scale in 0.1..10.0f64, shift in -5.0..5.0f64) {
        let relabeled: Vec<PairRecord> = recs
            .iter()
            .map(|r| PairRecord { score: (scale * r.score + shift).exp(), ..*r })
            .collect();
        prop_assert_eq!(counts_with(&recs, seed), counts_with(&relabeled, seed));
        prop_assert_eq!(
            exhaustive_positive_ratio(&recs).ok(),
            exhaustive_positive_ratio(&relabeled).ok()
        );
    }

    #[test]
    fn first_sunday_normalization_is_idempotent_and_scale_free(
        scores in prop::collection::vec(0.1..1.0f64, 14..40),
        c in 0.01..100.0f64,
    ) {
        // 2019-01-06 is the first Sunday of 2019.
        let s = series(&scores, NaiveDate::from_ymd_opt(2019, 1, 1).unwrap());
        let once = normalize_first_sunday(&s, 2019).unwrap();
        let twice = normalize_first_sunday(&once, 2019).unwrap();
        let scaled: Vec<f64> = scores.iter().map(|v| v * c).collect();
        let from_scaled = normalize_first_sunday(&series(&scaled, s.points[0].date), 2019).unwrap();
        for ((a, b), d) in once.points.iter().zip(&twice.points).zip(&from_scaled.points) {
            prop_assert!((a.score - b.score).abs() <= 1e-12 * a.score.abs().max(1.0));
            prop_assert!((a.score - d.score).abs() <= 1e-12 * a.score.abs().max(1.0));
        }
    }

    #[test]
    fn binomial_baseline_is_a_distribution(days in 1u32..100) {
        let p = binomial_baseline(days).unwrap();
        prop_assert_eq!(p.len(), days as usize + 1);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().zip(p.iter().rev()).all(|(a, b)| a == b));
    }

    #[test]
    fn augmentation_only_adds_sessions(
        rows in prop::collection::vec((0u8..4, 0u8..8, 0u8..5, prop::option::of(0usize..3), 0usize..3, 0.0..1.0f64), 1..60),
    ) {
        let grid = WindowGrid::three_hour("Asia/Tokyo").unwrap();
        let day = NaiveDate::from_ymd_opt(2019, 7, 1).unwrap();
        let mut events = Vec::new();
        let mut labels = Vec::new();
        let mut seen = BTreeSet::new();
        for &(u, slot, q, questionnaire, predicted, conf) in &rows {
            let key = moodpipe::time::WindowKey::new(day, slot * 3);
            let (start, _) = grid.bounds(key);
            events.push(QueryEvent { user_id: format!("u{u}"), ts: start + 60_000, query: format!("w{q}") });
            if seen.insert((u, slot)) {
                labels.push(FrameLabel {
                    user_id: format!("u{u}"),
                    window: key,
                    predicted: MoodLabel::from_index(predicted),
                    confidence: conf,
                    probs: [0.0; 3],
                    questionnaire: questionnaire.map(MoodLabel::from_index),
                });
            }
        }
        let build = |mode| build_sessions(&events, &labels, &grid, &SessionOptions { mode, smm_min_confidence: 0.0 });
        let (q_only, qc) = build(SessionMode::QuestionnaireOnly);
        let (with, wc) = build(SessionMode::WithSmm);
        prop_assert!(with.len() >= q_only.len());
        prop_assert_eq!(qc.questionnaire, wc.questionnaire);
        prop_assert_eq!(qc.smm, 0);
        for s in &q_only {
            prop_assert!(with.contains(s));
        }
    }
}

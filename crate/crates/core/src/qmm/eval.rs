use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    build_vocabulary, train_logreg, LabelSource, LogRegOptions, Session, SessionMode,
    DEFAULT_MAX_SIZE, DEFAULT_MIN_DF,
};
use crate::smm::MoodLabel;
use crate::{rng, stats, Error, Result};

/// Randomly downsamples the majority class to the minority count. Selected
/// sessions keep their input order.
pub fn balance<'a>(sessions: &[&'a Session], seed: u64) -> Result<Vec<&'a Session>> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..sessions.len())
        .filter(|&i| sessions[i].target().is_some())
        .partition(|&i| sessions[i].label == Some(MoodLabel::Positive));
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InsufficientData(format!(
            "cannot balance {} positive and {} negative sessions",
            pos.len(),
            neg.len()
        )));
    }
    let (mut major, minor) = if pos.len() >= neg.len() {
        (pos, neg)
    } else {
        (neg, pos)
    };
    let mut r = rng::stream(seed, &["qmm-balance".into()]);
    major.shuffle(&mut r);
    major.truncate(minor.len());
    let mut keep: Vec<usize> = major.into_iter().chain(minor).collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| sessions[i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub splits: usize,
    pub train_frac: f64,
    pub seed: u64,
    pub min_df: u32,
    pub max_vocab: usize,
    pub logreg: LogRegOptions,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            splits: 10,
            train_frac: 0.8,
            seed: 0,
            min_df: DEFAULT_MIN_DF,
            max_vocab: DEFAULT_MAX_SIZE,
            logreg: LogRegOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: SessionMode,
    pub splits: usize,
    pub train_frac: f64,
    /// Labeled sessions available to the mode.
    pub n_sessions: usize,
    /// Mean training-set size after balancing.
    pub n_train: usize,
    pub n_test: usize,
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    /// Mean share of positive sessions in the test splits.
    pub test_positive_rate: f64,
}

struct SplitResult {
    accuracy: f64,
    n_train: usize,
    n_test: usize,
    positive_rate: f64,
}

/// Repeated random train/test evaluation.
///
/// Only questionnaire-labeled sessions are split; the held-out part is the
/// test set in both modes, with its natural class mix. In `WithSmm` mode every
/// sensor-labeled session joins the training side, so the two modes see
/// identical test sets for a given seed and differ only in training data.
pub fn evaluate(sessions: &[Session], mode: SessionMode, opts: &EvalOptions) -> Result<EvalReport> {
    let labeled = |src: LabelSource| {
        sessions
            .iter()
            .filter(move |s| s.source == Some(src) && s.target().is_some())
            .collect::<Vec<&Session>>()
    };
    let questionnaire = labeled(LabelSource::Questionnaire);
    let extra = match mode {
        SessionMode::QuestionnaireOnly => Vec::new(),
        SessionMode::WithSmm => labeled(LabelSource::Smm),
    };
    let n_pos = questionnaire
        .iter()
        .filter(|s| s.label == Some(MoodLabel::Positive))
        .count();
    let n_neg = questionnaire.len() - n_pos;
    if n_pos < 10 || n_neg < 10 {
        return Err(Error::InsufficientData(format!(
            "evaluation needs at least 10 questionnaire sessions per class, have {n_pos} positive and {n_neg} negative"
        )));
    }
    if opts.splits == 0 || !(opts.train_frac > 0.0 && opts.train_frac < 1.0) {
        return Err(Error::Config(format!(
            "invalid split setup: {} splits, train fraction {}",
            opts.splits, opts.train_frac
        )));
    }
    let n_train_q = ((questionnaire.len() as f64) * opts.train_frac).round() as usize;
    let n_train_q = n_train_q.clamp(1, questionnaire.len() - 1);
    let results: Vec<SplitResult> = (0..opts.splits)
        .into_par_iter()
        .map(|split| {
            let mut order: Vec<usize> = (0..questionnaire.len()).collect();
            order.shuffle(&mut rng::stream(
                opts.seed,
                &["qmm-split".into(), split.into()],
            ));
            let (train_idx, test_idx) = order.split_at(n_train_q);
            let mut pool: Vec<&Session> = train_idx.iter().map(|&i| questionnaire[i]).collect();
            pool.extend(extra.iter().copied());
            let vocab = build_vocabulary(&pool, opts.min_df, opts.max_vocab)?;
            let balanced = balance(
                &pool,
                rng::derive_seed(opts.seed, &["qmm-train".into(), split.into()]),
            )?;
            let model = train_logreg(&balanced, vocab, &opts.logreg, opts.seed)?;
            let mut correct = 0;
            let mut positive = 0;
            for &i in test_idx {
                let s = questionnaire[i];
                let truth = s.label == Some(MoodLabel::Positive);
                positive += usize::from(truth);
                correct += usize::from((model.score_session(s) >= 0.5) == truth);
            }
            Ok(SplitResult {
                accuracy: correct as f64 / test_idx.len() as f64,
                n_train: balanced.len(),
                n_test: test_idx.len(),
                positive_rate: positive as f64 / test_idx.len() as f64,
            })
        })
        .collect::<Result<_>>()?;
    let accuracies: Vec<f64> = results.iter().map(|r| r.accuracy).collect();
    let rates: Vec<f64> = results.iter().map(|r| r.positive_rate).collect();
    Ok(EvalReport {
        mode,
        splits: opts.splits,
        train_frac: opts.train_frac,
        n_sessions: questionnaire.len() + extra.len(),
        n_train: results.iter().map(|r| r.n_train).sum::<usize>() / results.len(),
        n_test: results[0].n_test,
        mean_accuracy: stats::mean(&accuracies),
        std_accuracy: stats::sample_std_dev(&accuracies),
        test_positive_rate: stats::mean(&rates),
        accuracies,
    })
}

/// Side-by-side comparison of evaluation reports.
pub fn render_eval_table(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<28} {:>9} {:>8} {:>7} {:>9} {:>7}",
        "model", "n_data", "n_train", "n_test", "accuracy", "std"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<28} {:>9} {:>8} {:>7} {:>9.4} {:>7.4}",
            format!("QMM ({})", r.mode.name()),
            r.n_sessions,
            r.n_train,
            r.n_test,
            r.mean_accuracy,
            r.std_accuracy
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::WindowKey;
    use chrono::NaiveDate;
    use rand::Rng;

    fn session(i: usize, label: MoodLabel, source: LabelSource, queries: &[String]) -> Session {
        let d = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i as u64 / 8);
        Session {
            user_id: format!("u{}", i % 7),
            window: WindowKey::new(d, (i % 8 * 3) as u8),
            queries: queries.iter().cloned().collect(),
            label: Some(label),
            source: Some(source),
        }
    }

    fn labeled(n_pos: usize, n_neg: usize) -> Vec<Session> {
        (0..n_pos + n_neg)
            .map(|i| {
                let l = if i < n_pos {
                    MoodLabel::Positive
                } else {
                    MoodLabel::Negative
                };
                session(i, l, LabelSource::Questionnaire, &[])
            })
            .collect()
    }

    #[test]
    fn balance_downsamples_majority() {
        let s = labeled(100, 40);
        let refs: Vec<&Session> = s.iter().collect();
        let b = balance(&refs, 1).unwrap();
        assert_eq!(
            b.iter()
                .filter(|s| s.label == Some(MoodLabel::Positive))
                .count(),
            40
        );
        assert_eq!(b.len(), 80);
        assert_eq!(b, balance(&refs, 1).unwrap());
    }

    #[test]
    fn balance_keeps_balanced_input() {
        let s = labeled(30, 30);
        let refs: Vec<&Session> = s.iter().collect();
        assert_eq!(balance(&refs, 5).unwrap(), refs);
    }

    #[test]
    fn balance_needs_both_classes() {
        let s = labeled(5, 0);
        let refs: Vec<&Session> = s.iter().collect();
        assert!(balance(&refs, 0).is_err());
    }

    #[test]
    fn planted_vocabulary_is_learned() {
        let words = |p: &str| (0..20).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let (good, bad) = (words("joy"), words("sad"));
        let mut r = rng::stream(9, &[]);
        let sessions: Vec<Session> = (0..400)
            .map(|i| {
                let pos = i % 2 == 0;
                let pool = if pos { &good } else { &bad };
                let q: Vec<String> = (0..3)
                    .map(|_| pool[r.random_range(0..pool.len())].clone())
                    .collect();
                session(
                    i,
                    if pos {
                        MoodLabel::Positive
                    } else {
                        MoodLabel::Negative
                    },
                    LabelSource::Questionnaire,
                    &q,
                )
            })
            .collect();
        let rep = evaluate(
            &sessions,
            SessionMode::QuestionnaireOnly,
            &EvalOptions {
                splits: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.mean_accuracy > 0.95, "{rep:?}");
        assert_eq!(rep.n_test, 80);
    }

    #[test]
    fn too_few_sessions_is_an_error() {
        assert!(evaluate(
            &labeled(9, 30),
            SessionMode::QuestionnaireOnly,
            &EvalOptions::default()
        )
        .is_err());
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::{train_forest, Example, ForestParams, MoodLabel};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: MoodLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: usize,
    /// Whether folds were user-disjoint.
    pub grouped: bool,
    pub classes: [ClassMetrics; 3],
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    /// Rows are true labels, columns predictions, both `[-1, 0, +1]`.
    pub confusion: [[u64; 3]; 3],
}

impl CvReport {
    pub fn from_confusion(confusion: [[u64; 3]; 3], folds: usize, grouped: bool) -> Self {
        let total: u64 = confusion.iter().flatten().sum();
        let classes = MoodLabel::ALL.map(|l| {
            let k = l.index();
            let tp = confusion[k][k] as f64;
            let support: u64 = confusion[k].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[k]).sum();
            let precision = if predicted > 0 {
                tp / predicted as f64
            } else {
                0.0
            };
            let recall = if support > 0 {
                tp / support as f64
            } else {
                0.0
            };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                label: l,
                precision,
                recall,
                f1,
                support,
            }
        });
        let weighted = |f: fn(&ClassMetrics) -> f64| {
            if total == 0 {
                0.0
            } else {
                classes.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / total as f64
            }
        };
        let trace: u64 = (0..3).map(|k| confusion[k][k]).sum();
        CvReport {
            folds,
            grouped,
            weighted_precision: weighted(|c| c.precision),
            weighted_recall: weighted(|c| c.recall),
            weighted_f1: weighted(|c| c.f1),
            accuracy: if total > 0 {
                trace as f64 / total as f64
            } else {
                0.0
            },
            classes,
            confusion,
        }
    }

    /// Plain-text table: one row per label plus the support-weighted average.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>5} {:>9} {:>7} {:>8} {:>7}",
            "label", "precision", "recall", "f1-score", "support"
        );
        for c in &self.classes {
            let _ = writeln!(
                s,
                "{:>5} {:>9.2} {:>7.2} {:>8.2} {:>7}",
                c.label.value(),
                c.precision,
                c.recall,
                c.f1,
                c.support
            );
        }
        let total: u64 = self.classes.iter().map(|c| c.support).sum();
        let _ = writeln!(
            s,
            "{:>5} {:>9.2} {:>7.2} {:>8.2} {:>7}",
            "avg", self.weighted_precision, self.weighted_recall, self.weighted_f1, total
        );
        let _ = writeln!(
            s,
            "accuracy {:.4} over {} folds{}",
            self.accuracy,
            self.folds,
            if self.grouped { " (user-grouped)" } else { "" }
        );
        s
    }
}

/// Fold index per example. Users are kept whole when there are at least `k`
/// of them; otherwise examples are dealt out individually.
pub(crate) fn assign_folds(examples: &[Example<'_>], k: usize, seed: u64) -> (Vec<usize>, bool) {
    let mut r = rng::stream(seed, &["cv-folds".into()]);
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in examples.iter().enumerate() {
        groups.entry(e.group).or_default().push(i);
    }
    let mut fold_of = vec![0; examples.len()];
    if groups.len() >= k {
        let mut users: Vec<Vec<usize>> = groups.into_values().collect();
        users.shuffle(&mut r);
        let mut sizes = vec![0usize; k];
        for members in users {
            let target = (0..k).min_by_key(|&f| (sizes[f], f)).expect("k > 0");
            sizes[target] += members.len();
            for i in members {
                fold_of[i] = target;
            }
        }
        (fold_of, true)
    } else {
        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(&mut r);
        for (pos, i) in order.into_iter().enumerate() {
            fold_of[i] = pos % k;
        }
        (fold_of, false)
    }
}

/// k-fold cross-validation with confusion counts pooled over folds.
pub fn cross_validate(
    examples: &[Example<'_>],
    k: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<CvReport> {
    if k < 2 {
        return Err(Error::Config(format!(
            "cross-validation needs k >= 2, got {k}"
        )));
    }
    if k > examples.len() {
        return Err(Error::InsufficientData(format!(
            "{k} folds requested for {} labeled frames",
            examples.len()
        )));
    }
    let (fold_of, grouped) = assign_folds(examples, k, seed);
    let mut confusion = [[0u64; 3]; 3];
    for fold in 0..k {
        let train: Vec<Example<'_>> = examples
            .iter()
            .zip(&fold_of)
            .filter(|(_, f)| **f != fold)
            .map(|(e, _)| *e)
            .collect();
        let test: Vec<&Example<'_>> = examples
            .iter()
            .zip(&fold_of)
            .filter(|(_, f)| **f == fold)
            .map(|(e, _)| e)
            .collect();
        if test.is_empty() || train.is_empty() {
            continue;
        }
        let forest = train_forest(
            &train,
            params,
            rng::derive_seed(seed, &["cv-train".into(), fold.into()]),
        )?;
        for e in test {
            let p = forest.predict(e.features);
            confusion[e.label.index()][p.label.index()] += 1;
        }
    }
    Ok(CvReport::from_confusion(confusion, k, grouped))
}

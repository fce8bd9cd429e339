//! Sensor mood model: a random forest over feature frames predicting the
//! three-class mood label.

mod cv;
mod tree;

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::features::{FeatureFrame, FEATURE_COUNT};
use crate::rng;
use crate::time::WindowKey;
use crate::{Error, Result};

pub use cv::{cross_validate, ClassMetrics, CvReport};
pub use tree::{gini, DecisionTree, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoodLabel {
    Negative,
    Neutral,
    Positive,
}

impl MoodLabel {
    pub const ALL: [MoodLabel; 3] = [MoodLabel::Negative, MoodLabel::Neutral, MoodLabel::Positive];

    pub fn value(self) -> i8 {
        match self {
            MoodLabel::Negative => -1,
            MoodLabel::Neutral => 0,
            MoodLabel::Positive => 1,
        }
    }

    pub fn from_value(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(MoodLabel::Negative),
            0 => Ok(MoodLabel::Neutral),
            1 => Ok(MoodLabel::Positive),
            other => Err(Error::InvalidInput(format!(
                "mood label {other} not in {{-1,0,1}}"
            ))),
        }
    }

    /// Position in class-count and probability vectors.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

impl Serialize for MoodLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for MoodLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MoodLabel::from_value(i8::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// 1-3 negative, 4 neutral, 5-7 positive.
pub fn map_likert(likert: u8) -> Result<MoodLabel> {
    match likert {
        1..=3 => Ok(MoodLabel::Negative),
        4 => Ok(MoodLabel::Neutral),
        5..=7 => Ok(MoodLabel::Positive),
        other => Err(Error::InvalidInput(format!(
            "likert answer {other} outside 1..7"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(n_features))`.
    pub features_per_split: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 5,
            features_per_split: None,
        }
    }
}

impl ForestParams {
    pub fn resolved_features_per_split(&self, n_features: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features.max(1))
    }
}

/// A training row borrowed from a frame.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub group: &'a str,
    pub features: &'a [f64],
    pub label: MoodLabel,
}

/// Annotated frames as training examples.
pub fn labeled_examples(frames: &[FeatureFrame]) -> Vec<Example<'_>> {
    frames
        .iter()
        .filter_map(|f| {
            let label = map_likert(f.likert?).ok()?;
            Some(Example {
                group: &f.user_id,
                features: &f.features,
                label,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub n_features: usize,
    pub seed: u64,
    pub trees: Vec<DecisionTree>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: MoodLabel,
    /// `[negative, neutral, positive]`.
    pub probs: [f64; 3],
}

impl Prediction {
    pub fn confidence(&self) -> f64 {
        self.probs[self.label.index()]
    }
}

/// Highest probability wins; exact ties prefer neutral, then negative.
pub fn argmax_label(probs: &[f64; 3]) -> MoodLabel {
    [MoodLabel::Neutral, MoodLabel::Negative, MoodLabel::Positive]
        .into_iter()
        .fold(None::<MoodLabel>, |best, l| match best {
            Some(b) if probs[b.index()] >= probs[l.index()] => Some(b),
            _ => Some(l),
        })
        .expect("three candidates")
}

/// Trains one bootstrap tree per RNG stream `(seed, tree index)`, so the
/// forest is identical regardless of thread count.
pub fn train_forest(examples: &[Example<'_>], params: &ForestParams, seed: u64) -> Result<Forest> {
    if examples.is_empty() {
        return Err(Error::InsufficientData(
            "no labeled frames to train the sensor model".into(),
        ));
    }
    let n_features = examples[0].features.len();
    if let Some(bad) = examples.iter().find(|e| e.features.len() != n_features) {
        return Err(Error::InvalidInput(format!(
            "feature width {} differs from {n_features}",
            bad.features.len()
        )));
    }
    if params.n_trees == 0 {
        return Err(Error::Config("n_trees must be positive".into()));
    }
    let first = examples[0].label;
    if examples.iter().all(|e| e.label == first) {
        log::warn!(
            "all {} training labels are {:?}; forest degenerates to single leaves",
            examples.len(),
            first
        );
    }
    let rows: Vec<&[f64]> = examples.iter().map(|e| e.features).collect();
    let labels: Vec<u8> = examples.iter().map(|e| e.label.index() as u8).collect();
    let grow = tree::GrowParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        features_per_split: params.resolved_features_per_split(n_features),
    };
    let n = rows.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, &["smm-tree".into(), t.into()]);
            let sample: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
            DecisionTree::fit(&rows, &labels, sample, grow, &mut r)
        })
        .collect();
    Ok(Forest {
        params: *params,
        n_features,
        seed,
        trees,
    })
}

impl Forest {
    /// Mean of the per-tree leaf class distributions.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let mut probs = [0.0; 3];
        for t in &self.trees {
            let c = t.leaf_counts(x);
            let total: f64 = c.iter().map(|v| f64::from(*v)).sum();
            if total > 0.0 {
                for k in 0..3 {
                    probs[k] += f64::from(c[k]) / total;
                }
            }
        }
        let mass: f64 = probs.iter().sum();
        if mass > 0.0 {
            probs.iter_mut().for_each(|p| *p /= mass);
        }
        Prediction {
            label: argmax_label(&probs),
            probs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLabel {
    pub user_id: String,
    pub window: WindowKey,
    pub predicted: MoodLabel,
    pub confidence: f64,
    pub probs: [f64; 3],
    /// The questionnaire label when the frame was annotated.
    pub questionnaire: Option<MoodLabel>,
}

/// Predicts every frame, annotated or not.
pub fn label_all_frames(forest: &Forest, frames: &[FeatureFrame]) -> Result<Vec<FrameLabel>> {
    if let Some(f) = frames
        .iter()
        .find(|f| f.features.len() != forest.n_features)
    {
        return Err(Error::InvalidInput(format!(
            "frame {} {} has {} features, model expects {}",
            f.user_id,
            f.window,
            f.features.len(),
            forest.n_features
        )));
    }
    frames
        .par_iter()
        .map(|f| {
            let p = forest.predict(&f.features);
            Ok(FrameLabel {
                user_id: f.user_id.clone(),
                window: f.window,
                predicted: p.label,
                confidence: p.confidence(),
                probs: p.probs,
                questionnaire: f.likert.map(map_likert).transpose()?,
            })
        })
        .collect()
}

pub fn frames_have_standard_width(frames: &[FeatureFrame]) -> bool {
    frames.iter().all(|f| f.features.len() == FEATURE_COUNT)
}

/// CSV: `user,window,predicted,confidence,p_neg,p_neu,p_pos,questionnaire`.
pub fn write_frame_labels(path: &Path, labels: &[FrameLabel]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let io = |e| Error::io(path, e);
    writeln!(
        w,
        "user,window,predicted,confidence,p_neg,p_neu,p_pos,questionnaire"
    )
    .map_err(io)?;
    for l in labels {
        let q = l
            .questionnaire
            .map(|q| q.value().to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{:?},{:?},{:?},{:?},{}",
            l.user_id,
            l.window,
            l.predicted.value(),
            l.confidence,
            l.probs[0],
            l.probs[1],
            l.probs[2],
            q
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_frame_labels(path: &Path) -> Result<Vec<FrameLabel>> {
    #[derive(Deserialize)]
    struct Row {
        user: String,
        window: WindowKey,
        predicted: MoodLabel,
        confidence: f64,
        p_neg: f64,
        p_neu: f64,
        p_pos: f64,
        questionnaire: Option<MoodLabel>,
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    })?;
    reader
        .deserialize::<Row>()
        .map(|r| {
            let r = r.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            Ok(FrameLabel {
                user_id: r.user,
                window: r.window,
                predicted: r.predicted,
                confidence: r.confidence,
                probs: [r.p_neg, r.p_neu, r.p_pos],
                questionnaire: r.questionnaire,
            })
        })
        .collect()
}

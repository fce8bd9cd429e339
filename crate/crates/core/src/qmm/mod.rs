//! Query mood model: binary bag-of-query sessions and an L2 logistic
//! regression trained on questionnaire and sensor-model labels.

mod eval;
mod logreg;
mod vocab;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::QueryEvent;
use crate::smm::{FrameLabel, MoodLabel};
use crate::time::{WindowGrid, WindowKey};
use crate::{Error, Result};

pub use eval::{balance, evaluate, render_eval_table, EvalOptions, EvalReport};
pub use logreg::{
    fit_design, objective, sigmoid, train_logreg, train_logreg_traced, FitResult, LogRegModel,
    LogRegOptions, TrainingMeta,
};
pub use vocab::{build_vocabulary, VocabEntry, Vocabulary, DEFAULT_MAX_SIZE, DEFAULT_MIN_DF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Questionnaire,
    Smm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SessionMode {
    QuestionnaireOnly,
    WithSmm,
}

impl SessionMode {
    pub fn name(self) -> &'static str {
        match self {
            SessionMode::QuestionnaireOnly => "questionnaire_only",
            SessionMode::WithSmm => "with_smm",
        }
    }
}

/// One user's queries in one window. Queries are a set: repeats count once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    #[serde(rename = "user")]
    pub user_id: String,
    pub window: WindowKey,
    pub queries: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<MoodLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<LabelSource>,
}

impl Session {
    /// `+1` as 1.0, `-1` as 0.0.
    pub fn target(&self) -> Option<f64> {
        match self.label? {
            MoodLabel::Positive => Some(1.0),
            MoodLabel::Negative => Some(0.0),
            MoodLabel::Neutral => None,
        }
    }
}

/// Groups query events into unlabeled sessions, sorted by user then window.
/// Events must already be normalized.
pub fn query_sessions(events: &[QueryEvent], grid: &WindowGrid) -> Vec<Session> {
    let mut map: BTreeMap<(&str, WindowKey), BTreeSet<String>> = BTreeMap::new();
    for e in events {
        map.entry((&e.user_id, grid.window_of(e.ts)))
            .or_default()
            .insert(e.query.clone());
    }
    map.into_iter()
        .map(|((user, window), queries)| Session {
            user_id: user.to_string(),
            window,
            queries,
            label: None,
            source: None,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionOptions {
    pub mode: SessionMode,
    /// Sensor-model predictions below this confidence are not used.
    pub smm_min_confidence: f64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            mode: SessionMode::WithSmm,
            smm_min_confidence: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SessionCounts {
    pub query_windows: usize,
    pub questionnaire: usize,
    pub smm: usize,
    pub neutral_excluded: usize,
    pub unlabeled: usize,
}

/// Labeled training sessions. A questionnaire answer always takes precedence;
/// a neutral answer excludes the window rather than deferring to the sensor
/// model. Neutral sensor predictions are likewise dropped.
pub fn build_sessions(
    events: &[QueryEvent],
    frame_labels: &[FrameLabel],
    grid: &WindowGrid,
    opts: &SessionOptions,
) -> (Vec<Session>, SessionCounts) {
    let lookup: HashMap<(&str, WindowKey), &FrameLabel> = frame_labels
        .iter()
        .map(|l| ((l.user_id.as_str(), l.window), l))
        .collect();
    let mut counts = SessionCounts::default();
    let mut out = Vec::new();
    for mut s in query_sessions(events, grid) {
        counts.query_windows += 1;
        let Some(fl) = lookup.get(&(s.user_id.as_str(), s.window)) else {
            counts.unlabeled += 1;
            continue;
        };
        let (label, source) = match fl.questionnaire {
            Some(q) => (q, LabelSource::Questionnaire),
            None if opts.mode == SessionMode::WithSmm
                && fl.confidence >= opts.smm_min_confidence =>
            {
                (fl.predicted, LabelSource::Smm)
            }
            None => {
                counts.unlabeled += 1;
                continue;
            }
        };
        if label == MoodLabel::Neutral {
            counts.neutral_excluded += 1;
            continue;
        }
        match source {
            LabelSource::Questionnaire => counts.questionnaire += 1,
            LabelSource::Smm => counts.smm += 1,
        }
        s.label = Some(label);
        s.source = Some(source);
        out.push(s);
    }
    (out, counts)
}

pub fn write_sessions(path: &Path, sessions: &[Session]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for s in sessions {
        serde_json::to_writer(&mut w, s).map_err(|e| Error::Parse(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_sessions(path: &Path) -> Result<Vec<Session>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Session = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(s);
    }
    Ok(out)
}

/// QMM output for one query window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScore {
    #[serde(rename = "user")]
    pub user_id: String,
    pub window: WindowKey,
    pub n_queries: usize,
    pub score: f64,
}

/// Scores every session that has at least one query.
pub fn score_sessions(sessions: &[Session], model: &LogRegModel) -> Vec<SessionScore> {
    sessions
        .iter()
        .filter(|s| !s.queries.is_empty())
        .map(|s| SessionScore {
            user_id: s.user_id.clone(),
            window: s.window,
            n_queries: s.queries.len(),
            score: model.score_session(s),
        })
        .collect()
}

/// `user,window,n_queries,score`
pub fn write_session_scores(path: &Path, rows: &[SessionScore]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_session_scores(path: &Path) -> Result<Vec<SessionScore>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    })?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Parse(format!("{}: {e}", path.display()))))
        .collect()
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::qmm::LogRegModel;
use crate::smm::Forest;
use crate::{Error, Result};

pub const MODEL_VERSION: &str = "moodpipe-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SmmForest,
    QmmLogreg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Model {
    SmmForest(Forest),
    QmmLogreg(LogRegModel),
}

/// A persisted model: one JSON document with a `version` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: String,
    pub seed: u64,
    #[serde(flatten)]
    pub model: Model,
}

impl ModelArtifact {
    pub fn new(seed: u64, model: Model) -> Self {
        Self {
            version: MODEL_VERSION.to_string(),
            seed,
            model,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.model {
            Model::SmmForest(_) => ModelKind::SmmForest,
            Model::QmmLogreg(_) => ModelKind::QmmLogreg,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn into_forest(self) -> Result<Forest> {
        match self.model {
            Model::SmmForest(f) => Ok(f),
            Model::QmmLogreg(_) => Err(Error::InvalidInput(
                "expected an smm_forest model, found qmm_logreg".into(),
            )),
        }
    }

    pub fn into_logreg(self) -> Result<LogRegModel> {
        match self.model {
            Model::QmmLogreg(m) => Ok(m),
            Model::SmmForest(_) => Err(Error::InvalidInput(
                "expected a qmm_logreg model, found smm_forest".into(),
            )),
        }
    }
}

pub fn save_model(artifact: &ModelArtifact, path: &Path) -> Result<()> {
    if artifact.version != MODEL_VERSION {
        return Err(Error::VersionMismatch {
            found: artifact.version.clone(),
            expected: MODEL_VERSION.into(),
        });
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, artifact.to_text()).map_err(|e| Error::io(path, e))
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

#[derive(Deserialize)]
struct Header {
    version: Option<String>,
}

pub fn load_model(path: &Path) -> Result<ModelArtifact> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |e: serde_json::Error| Error::CorruptModel {
        path: path.to_path_buf(),
        offset: byte_offset(&text, e.line(), e.column()),
        message: e.to_string(),
    };
    let header: Header = serde_json::from_str(&text).map_err(corrupt)?;
    match header.version {
        Some(v) if v == MODEL_VERSION => {}
        Some(v) => {
            return Err(Error::VersionMismatch {
                found: v,
                expected: MODEL_VERSION.into(),
            })
        }
        None => {
            return Err(Error::CorruptModel {
                path: path.to_path_buf(),
                offset: 0,
                message: "missing \"version\" field".into(),
            })
        }
    }
    serde_json::from_str(&text).map_err(corrupt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmm::{LogRegModel, Vocabulary};

    fn empty_logreg() -> LogRegModel {
        LogRegModel::intercept_only(Vocabulary::from_entries(Vec::new(), 3, 50_000), 0.25, 1e-3)
    }

    #[test]
    fn degenerate_logreg_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qmm.json");
        let art = ModelArtifact::new(9, Model::QmmLogreg(empty_logreg()));
        save_model(&art, &path).unwrap();
        let first = fs::read(&path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, art);
        save_model(&back, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
        let model = back.into_logreg().unwrap();
        let expected = 1.0 / (1.0 + (-0.25f64).exp());
        assert_eq!(model.score_queries(std::iter::empty::<&str>()), expected);
    }

    #[test]
    fn version_mismatch_names_both() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut art = ModelArtifact::new(1, Model::QmmLogreg(empty_logreg()));
        art.version = "moodpipe-model/0".into();
        fs::write(&path, art.to_text()).unwrap();
        let msg = load_model(&path).unwrap_err().to_string();
        assert!(
            msg.contains("moodpipe-model/0") && msg.contains(MODEL_VERSION),
            "{msg}"
        );
    }

    #[test]
    fn corruption_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut text = ModelArtifact::new(1, Model::QmmLogreg(empty_logreg())).to_text();
        text.truncate(text.len() - 5);
        fs::write(&path, &text).unwrap();
        match load_model(&path).unwrap_err() {
            Error::CorruptModel { offset, .. } => assert!(offset > 0 && offset <= text.len()),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn offsets_from_line_column() {
        assert_eq!(byte_offset("ab\ncd", 2, 2), 4);
        assert_eq!(byte_offset("abc", 1, 1), 0);
    }
}

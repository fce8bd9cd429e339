//! Run configuration shared by every subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::adpair::DEFAULT_TRIALS;
use crate::national::Normalization;
use crate::qmm::{
    EvalOptions, LogRegOptions, SessionMode, SessionOptions, DEFAULT_MAX_SIZE, DEFAULT_MIN_DF,
};
use crate::smm::ForestParams;
use crate::synth::{files, SynthConfig};
use crate::time::WindowGrid;
use crate::{Error, Result};

pub const SEED_ENV: &str = "MOODPIPE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub timezone: String,
    /// `error`, `warn`, `info`, `debug` or `trace`.
    pub verbosity: String,
    pub paths: Paths,
    pub smm: SmmConfig,
    pub qmm: QmmConfig,
    pub adpair: AdPairConfig,
    pub national: NationalConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            timezone: "Asia/Tokyo".into(),
            verbosity: "info".into(),
            paths: Paths::default(),
            smm: SmmConfig::default(),
            qmm: QmmConfig::default(),
            adpair: AdPairConfig::default(),
            national: NationalConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

/// Input logs default to fixed names inside `data_dir`; every stage writes
/// into `out_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub sensors: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub ads: Option<PathBuf>,
    pub patients: Option<PathBuf>,
    pub holidays: Option<PathBuf>,
    pub truth: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            out_dir: "out".into(),
            sensors: None,
            annotations: None,
            queries: None,
            ads: None,
            patients: None,
            holidays: None,
            truth: None,
        }
    }
}

impl Paths {
    fn input(&self, custom: &Option<PathBuf>, name: &str) -> PathBuf {
        custom.clone().unwrap_or_else(|| self.data_dir.join(name))
    }

    pub fn sensors(&self) -> PathBuf {
        self.input(&self.sensors, files::SENSORS)
    }

    pub fn annotations(&self) -> PathBuf {
        self.input(&self.annotations, files::ANNOTATIONS)
    }

    pub fn queries(&self) -> PathBuf {
        self.input(&self.queries, files::QUERIES)
    }

    pub fn ads(&self) -> PathBuf {
        self.input(&self.ads, files::ADS)
    }

    pub fn patients(&self) -> PathBuf {
        self.input(&self.patients, files::PATIENTS)
    }

    pub fn holidays(&self) -> PathBuf {
        self.input(&self.holidays, files::HOLIDAYS)
    }

    pub fn truth(&self) -> PathBuf {
        self.truth
            .clone()
            .unwrap_or_else(|| self.data_dir.join(files::TRUTH_DIR).join(files::TRUTH))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmmConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: Option<usize>,
    pub cv_folds: usize,
}

impl Default for SmmConfig {
    fn default() -> Self {
        let p = ForestParams::default();
        Self {
            n_trees: p.n_trees,
            max_depth: p.max_depth,
            min_leaf: p.min_leaf,
            features_per_split: p.features_per_split,
            cv_folds: 10,
        }
    }
}

impl SmmConfig {
    pub fn forest(&self) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            features_per_split: self.features_per_split,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QmmConfig {
    /// Label sources used by `build-sessions` and `train-qmm`.
    pub mode: SessionMode,
    pub smm_min_confidence: f64,
    pub min_df: u32,
    pub max_vocab: usize,
    pub l2_lambda: f64,
    pub max_epochs: usize,
    pub grad_tol: f64,
    pub splits: usize,
    pub train_frac: f64,
}

impl Default for QmmConfig {
    fn default() -> Self {
        let lr = LogRegOptions::default();
        Self {
            mode: SessionMode::WithSmm,
            smm_min_confidence: 0.0,
            min_df: DEFAULT_MIN_DF,
            max_vocab: DEFAULT_MAX_SIZE,
            l2_lambda: lr.l2_lambda,
            max_epochs: lr.max_epochs,
            grad_tol: lr.grad_tol,
            splits: 10,
            train_frac: 0.8,
        }
    }
}

impl QmmConfig {
    pub fn logreg(&self) -> LogRegOptions {
        LogRegOptions {
            l2_lambda: self.l2_lambda,
            max_epochs: self.max_epochs,
            grad_tol: self.grad_tol,
        }
    }

    pub fn sessions(&self) -> SessionOptions {
        SessionOptions {
            mode: self.mode,
            smm_min_confidence: self.smm_min_confidence,
        }
    }

    pub fn eval(&self, seed: u64) -> EvalOptions {
        EvalOptions {
            splits: self.splits,
            train_frac: self.train_frac,
            seed,
            min_df: self.min_df,
            max_vocab: self.max_vocab,
            logreg: self.logreg(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdPairConfig {
    /// Sampled pairs per ad and day.
    pub trials: u64,
    /// Campaign length for the binomial baseline and distribution.
    pub days: u32,
    /// Trial counts of the convergence diagnostic; empty skips it.
    pub convergence_trials: Vec<u64>,
    pub convergence_repetitions: usize,
    pub emit_svg: bool,
}

impl Default for AdPairConfig {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            days: 14,
            convergence_trials: vec![100, 1_000, 10_000],
            convergence_repetitions: 30,
            emit_svg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NationalConfig {
    /// First and last day of the series; default to the data's extent.
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub normalize: Normalization,
    /// Base-year series (first-Sunday normalized CSV) for `relative_to_year`.
    pub relative_base: Option<PathBuf>,
    pub emit_svg: bool,
}

impl Default for NationalConfig {
    fn default() -> Self {
        Self {
            from: None,
            to: None,
            normalize: Normalization::Raw,
            relative_base: None,
            emit_svg: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `MOODPIPE_SEED` when set, to both the run and the generator.
    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            let seed = v
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not a u64")))?;
            self.seed = seed;
            self.synth.seed = seed;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<WindowGrid> {
        WindowGrid::three_hour(&self.timezone)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !matches!(
            self.verbosity.as_str(),
            "error" | "warn" | "info" | "debug" | "trace"
        ) {
            return Err(Error::Config(format!(
                "verbosity {:?} is not a log level",
                self.verbosity
            )));
        }
        let s = &self.smm;
        if s.n_trees == 0 || s.max_depth == 0 || s.min_leaf == 0 {
            return Err(Error::Config(
                "smm.n_trees, max_depth and min_leaf must be positive".into(),
            ));
        }
        if s.cv_folds < 2 {
            return Err(Error::Config(format!(
                "smm.cv_folds = {} must be at least 2",
                s.cv_folds
            )));
        }
        let q = &self.qmm;
        if !(0.0..=1.0).contains(&q.smm_min_confidence) {
            return Err(Error::Config(format!(
                "qmm.smm_min_confidence = {} is not in [0, 1]",
                q.smm_min_confidence
            )));
        }
        if !(q.l2_lambda > 0.0)
            || q.max_epochs == 0
            || q.splits == 0
            || !(q.train_frac > 0.0 && q.train_frac < 1.0)
        {
            return Err(Error::Config(
                "qmm needs l2_lambda > 0, max_epochs > 0, splits > 0 and train_frac in (0, 1)"
                    .into(),
            ));
        }
        let a = &self.adpair;
        if a.trials == 0 || a.days == 0 {
            return Err(Error::Config(
                "adpair.trials and adpair.days must be positive".into(),
            ));
        }
        if a.convergence_trials.contains(&0)
            || (!a.convergence_trials.is_empty() && a.convergence_repetitions < 2)
        {
            return Err(Error::Config(
                "adpair convergence needs positive trial counts and at least 2 repetitions".into(),
            ));
        }
        let n = &self.national;
        if let (Some(f), Some(t)) = (n.from, n.to) {
            if t < f {
                return Err(Error::Config(format!(
                    "national.to {t} precedes national.from {f}"
                )));
            }
        }
        if n.normalize == Normalization::RelativeToYear && n.relative_base.is_none() {
            return Err(Error::Config(
                "national.normalize = relative_to_year needs national.relative_base".into(),
            ));
        }
        self.synth.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml(
            "seed = 7\n[qmm]\nmode = \"questionnaire_only\"\n[paths]\ndata_dir = \"d\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.qmm.mode, SessionMode::QuestionnaireOnly);
        assert_eq!(c.paths.sensors(), PathBuf::from("d/sensors.jsonl"));
        assert_eq!(c.paths.truth(), PathBuf::from("d/truth/ground_truth.json"));
        assert_eq!(c.smm.n_trees, 100);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("sed = 1\n").is_err());
        assert!(RunConfig::from_toml("[smm]\ntrees = 5\n").is_err());
    }

    #[test]
    fn seed_override() {
        let mut c = RunConfig::default();
        c.apply_seed_override(Some("99")).unwrap();
        assert_eq!((c.seed, c.synth.seed), (99, 99));
        assert!(c.apply_seed_override(Some("x")).is_err());
        c.apply_seed_override(None).unwrap();
        assert_eq!(c.seed, 99);
    }

    #[test]
    fn relative_mode_needs_base() {
        let mut c = RunConfig::default();
        c.national.normalize = Normalization::RelativeToYear;
        assert!(c.validate().is_err());
    }
}

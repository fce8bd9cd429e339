//! Seeded synthetic populations with planted, recoverable mood signals.

mod config;
mod generate;
mod recovery;

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use config::{AdSpec, MoodProcess, PatientSpec, QuerySpec, SensorSpec, SynthConfig, Wave};
pub use generate::{
    ad_id, generate, likert_of, negative_word, neutral_word, positive_word, user_id, PROMPT_HOURS,
    WINDOWS_PER_DAY,
};
pub use recovery::{latent_label, verify_recovery, RecoveryChecks, RecoveryInputs, RecoveryReport};

use crate::ingest::{self, AdEvent, MoodAnnotation, PatientCount, QueryEvent, SensorStream};
use crate::time::WindowKey;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedAd {
    pub ad_id: String,
    /// +1 when clicks rise with mood, -1 when they fall.
    pub direction: i8,
}

/// Everything the generator planted. Kept apart from the logs; pipeline
/// stages never read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub start_date: NaiveDate,
    pub n_days: usize,
    pub timezone: String,
    pub windows_per_day: usize,
    pub user_ids: Vec<String>,
    /// Latent mood in [-1, 1], per user then per window from the start date.
    pub window_mood: Vec<Vec<f64>>,
    pub planted_ads: Vec<PlantedAd>,
    /// National wave per day, scaled to a peak of 1.
    pub wave: Vec<f64>,
    pub wave_peaks: Vec<f64>,
    /// Weight of the wave in the latent mood; zero means nothing to detect.
    pub national_coupling: f64,
    pub expected_patients: Vec<f64>,
    /// Weekly mood offset per day.
    pub weekly_offset: Vec<f64>,
    pub holidays: Vec<NaiveDate>,
    pub effective_mondays: Vec<NaiveDate>,
}

impl GroundTruth {
    pub fn date(&self, day: usize) -> NaiveDate {
        self.start_date + chrono::Duration::days(day as i64)
    }

    pub fn window_index(&self, key: WindowKey) -> Option<usize> {
        let day = key.date.signed_duration_since(self.start_date).num_days();
        if day < 0 || day as usize >= self.n_days {
            return None;
        }
        let per = 24 / self.windows_per_day;
        Some(day as usize * self.windows_per_day + usize::from(key.hour) / per)
    }

    pub fn mood(&self, user: &str, key: WindowKey) -> Option<f64> {
        let u = self
            .user_ids
            .binary_search_by(|x| x.as_str().cmp(user))
            .ok()?;
        self.window_mood[u].get(self.window_index(key)?).copied()
    }

    pub fn is_planted(&self, ad: &str) -> bool {
        self.planted_ads.iter().any(|p| p.ad_id == ad)
    }

    /// Mean latent mood per day across users.
    pub fn daily_mean_mood(&self) -> Vec<f64> {
        (0..self.n_days)
            .map(|d| {
                let range = d * self.windows_per_day..(d + 1) * self.windows_per_day;
                let total: f64 = self
                    .window_mood
                    .iter()
                    .map(|m| m[range.clone()].iter().sum::<f64>())
                    .sum();
                total / (self.window_mood.len() * self.windows_per_day) as f64
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub config: SynthConfig,
    pub streams: Vec<SensorStream>,
    pub annotations: Vec<MoodAnnotation>,
    /// Raw queries, including case and whitespace noise.
    pub queries: Vec<QueryEvent>,
    pub ad_events: Vec<AdEvent>,
    pub patients: Vec<PatientCount>,
    pub truth: GroundTruth,
}

/// File names used inside a generated dataset directory.
pub mod files {
    pub const SENSORS: &str = "sensors.jsonl";
    pub const ANNOTATIONS: &str = "annotations.jsonl";
    pub const QUERIES: &str = "queries.jsonl";
    pub const ADS: &str = "ads.csv";
    pub const PATIENTS: &str = "patients.csv";
    pub const HOLIDAYS: &str = "holidays.txt";
    pub const CONFIG: &str = "synth_config.toml";
    pub const TRUTH_DIR: &str = "truth";
    pub const TRUTH: &str = "ground_truth.json";
}

impl SyntheticDataset {
    /// Writes the logs to `dir` and the ground truth to `dir/truth/`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let truth_dir = dir.join(files::TRUTH_DIR);
        fs::create_dir_all(&truth_dir).map_err(|e| Error::io(&truth_dir, e))?;
        ingest::write_sensor_log(&dir.join(files::SENSORS), &self.streams)?;
        ingest::write_annotations(&dir.join(files::ANNOTATIONS), &self.annotations)?;
        ingest::write_queries(&dir.join(files::QUERIES), &self.queries)?;
        ingest::write_ad_csv(&dir.join(files::ADS), &self.ad_events)?;
        ingest::write_patient_csv(&dir.join(files::PATIENTS), &self.patients)?;
        let holidays: String = self
            .config
            .holidays
            .iter()
            .map(|d| format!("{d}\n"))
            .collect();
        let p = dir.join(files::HOLIDAYS);
        fs::write(&p, holidays).map_err(|e| Error::io(&p, e))?;
        let p = dir.join(files::CONFIG);
        let text = toml::to_string(&self.config).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        self.truth.save(&truth_dir.join(files::TRUTH))
    }
}

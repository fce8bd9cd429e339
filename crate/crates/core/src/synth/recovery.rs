use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::Serialize;

use super::{likert_of, GroundTruth};
use crate::adpair::CampaignSummary;
use crate::ingest::PatientCount;
use crate::national::{
    detrended_week_argmin, mood_patient_correlation, weekday_profile, MoodSeries,
};
use crate::qmm::EvalReport;
use crate::smm::{map_likert, FrameLabel, MoodLabel};
use crate::{stats, Error, Result};

/// Stage outputs to check against the planted truth. Every field is required;
/// a missing one is reported by name.
#[derive(Debug, Default, Clone, Copy)]
pub struct RecoveryInputs<'a> {
    pub frame_labels: Option<&'a [FrameLabel]>,
    pub qmm_questionnaire_only: Option<&'a EvalReport>,
    pub qmm_with_smm: Option<&'a EvalReport>,
    pub campaigns: Option<&'a [CampaignSummary]>,
    pub national: Option<&'a MoodSeries>,
    pub patients: Option<&'a [PatientCount]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryChecks {
    pub smm_beats_majority: bool,
    pub qmm_augmentation_helps: bool,
    pub ads_precise: bool,
    pub weekday_dip_found: bool,
    pub holiday_shift_found: bool,
    /// `None` when nothing was planted to detect.
    pub patient_anticorrelation: Option<bool>,
}

impl RecoveryChecks {
    pub fn all_pass(&self) -> bool {
        self.smm_beats_majority
            && self.qmm_augmentation_helps
            && self.ads_precise
            && self.weekday_dip_found
            && self.holiday_shift_found
            && self.patient_anticorrelation.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub smm_frames: usize,
    pub smm_accuracy: f64,
    pub smm_majority_baseline: f64,
    pub qmm_accuracy_questionnaire_only: f64,
    pub qmm_accuracy_with_smm: f64,
    pub qmm_gap: f64,
    pub planted_ads: Vec<String>,
    pub flagged_ads: Vec<String>,
    pub ad_precision: Option<f64>,
    pub ad_recall: Option<f64>,
    pub weekday_argmin: String,
    /// (holiday, expected effective Monday, lowest detrended day of that week)
    pub holiday_weeks: Vec<(NaiveDate, NaiveDate, Option<NaiveDate>)>,
    pub national_vs_latent_r: Option<f64>,
    pub mood_patient_r: Option<f64>,
    pub checks: RecoveryChecks,
    pub passed: bool,
}

impl RecoveryReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.checks;
        let mark = |b: bool| if b { "ok" } else { "FAIL" };
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(
            s,
            "smm: accuracy {:.3} vs majority {:.3} over {} frames [{}]",
            self.smm_accuracy,
            self.smm_majority_baseline,
            self.smm_frames,
            mark(c.smm_beats_majority)
        );
        let _ = writeln!(
            s,
            "qmm: questionnaire_only {:.3}, with_smm {:.3}, gap {:+.3} [{}]",
            self.qmm_accuracy_questionnaire_only,
            self.qmm_accuracy_with_smm,
            self.qmm_gap,
            mark(c.qmm_augmentation_helps)
        );
        let _ = writeln!(
            s,
            "ads: flagged {:?}, planted {:?}, precision {}, recall {} [{}]",
            self.flagged_ads,
            self.planted_ads,
            opt(self.ad_precision),
            opt(self.ad_recall),
            mark(c.ads_precise)
        );
        let _ = writeln!(
            s,
            "weekly: lowest weekday {} [{}]",
            self.weekday_argmin,
            mark(c.weekday_dip_found)
        );
        for (h, want, got) in &self.holiday_weeks {
            let got = got.map_or("none".to_string(), |d| d.to_string());
            let _ = writeln!(s, "holiday {h}: expected dip {want}, lowest {got}");
        }
        let _ = writeln!(s, "holiday shift [{}]", mark(c.holiday_shift_found));
        let _ = writeln!(
            s,
            "national vs latent daily mood r = {}",
            opt(self.national_vs_latent_r)
        );
        let patient = match c.patient_anticorrelation {
            Some(b) => mark(b),
            None => "not planted",
        };
        let _ = writeln!(
            s,
            "mood-patient r = {} [{}]",
            opt(self.mood_patient_r),
            patient
        );
        let _ = writeln!(s, "overall: {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

fn require<'a, T: ?Sized>(v: Option<&'a T>, name: &str) -> Result<&'a T> {
    v.ok_or_else(|| Error::MissingStage(name.to_string()))
}

/// Label a latent mood would produce through the questionnaire.
pub fn latent_label(m: f64) -> MoodLabel {
    map_likert(likert_of(m)).expect("likert_of stays in 1..=7")
}

/// Compares pipeline outputs with what the generator planted.
pub fn verify_recovery(inputs: &RecoveryInputs<'_>, truth: &GroundTruth) -> Result<RecoveryReport> {
    let frames = require(inputs.frame_labels, "SMM frame labels (predict-smm)")?;
    let q_only = require(
        inputs.qmm_questionnaire_only,
        "QMM questionnaire_only evaluation (eval-qmm)",
    )?;
    let with_smm = require(inputs.qmm_with_smm, "QMM with_smm evaluation (eval-qmm)")?;
    let campaigns = require(inputs.campaigns, "ad campaign summaries (ad-pairwise)")?;
    let series = require(inputs.national, "national mood series (national-mood)")?;
    let patients = require(inputs.patients, "patient counts")?;

    let mut hist = [0usize; 3];
    let mut correct = 0usize;
    let mut n = 0usize;
    for f in frames {
        let Some(m) = truth.mood(&f.user_id, f.window) else {
            continue;
        };
        let want = latent_label(m);
        hist[want.index()] += 1;
        correct += usize::from(f.predicted == want);
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidInput(
            "no SMM frame matches a ground-truth window".into(),
        ));
    }
    let smm_accuracy = correct as f64 / n as f64;
    let smm_majority_baseline = *hist.iter().max().expect("3 classes") as f64 / n as f64;

    let qmm_gap = with_smm.mean_accuracy - q_only.mean_accuracy;

    let planted: Vec<String> = truth.planted_ads.iter().map(|p| p.ad_id.clone()).collect();
    let flagged: Vec<String> = campaigns
        .iter()
        .filter(|c| c.mood_effective)
        .map(|c| c.ad_id.clone())
        .collect();
    let hits = flagged.iter().filter(|a| truth.is_planted(a)).count();
    let ad_precision = (!flagged.is_empty()).then(|| hits as f64 / flagged.len() as f64);
    let ad_recall = (!planted.is_empty()).then(|| hits as f64 / planted.len() as f64);
    // With nothing planted, precision is vacuous: pass only if nothing is flagged.
    let ads_precise = match ad_precision {
        Some(p) => p >= 0.8,
        None => true,
    };

    let profile = weekday_profile(series, &truth.holidays)?;
    let weekday_dip_found = profile.argmin() == Weekday::Mon;
    let holiday_weeks: Vec<(NaiveDate, NaiveDate, Option<NaiveDate>)> = truth
        .holidays
        .iter()
        .filter(|h| h.weekday() == Weekday::Mon)
        .filter_map(|&h| {
            let want = truth
                .effective_mondays
                .iter()
                .copied()
                .find(|d| d.iso_week() == h.iso_week())?;
            series.get(h)?;
            Some((h, want, detrended_week_argmin(series, h)))
        })
        .collect();
    let holiday_shift_found = holiday_weeks
        .iter()
        .all(|(_, want, got)| *got == Some(*want));

    let latent = truth.daily_mean_mood();
    let (a, b): (Vec<f64>, Vec<f64>) = series
        .points
        .iter()
        .filter_map(|p| {
            let d = p.date.signed_duration_since(truth.start_date).num_days();
            (d >= 0 && (d as usize) < latent.len()).then(|| (p.score, latent[d as usize]))
        })
        .unzip();
    let national_vs_latent_r = stats::pearson(&a, &b);

    let corr = mood_patient_correlation(series, patients)?;
    let wave_planted = truth.national_coupling > 0.0
        && truth.wave.iter().any(|w| *w > 0.0)
        && truth.wave.iter().any(|w| *w < 0.5);
    let patient_anticorrelation = wave_planted.then(|| corr.r.is_some_and(|r| r <= -0.7));

    let checks = RecoveryChecks {
        smm_beats_majority: smm_accuracy > smm_majority_baseline,
        qmm_augmentation_helps: qmm_gap > 0.0,
        ads_precise,
        weekday_dip_found,
        holiday_shift_found,
        patient_anticorrelation,
    };
    let passed = checks.all_pass();
    Ok(RecoveryReport {
        smm_frames: n,
        smm_accuracy,
        smm_majority_baseline,
        qmm_accuracy_questionnaire_only: q_only.mean_accuracy,
        qmm_accuracy_with_smm: with_smm.mean_accuracy,
        qmm_gap,
        planted_ads: planted,
        flagged_ads: flagged,
        ad_precision,
        ad_recall,
        weekday_argmin: format!("{:?}", profile.argmin()),
        holiday_weeks,
        national_vs_latent_r,
        mood_patient_r: corr.r,
        checks,
        passed,
    })
}

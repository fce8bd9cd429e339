//! Stage wiring shared by the CLI, the recovery check and the tests.
//!
//! Every stage is a plain function of its inputs and the [`RunConfig`]; the
//! CLI persists the results between stages, and [`run`] chains them in
//! memory.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::adpair::{
    self, analyze_days, chi_square_goodness, convergence_stdev, group_by_ad_day, join_ad_scores,
    positive_day_distribution, summarize_campaigns, CampaignSummary, ChiSquareResult, Convergence,
    DayResult, DistributionRow, JoinReport,
};
use crate::config::RunConfig;
use crate::features::{self, attach_annotations, extract_frames, AttachReport, FeatureFrame};
use crate::ingest::{
    self, normalize_query_events, AdEvent, Model, ModelArtifact, MoodAnnotation, PatientCount,
    QueryEvent, SensorStream,
};
use crate::national::{
    self, daily_national_score, mood_patient_correlation, normalize_first_sunday, relative_series,
    user_day_scores, weekday_profile, CorrelationReport, MoodSeries, Normalization, WeekdayProfile,
};
use crate::qmm::{
    self, balance, build_sessions, build_vocabulary, evaluate, query_sessions, score_sessions,
    train_logreg, EvalReport, LabelSource, LogRegModel, Session, SessionCounts, SessionMode,
    SessionScore,
};
use crate::smm::{
    self, cross_validate, label_all_frames, labeled_examples, train_forest, CvReport, Forest,
    FrameLabel,
};
use crate::synth::{RecoveryInputs, RecoveryReport, SyntheticDataset};
use crate::{rng, svg, Error, Result};

/// Output file names inside `out_dir`.
pub mod outputs {
    pub const FRAMES: &str = "frames.csv";
    pub const SMM_MODEL: &str = "smm_model.json";
    pub const SMM_CV: &str = "smm_cv.txt";
    pub const FRAME_LABELS: &str = "frame_labels.csv";
    pub const SESSIONS: &str = "sessions.jsonl";
    pub const QMM_MODEL: &str = "qmm_model.json";
    pub const QMM_EVAL: &str = "qmm_eval.csv";
    pub const QMM_EVAL_TABLE: &str = "qmm_eval.txt";
    pub const SESSION_SCORES: &str = "session_scores.csv";
    pub const AD_DAYS: &str = "ad_days.csv";
    pub const AD_CAMPAIGNS: &str = "ad_campaigns.csv";
    pub const AD_DISTRIBUTION: &str = "ad_distribution.csv";
    pub const AD_CONVERGENCE: &str = "ad_convergence.csv";
    pub const AD_SVG: &str = "ad_distribution.svg";
    pub const NATIONAL: &str = "national.csv";
    pub const NATIONAL_NORMALIZED: &str = "national_normalized.csv";
    pub const WEEKDAY: &str = "weekday_profile.csv";
    pub const CORRELATION: &str = "correlation.csv";
    pub const NATIONAL_SVG: &str = "national.svg";
    pub const RECOVERY: &str = "recovery.txt";
    pub const RECOVERY_JSON: &str = "recovery.json";
}

/// Parsed logs; query text is already normalized.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub streams: Vec<SensorStream>,
    pub annotations: Vec<MoodAnnotation>,
    pub queries: Vec<QueryEvent>,
    pub ad_events: Vec<AdEvent>,
    pub patients: Vec<PatientCount>,
    pub holidays: Vec<NaiveDate>,
}

impl Inputs {
    pub fn from_dataset(d: &SyntheticDataset) -> Self {
        let (queries, dropped) = normalize_query_events(&d.queries);
        if dropped > 0 {
            log::warn!("dropped {dropped} queries that normalize to nothing");
        }
        Self {
            streams: d.streams.clone(),
            annotations: d.annotations.clone(),
            queries,
            ad_events: d.ad_events.clone(),
            patients: d.patients.clone(),
            holidays: d.config.holidays.clone(),
        }
    }
}

/// Reads an optional holiday file; a missing file means no holidays.
pub fn load_holidays(path: &Path) -> Result<Vec<NaiveDate>> {
    if path.exists() {
        ingest::parse_holidays(path)
    } else {
        log::info!("no holiday file at {}; assuming none", path.display());
        Ok(Vec::new())
    }
}

pub fn stage_features(
    streams: &[SensorStream],
    annotations: &[MoodAnnotation],
    cfg: &RunConfig,
) -> Result<(Vec<FeatureFrame>, AttachReport)> {
    let grid = cfg.grid()?;
    let mut frames = extract_frames(streams, &grid);
    let report = attach_annotations(&mut frames, annotations, &grid);
    log::info!(
        "{} frames, {} annotated, {} annotations outside data windows",
        frames.len(),
        report.attached,
        report.dropped
    );
    Ok((frames, report))
}

pub fn stage_train_smm(frames: &[FeatureFrame], cfg: &RunConfig) -> Result<Forest> {
    let examples = labeled_examples(frames);
    train_forest(
        &examples,
        &cfg.smm.forest(),
        rng::derive_seed(cfg.seed, &["smm-train".into()]),
    )
}

pub fn stage_cv_smm(frames: &[FeatureFrame], cfg: &RunConfig) -> Result<CvReport> {
    let examples = labeled_examples(frames);
    cross_validate(
        &examples,
        cfg.smm.cv_folds,
        &cfg.smm.forest(),
        rng::derive_seed(cfg.seed, &["smm-cv".into()]),
    )
}

pub fn stage_predict_smm(forest: &Forest, frames: &[FeatureFrame]) -> Result<Vec<FrameLabel>> {
    label_all_frames(forest, frames)
}

pub fn stage_sessions(
    queries: &[QueryEvent],
    labels: &[FrameLabel],
    cfg: &RunConfig,
) -> Result<(Vec<Session>, SessionCounts)> {
    let (sessions, counts) = build_sessions(queries, labels, &cfg.grid()?, &cfg.qmm.sessions());
    log::info!(
        "{} query windows: {} questionnaire-labeled, {} sensor-labeled, {} neutral, {} unlabeled",
        counts.query_windows,
        counts.questionnaire,
        counts.smm,
        counts.neutral_excluded,
        counts.unlabeled
    );
    Ok((sessions, counts))
}

/// Sessions a mode trains on.
pub fn sessions_for_mode(sessions: &[Session], mode: SessionMode) -> Vec<&Session> {
    sessions
        .iter()
        .filter(|s| s.target().is_some())
        .filter(|s| mode == SessionMode::WithSmm || s.source == Some(LabelSource::Questionnaire))
        .collect()
}

/// Final query model on all sessions of the mode, class-balanced.
pub fn stage_train_qmm(
    sessions: &[Session],
    mode: SessionMode,
    cfg: &RunConfig,
) -> Result<LogRegModel> {
    let pool = sessions_for_mode(sessions, mode);
    let vocab = build_vocabulary(&pool, cfg.qmm.min_df, cfg.qmm.max_vocab)?;
    let balanced = balance(&pool, rng::derive_seed(cfg.seed, &["qmm-final".into()]))?;
    let model = train_logreg(&balanced, vocab, &cfg.qmm.logreg(), cfg.seed)?;
    log::info!(
        "query model: {} vocabulary entries, {} training sessions, converged {}",
        model.vocabulary.len(),
        balanced.len(),
        model.meta.converged
    );
    Ok(model)
}

/// Evaluates both modes on the same held-out questionnaire sessions.
pub fn stage_eval_qmm(sessions: &[Session], cfg: &RunConfig) -> Result<Vec<EvalReport>> {
    let opts = cfg
        .qmm
        .eval(rng::derive_seed(cfg.seed, &["qmm-eval".into()]));
    [SessionMode::QuestionnaireOnly, SessionMode::WithSmm]
        .into_iter()
        .map(|mode| evaluate(sessions, mode, &opts))
        .collect()
}

/// Scores every query window, labeled or not.
pub fn stage_score(
    queries: &[QueryEvent],
    model: &LogRegModel,
    cfg: &RunConfig,
) -> Result<Vec<SessionScore>> {
    Ok(score_sessions(
        &query_sessions(queries, &cfg.grid()?),
        model,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdOutputs {
    pub join: JoinReport,
    pub days: Vec<DayResult>,
    pub campaigns: Vec<CampaignSummary>,
    pub distribution: Vec<DistributionRow>,
    pub chi_square: Option<ChiSquareResult>,
    pub convergence: Option<Convergence>,
}

pub fn stage_ads(
    events: &[AdEvent],
    scores: &[SessionScore],
    cfg: &RunConfig,
) -> Result<AdOutputs> {
    let grid = cfg.grid()?;
    let a = &cfg.adpair;
    let (records, join) = join_ad_scores(events, scores, &grid)?;
    log::info!(
        "{} ad events joined to a session score, {} dropped",
        join.joined,
        join.dropped
    );
    let days = analyze_days(&records, &grid, a.trials, cfg.seed);
    let campaigns = summarize_campaigns(&days);
    let distribution = positive_day_distribution(&campaigns, a.days)?;
    let observed: Vec<u64> = distribution.iter().map(|r| r.observed).collect();
    let probs: Vec<f64> = distribution.iter().map(|r| r.baseline).collect();
    let chi_square = chi_square_goodness(&observed, &probs).ok();
    let convergence = if a.convergence_trials.is_empty() {
        None
    } else {
        // the busiest (ad, day); earliest key on ties
        let groups = group_by_ad_day(&records, &grid);
        let busiest = groups
            .iter()
            .max_by(|x, y| x.1.len().cmp(&y.1.len()).then_with(|| y.0.cmp(x.0)));
        match busiest {
            Some((_, recs)) => {
                match convergence_stdev(
                    recs,
                    &a.convergence_trials,
                    a.convergence_repetitions,
                    rng::derive_seed(cfg.seed, &["adpair-convergence".into()]),
                ) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        log::warn!("convergence diagnostic skipped: {e}");
                        None
                    }
                }
            }
            None => None,
        }
    };
    Ok(AdOutputs {
        join,
        days,
        campaigns,
        distribution,
        chi_square,
        convergence,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NationalOutputs {
    pub raw: MoodSeries,
    /// The series after the configured normalization.
    pub series: MoodSeries,
    pub weekday: Option<WeekdayProfile>,
    pub correlation: Option<CorrelationReport>,
}

pub fn stage_national(
    scores: &[SessionScore],
    patients: &[PatientCount],
    holidays: &[NaiveDate],
    cfg: &RunConfig,
) -> Result<NationalOutputs> {
    let user_days = user_day_scores(scores);
    let from = cfg
        .national
        .from
        .or_else(|| user_days.iter().map(|u| u.date).min());
    let to = cfg
        .national
        .to
        .or_else(|| user_days.iter().map(|u| u.date).max());
    let (Some(from), Some(to)) = (from, to) else {
        return Err(Error::InsufficientData(
            "no scored sessions for the national series".into(),
        ));
    };
    let raw = daily_national_score(&user_days, from, to)?;
    let series = match cfg.national.normalize {
        Normalization::Raw => raw.clone(),
        Normalization::FirstSunday => normalize_first_sunday(&raw, chrono::Datelike::year(&from))?,
        Normalization::RelativeToYear => {
            let path = cfg
                .national
                .relative_base
                .as_ref()
                .ok_or_else(|| Error::Config("national.relative_base is not set".into()))?;
            let base = national::read_series(path, Normalization::FirstSunday)?;
            relative_series(
                &normalize_first_sunday(&raw, chrono::Datelike::year(&from))?,
                &base,
            )
        }
    };
    let weekday = match weekday_profile(&raw, holidays) {
        Ok(p) => Some(p),
        Err(e) => {
            log::warn!("weekday profile skipped: {e}");
            None
        }
    };
    let correlation = if patients.is_empty() {
        None
    } else {
        match mood_patient_correlation(&raw, patients) {
            Ok(c) => Some(c),
            Err(e) => {
                log::warn!("patient correlation skipped: {e}");
                None
            }
        }
    };
    Ok(NationalOutputs {
        raw,
        series,
        weekday,
        correlation,
    })
}

/// Everything one in-memory run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutputs {
    pub frames: Vec<FeatureFrame>,
    pub attach: AttachReport,
    pub forest: Forest,
    pub cv: Option<CvReport>,
    pub frame_labels: Vec<FrameLabel>,
    pub sessions: Vec<Session>,
    pub session_counts: SessionCounts,
    pub qmm: LogRegModel,
    pub eval: Vec<EvalReport>,
    pub scores: Vec<SessionScore>,
    pub ads: Option<AdOutputs>,
    pub national: NationalOutputs,
}

impl PipelineOutputs {
    pub fn eval_for(&self, mode: SessionMode) -> Option<&EvalReport> {
        self.eval.iter().find(|r| r.mode == mode)
    }

    pub fn recovery_inputs<'a>(&'a self, patients: &'a [PatientCount]) -> RecoveryInputs<'a> {
        RecoveryInputs {
            frame_labels: Some(&self.frame_labels),
            qmm_questionnaire_only: self.eval_for(SessionMode::QuestionnaireOnly),
            qmm_with_smm: self.eval_for(SessionMode::WithSmm),
            campaigns: self.ads.as_ref().map(|a| a.campaigns.as_slice()),
            national: Some(&self.national.raw),
            patients: Some(patients),
        }
    }
}

/// Which optional stages [`run`] includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub cross_validate: bool,
    pub evaluate_qmm: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            cross_validate: true,
            evaluate_qmm: true,
        }
    }
}

/// Chains every stage in memory.
pub fn run(inputs: &Inputs, cfg: &RunConfig, opts: RunOptions) -> Result<PipelineOutputs> {
    let (frames, attach) = stage_features(&inputs.streams, &inputs.annotations, cfg)?;
    let forest = stage_train_smm(&frames, cfg)?;
    let cv = if opts.cross_validate {
        Some(stage_cv_smm(&frames, cfg)?)
    } else {
        None
    };
    let frame_labels = stage_predict_smm(&forest, &frames)?;
    let (sessions, session_counts) = stage_sessions(&inputs.queries, &frame_labels, cfg)?;
    let qmm = stage_train_qmm(&sessions, cfg.qmm.mode, cfg)?;
    let eval = if opts.evaluate_qmm {
        stage_eval_qmm(&sessions, cfg)?
    } else {
        Vec::new()
    };
    let scores = stage_score(&inputs.queries, &qmm, cfg)?;
    let ads = if inputs.ad_events.is_empty() {
        None
    } else {
        Some(stage_ads(&inputs.ad_events, &scores, cfg)?)
    };
    let national = stage_national(&scores, &inputs.patients, &inputs.holidays, cfg)?;
    Ok(PipelineOutputs {
        frames,
        attach,
        forest,
        cv,
        frame_labels,
        sessions,
        session_counts,
        qmm,
        eval,
        scores,
        ads,
        national,
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

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_forest(path: &Path, forest: &Forest, seed: u64) -> Result<()> {
    ingest::save_model(
        &ModelArtifact::new(seed, Model::SmmForest(forest.clone())),
        path,
    )
}

pub fn save_logreg(path: &Path, model: &LogRegModel, seed: u64) -> Result<()> {
    ingest::save_model(
        &ModelArtifact::new(seed, Model::QmmLogreg(model.clone())),
        path,
    )
}

/// `mode,n_data,n_train,n_test,accuracy,std,test_positive_rate,split_accuracies`
pub fn write_eval_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(
        w,
        "mode,n_data,n_train,n_test,accuracy,std,test_positive_rate,split_accuracies"
    )
    .map_err(io)?;
    for r in reports {
        let splits: Vec<String> = r.accuracies.iter().map(|a| format!("{a:.6}")).collect();
        writeln!(
            w,
            "{},{},{},{},{:.6},{:.6},{:.6},{}",
            r.mode.name(),
            r.n_sessions,
            r.n_train,
            r.n_test,
            r.mean_accuracy,
            r.std_accuracy,
            r.test_positive_rate,
            splits.join(";")
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads the mean accuracies back, for the recovery check.
pub fn read_eval_csv(path: &Path) -> Result<Vec<EvalReport>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Parse(format!("{}: {m}", path.display()));
    let mut out = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad("expected 8 columns"));
        }
        let mode = match f[0] {
            "questionnaire_only" => SessionMode::QuestionnaireOnly,
            "with_smm" => SessionMode::WithSmm,
            other => return Err(bad(&format!("unknown mode {other:?}"))),
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(&format!("bad number {s:?}")))
        };
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(&format!("bad count {s:?}")))
        };
        let accuracies = f[7]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(num)
            .collect::<Result<Vec<f64>>>()?;
        out.push(EvalReport {
            mode,
            splits: accuracies.len(),
            train_frac: f64::NAN,
            n_sessions: int(f[1])?,
            n_train: int(f[2])?,
            n_test: int(f[3])?,
            mean_accuracy: num(f[4])?,
            std_accuracy: num(f[5])?,
            test_positive_rate: num(f[6])?,
            accuracies,
        });
    }
    Ok(out)
}

pub fn write_convergence(path: &Path, c: &Convergence) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "trials,mean_ratio,stdev").map_err(io)?;
    for p in &c.points {
        writeln!(w, "{},{:.6},{:.6}", p.trials, p.mean_ratio, p.stdev).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_ad_outputs(dir: &Path, a: &AdOutputs, emit_svg: bool) -> Result<()> {
    adpair::write_day_results(&dir.join(outputs::AD_DAYS), &a.days)?;
    adpair::write_campaigns(&dir.join(outputs::AD_CAMPAIGNS), &a.campaigns)?;
    adpair::write_distribution(&dir.join(outputs::AD_DISTRIBUTION), &a.distribution)?;
    if let Some(c) = &a.convergence {
        write_convergence(&dir.join(outputs::AD_CONVERGENCE), c)?;
    }
    if emit_svg {
        let cats: Vec<String> = a.distribution.iter().map(|r| r.k.to_string()).collect();
        let chart = svg::bar_chart(
            "positive days per campaign",
            &cats,
            &[
                (
                    "observed",
                    a.distribution.iter().map(|r| r.observed_fraction).collect(),
                ),
                (
                    "binomial",
                    a.distribution.iter().map(|r| r.baseline).collect(),
                ),
            ],
        );
        svg::write(&dir.join(outputs::AD_SVG), &chart)?;
    }
    Ok(())
}

pub fn write_weekday(path: &Path, p: &WeekdayProfile) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "slot,weekday,mean,count").map_err(io)?;
    let names = [
        "effective_monday",
        "tuesday",
        "wednesday",
        "thursday",
        "friday",
        "saturday",
        "sunday",
    ];
    for (i, name) in names.iter().enumerate() {
        let name = if p.holiday_adjusted || i > 0 {
            *name
        } else {
            "monday"
        };
        writeln!(w, "{i},{name},{:.6},{}", p.means[i], p.counts[i]).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_correlation(path: &Path, c: &CorrelationReport) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "lag,n,r").map_err(io)?;
    for l in &c.lags {
        let r = l.r.map_or(String::new(), |r| format!("{r:.6}"));
        writeln!(w, "{},{},{r}", l.lag, l.n).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_national_outputs(dir: &Path, n: &NationalOutputs, emit_svg: bool) -> Result<()> {
    national::write_series(&dir.join(outputs::NATIONAL), &n.raw)?;
    if n.series.normalization != Normalization::Raw {
        national::write_series(&dir.join(outputs::NATIONAL_NORMALIZED), &n.series)?;
    }
    if let Some(p) = &n.weekday {
        write_weekday(&dir.join(outputs::WEEKDAY), p)?;
    }
    if let Some(c) = &n.correlation {
        write_correlation(&dir.join(outputs::CORRELATION), c)?;
    }
    if emit_svg {
        let labels: Vec<String> = n
            .series
            .points
            .iter()
            .map(|p| p.date.format("%m-%d").to_string())
            .collect();
        let chart = svg::line_chart(
            "daily national mood",
            &labels,
            &[("score", n.series.scores())],
        );
        svg::write(&dir.join(outputs::NATIONAL_SVG), &chart)?;
    }
    Ok(())
}

/// Writes every artifact of an in-memory run, as the CLI stages would.
pub fn write_all(dir: &Path, o: &PipelineOutputs, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    features::write_frames_csv(&dir.join(outputs::FRAMES), &o.frames)?;
    save_forest(&dir.join(outputs::SMM_MODEL), &o.forest, cfg.seed)?;
    if let Some(cv) = &o.cv {
        write_text(&dir.join(outputs::SMM_CV), &cv.to_table())?;
    }
    smm::write_frame_labels(&dir.join(outputs::FRAME_LABELS), &o.frame_labels)?;
    qmm::write_sessions(&dir.join(outputs::SESSIONS), &o.sessions)?;
    save_logreg(&dir.join(outputs::QMM_MODEL), &o.qmm, cfg.seed)?;
    if !o.eval.is_empty() {
        write_eval_csv(&dir.join(outputs::QMM_EVAL), &o.eval)?;
        write_text(
            &dir.join(outputs::QMM_EVAL_TABLE),
            &qmm::render_eval_table(&o.eval),
        )?;
    }
    qmm::write_session_scores(&dir.join(outputs::SESSION_SCORES), &o.scores)?;
    if let Some(a) = &o.ads {
        write_ad_outputs(dir, a, cfg.adpair.emit_svg)?;
    }
    write_national_outputs(dir, &o.national, cfg.national.emit_svg)
}

pub fn write_recovery(dir: &Path, report: &RecoveryReport) -> Result<()> {
    write_text(&dir.join(outputs::RECOVERY), &report.to_text())?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Parse(e.to_string()))?;
    write_text(&dir.join(outputs::RECOVERY_JSON), &json)
}

/// Names of CSV artifacts in `dir`, sorted; used by determinism checks.
pub fn csv_artifacts(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            out.insert(
                path.file_name()
                    .expect("file")
                    .to_string_lossy()
                    .into_owned(),
                bytes,
            );
        }
    }
    Ok(out)
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use moodpipe::config::{RunConfig, SEED_ENV};
use moodpipe::ingest::{self, load_model};
use moodpipe::national::Normalization;
use moodpipe::pipeline::{self, outputs};
use moodpipe::qmm::{self, SessionMode};
use moodpipe::synth::{self, GroundTruth, RecoveryInputs, SensorSpec};
use moodpipe::{features, smm, Error, Result};

const COMMON_KEYS: &str = "Config keys read by every subcommand: seed (overridden by MOODPIPE_SEED), timezone, verbosity.";

#[derive(Parser)]
#[command(name = "moodpipe", version, about = "Mood estimation from mobile sensing and search queries", after_help = COMMON_KEYS)]
struct Cli {
    /// Run configuration (TOML). Defaults apply to missing keys; without a file every key has its default.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Overrides paths.data_dir.
    #[arg(long, global = true, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Overrides paths.out_dir.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic population with planted ground truth.
    #[command(after_help = "Config keys: synth.* (every generator key), paths.data_dir.")]
    SynthGen(SynthGenArgs),
    /// Cut sensor logs into 3-hour windows and compute feature frames.
    #[command(
        after_help = "Config keys: paths.data_dir, paths.sensors, paths.annotations, paths.out_dir. Writes frames.csv."
    )]
    ExtractFeatures,
    /// Train the sensor mood model on annotated frames.
    #[command(
        after_help = "Config keys: smm.n_trees, smm.max_depth, smm.min_leaf, smm.features_per_split, paths.out_dir. Reads frames.csv, writes smm_model.json."
    )]
    TrainSmm,
    /// Cross-validate the sensor mood model.
    #[command(
        after_help = "Config keys: smm.n_trees, smm.max_depth, smm.min_leaf, smm.features_per_split, smm.cv_folds, paths.out_dir. Reads frames.csv, writes smm_cv.txt."
    )]
    CvSmm,
    /// Label every frame with the sensor mood model.
    #[command(
        after_help = "Config keys: paths.out_dir. Reads smm_model.json and frames.csv, writes frame_labels.csv."
    )]
    PredictSmm,
    /// Pair query windows with questionnaire or sensor-model labels.
    #[command(
        after_help = "Config keys: qmm.mode, qmm.smm_min_confidence, paths.data_dir, paths.queries, paths.out_dir. Reads frame_labels.csv, writes sessions.jsonl."
    )]
    BuildSessions(ModeArgs),
    /// Train the query mood model.
    #[command(
        after_help = "Config keys: qmm.mode, qmm.min_df, qmm.max_vocab, qmm.l2_lambda, qmm.max_epochs, qmm.grad_tol, paths.out_dir. Reads sessions.jsonl, writes qmm_model.json."
    )]
    TrainQmm(ModeArgs),
    /// Compare query models trained with and without sensor-model labels.
    #[command(
        after_help = "Config keys: qmm.splits, qmm.train_frac, qmm.min_df, qmm.max_vocab, qmm.l2_lambda, qmm.max_epochs, qmm.grad_tol, paths.out_dir. Reads sessions.jsonl, writes qmm_eval.csv and qmm_eval.txt."
    )]
    EvalQmm,
    /// Score every query window with the query mood model.
    #[command(
        after_help = "Config keys: paths.data_dir, paths.queries, paths.out_dir. Reads qmm_model.json, writes session_scores.csv."
    )]
    Score,
    /// Pairwise mood-effectiveness analysis of ad logs.
    #[command(
        after_help = "Config keys: adpair.trials, adpair.days, adpair.convergence_trials, adpair.convergence_repetitions, adpair.emit_svg, paths.data_dir, paths.ads, paths.out_dir. Reads session_scores.csv, writes ad_days.csv, ad_campaigns.csv, ad_distribution.csv, ad_convergence.csv."
    )]
    AdPairwise(AdArgs),
    /// Daily national mood series, weekly rhythm and patient correlation.
    #[command(
        after_help = "Config keys: national.from, national.to, national.normalize, national.relative_base, national.emit_svg, paths.data_dir, paths.patients, paths.holidays, paths.out_dir. Reads session_scores.csv, writes national.csv (raw series), national_normalized.csv when normalizing, weekday_profile.csv, correlation.csv."
    )]
    NationalMood(NationalArgs),
    /// Check stage outputs against the generator's ground truth.
    #[command(
        after_help = "Config keys: paths.truth, paths.data_dir, paths.patients, paths.out_dir. Reads frame_labels.csv, qmm_eval.csv, ad_campaigns.csv, national.csv; writes recovery.txt and recovery.json."
    )]
    VerifyRecovery,
}

#[derive(Args)]
struct SynthGenArgs {
    /// Output directory for the logs; defaults to paths.data_dir.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Full study scale: 460 users, 90 days, full sensor rates.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct ModeArgs {
    /// Overrides qmm.mode.
    #[arg(long, value_enum)]
    mode: Option<SessionMode>,
}

#[derive(Args)]
struct AdArgs {
    /// Overrides adpair.trials.
    #[arg(long)]
    trials: Option<u64>,
    /// Overrides adpair.days.
    #[arg(long)]
    days: Option<u32>,
    /// Also write ad_distribution.svg.
    #[arg(long)]
    emit_svg: bool,
}

#[derive(Args)]
struct NationalArgs {
    /// Overrides national.from.
    #[arg(long, value_parser = parse_date)]
    from: Option<NaiveDate>,
    /// Overrides national.to.
    #[arg(long, value_parser = parse_date)]
    to: Option<NaiveDate>,
    /// Overrides national.normalize.
    #[arg(long, value_enum)]
    normalize: Option<Normalization>,
    /// Overrides national.relative_base.
    #[arg(long, value_name = "SERIES.csv")]
    relative_base: Option<PathBuf>,
    /// Also write national.svg.
    #[arg(long)]
    emit_svg: bool,
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    moodpipe::time::parse_date(s).map_err(|e| e.to_string())
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())?;
    if let Some(d) = &cli.data_dir {
        cfg.paths.data_dir = d.clone();
    }
    if let Some(d) = &cli.out_dir {
        cfg.paths.out_dir = d.clone();
    }
    Ok(cfg)
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.paths.out(name)
}

fn require(path: &Path, stage: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingStage(format!(
            "{} not found; run `moodpipe {stage}` first",
            path.display()
        )))
    }
}

fn read_frames(cfg: &RunConfig) -> Result<Vec<features::FeatureFrame>> {
    let p = out(cfg, outputs::FRAMES);
    require(&p, "extract-features")?;
    features::read_frames_csv(&p)
}

fn read_sessions(cfg: &RunConfig) -> Result<Vec<qmm::Session>> {
    let p = out(cfg, outputs::SESSIONS);
    require(&p, "build-sessions")?;
    qmm::read_sessions(&p)
}

fn read_scores(cfg: &RunConfig) -> Result<Vec<qmm::SessionScore>> {
    let p = out(cfg, outputs::SESSION_SCORES);
    require(&p, "score")?;
    qmm::read_session_scores(&p)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let _ =
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cfg.verbosity))
            .try_init();

    match cli.command {
        Command::SynthGen(a) => {
            if a.full_scale {
                let s = SensorSpec::full_rate();
                cfg.synth = synth::SynthConfig {
                    sensors: s,
                    ..synth::SynthConfig {
                        seed: cfg.synth.seed,
                        ..synth::SynthConfig::study_scale()
                    }
                };
                log::warn!("full-scale generation writes tens of gigabytes of sensor records");
            }
            let dir = a.out.unwrap_or_else(|| cfg.paths.data_dir.clone());
            let d = synth::generate(&cfg.synth)?;
            d.write_to(&dir)?;
            println!(
                "wrote {} users x {} days to {}: {} sensor streams, {} annotations, {} queries, {} ad events, {} planted ads",
                cfg.synth.n_users,
                cfg.synth.n_days,
                dir.display(),
                d.streams.len(),
                d.annotations.len(),
                d.queries.len(),
                d.ad_events.len(),
                d.truth.planted_ads.len()
            );
        }
        Command::ExtractFeatures => {
            let streams = ingest::parse_sensor_log(&cfg.paths.sensors())?.records;
            let annotations = ingest::parse_annotations(&cfg.paths.annotations())?.records;
            let (frames, report) = pipeline::stage_features(&streams, &annotations, &cfg)?;
            features::write_frames_csv(&out(&cfg, outputs::FRAMES), &frames)?;
            println!(
                "{} frames, {} annotated, {} annotations dropped",
                frames.len(),
                report.attached,
                report.dropped
            );
        }
        Command::TrainSmm => {
            let frames = read_frames(&cfg)?;
            let forest = pipeline::stage_train_smm(&frames, &cfg)?;
            pipeline::save_forest(&out(&cfg, outputs::SMM_MODEL), &forest, cfg.seed)?;
            println!(
                "trained {} trees on {} features",
                forest.trees.len(),
                forest.n_features
            );
        }
        Command::CvSmm => {
            let frames = read_frames(&cfg)?;
            let report = pipeline::stage_cv_smm(&frames, &cfg)?;
            let table = report.to_table();
            pipeline::write_text(&out(&cfg, outputs::SMM_CV), &table)?;
            print!("{table}");
        }
        Command::PredictSmm => {
            let p = out(&cfg, outputs::SMM_MODEL);
            require(&p, "train-smm")?;
            let forest = load_model(&p)?.into_forest()?;
            let frames = read_frames(&cfg)?;
            let labels = pipeline::stage_predict_smm(&forest, &frames)?;
            smm::write_frame_labels(&out(&cfg, outputs::FRAME_LABELS), &labels)?;
            println!("labeled {} frames", labels.len());
        }
        Command::BuildSessions(a) => {
            if let Some(m) = a.mode {
                cfg.qmm.mode = m;
            }
            let p = out(&cfg, outputs::FRAME_LABELS);
            require(&p, "predict-smm")?;
            let labels = smm::read_frame_labels(&p)?;
            let queries = ingest::parse_queries(&cfg.paths.queries())?.records;
            let (sessions, c) = pipeline::stage_sessions(&queries, &labels, &cfg)?;
            qmm::write_sessions(&out(&cfg, outputs::SESSIONS), &sessions)?;
            println!(
                "{} sessions ({} questionnaire, {} sensor-model) from {} query windows; {} neutral, {} unlabeled",
                sessions.len(),
                c.questionnaire,
                c.smm,
                c.query_windows,
                c.neutral_excluded,
                c.unlabeled
            );
        }
        Command::TrainQmm(a) => {
            let mode = a.mode.unwrap_or(cfg.qmm.mode);
            let sessions = read_sessions(&cfg)?;
            let model = pipeline::stage_train_qmm(&sessions, mode, &cfg)?;
            pipeline::save_logreg(&out(&cfg, outputs::QMM_MODEL), &model, cfg.seed)?;
            println!(
                "trained {} model: {} vocabulary entries, {} sessions",
                mode.name(),
                model.vocabulary.len(),
                model.meta.n_records
            );
        }
        Command::EvalQmm => {
            let sessions = read_sessions(&cfg)?;
            let reports = pipeline::stage_eval_qmm(&sessions, &cfg)?;
            pipeline::write_eval_csv(&out(&cfg, outputs::QMM_EVAL), &reports)?;
            let table = qmm::render_eval_table(&reports);
            pipeline::write_text(&out(&cfg, outputs::QMM_EVAL_TABLE), &table)?;
            print!("{table}");
        }
        Command::Score => {
            let p = out(&cfg, outputs::QMM_MODEL);
            require(&p, "train-qmm")?;
            let model = load_model(&p)?.into_logreg()?;
            let queries = ingest::parse_queries(&cfg.paths.queries())?.records;
            let scores = pipeline::stage_score(&queries, &model, &cfg)?;
            qmm::write_session_scores(&out(&cfg, outputs::SESSION_SCORES), &scores)?;
            println!("scored {} query windows", scores.len());
        }
        Command::AdPairwise(a) => {
            if let Some(t) = a.trials {
                cfg.adpair.trials = t;
            }
            if let Some(d) = a.days {
                cfg.adpair.days = d;
            }
            cfg.adpair.emit_svg |= a.emit_svg;
            cfg.validate()?;
            let events = ingest::parse_ad_csv(&cfg.paths.ads())?.records;
            let scores = read_scores(&cfg)?;
            let ads = pipeline::stage_ads(&events, &scores, &cfg)?;
            pipeline::write_ad_outputs(&cfg.paths.out_dir, &ads, cfg.adpair.emit_svg)?;
            let flagged: Vec<&str> = ads
                .campaigns
                .iter()
                .filter(|c| c.mood_effective)
                .map(|c| c.ad_id.as_str())
                .collect();
            println!(
                "{} ad-days over {} campaigns; mood-effective: {}",
                ads.days.len(),
                ads.campaigns.len(),
                flagged.join(" ")
            );
            if let Some(c) = &ads.chi_square {
                println!(
                    "chi-square vs binomial baseline: {:.3} on {} dof, p = {:.4}",
                    c.statistic, c.dof, c.p_value
                );
            }
        }
        Command::NationalMood(a) => {
            let n = &mut cfg.national;
            n.from = a.from.or(n.from);
            n.to = a.to.or(n.to);
            n.normalize = a.normalize.unwrap_or(n.normalize);
            n.relative_base = a.relative_base.or(n.relative_base.take());
            n.emit_svg |= a.emit_svg;
            cfg.validate()?;
            let scores = read_scores(&cfg)?;
            let patients_path = cfg.paths.patients();
            let patients = if patients_path.exists() {
                ingest::parse_patient_csv(&patients_path)?.records
            } else {
                Vec::new()
            };
            let holidays = pipeline::load_holidays(&cfg.paths.holidays())?;
            let nat = pipeline::stage_national(&scores, &patients, &holidays, &cfg)?;
            pipeline::write_national_outputs(&cfg.paths.out_dir, &nat, cfg.national.emit_svg)?;
            println!("{} days, {} gaps", nat.raw.points.len(), nat.raw.gaps.len());
            if let Some(p) = &nat.weekday {
                println!("lowest weekday: {:?}", p.argmin());
            }
            if let Some(r) = nat.correlation.as_ref().and_then(|c| c.r) {
                println!("mood-patient r = {r:.3}");
            }
        }
        Command::VerifyRecovery => {
            let truth = GroundTruth::load(&cfg.paths.truth())?;
            let read_opt = |name: &str| {
                let p = out(&cfg, name);
                p.exists().then_some(p)
            };
            let labels = read_opt(outputs::FRAME_LABELS)
                .map(|p| smm::read_frame_labels(&p))
                .transpose()?;
            let evals = read_opt(outputs::QMM_EVAL)
                .map(|p| pipeline::read_eval_csv(&p))
                .transpose()?;
            let campaigns = read_opt(outputs::AD_CAMPAIGNS)
                .map(|p| moodpipe::adpair::read_campaigns(&p))
                .transpose()?;
            let series = read_opt(outputs::NATIONAL)
                .map(|p| moodpipe::national::read_series(&p, Normalization::Raw))
                .transpose()?;
            let patients = ingest::parse_patient_csv(&cfg.paths.patients())?.records;
            let find = |m: SessionMode| evals.as_ref().and_then(|e| e.iter().find(|r| r.mode == m));
            let inputs = RecoveryInputs {
                frame_labels: labels.as_deref(),
                qmm_questionnaire_only: find(SessionMode::QuestionnaireOnly),
                qmm_with_smm: find(SessionMode::WithSmm),
                campaigns: campaigns.as_deref(),
                national: series.as_ref(),
                patients: Some(&patients),
            };
            let report = synth::verify_recovery(&inputs, &truth)?;
            pipeline::write_recovery(&cfg.paths.out_dir, &report)?;
            print!("{}", report.to_text());
            if !report.passed {
                return Err(Error::InvalidInput(
                    "planted signals were not recovered; see recovery.txt".into(),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn every_subcommand_lists_config_keys() {
        let cmd = Cli::command();
        for sub in cmd.get_subcommands() {
            let help = sub
                .get_after_help()
                .map(|h| h.to_string())
                .unwrap_or_default();
            assert!(
                help.starts_with("Config keys:"),
                "{} has no key list",
                sub.get_name()
            );
        }
        assert_eq!(cmd.get_subcommands().count(), 12);
    }

    #[test]
    fn common_keys_mentioned() {
        assert!(COMMON_KEYS.contains("seed") && COMMON_KEYS.contains("verbosity"));
    }
}

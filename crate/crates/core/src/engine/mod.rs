//! The evolutionary loop and its batch entry points: `fit`, `transform`,
//! `zero_shot`, plus run persistence.

mod config;
mod persist;
mod report;

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{
    attach_target_lag, chronological_split, date_aligned_folds, load_csv, read_csv, Column,
    ColumnDescription, DataError, DatasetDescription, Fold, Schema, SplitSpec, TimeFrame,
    TARGET_LAG_COLUMN,
};
use crate::dsl::{execute, validate, DslError, DslProgram};
use crate::evaluators::{combined_score, fresh_score, EvalScore};
use crate::featuredb::{
    DbError, FeatureDb, FeatureSpec, FilterMode, ModelSelection, DEFAULT_TEMPLATE,
};
use crate::llm::{
    extract_code, ChatSession, HttpBackend, LlmBackend, LlmError, MockBackend, Usage,
};
use crate::model::{walk_forward_design, walk_forward_score, Design, ModelError};

pub use config::{BackendKind, ConfigError, EngineConfig, DEFAULT_SEEDS};
pub use persist::{read_features, write_features, RECORD_SEPARATOR};
pub use report::{
    CandidateCounts, DatasetSummary, GenerationReport, RunReport, RunSettings, StopReason,
    TestReport, Timings,
};

/// Consecutive backend failures after which `fit` stops asking.
pub const MAX_CONSECUTIVE_LLM_ERRORS: usize = 3;

pub const SYSTEM_PROMPT: &str = "You write feature programs for time-series forecasting models.";

pub const BEST_FEATURES_FILE: &str = "best_features.txt";
pub const POPULATION_FILE: &str = "population.txt";
pub const REPORT_FILE: &str = "report.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const MANIFEST_FILE: &str = "run.json";
pub const DESCRIPTION_FILE: &str = "description.txt";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("seed feature rejected: {0}")]
    Seed(String),
    #[error("{0}")]
    Persist(String),
}

/// Loaded data with its split, folds and base feature list.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Full frame including the lagged-target column.
    pub frame: TimeFrame,
    /// Description as loaded from disk.
    pub original_description: DatasetDescription,
    /// Description including the lagged-target entry, as used in prompts.
    pub description: DatasetDescription,
    pub split: SplitSpec,
    /// Rows before the test region; everything the search may look at.
    pub working: TimeFrame,
    pub base: Vec<String>,
    pub val_folds: Vec<Fold>,
    pub test_folds: Vec<Fold>,
}

impl Prepared {
    pub fn load(config: &EngineConfig) -> Result<Self, EngineError> {
        let (frame, description) = load_csv(
            &config.data_path,
            &config.description_path,
            &config.csv_options(),
        )?;
        Self::from_frame(frame, description, config)
    }

    pub fn from_frame(
        frame: TimeFrame,
        original_description: DatasetDescription,
        config: &EngineConfig,
    ) -> Result<Self, EngineError> {
        config.check()?;
        let frame = attach_target_lag(&frame)?;
        let mut description = original_description.clone();
        description.push_entry(ColumnDescription {
            name: TARGET_LAG_COLUMN.into(),
            dtype: "float".into(),
            has_nan: true,
            description: format!(
                "value of {} {} row(s) earlier, known at prediction time",
                frame.target_name(),
                frame.horizon()
            ),
        });
        let mut split = chronological_split(&frame, config.test_frac, config.val_frac)?;
        split.fold_count = config.val_folds;
        let working = frame.slice_rows(0..split.validation_end);
        let val_folds = date_aligned_folds(
            &working,
            0..split.validation_end,
            split.train_end,
            config.val_folds,
        )?;
        let test_folds = date_aligned_folds(
            &frame,
            0..split.test_end,
            split.validation_end,
            config.test_folds,
        )?;
        let base = frame.base_feature_names();
        Ok(Self {
            frame,
            original_description,
            description,
            split,
            working,
            base,
            val_folds,
            test_folds,
        })
    }

    fn selection(&self, config: &EngineConfig) -> ModelSelection {
        ModelSelection {
            frame: self.working.clone(),
            base: self.base.clone(),
            folds: self.val_folds.clone(),
            mode: config.filter,
            params: config.model,
            corr_threshold: config.corr_threshold,
        }
    }
}

/// Schema of the columns a program may read: everything except the target.
pub fn feature_schema(frame: &TimeFrame) -> Schema {
    Schema::new(
        frame
            .schema()
            .iter()
            .filter(|(n, _)| *n != frame.target_name())
            .map(|(n, k)| (n.to_string(), k))
            .collect(),
    )
}

/// What happened to one proposed program.
#[derive(Debug, Clone)]
pub enum Verdict {
    ParseFailed(String),
    ValidationFailed(String),
    Dead(DslProgram),
    Scored {
        program: DslProgram,
        scores: EvalScore,
        pvalue: Option<f64>,
    },
}

impl Verdict {
    fn program(&self) -> Option<&DslProgram> {
        match self {
            Verdict::Dead(p) | Verdict::Scored { program: p, .. } => Some(p),
            _ => None,
        }
    }
}

/// Parses, validates, executes and scores candidate programs on a fixed region.
pub struct CandidateScorer<'a> {
    pub frame: &'a TimeFrame,
    pub schema: Schema,
    pub rows: Range<usize>,
    pub mode: FilterMode,
    pub granger_lag: usize,
}

impl<'a> CandidateScorer<'a> {
    pub fn new(
        frame: &'a TimeFrame,
        rows: Range<usize>,
        mode: FilterMode,
        granger_lag: usize,
    ) -> Self {
        Self {
            frame,
            schema: feature_schema(frame),
            rows,
            mode,
            granger_lag,
        }
    }

    /// Parses and validates without executing.
    #[allow(clippy::result_large_err)]
    pub fn check(&self, code: &str) -> Result<DslProgram, Verdict> {
        let program = DslProgram::parse(code).map_err(|e| Verdict::ParseFailed(e.to_string()))?;
        if program.name() == self.frame.target_name() {
            return Err(Verdict::ValidationFailed(format!(
                "feature name `{}` is the target",
                program.name()
            )));
        }
        validate(&program, &self.schema).map_err(|e| Verdict::ValidationFailed(e.to_string()))?;
        Ok(program)
    }

    pub fn evaluate(&self, code: &str) -> Verdict {
        let program = match self.check(code) {
            Ok(p) => p,
            Err(v) => return v,
        };
        let values = match execute(&program, self.frame) {
            Ok(v) => v,
            Err(e) => return Verdict::ValidationFailed(e.to_string()),
        };
        let x = &values[self.rows.clone()];
        let y = &self.frame.target()[self.rows.clone()];
        let (scores, pvalue) = match self.mode {
            FilterMode::Shap => (combined_score(x, y, self.granger_lag), None),
            FilterMode::Fresh => {
                let (s, p) = fresh_score(x, y);
                (s, Some(p))
            }
        };
        if scores.is_dead() {
            Verdict::Dead(program)
        } else {
            Verdict::Scored {
                program,
                scores,
                pvalue,
            }
        }
    }

    pub fn evaluate_batch(&self, codes: &[String]) -> Vec<Verdict> {
        codes.par_iter().map(|c| self.evaluate(c)).collect()
    }
}

/// Result of [`fit`].
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub db: FeatureDb,
    pub report: RunReport,
    pub timings: Timings,
}

impl FitOutcome {
    pub fn best_features(&self) -> &[FeatureSpec] {
        self.db.best_features()
    }
}

/// Backend named by the config.
pub fn make_backend(config: &EngineConfig) -> Result<Box<dyn LlmBackend>, EngineError> {
    Ok(match &config.backend {
        BackendKind::Mock { script: Some(p) } => Box::new(MockBackend::from_file(p)?),
        BackendKind::Mock { script: None } => Box::new(MockBackend::default()),
        BackendKind::Http => Box::new(HttpBackend::from_env(config.http_config())?),
    })
}

fn load_template(config: &EngineConfig) -> Result<String, EngineError> {
    match &config.template_path {
        Some(p) => Ok(std::fs::read_to_string(p)?),
        None => Ok(DEFAULT_TEMPLATE.to_string()),
    }
}

fn seed_sources(config: &EngineConfig) -> Result<Vec<String>, EngineError> {
    let mut seeds = config.seed_features.clone();
    for path in &config.seed_files {
        let text = std::fs::read_to_string(path)?;
        let mut current = Vec::new();
        for line in text.lines().chain(std::iter::once("---")) {
            if line.trim() == "---" {
                let s = current.join("\n").trim().to_string();
                if !s.is_empty() {
                    seeds.push(s);
                }
                current.clear();
            } else {
                current.push(line);
            }
        }
    }
    if seeds.is_empty() && config.default_seeds {
        seeds = DEFAULT_SEEDS.iter().map(|s| s.to_string()).collect();
    }
    Ok(seeds)
}

/// Loads the configured data and backend, then runs [`fit_with_backend`].
pub fn fit(config: &EngineConfig) -> Result<FitOutcome, EngineError> {
    let mut backend = make_backend(config)?;
    let prepared = Prepared::load(config)?;
    fit_prepared(config, &prepared, &mut backend)
}

pub fn fit_with_backend(
    config: &EngineConfig,
    backend: &mut dyn LlmBackend,
) -> Result<FitOutcome, EngineError> {
    let prepared = Prepared::load(config)?;
    fit_prepared(config, &prepared, backend)
}

/// Runs the evolutionary search on prepared data and persists the run when
/// `output_dir` is set.
pub fn fit_prepared(
    config: &EngineConfig,
    prepared: &Prepared,
    backend: &mut dyn LlmBackend,
) -> Result<FitOutcome, EngineError> {
    let started = Instant::now();
    let mut timings = Timings::default();
    let selection = prepared.selection(config);
    let base_design = Design::build(&prepared.working, &prepared.base, &[])?;
    let base_validation_rmse = walk_forward_design(
        &prepared.working,
        &base_design,
        &prepared.val_folds,
        &config.model,
    )?
    .rmse;

    let mut db = FeatureDb::new(
        config.db,
        prepared.description.text(),
        load_template(config)?,
    )?;
    let scorer = CandidateScorer::new(
        &prepared.working,
        prepared.split.validation(),
        config.filter,
        config.granger_lag,
    );
    let generations = config.db.generations;

    let mut seed_features = Vec::new();
    for source in seed_sources(config)? {
        match scorer.evaluate(&source) {
            Verdict::ParseFailed(e) | Verdict::ValidationFailed(e) => {
                return Err(EngineError::Seed(e))
            }
            Verdict::Dead(_) => {}
            Verdict::Scored {
                program,
                scores,
                pvalue,
            } => {
                if db.contains_name(program.name()) {
                    return Err(EngineError::Seed(format!(
                        "duplicate seed name `{}`",
                        program.name()
                    )));
                }
                seed_features.push(program.name().to_string());
                let spec = db.make_spec(program, Some(scores), pvalue);
                db.add_feature(spec, &selection)?;
            }
        }
    }
    timings.setup_secs = started.elapsed().as_secs_f64();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chat = ChatSession::new(config.llm_model.clone(), config.llm_temperature)
        .with_system(SYSTEM_PROMPT);
    let mut usage = Usage::default();
    let mut totals = CandidateCounts::default();
    let mut counts = CandidateCounts::default();
    let mut gen_reports = Vec::new();
    let mut gen_started = Instant::now();
    let mut prompts = 0usize;
    let mut llm_errors = 0usize;
    let mut consecutive_errors = 0usize;

    let stop_reason = loop {
        if db.gen >= generations {
            break StopReason::GenerationsCompleted;
        }
        if config.max_prompts.is_some_and(|m| prompts >= m) {
            break StopReason::PromptBudget;
        }
        let prompt = db.get_prompt(&mut rng);
        prompts += 1;
        let response = match chat.draw(backend, &prompt, config.n_resp) {
            Ok(r) => r,
            Err(_) => {
                llm_errors += 1;
                consecutive_errors += 1;
                if consecutive_errors >= MAX_CONSECUTIVE_LLM_ERRORS {
                    break StopReason::BackendErrors;
                }
                continue;
            }
        };
        consecutive_errors = 0;
        if let Some(u) = &response.usage {
            usage.add(u);
        }
        if response.texts.is_empty() {
            break StopReason::BackendExhausted;
        }
        let codes: Vec<String> = response.texts.iter().map(|t| extract_code(t)).collect();
        for verdict in scorer.evaluate_batch(&codes) {
            if db.gen >= generations {
                break;
            }
            counts.proposed += 1;
            if verdict
                .program()
                .is_some_and(|p| db.contains_name(p.name()))
            {
                counts.validation_failed += 1;
                continue;
            }
            match verdict {
                Verdict::ParseFailed(_) => counts.parse_failed += 1,
                Verdict::ValidationFailed(_) => counts.validation_failed += 1,
                Verdict::Dead(_) => counts.dead_score += 1,
                Verdict::Scored {
                    program,
                    scores,
                    pvalue,
                } => {
                    counts.accepted += 1;
                    let spec = db.make_spec(program, Some(scores), pvalue);
                    let rolled = db.add_feature(spec, &selection)?;
                    if rolled && db.gen < generations {
                        gen_reports.push(GenerationReport {
                            generation: gen_reports.len() + 1,
                            residual: *db.residuals.last().expect("reset stores a residual"),
                            best_features: names(db.best_features()),
                            counts,
                        });
                        totals.add(&counts);
                        counts = CandidateCounts::default();
                        timings
                            .generation_secs
                            .push(gen_started.elapsed().as_secs_f64());
                        gen_started = Instant::now();
                        chat.clear_history();
                    }
                }
            }
        }
    };

    if !(db.fts.is_empty() && db.best_ft_sets.is_empty()) {
        db.update_best_feature_set(&selection)?;
    }
    gen_reports.push(GenerationReport {
        generation: gen_reports.len() + 1,
        residual: db.residuals.last().copied().unwrap_or(base_validation_rmse),
        best_features: names(db.best_features()),
        counts,
    });
    totals.add(&counts);
    timings
        .generation_secs
        .push(gen_started.elapsed().as_secs_f64());

    let test_started = Instant::now();
    let programs: Vec<DslProgram> = db
        .best_features()
        .iter()
        .map(|f| f.program.clone())
        .collect();
    let (base_test, test) = rayon::join(
        || {
            walk_forward_score(
                &prepared.frame,
                &prepared.base,
                &[],
                &prepared.test_folds,
                &config.model,
            )
        },
        || {
            walk_forward_score(
                &prepared.frame,
                &prepared.base,
                &programs,
                &prepared.test_folds,
                &config.model,
            )
        },
    );
    let (base_test, test) = (base_test?, test?);
    timings.test_secs = test_started.elapsed().as_secs_f64();

    let report = RunReport {
        dataset: DatasetSummary {
            rows: prepared.frame.len(),
            train_end: prepared.split.train_end,
            validation_end: prepared.split.validation_end,
            test_end: prepared.split.test_end,
            base_features: prepared.base.clone(),
        },
        settings: RunSettings {
            db: config.db,
            filter: config.filter,
            n_resp: config.n_resp,
            granger_lag: config.granger_lag,
            seed: config.seed,
        },
        seed_features,
        base_validation_rmse,
        generations: gen_reports,
        totals,
        prompts,
        llm_errors,
        stop_reason,
        best_features: names(db.best_features()),
        test: TestReport {
            rmse: test.rmse,
            mae: test.mae,
            fold_rmse: test
                .folds
                .iter()
                .map(|f| f.rmse.is_finite().then_some(f.rmse))
                .collect(),
            base_rmse: base_test.rmse,
            base_mae: base_test.mae,
        },
        usage,
    };
    timings.total_secs = started.elapsed().as_secs_f64();

    let outcome = FitOutcome {
        db,
        report,
        timings,
    };
    if let Some(dir) = &config.output_dir {
        save_run(dir, config, prepared, &outcome)?;
    }
    Ok(outcome)
}

fn names(features: &[FeatureSpec]) -> Vec<String> {
    features.iter().map(|f| f.name().to_string()).collect()
}

/// Column naming and horizon of a persisted run, enough to reload its data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub timestamp_column: String,
    pub target_column: String,
    pub horizon: usize,
}

impl RunManifest {
    pub fn from_config(config: &EngineConfig) -> Self {
        Self {
            timestamp_column: config.timestamp_column.clone(),
            target_column: config.target_column.clone(),
            horizon: config.horizon,
        }
    }
}

fn write_common(
    dir: &Path,
    config: &EngineConfig,
    prepared: &Prepared,
    best: &[FeatureSpec],
) -> Result<(), EngineError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(BEST_FEATURES_FILE), write_features(best))?;
    let manifest = serde_json::to_string_pretty(&RunManifest::from_config(config))
        .expect("manifest serializes");
    std::fs::write(dir.join(MANIFEST_FILE), manifest + "\n")?;
    let mut desc = prepared.original_description.text().to_string();
    desc.push('\n');
    std::fs::write(dir.join(DESCRIPTION_FILE), desc)?;
    Ok(())
}

/// Writes the best set, population, report, timings, manifest and description to `dir`.
pub fn save_run(
    dir: &Path,
    config: &EngineConfig,
    prepared: &Prepared,
    outcome: &FitOutcome,
) -> Result<(), EngineError> {
    write_common(dir, config, prepared, outcome.db.best_features())?;
    std::fs::write(dir.join(POPULATION_FILE), write_features(&outcome.db.fts))?;
    std::fs::write(dir.join(REPORT_FILE), outcome.report.to_json() + "\n")?;
    let timings = serde_json::to_string_pretty(&outcome.timings).expect("timings serialize");
    std::fs::write(dir.join(TIMINGS_FILE), timings + "\n")?;
    Ok(())
}

/// A persisted run directory.
#[derive(Debug, Clone)]
pub struct SavedRun {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub description: DatasetDescription,
    pub best_features: Vec<FeatureSpec>,
}

impl SavedRun {
    pub fn load(dir: &Path) -> Result<Self, EngineError> {
        let manifest: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE))?)
                .map_err(|e| EngineError::Persist(format!("bad manifest: {e}")))?;
        let description =
            DatasetDescription::parse(&std::fs::read_to_string(dir.join(DESCRIPTION_FILE))?)?;
        let best_features = read_features(&std::fs::read_to_string(dir.join(BEST_FEATURES_FILE))?)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            description,
            best_features,
        })
    }

    pub fn report(&self) -> Result<RunReport, EngineError> {
        RunReport::load(&self.dir.join(REPORT_FILE))
    }

    /// Reads a CSV with this run's column layout and adds the lagged target.
    pub fn read_frame(&self, csv_text: &str) -> Result<TimeFrame, EngineError> {
        let options = crate::data::CsvOptions {
            timestamp_column: self.manifest.timestamp_column.clone(),
            target_column: self.manifest.target_column.clone(),
            horizon: self.manifest.horizon,
        };
        Ok(attach_target_lag(&read_csv(
            csv_text,
            &self.description,
            &options,
        )?)?)
    }
}

/// Appends one column per feature, in order. Fails on unknown columns or
/// name collisions.
pub fn transform(frame: &TimeFrame, features: &[FeatureSpec]) -> Result<TimeFrame, EngineError> {
    let mut out = frame.clone();
    for f in features {
        validate(&f.program, &feature_schema(&out)).map_err(DslError::from)?;
        let values = execute(&f.program, &out).map_err(DslError::from)?;
        out = out.with_column(f.name(), Column::Numeric(values))?;
    }
    Ok(out)
}

fn format_timestamp(ts: i64) -> String {
    match chrono::DateTime::from_timestamp(ts, 0) {
        Some(dt) if ts % 86_400 == 0 => dt.format("%Y-%m-%d").to_string(),
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%S").to_string(),
        None => ts.to_string(),
    }
}

/// Serializes a frame as CSV with the timestamp first. NaN cells are left empty.
pub fn write_csv(frame: &TimeFrame, timestamp_column: &str) -> Result<String, EngineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let names: Vec<&str> = frame.column_names().collect();
    let mut header = vec![timestamp_column];
    header.extend(&names);
    w.write_record(&header)
        .map_err(|e| EngineError::Persist(e.to_string()))?;
    for row in 0..frame.len() {
        let mut record = vec![format_timestamp(frame.timestamps()[row])];
        for name in &names {
            record.push(match frame.column(name).expect("listed column") {
                Column::Numeric(v) if v[row].is_nan() => String::new(),
                Column::Numeric(v) => v[row].to_string(),
                Column::Categorical(v) => v[row].clone(),
            });
        }
        w.write_record(&record)
            .map_err(|e| EngineError::Persist(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| EngineError::Persist(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| EngineError::Persist(e.to_string()))
}

/// Result of [`zero_shot`].
#[derive(Debug, Clone)]
pub struct ZeroShotOutcome {
    pub features: Vec<FeatureSpec>,
    pub counts: CandidateCounts,
    pub usage: Usage,
}

/// One prompt without examples or history asking for `k` samples. Programs
/// that fail to parse or validate are dropped; nothing is scored or filtered.
pub fn zero_shot(
    config: &EngineConfig,
    prepared: &Prepared,
    backend: &mut dyn LlmBackend,
    k: usize,
) -> Result<ZeroShotOutcome, EngineError> {
    if k == 0 {
        return Err(
            ConfigError::Invalid("zero-shot sample count must be at least 1".into()).into(),
        );
    }
    let mut db = FeatureDb::new(
        config.db,
        prepared.description.text(),
        load_template(config)?,
    )?;
    let prompt = db.build_prompt(&[]);
    let mut chat = ChatSession::new(config.llm_model.clone(), config.llm_temperature)
        .with_system(SYSTEM_PROMPT);
    let response = chat.draw(backend, &prompt, k)?;
    let scorer = CandidateScorer::new(
        &prepared.working,
        prepared.split.validation(),
        config.filter,
        config.granger_lag,
    );
    let mut counts = CandidateCounts::default();
    let mut features: Vec<FeatureSpec> = Vec::new();
    for text in &response.texts {
        counts.proposed += 1;
        match scorer.check(&extract_code(text)) {
            Err(Verdict::ParseFailed(_)) => counts.parse_failed += 1,
            Err(_) => counts.validation_failed += 1,
            Ok(p) if features.iter().any(|f| f.name() == p.name()) => counts.validation_failed += 1,
            Ok(p) => {
                counts.accepted += 1;
                features.push(db.make_spec(p, None, None));
            }
        }
    }
    if let Some(dir) = &config.output_dir {
        write_common(dir, config, prepared, &features)?;
    }
    Ok(ZeroShotOutcome {
        features,
        counts,
        usage: response.usage.unwrap_or_default(),
    })
}

//! End-to-end orchestration behind a single JSON config.
//!
//! Subcommands mirror the pipeline stages: `synth`, `preprocess`,
//! `train-svm`, `train-rnn`, `baseline`, `evaluate`, and `all`. Every run
//! recomputes the deterministic intermediate state from the input, writes
//! its artifacts only after all computation succeeded, and drops a manifest
//! (config echo, derived seeds, input fingerprint) sufficient to re-run the
//! pipeline identically.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::{naive_class_accuracy, predict_naive};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy, build_report, confusion_matrix, rmse, write_prediction_series_csv, NaiveSection,
    PredictionRow, Provenance, RnnSection, SvmSection,
};
use crate::features::{
    build_classification_examples, build_sequence_examples, split_holdout, ClassificationExample,
    SequenceExample, SplitMode, SplitSpec,
};
use crate::ingest::{
    parse_records, pivot_daily, write_raw_csv, ObservationRecord, ParseMode, UserDayTable, MOOD,
};
use crate::preprocess::{
    forward_fill, prune_days, prune_variables, write_imputation_flags_csv, write_wide_csv,
    PruneConfig, ScalingParams,
};
use crate::rnn::{train_all_users, RnnConfig, RnnModel, UserRnn};
use crate::seeds::derive_seed;
use crate::svm::{train_multiclass, SvmModel, SvmParams};
use crate::synth::{generate_dataset, GroundTruth, SynthConfig};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputSpec {
    /// Raw long-format CSV on disk.
    Csv { path: PathBuf },
    /// Generate the dataset; the generator seed is derived from the global
    /// seed, so the `config.seed` field of the nested config is ignored.
    Synth {
        #[serde(default)]
        config: SynthConfig,
    },
}

impl Default for InputSpec {
    fn default() -> Self {
        Self::Synth {
            config: SynthConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Trailing window of the rolling mood-mean feature.
    pub window: usize,
    /// Days per RNN input window.
    pub seq_len: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { window: 5, seq_len: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmStageConfig {
    pub params: SvmParams,
    pub test_fraction: f64,
    pub split_mode: SplitMode,
}

impl Default for SvmStageConfig {
    fn default() -> Self {
        Self {
            params: SvmParams::default(),
            test_fraction: 0.1,
            split_mode: SplitMode::GlobalRandom,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RnnStageConfig {
    #[serde(flatten)]
    pub config: RnnConfig,
    pub split_mode: SplitMode,
}

impl Default for RnnStageConfig {
    fn default() -> Self {
        Self {
            config: RnnConfig::default(),
            split_mode: SplitMode::PerUserChronological,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub schema_version: u32,
    /// Global seed; stage streams are derived from it by name.
    pub seed: u64,
    pub input: InputSpec,
    pub parse_mode: ParseMode,
    pub prune: PruneConfig,
    pub features: FeatureConfig,
    pub svm: SvmStageConfig,
    pub rnn: RnnStageConfig,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 2204,
            input: InputSpec::default(),
            parse_mode: ParseMode::Strict,
            prune: PruneConfig::default(),
            features: FeatureConfig::default(),
            svm: SvmStageConfig::default(),
            rnn: RnnStageConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported config schema_version {}",
                self.schema_version
            )));
        }
        if self.features.window == 0 || self.features.seq_len == 0 {
            return Err(Error::Config("window and seq_len must be positive".into()));
        }
        if !(self.svm.test_fraction > 0.0 && self.svm.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "svm test_fraction must lie in (0, 1), got {}",
                self.svm.test_fraction
            )));
        }
        self.prune.validate()?;
        self.svm.params.validate()?;
        self.rnn.config.validate()?;
        if let InputSpec::Synth { config } = &self.input {
            config.validate()?;
        }
        Ok(())
    }

    /// Parse a config document; a run manifest is also accepted (its embedded
    /// config is used), so a manifest alone suffices to re-run a pipeline.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let config_value = match value.get("config") {
            Some(embedded) if value.get("command").is_some() => embedded.clone(),
            _ => value,
        };
        let config: Self = serde_json::from_value(config_value)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Effective RNN config: the feature stage owns the window length.
    fn rnn_config(&self) -> RnnConfig {
        RnnConfig {
            seq_len: self.features.seq_len,
            ..self.rnn.config
        }
    }

    fn svm_split(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.svm.test_fraction,
            mode: self.svm.split_mode,
            seed: derive_seed(self.seed, "split-svm"),
        }
    }

    fn rnn_split(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.rnn.config.test_fraction,
            mode: self.rnn.split_mode,
            seed: derive_seed(self.seed, "split-rnn"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Synth,
    Preprocess,
    TrainSvm,
    TrainRnn,
    Baseline,
    Evaluate,
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Preprocess => "preprocess",
            Command::TrainSvm => "train-svm",
            Command::TrainRnn => "train-rnn",
            Command::Baseline => "baseline",
            Command::Evaluate => "evaluate",
            Command::All => "all",
        }
    }
}

#[derive(Debug)]
pub struct RunSummary {
    /// Absolute paths of every file written, sorted.
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

struct Prepared {
    table: UserDayTable,
    scaling: ScalingParams,
}

struct RunState<'a> {
    config: &'a PipelineConfig,
    records: Vec<ObservationRecord>,
    raw_csv: Vec<u8>,
    fingerprint: String,
    ground_truth: Option<GroundTruth>,
    prepared: Option<Prepared>,
    svm_model: Option<SvmModel>,
    rnn_models: Option<Vec<UserRnn>>,
    warnings: Vec<String>,
    artifacts: Vec<(PathBuf, Vec<u8>)>,
}

/// Execute one subcommand. All computation happens before any file is
/// written; on error nothing is emitted.
pub fn run(command: Command, config: &PipelineConfig) -> Result<RunSummary> {
    config.validate()?;
    let mut state = load_input(config)?;

    match command {
        Command::Synth => synth_stage(&mut state)?,
        Command::Preprocess => {
            prepare(&mut state)?;
            preprocess_artifacts(&mut state)?;
        }
        Command::TrainSvm => {
            prepare(&mut state)?;
            train_svm_stage(&mut state)?;
        }
        Command::TrainRnn => {
            prepare(&mut state)?;
            train_rnn_stage(&mut state)?;
        }
        Command::Baseline => {
            prepare(&mut state)?;
            baseline_stage(&mut state)?;
        }
        Command::Evaluate => {
            prepare(&mut state)?;
            load_models_from_disk(&mut state)?;
            evaluate_stage(&mut state)?;
        }
        Command::All => {
            if matches!(config.input, InputSpec::Synth { .. }) {
                synth_stage(&mut state)?;
            }
            prepare(&mut state)?;
            preprocess_artifacts(&mut state)?;
            train_svm_stage(&mut state)?;
            train_rnn_stage(&mut state)?;
            baseline_stage(&mut state)?;
            evaluate_stage(&mut state)?;
        }
    }

    write_manifest(command, &mut state)?;
    flush(state)
}

fn load_input(config: &PipelineConfig) -> Result<RunState<'_>> {
    let (records, raw_csv, ground_truth) = match &config.input {
        InputSpec::Csv { path } => {
            let bytes = fs::read(path).map_err(|_| Error::MissingArtifact(path.clone()))?;
            let outcome = parse_records(bytes.as_slice(), config.parse_mode)?;
            let mut warnings = Vec::new();
            if !outcome.skipped.is_empty() {
                warnings.push(format!("skipped {} malformed row(s)", outcome.skipped.len()));
            }
            return Ok(RunState {
                config,
                fingerprint: sha256_hex(&bytes),
                records: outcome.records,
                raw_csv: bytes,
                ground_truth: None,
                prepared: None,
                svm_model: None,
                rnn_models: None,
                warnings,
                artifacts: Vec::new(),
            });
        }
        InputSpec::Synth { config: synth } => {
            let mut synth = synth.clone();
            synth.seed = derive_seed(config.seed, "synth");
            let (records, truth) = generate_dataset(&synth)?;
            let mut raw_csv = Vec::new();
            write_raw_csv(&records, &mut raw_csv)?;
            (records, raw_csv, Some(truth))
        }
    };
    Ok(RunState {
        config,
        fingerprint: sha256_hex(&raw_csv),
        records,
        raw_csv,
        ground_truth,
        prepared: None,
        svm_model: None,
        rnn_models: None,
        warnings: Vec::new(),
        artifacts: Vec::new(),
    })
}

fn synth_stage(state: &mut RunState) -> Result<()> {
    let Some(truth) = &state.ground_truth else {
        return Err(Error::Config(
            "the synth command requires a synth input".into(),
        ));
    };
    state
        .artifacts
        .push((PathBuf::from("raw.csv"), state.raw_csv.clone()));
    state.artifacts.push((
        PathBuf::from("ground_truth.json"),
        truth.to_json()?.into_bytes(),
    ));
    Ok(())
}

fn prepare(state: &mut RunState) -> Result<()> {
    if state.prepared.is_some() {
        return Ok(());
    }
    let table = pivot_daily(&state.records);
    let pruned_vars = prune_variables(&table, &state.config.prune)?;
    let dropped: Vec<&String> = table
        .variables()
        .iter()
        .filter(|v| !pruned_vars.has_variable(v))
        .collect();
    if !dropped.is_empty() {
        state.warnings.push(format!(
            "pruned {} low-coverage variable(s): {}",
            dropped.len(),
            dropped
                .iter()
                .map(|v| v.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    let pruned = prune_days(&pruned_vars, &state.config.prune);
    for user in &pruned.removed_users {
        state
            .warnings
            .push(format!("user {user} removed: no surviving days"));
    }
    let complete = forward_fill(&pruned.table)?;
    let scaling = crate::preprocess::fit_scaling(&complete, complete.variables());
    state.prepared = Some(Prepared {
        table: complete,
        scaling,
    });
    Ok(())
}

fn prepared<'a>(state: &'a RunState) -> &'a Prepared {
    state.prepared.as_ref().expect("prepare() ran first")
}

fn preprocess_artifacts(state: &mut RunState) -> Result<()> {
    let mut wide = Vec::new();
    write_wide_csv(&prepared(state).table, &mut wide)?;
    let mut flags = Vec::new();
    write_imputation_flags_csv(&prepared(state).table, &mut flags)?;
    state.artifacts.push((PathBuf::from("tables/wide.csv"), wide));
    state
        .artifacts
        .push((PathBuf::from("tables/imputation_flags.csv"), flags));
    Ok(())
}

/// Classification examples plus the deterministic train/test split.
fn svm_data(
    state: &mut RunState,
) -> Result<(Vec<ClassificationExample>, Vec<ClassificationExample>)> {
    let (examples, skipped) =
        build_classification_examples(&prepared(state).table, state.config.features.window)?;
    for user in skipped {
        state
            .warnings
            .push(format!("user {user} has < 2 days; no classification examples"));
    }
    split_holdout(examples, &state.config.svm_split())
}

fn train_svm_stage(state: &mut RunState) -> Result<()> {
    let (train, _) = svm_data(state)?;
    let model = train_multiclass(&train, &state.config.svm.params)?;
    state
        .artifacts
        .push((PathBuf::from("models/svm.json"), model.to_json()?.into_bytes()));
    state.svm_model = Some(model);
    Ok(())
}

struct RnnData {
    train_by_user: BTreeMap<String, Vec<SequenceExample>>,
    test_by_user: BTreeMap<String, Vec<SequenceExample>>,
}

fn rnn_data(state: &mut RunState) -> Result<RnnData> {
    let prep = prepared(state);
    let (mut by_user, stats) =
        build_sequence_examples(&prep.table, &prep.scaling, state.config.features.seq_len)?;
    for user in &stats.skipped_users {
        state.warnings.push(format!(
            "user {user} has too few days for a {}-day window; no sequence examples",
            state.config.features.seq_len
        ));
    }
    if stats.clamped_values > 0 {
        state.warnings.push(format!(
            "{} scaled value(s) fell outside the fitted range and were clamped",
            stats.clamped_values
        ));
    }

    let split = state.config.rnn_split();
    if split.mode == SplitMode::PerUserChronological {
        // Users whose example count cannot support both split sides are
        // dropped here with a warning; split_holdout itself treats them as
        // errors when called directly.
        let unsplittable: Vec<String> = by_user
            .iter()
            .filter(|(_, examples)| {
                let k = crate::features::holdout_size(examples.len(), split.test_fraction);
                k == 0 || k == examples.len()
            })
            .map(|(user, _)| user.clone())
            .collect();
        for user in &unsplittable {
            state.warnings.push(format!(
                "user {user} has too few sequence examples for a {:.0}/{:.0} split; skipped",
                (1.0 - split.test_fraction) * 100.0,
                split.test_fraction * 100.0
            ));
            by_user.remove(user);
        }
    }
    if by_user.is_empty() {
        return Err(Error::EmptyInput("no users with enough sequence examples"));
    }

    let flat: Vec<SequenceExample> = by_user.into_values().flatten().collect();
    let (train, test) = split_holdout(flat, &split)?;
    let mut data = RnnData {
        train_by_user: group_by_user(train),
        test_by_user: group_by_user(test),
    };
    if split.mode == SplitMode::GlobalRandom {
        // A global shuffle may leave a user with an empty side.
        let lopsided: Vec<String> = data
            .train_by_user
            .keys()
            .filter(|u| !data.test_by_user.contains_key(*u))
            .chain(
                data.test_by_user
                    .keys()
                    .filter(|u| !data.train_by_user.contains_key(*u)),
            )
            .cloned()
            .collect();
        for user in lopsided {
            state.warnings.push(format!(
                "user {user} landed on one side of the global split only; skipped"
            ));
            data.train_by_user.remove(&user);
            data.test_by_user.remove(&user);
        }
    }
    Ok(data)
}

fn group_by_user(examples: Vec<SequenceExample>) -> BTreeMap<String, Vec<SequenceExample>> {
    let mut grouped: BTreeMap<String, Vec<SequenceExample>> = BTreeMap::new();
    for example in examples {
        grouped.entry(example.user_id.clone()).or_default().push(example);
    }
    for group in grouped.values_mut() {
        group.sort_by_key(|e| e.target_date);
    }
    grouped
}

fn train_rnn_stage(state: &mut RunState) -> Result<()> {
    let data = rnn_data(state)?;
    let rnn_config = state.config.rnn_config();
    let scaling = prepared(state).scaling.clone();
    let models = train_all_users(&data.train_by_user, &rnn_config, &scaling)?;
    for unit in &models {
        state.artifacts.push((
            PathBuf::from(format!("models/rnn_{}.json", unit.user_id)),
            unit.model.to_json()?.into_bytes(),
        ));
        let mut trace_csv = Vec::new();
        unit.trace.write_csv(&mut trace_csv)?;
        state.artifacts.push((
            PathBuf::from(format!("plots/rnn_trace_{}.csv", unit.user_id)),
            trace_csv,
        ));
    }
    state.rnn_models = Some(models);
    Ok(())
}

fn baseline_stage(state: &mut RunState) -> Result<()> {
    let table = &prepared(state).table;
    let mut rows = Vec::new();
    for user in table.user_ids().map(str::to_string).collect::<Vec<_>>() {
        for prediction in predict_naive(&user, &table.mood_series(&user)) {
            rows.push(PredictionRow {
                user_id: prediction.user_id,
                date: prediction.target_date,
                actual: prediction.actual,
                predicted: prediction.predicted,
                model: "naive",
                segment: "full",
            });
        }
    }
    let mut csv = Vec::new();
    write_prediction_series_csv(&rows, &mut csv)?;
    state
        .artifacts
        .push((PathBuf::from("plots/predictions_naive.csv"), csv));
    Ok(())
}

fn load_models_from_disk(state: &mut RunState) -> Result<()> {
    let out = &state.config.output_dir;
    let svm_path = out.join("models/svm.json");
    let svm_text = fs::read_to_string(&svm_path).map_err(|_| Error::MissingArtifact(svm_path))?;
    state.svm_model = Some(SvmModel::from_json(&svm_text)?);

    let data = rnn_data(state)?;
    let mut models = Vec::new();
    for user in data.train_by_user.keys() {
        let path = out.join(format!("models/rnn_{user}.json"));
        let text = fs::read_to_string(&path).map_err(|_| Error::MissingArtifact(path))?;
        models.push(UserRnn {
            user_id: user.clone(),
            model: RnnModel::from_json(&text)?,
            trace: Default::default(),
        });
    }
    state.rnn_models = Some(models);
    Ok(())
}

fn evaluate_stage(state: &mut RunState) -> Result<()> {
    let svm_model = state
        .svm_model
        .clone()
        .ok_or_else(|| Error::MissingArtifact(state.config.output_dir.join("models/svm.json")))?;
    let rnn_models = state.rnn_models.clone().unwrap_or_default();
    let models_by_user: BTreeMap<&str, &RnnModel> = rnn_models
        .iter()
        .map(|unit| (unit.user_id.as_str(), &unit.model))
        .collect();

    let mut plot_rows = Vec::new();

    // SVM: confusion matrices over both split sides.
    let (svm_train, svm_test) = svm_data(state)?;
    let mut sections = Vec::with_capacity(2);
    for (examples, segment) in [(&svm_train, "train"), (&svm_test, "test")] {
        let mut actuals = Vec::with_capacity(examples.len());
        let mut predictions = Vec::with_capacity(examples.len());
        for example in examples.iter() {
            let predicted = svm_model.predict(&example.features)?;
            actuals.push(example.target_class);
            predictions.push(predicted);
            plot_rows.push(PredictionRow {
                user_id: example.user_id.clone(),
                date: example.target_date,
                actual: f64::from(example.target_class),
                predicted: f64::from(predicted),
                model: "svm",
                segment,
            });
        }
        sections.push(confusion_matrix(&actuals, &predictions)?);
    }
    let test_matrix = sections.pop().expect("two matrices");
    let train_matrix = sections.pop().expect("two matrices");
    let svm_section = SvmSection {
        train_accuracy: accuracy(&train_matrix)?,
        test_accuracy: accuracy(&test_matrix)?,
        train_matrix,
        test_matrix,
    };

    // RNN: per-user test RMSE on the original mood scale.
    let data = rnn_data(state)?;
    let table = &state.prepared.as_ref().expect("prepare() ran first").table;
    let mut per_user_rmse = BTreeMap::new();
    for (user, test_examples) in &data.test_by_user {
        let Some(model) = models_by_user.get(user.as_str()) else {
            return Err(Error::MissingArtifact(
                state
                    .config
                    .output_dir
                    .join(format!("models/rnn_{user}.json")),
            ));
        };
        let mut actuals = Vec::new();
        let mut predictions = Vec::new();
        for example in test_examples {
            let predicted = model.predict_mood(&example.inputs)?;
            let actual = table
                .cell(user, example.target_date, MOOD)
                .map(|c| c.mean)
                .ok_or_else(|| {
                    Error::IncompleteTable(format!("no mood cell for {user} on {}", example.target_date))
                })?;
            actuals.push(actual);
            predictions.push(predicted);
        }
        per_user_rmse.insert(user.clone(), rmse(&actuals, &predictions)?);

        for (examples, segment) in [
            (data.train_by_user.get(user), "train"),
            (Some(test_examples), "test"),
        ] {
            let Some(examples) = examples else { continue };
            for example in examples {
                let predicted = model.predict_mood(&example.inputs)?;
                let actual = table
                    .cell(user, example.target_date, MOOD)
                    .map(|c| c.mean)
                    .expect("complete table");
                plot_rows.push(PredictionRow {
                    user_id: user.clone(),
                    date: example.target_date,
                    actual,
                    predicted,
                    model: "rnn",
                    segment,
                });
            }
        }
    }
    let rnn_section = RnnSection { per_user_rmse };

    // Naive benchmark over the same retained days.
    let users: Vec<String> = table.user_ids().map(str::to_string).collect();
    let mut naive_rmse = BTreeMap::new();
    let mut serieses = Vec::new();
    for user in &users {
        let series = table.mood_series(user);
        let predictions = predict_naive(user, &series);
        if !predictions.is_empty() {
            let actuals: Vec<f64> = predictions.iter().map(|p| p.actual).collect();
            let predicted: Vec<f64> = predictions.iter().map(|p| p.predicted).collect();
            naive_rmse.insert(user.clone(), rmse(&actuals, &predicted)?);
            for prediction in predictions {
                plot_rows.push(PredictionRow {
                    user_id: prediction.user_id,
                    date: prediction.target_date,
                    actual: prediction.actual,
                    predicted: prediction.predicted,
                    model: "naive",
                    segment: "full",
                });
            }
        }
        serieses.push(series);
    }
    let naive_section = NaiveSection {
        per_user_rmse: naive_rmse,
        class_accuracy: naive_class_accuracy(&serieses)?,
    };

    let report = build_report(
        Some(svm_section),
        Some(rnn_section),
        Some(naive_section),
        provenance(state),
    );
    state.artifacts.push((
        PathBuf::from("reports/report.json"),
        report.to_json()?.into_bytes(),
    ));
    state.artifacts.push((
        PathBuf::from("reports/report.txt"),
        report.render_text().into_bytes(),
    ));

    plot_rows.sort_by(|a, b| {
        (a.model, &a.user_id, a.date, a.segment).cmp(&(b.model, &b.user_id, b.date, b.segment))
    });
    let mut predictions_csv = Vec::new();
    write_prediction_series_csv(&plot_rows, &mut predictions_csv)?;
    state
        .artifacts
        .push((PathBuf::from("plots/predictions.csv"), predictions_csv));

    let mut mood_csv = Vec::new();
    {
        use std::io::Write;
        writeln!(mood_csv, "user,date,mood")?;
        for user in &users {
            for (date, mood) in table.mood_series(user) {
                writeln!(mood_csv, "{user},{date},{mood}")?;
            }
        }
    }
    state
        .artifacts
        .push((PathBuf::from("plots/mood_daily.csv"), mood_csv));
    Ok(())
}

fn provenance(state: &RunState) -> Provenance {
    let mut derived_seeds = BTreeMap::new();
    derived_seeds.insert(
        "split-svm".to_string(),
        derive_seed(state.config.seed, "split-svm"),
    );
    derived_seeds.insert(
        "split-rnn".to_string(),
        derive_seed(state.config.seed, "split-rnn"),
    );
    if matches!(state.config.input, InputSpec::Synth { .. }) {
        derived_seeds.insert("synth".to_string(), derive_seed(state.config.seed, "synth"));
    }
    Provenance {
        seed: state.config.seed,
        derived_seeds,
        dataset_fingerprint: state.fingerprint.clone(),
        package: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(state.config).expect("config serializes"),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    package: &'static str,
    version: &'static str,
    seed: u64,
    derived_seeds: BTreeMap<String, u64>,
    input_fingerprint: &'a str,
    warnings: &'a [String],
    config: &'a PipelineConfig,
}

fn write_manifest(command: Command, state: &mut RunState) -> Result<()> {
    // Stages recompute shared data and may repeat a warning; keep the first.
    let mut seen = std::collections::BTreeSet::new();
    state.warnings.retain(|w| seen.insert(w.clone()));

    let provenance = provenance(state);
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        command: command.name(),
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: state.config.seed,
        derived_seeds: provenance.derived_seeds,
        input_fingerprint: &state.fingerprint,
        warnings: &state.warnings,
        config: state.config,
    };
    let bytes = serde_json::to_string_pretty(&manifest)?.into_bytes();
    state.artifacts.push((PathBuf::from("manifest.json"), bytes));
    Ok(())
}

fn flush(state: RunState) -> Result<RunSummary> {
    let out = &state.config.output_dir;
    let mut written = Vec::with_capacity(state.artifacts.len());
    for (relative, bytes) in state.artifacts {
        let path = out.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        written.push(path);
    }
    written.sort();
    Ok(RunSummary {
        written,
        warnings: state.warnings,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

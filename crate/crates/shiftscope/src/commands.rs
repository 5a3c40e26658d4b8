//! Orchestration behind the CLI subcommands. Everything here is plain
//! library code so the whole pipeline can be driven and tested in-process;
//! the binary only parses arguments and maps outcomes to exit codes
//! (0 = nothing detected, 1 = shift or drift detected, 2 = error).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{read_csv, standardize, Dataset, RawTable, SourceTag, SplitPair, Standardization};
use crate::decompose::{
    decompose_out_of_support, decompose_performance, default_k, shared_distribution,
    DecompositionReport, LossSample, Origin, RatioBounds,
};
use crate::density::{default_bins, median_heuristic_bandwidth, shared_histogram, KernelSpec};
use crate::divergence::{kl_divergence, CenterSelection, MmdEstimator, DEFAULT_MAX_CENTERS};
use crate::error::{Error, Result};
use crate::projections::{ecdf, pca_project};
use crate::report::{
    kl_field, CovariateSection, FeatureShift, GlobalCovariate, LabelShiftSection, ReportMetadata,
    ShiftKind, ShiftReport, ShiftSetting, TaxonomyLabel,
};
use crate::rng::subseed;
use crate::divergence::select_lsdd_hyperparams;
use crate::stattests::{
    classifier_two_sample_test, feature_battery, lsdd_permutation_test, mmd_permutation_test,
    Correction,
};
use crate::streamdrift::{
    multi_metric_monitor, run_ddm, windowed_divergence_monitor, BaselinePolicy, DriftEvent,
    MultiMetricConfig, PerfMetric, SkippedMetric, StreamMetric, TestMode, WindowConfig,
    DEFAULT_MIN_SAMPLES,
};

pub use crate::divergence::MmdEstimator as MmdEstimatorOption;

fn timestamp_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Configuration for the detect command.
#[derive(Debug, Clone)]
pub struct DetectOptions {
    pub reference_path: PathBuf,
    pub current_path: PathBuf,
    pub label: Option<String>,
    pub seed: u64,
    pub alpha: f64,
    pub bins: Option<usize>,
    pub smoothing: f64,
    pub n_permutations: usize,
    pub correction: Correction,
    pub standardize: bool,
    pub mmd_estimator: MmdEstimator,
    pub lambda_grid: Vec<f64>,
    pub cv_folds: usize,
    pub max_centers: usize,
    pub holdout_frac: f64,
}

impl DetectOptions {
    pub fn new<P: Into<PathBuf>>(reference: P, current: P) -> Self {
        DetectOptions {
            reference_path: reference.into(),
            current_path: current.into(),
            label: None,
            seed: 0,
            alpha: 0.05,
            bins: None,
            smoothing: 0.5,
            n_permutations: 199,
            correction: Correction::Bonferroni,
            standardize: true,
            mmd_estimator: MmdEstimator::Biased,
            lambda_grid: vec![1e-3, 1e-2, 1e-1, 1.0],
            cv_folds: 5,
            max_centers: DEFAULT_MAX_CENTERS,
            holdout_frac: 0.3,
        }
    }
}

const STANDARDIZATION_NOTE: &str =
    "(x - mean_ref) / sd_ref per feature, sd with n-1 denominator, reference statistics only";

/// Run the full static detection pipeline and assemble the JSON report.
///
/// Pipeline: validate -> standardize -> per-feature KS battery and KL ->
/// pooled-bandwidth MMD and CV-tuned LSDD, both permutation-calibrated ->
/// classifier test -> label tests when a label column was selected.
pub fn run_detect(opts: &DetectOptions) -> Result<ShiftReport> {
    let reference = read_csv(
        &opts.reference_path,
        opts.label.as_deref(),
        SourceTag::Reference,
    )?;
    let current = read_csv(&opts.current_path, opts.label.as_deref(), SourceTag::Current)?;
    let raw_pair = SplitPair::new(reference, current)?;

    let (pair, standardization) = if opts.standardize {
        standardize(&raw_pair)?
    } else {
        let info = Standardization {
            kept: raw_pair.feature_names().to_vec(),
            dropped: Vec::new(),
            means: Vec::new(),
            stds: Vec::new(),
        };
        (raw_pair, info)
    };

    let n_ref = pair.reference.n_rows();
    let n_cur = pair.current.n_rows();
    let bins = opts.bins.unwrap_or_else(|| default_bins(n_ref + n_cur));
    let include_label = opts.label.is_some();

    let battery = feature_battery(&pair, opts.alpha, opts.correction, include_label)?;

    let mut per_feature = Vec::with_capacity(pair.n_features());
    for (j, test) in battery.per_feature.iter().enumerate() {
        let hist = shared_histogram(
            &pair.reference.column(j),
            &pair.current.column(j),
            bins,
            opts.smoothing,
        )?;
        let (kl, disjoint) = kl_field(kl_divergence(&hist));
        per_feature.push(FeatureShift {
            feature: test.feature.clone(),
            ks: test.result,
            kl,
            disjoint_support: disjoint,
        });
    }

    let ref_features = pair.reference.features();
    let cur_features = pair.current.features();
    let pooled = crate::mat::vstack(ref_features, cur_features);
    let bandwidth = median_heuristic_bandwidth(&pooled)?;
    let kernel = KernelSpec::new(bandwidth)?;

    let mmd_test = mmd_permutation_test(
        ref_features,
        cur_features,
        &kernel,
        opts.mmd_estimator,
        opts.n_permutations,
        subseed(opts.seed, 1),
        opts.alpha,
    )?;

    let folds = opts.cv_folds.min(n_ref).min(n_cur);
    if folds < 2 {
        return Err(Error::TooFewSamplesForFolds {
            folds: 2,
            got: n_ref.min(n_cur),
        });
    }
    let (lsdd_sigma, lsdd_lambda) = select_lsdd_hyperparams(
        ref_features,
        cur_features,
        &[bandwidth],
        &opts.lambda_grid,
        folds,
        subseed(opts.seed, 2),
    )?;
    let (lsdd_test, _model) = lsdd_permutation_test(
        ref_features,
        cur_features,
        lsdd_sigma,
        lsdd_lambda,
        &CenterSelection::PooledSample {
            max_centers: opts.max_centers,
            seed: subseed(opts.seed, 3),
        },
        opts.n_permutations,
        subseed(opts.seed, 4),
        opts.alpha,
    )?;

    let classifier = classifier_two_sample_test(
        ref_features,
        cur_features,
        opts.holdout_frac,
        opts.alpha,
        subseed(opts.seed, 5),
    )?;

    let label_shift = match (&battery.label, include_label) {
        (Some(label_test), true) => {
            let hist = shared_histogram(
                pair.reference.label().unwrap(),
                pair.current.label().unwrap(),
                bins,
                opts.smoothing,
            )?;
            let (kl, disjoint) = kl_field(kl_divergence(&hist));
            Some(LabelShiftSection {
                ks: *label_test,
                kl,
                disjoint_support: disjoint,
                rejected: label_test.reject,
            })
        }
        _ => None,
    };

    let covariate = CovariateSection {
        per_feature,
        per_test_alpha: battery.per_test_alpha,
        any_feature_rejected: battery.covariate_shift,
        global: GlobalCovariate {
            mmd: mmd_test,
            mmd_bandwidth: bandwidth,
            lsdd: lsdd_test,
            lsdd_sigma,
            lsdd_lambda,
            classifier,
        },
    };

    let mut taxonomy_labels = Vec::new();
    let covariate_detected = covariate.any_feature_rejected
        || covariate.global.mmd.reject
        || covariate.global.lsdd.reject
        || covariate.global.classifier.reject;
    if covariate_detected {
        taxonomy_labels.push(TaxonomyLabel {
            kind: ShiftKind::Covariate,
            setting: ShiftSetting::Static,
        });
    }
    if label_shift.as_ref().map(|l| l.rejected).unwrap_or(false) {
        taxonomy_labels.push(TaxonomyLabel {
            kind: ShiftKind::Label,
            setting: ShiftSetting::Static,
        });
    }

    Ok(ShiftReport {
        metadata: ReportMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: opts.seed,
            timestamp: timestamp_now(),
            reference_path: opts.reference_path.display().to_string(),
            current_path: opts.current_path.display().to_string(),
            standardized: opts.standardize,
            standardization: if opts.standardize {
                STANDARDIZATION_NOTE.to_string()
            } else {
                "none".to_string()
            },
            dropped_features: standardization.dropped,
            alpha: opts.alpha,
            correction: match opts.correction {
                Correction::Bonferroni => "bonferroni".to_string(),
                Correction::None => "none".to_string(),
            },
            bins,
            smoothing: opts.smoothing,
            n_permutations: opts.n_permutations,
            mmd_estimator: match opts.mmd_estimator {
                MmdEstimator::Biased => "biased".to_string(),
                MmdEstimator::Unbiased => "unbiased".to_string(),
            },
            lambda_grid: opts.lambda_grid.clone(),
        },
        covariate,
        label_shift,
        concept: None,
        taxonomy_labels,
    })
}

/// Which monitor the stream command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamMode {
    Ddm,
    Windows,
    Metrics,
}

#[derive(Debug, Clone)]
pub struct StreamOptions {
    pub input_path: PathBuf,
    pub mode: StreamMode,
    pub seed: u64,
    pub alpha: f64,
    pub window: usize,
    pub stride: Option<usize>,
    pub metric: StreamMetric,
    pub baseline: BaselinePolicy,
    pub n_permutations: usize,
    pub min_samples: u64,
    pub metrics: Vec<PerfMetric>,
    pub test_mode: TestMode,
    pub resamples: usize,
}

impl StreamOptions {
    pub fn new<P: Into<PathBuf>>(input: P, mode: StreamMode) -> Self {
        StreamOptions {
            input_path: input.into(),
            mode,
            seed: 0,
            alpha: 0.05,
            window: 50,
            stride: None,
            metric: StreamMetric::Mmd,
            baseline: BaselinePolicy::Fixed,
            n_permutations: 199,
            min_samples: DEFAULT_MIN_SAMPLES,
            metrics: vec![PerfMetric::ErrorRate, PerfMetric::Auc, PerfMetric::F1],
            test_mode: TestMode::Parallel,
            resamples: 500,
        }
    }
}

/// Stream-command result: the events to write as JSON lines, plus any
/// skipped (window, metric) records from the multi-metric monitor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamOutcome {
    pub events: Vec<DriftEvent>,
    pub skipped: Vec<SkippedMetric>,
}

impl StreamOutcome {
    pub fn any_drift(&self) -> bool {
        self.events.iter().any(|e| e.is_drift())
    }

    /// One JSON object per line, events only.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event)?);
            out.push('\n');
        }
        Ok(out)
    }
}

fn numeric_column(table: &RawTable, name: &str) -> Result<Option<Vec<f64>>> {
    let Some(idx) = table.columns.iter().position(|c| c == name) else {
        return Ok(None);
    };
    let mut values = Vec::with_capacity(table.rows.len());
    for (row, cells) in table.rows.iter().enumerate() {
        let cell = cells.get(idx).map(String::as_str).unwrap_or("");
        let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
            row: row + 1,
            column: name.to_string(),
            value: cell.to_string(),
        })?;
        if !value.is_finite() {
            return Err(Error::NonFiniteCell {
                row: row + 1,
                column: name.to_string(),
            });
        }
        values.push(value);
    }
    Ok(Some(values))
}

/// Error stream for DDM: an `error` column of 0/1 indicators, or
/// `prediction` and `outcome` columns compared after binarizing at 0.5.
fn load_error_stream(table: &RawTable) -> Result<Vec<bool>> {
    if table.rows.is_empty() {
        return Err(Error::EmptyDataset("stream has no rows".into()));
    }
    if let Some(errors) = numeric_column(table, "error")? {
        return Ok(errors.into_iter().map(|v| v >= 0.5).collect());
    }
    let predictions = numeric_column(table, "prediction")?;
    let outcomes = numeric_column(table, "outcome")?;
    match (predictions, outcomes) {
        (Some(p), Some(o)) => Ok(p
            .into_iter()
            .zip(o)
            .map(|(pred, out)| (pred >= 0.5) != (out >= 0.5))
            .collect()),
        _ => Err(Error::MissingColumn(
            "error (or prediction and outcome)".into(),
        )),
    }
}

/// Run the selected streaming monitor over a time-ordered CSV.
pub fn run_stream(opts: &StreamOptions) -> Result<StreamOutcome> {
    let table = RawTable::from_csv_path(&opts.input_path)?;
    match opts.mode {
        StreamMode::Ddm => {
            let errors = load_error_stream(&table)?;
            let run = run_ddm(&errors, opts.min_samples);
            Ok(StreamOutcome {
                events: run.events,
                skipped: Vec::new(),
            })
        }
        StreamMode::Windows => {
            let dataset = crate::dataset::validate(&table, None, SourceTag::Current)?;
            let cfg = WindowConfig {
                window: opts.window,
                stride: opts.stride.unwrap_or(opts.window),
                metric: opts.metric,
                baseline: opts.baseline,
                alpha: opts.alpha,
                n_permutations: opts.n_permutations,
                seed: opts.seed,
            };
            let events = windowed_divergence_monitor(dataset.features(), &cfg)?;
            Ok(StreamOutcome {
                events,
                skipped: Vec::new(),
            })
        }
        StreamMode::Metrics => {
            let predictions = numeric_column(&table, "prediction")?
                .ok_or_else(|| Error::MissingColumn("prediction".into()))?;
            let outcomes = numeric_column(&table, "outcome")?
                .ok_or_else(|| Error::MissingColumn("outcome".into()))?;
            let paired: Vec<(f64, f64)> = predictions.into_iter().zip(outcomes).collect();
            let n_windows = paired.len() / opts.window;
            if n_windows < 2 {
                return Err(Error::StreamTooShort {
                    needed: 2 * opts.window,
                    got: paired.len(),
                });
            }
            let windows: Vec<Vec<(f64, f64)>> = (0..n_windows)
                .map(|w| paired[w * opts.window..(w + 1) * opts.window].to_vec())
                .collect();
            let cfg = MultiMetricConfig {
                metrics: opts.metrics.clone(),
                alpha: opts.alpha,
                correction: Correction::Bonferroni,
                mode: opts.test_mode,
                resamples: opts.resamples,
                seed: opts.seed,
            };
            let report = multi_metric_monitor(&windows, &cfg)?;
            Ok(StreamOutcome {
                events: report.events,
                skipped: report.skipped,
            })
        }
    }
}

/// Named loss functions for deriving a loss column on the fly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Squared,
    Absolute,
    ZeroOne,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Absolute => "absolute",
            LossKind::ZeroOne => "zero_one",
        }
    }

    fn eval(&self, prediction: f64, outcome: f64) -> f64 {
        match self {
            LossKind::Squared => (prediction - outcome) * (prediction - outcome),
            LossKind::Absolute => (prediction - outcome).abs(),
            LossKind::ZeroOne => {
                if (prediction >= 0.5) != (outcome >= 0.5) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    pub p_path: PathBuf,
    pub q_path: PathBuf,
    pub loss: Option<LossKind>,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    pub k: Option<usize>,
    pub seed: u64,
    pub standardize: bool,
}

impl DecomposeOptions {
    pub fn new<P: Into<PathBuf>>(p_path: P, q_path: P) -> Self {
        DecomposeOptions {
            p_path: p_path.into(),
            q_path: q_path.into(),
            loss: None,
            ratio_lower: 0.1,
            ratio_upper: 10.0,
            k: None,
            seed: 0,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposeMetadata {
    pub tool_version: String,
    pub seed: u64,
    pub timestamp: String,
    pub p_path: String,
    pub q_path: String,
    pub standardized: bool,
    pub dropped_features: Vec<String>,
    pub loss: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposeOutput {
    pub metadata: DecomposeMetadata,
    pub decomposition: DecompositionReport,
}

impl DecomposeOutput {
    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Columns with special meaning in loss files; never treated as features.
const RESERVED_LOSS_COLUMNS: [&str; 3] = ["loss", "prediction", "outcome"];

fn load_loss_table(
    path: &Path,
    loss_kind: Option<LossKind>,
    tag: SourceTag,
) -> Result<(Dataset, Vec<f64>)> {
    let table = RawTable::from_csv_path(path)?;
    let losses = if let Some(direct) = numeric_column(&table, "loss")? {
        direct
    } else {
        let kind = loss_kind.ok_or_else(|| {
            Error::InvalidOption(
                "no `loss` column in the file; pass --loss with prediction/outcome columns"
                    .into(),
            )
        })?;
        let predictions = numeric_column(&table, "prediction")?
            .ok_or_else(|| Error::MissingColumn("prediction".into()))?;
        let outcomes = numeric_column(&table, "outcome")?
            .ok_or_else(|| Error::MissingColumn("outcome".into()))?;
        predictions
            .into_iter()
            .zip(outcomes)
            .map(|(p, o)| kind.eval(p, o))
            .collect()
    };

    let feature_cols: Vec<usize> = (0..table.columns.len())
        .filter(|&j| !RESERVED_LOSS_COLUMNS.contains(&table.columns[j].as_str()))
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::EmptyDataset("no feature columns in loss file".into()));
    }
    let sub_table = RawTable {
        columns: feature_cols
            .iter()
            .map(|&j| table.columns[j].clone())
            .collect(),
        rows: table
            .rows
            .iter()
            .map(|r| feature_cols.iter().map(|&j| r[j].clone()).collect())
            .collect(),
    };
    let dataset = crate::dataset::validate(&sub_table, None, tag)?;
    Ok((dataset, losses))
}

/// Run the performance-gap decomposition over two loss files.
///
/// When the density-ratio band retains no points the gap is reported as
/// pure out-of-support shift and the outcome is flagged so the CLI exits 1.
pub fn run_decompose(opts: &DecomposeOptions) -> Result<DecomposeOutput> {
    let (p_data, p_losses) = load_loss_table(&opts.p_path, opts.loss, SourceTag::Reference)?;
    let (q_data, q_losses) = load_loss_table(&opts.q_path, opts.loss, SourceTag::Current)?;
    let raw_pair = SplitPair::new(p_data, q_data)?;
    let (pair, standardization) = if opts.standardize {
        standardize(&raw_pair)?
    } else {
        let info = Standardization {
            kept: raw_pair.feature_names().to_vec(),
            dropped: Vec::new(),
            means: Vec::new(),
            stds: Vec::new(),
        };
        (raw_pair, info)
    };

    let p = LossSample::new(pair.reference.features().clone(), p_losses, Origin::P)?;
    let q = LossSample::new(pair.current.features().clone(), q_losses, Origin::Q)?;
    let bounds = RatioBounds::new(opts.ratio_lower, opts.ratio_upper)?;
    let k = opts
        .k
        .unwrap_or_else(|| default_k(p.n_rows()).min(q.n_rows()));

    let decomposition = match shared_distribution(p.features(), q.features(), bounds) {
        Ok(spec) => decompose_performance(&p, &q, &spec, k)?,
        Err(Error::NoCommonSupport) => decompose_out_of_support(&p, &q, bounds, k)?,
        Err(e) => return Err(e),
    };

    Ok(DecomposeOutput {
        metadata: DecomposeMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: opts.seed,
            timestamp: timestamp_now(),
            p_path: opts.p_path.display().to_string(),
            q_path: opts.q_path.display().to_string(),
            standardized: opts.standardize,
            dropped_features: standardization.dropped,
            loss: opts
                .loss
                .map(|l| l.as_str().to_string())
                .unwrap_or_else(|| "loss column".to_string()),
        },
        decomposition,
    })
}

#[derive(Debug, Clone)]
pub struct VizOptions {
    pub reference_path: PathBuf,
    pub current_path: PathBuf,
    pub components: usize,
    pub standardize: bool,
    pub out_prefix: String,
}

impl VizOptions {
    pub fn new<P: Into<PathBuf>>(reference: P, current: P) -> Self {
        VizOptions {
            reference_path: reference.into(),
            current_path: current.into(),
            components: 2,
            standardize: true,
            out_prefix: "viz".to_string(),
        }
    }
}

/// Paths of the plot-data files the viz command wrote.
#[derive(Debug, Clone)]
pub struct VizFiles {
    pub pca_path: PathBuf,
    pub ecdf_path: PathBuf,
}

/// Emit PCA coordinates and per-feature ECDF curves as CSV plot data.
///
/// PCA runs on (optionally standardized) features; ECDF curves are written
/// from the raw feature values so the axes stay interpretable.
pub fn run_viz(opts: &VizOptions) -> Result<VizFiles> {
    let reference = read_csv(&opts.reference_path, None, SourceTag::Reference)?;
    let current = read_csv(&opts.current_path, None, SourceTag::Current)?;
    let raw_pair = SplitPair::new(reference, current)?;
    let pca_pair = if opts.standardize {
        standardize(&raw_pair)?.0
    } else {
        raw_pair.clone()
    };
    let projection = pca_project(&pca_pair, opts.components)?;

    let pca_path = PathBuf::from(format!("{}_pca.csv", opts.out_prefix));
    {
        let mut writer = csv::Writer::from_path(&pca_path)?;
        let mut header: Vec<String> = (1..=opts.components)
            .map(|c| format!("component_{c}"))
            .collect();
        header.push("source".to_string());
        writer.write_record(&header)?;
        for point in &projection.coordinates {
            let mut record: Vec<String> = point.coords.iter().map(|v| v.to_string()).collect();
            record.push(point.source.as_str().to_string());
            writer.write_record(&record)?;
        }
        writer.flush()?;
    }

    let ecdf_path = PathBuf::from(format!("{}_ecdf.csv", opts.out_prefix));
    {
        let mut writer = csv::Writer::from_path(&ecdf_path)?;
        writer.write_record(["t", "F", "source", "feature"])?;
        for (j, feature) in raw_pair.feature_names().iter().enumerate() {
            for (dataset, source) in [
                (&raw_pair.reference, SourceTag::Reference),
                (&raw_pair.current, SourceTag::Current),
            ] {
                for (t, f) in ecdf(&dataset.column(j))? {
                    writer.write_record([
                        t.to_string(),
                        f.to_string(),
                        source.as_str().to_string(),
                        feature.clone(),
                    ])?;
                }
            }
        }
        writer.flush()?;
    }

    Ok(VizFiles {
        pca_path,
        ecdf_path,
    })
}

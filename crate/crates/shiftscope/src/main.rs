//! Thin CLI over the library pipelines.
//!
//! Exit codes: 0 = no shift detected, 1 = shift/drift detected,
//! 2 = usage or data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shiftscope::commands::{
    run_decompose, run_detect, run_stream, run_viz, DecomposeOptions, DetectOptions, LossKind,
    StreamMode, StreamOptions, VizOptions,
};
use shiftscope::divergence::MmdEstimator;
use shiftscope::stattests::Correction;
use shiftscope::streamdrift::{BaselinePolicy, PerfMetric, StreamMetric, TestMode};

#[derive(Parser)]
#[command(
    name = "shiftscope",
    version,
    about = "Detect and diagnose distribution shift between reference and current datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrectionArg {
    Bonferroni,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum MmdEstimatorArg {
    Biased,
    Unbiased,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ddm,
    Windows,
    Metrics,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Kl,
    Mmd,
    Lsdd,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Fixed,
    Sliding,
}

#[derive(Clone, Copy, ValueEnum)]
enum PerfMetricArg {
    ErrorRate,
    Auc,
    F1,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestModeArg {
    Parallel,
    Serial,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Squared,
    Absolute,
    ZeroOne,
}

#[derive(Subcommand)]
enum Command {
    /// Compare two CSV datasets and write a JSON shift report.
    Detect {
        /// Reference (training) CSV with a header row; all columns numeric.
        reference: PathBuf,
        /// Current (deployment) CSV with the same columns.
        current: PathBuf,
        /// Column to treat as the label; enables label-shift tests.
        #[arg(long)]
        label: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Histogram bins for KL; default ceil(sqrt(n)) clamped to [8, 64].
        #[arg(long)]
        bins: Option<usize>,
        /// Laplace smoothing per histogram bin; 0 exposes disjoint support.
        #[arg(long, default_value_t = 0.5)]
        smoothing: f64,
        #[arg(long = "n-perm", default_value_t = 199)]
        n_perm: usize,
        #[arg(long, value_enum, default_value = "bonferroni")]
        correction: CorrectionArg,
        /// Skip reference-statistics standardization.
        #[arg(long)]
        no_standardize: bool,
        #[arg(long, value_enum, default_value = "biased")]
        mmd_estimator: MmdEstimatorArg,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monitor a time-ordered CSV stream and emit drift events as JSON lines.
    Stream {
        /// Time-ordered CSV. ddm mode expects an `error` column (or
        /// `prediction` and `outcome`); windows mode treats all columns as
        /// features; metrics mode expects `prediction` and `outcome`.
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 50)]
        window: usize,
        /// Rows to advance between tested windows; defaults to `window`.
        #[arg(long)]
        stride: Option<usize>,
        /// Distance measure for windows mode.
        #[arg(long, value_enum, default_value = "mmd")]
        metric: MetricArg,
        #[arg(long, value_enum, default_value = "fixed")]
        baseline: BaselineArg,
        #[arg(long = "n-perm", default_value_t = 199)]
        n_perm: usize,
        /// Observations before DDM starts tracking minima and alarming.
        #[arg(long, default_value_t = 30)]
        min_samples: u64,
        /// Metrics for metrics mode.
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["error-rate", "auc", "f1"])]
        metrics: Vec<PerfMetricArg>,
        #[arg(long, value_enum, default_value = "parallel")]
        test_mode: TestModeArg,
        /// Write JSON-lines events here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompose a performance gap into covariate/concept/out-of-support terms.
    Decompose {
        /// Reference-side CSV: feature columns plus `loss` (or
        /// `prediction` and `outcome` with --loss).
        p_losses: PathBuf,
        /// Current-side CSV with the same layout.
        q_losses: PathBuf,
        /// Loss to derive from prediction/outcome columns.
        #[arg(long, value_enum)]
        loss: Option<LossArg>,
        /// Density-ratio band kept as common support, as `lower,upper`.
        #[arg(long = "ratio-bounds", default_value = "0.1,10", value_parser = parse_bounds)]
        ratio_bounds: (f64, f64),
        /// Neighbors for the conditional-risk estimator; default ceil(sqrt(n)).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_standardize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit PCA coordinates and per-feature ECDF curves as CSV plot data.
    Viz {
        reference: PathBuf,
        current: PathBuf,
        #[arg(long, default_value_t = 2)]
        components: usize,
        #[arg(long)]
        no_standardize: bool,
        /// Prefix for <prefix>_pca.csv and <prefix>_ecdf.csv.
        #[arg(long, default_value = "viz")]
        out_prefix: String,
    },
}

fn parse_bounds(raw: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err("expected `lower,upper`".to_string());
    }
    let lower: f64 = parts[0].trim().parse().map_err(|_| "bad lower bound")?;
    let upper: f64 = parts[1].trim().parse().map_err(|_| "bad upper bound")?;
    Ok((lower, upper))
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Returns whether any shift or drift was detected.
fn run(cli: Cli) -> shiftscope::Result<bool> {
    match cli.command {
        Command::Detect {
            reference,
            current,
            label,
            seed,
            alpha,
            bins,
            smoothing,
            n_perm,
            correction,
            no_standardize,
            mmd_estimator,
            out,
        } => {
            let mut opts = DetectOptions::new(reference, current);
            opts.label = label;
            opts.seed = seed;
            opts.alpha = alpha;
            opts.bins = bins;
            opts.smoothing = smoothing;
            opts.n_permutations = n_perm;
            opts.correction = match correction {
                CorrectionArg::Bonferroni => Correction::Bonferroni,
                CorrectionArg::None => Correction::None,
            };
            opts.standardize = !no_standardize;
            opts.mmd_estimator = match mmd_estimator {
                MmdEstimatorArg::Biased => MmdEstimator::Biased,
                MmdEstimatorArg::Unbiased => MmdEstimator::Unbiased,
            };
            let report = run_detect(&opts)?;
            let mut text = report.to_json_pretty()?;
            text.push('\n');
            emit(&text, out.as_ref())?;
            Ok(report.any_rejection())
        }
        Command::Stream {
            input,
            mode,
            seed,
            alpha,
            window,
            stride,
            metric,
            baseline,
            n_perm,
            min_samples,
            metrics,
            test_mode,
            out,
        } => {
            let mut opts = StreamOptions::new(
                input,
                match mode {
                    ModeArg::Ddm => StreamMode::Ddm,
                    ModeArg::Windows => StreamMode::Windows,
                    ModeArg::Metrics => StreamMode::Metrics,
                },
            );
            opts.seed = seed;
            opts.alpha = alpha;
            opts.window = window;
            opts.stride = stride;
            opts.metric = match metric {
                MetricArg::Kl => StreamMetric::Kl,
                MetricArg::Mmd => StreamMetric::Mmd,
                MetricArg::Lsdd => StreamMetric::Lsdd,
            };
            opts.baseline = match baseline {
                BaselineArg::Fixed => BaselinePolicy::Fixed,
                BaselineArg::Sliding => BaselinePolicy::Sliding,
            };
            opts.n_permutations = n_perm;
            opts.min_samples = min_samples;
            opts.metrics = metrics
                .iter()
                .map(|m| match m {
                    PerfMetricArg::ErrorRate => PerfMetric::ErrorRate,
                    PerfMetricArg::Auc => PerfMetric::Auc,
                    PerfMetricArg::F1 => PerfMetric::F1,
                })
                .collect();
            opts.test_mode = match test_mode {
                TestModeArg::Parallel => TestMode::Parallel,
                TestModeArg::Serial => TestMode::Serial,
            };
            let outcome = run_stream(&opts)?;
            for skip in &outcome.skipped {
                eprintln!(
                    "note: {} skipped on window {}: {}",
                    skip.metric, skip.window, skip.reason
                );
            }
            emit(&outcome.to_jsonl()?, out.as_ref())?;
            Ok(outcome.any_drift())
        }
        Command::Decompose {
            p_losses,
            q_losses,
            loss,
            ratio_bounds,
            k,
            seed,
            no_standardize,
            out,
        } => {
            let mut opts = DecomposeOptions::new(p_losses, q_losses);
            opts.loss = loss.map(|l| match l {
                LossArg::Squared => LossKind::Squared,
                LossArg::Absolute => LossKind::Absolute,
                LossArg::ZeroOne => LossKind::ZeroOne,
            });
            opts.ratio_lower = ratio_bounds.0;
            opts.ratio_upper = ratio_bounds.1;
            opts.k = k;
            opts.seed = seed;
            opts.standardize = !no_standardize;
            let output = run_decompose(&opts)?;
            let mut text = output.to_json_pretty()?;
            text.push('\n');
            emit(&text, out.as_ref())?;
            Ok(output.decomposition.no_common_support)
        }
        Command::Viz {
            reference,
            current,
            components,
            no_standardize,
            out_prefix,
        } => {
            let mut opts = VizOptions::new(reference, current);
            opts.components = components;
            opts.standardize = !no_standardize;
            opts.out_prefix = out_prefix;
            let files = run_viz(&opts)?;
            eprintln!(
                "wrote {} and {}",
                files.pca_path.display(),
                files.ecdf_path.display()
            );
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::from(0),
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

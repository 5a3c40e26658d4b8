//! Dynamic-setting detectors: error-rate monitoring (DDM, Gama et al.
//! 2004), windowed distribution-drift detection, and multi-metric
//! hypothesis testing over performance windows.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::density::{default_bins, median_heuristic_bandwidth, shared_histogram, KernelSpec};
use crate::divergence::{kl_divergence, lsdd, mmd, CenterSelection, MmdEstimator};
use crate::error::{Error, Result};
use crate::mat::vstack;
use crate::rng;
use crate::stattests::{permutation_p_value, Correction};

pub const DEFAULT_MIN_SAMPLES: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DdmStatus {
    Stable,
    Warning,
    Drift,
}

/// State of the error-rate drift monitor.
///
/// Treats each prediction error as a Bernoulli draw: p_t is the error rate
/// over the run since the last reset (the original landmark convention, as
/// opposed to a sliding window) and s_t = sqrt(p_t (1 - p_t) / i). The
/// minima (p_min, s_min) track the historically best p_t + s_t once
/// `min_samples` observations have accumulated.
///
/// Warning fires when p_t + s_t exceeds p_min + 2 s_min, drift when it
/// exceeds p_min + 3 s_min. The comparisons are strict, so an error-free
/// run (p_t = s_t = 0) stays stable indefinitely.
#[derive(Debug, Clone, PartialEq)]
pub struct DdmState {
    i: u64,
    error_count: u64,
    p_t: f64,
    s_t: f64,
    p_min: f64,
    s_min: f64,
    status: DdmStatus,
    min_samples: u64,
}

impl DdmState {
    pub fn new(min_samples: u64) -> Self {
        DdmState {
            i: 0,
            error_count: 0,
            p_t: 0.0,
            s_t: 0.0,
            p_min: f64::INFINITY,
            s_min: f64::INFINITY,
            status: DdmStatus::Stable,
            min_samples,
        }
    }

    /// Pure transition: absorb one observation and return the next state
    /// with its status. Same (state, input) always yields the same output.
    pub fn update(&self, is_error: bool) -> (DdmState, DdmStatus) {
        let mut next = self.clone();
        next.i += 1;
        if is_error {
            next.error_count += 1;
        }
        next.p_t = next.error_count as f64 / next.i as f64;
        next.s_t = (next.p_t * (1.0 - next.p_t) / next.i as f64).sqrt();
        if next.i >= next.min_samples {
            if next.p_t + next.s_t < next.p_min + next.s_min {
                next.p_min = next.p_t;
                next.s_min = next.s_t;
            }
            let level = next.p_t + next.s_t;
            next.status = if level > next.p_min + 3.0 * next.s_min {
                DdmStatus::Drift
            } else if level > next.p_min + 2.0 * next.s_min {
                DdmStatus::Warning
            } else {
                DdmStatus::Stable
            };
        } else {
            next.status = DdmStatus::Stable;
        }
        let status = next.status;
        (next, status)
    }

    pub fn observations(&self) -> u64 {
        self.i
    }

    pub fn error_rate(&self) -> f64 {
        self.p_t
    }

    pub fn deviation(&self) -> f64 {
        self.s_t
    }

    /// (p_min, s_min); infinite until `min_samples` observations arrive.
    pub fn minima(&self) -> (f64, f64) {
        (self.p_min, self.s_min)
    }

    pub fn status(&self) -> DdmStatus {
        self.status
    }

    pub fn min_samples(&self) -> u64 {
        self.min_samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Warning,
    Drift,
    DivergenceDrift,
    MetricDrift,
}

/// Statistic values at the moment an event fired.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventDetail {
    Ddm {
        p_t: f64,
        s_t: f64,
        p_min: f64,
        s_min: f64,
        /// True when the detector state was reset after this event.
        reset: bool,
    },
    Divergence {
        metric: String,
        statistic: f64,
        p_value: f64,
    },
    Metric {
        metric: String,
        baseline: f64,
        current: f64,
        p_value: f64,
    },
}

/// A drift-monitor event. `index` is the observation number for DDM runs
/// and the tested-window number otherwise; both are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftEvent {
    pub index: u64,
    pub kind: EventKind,
    pub detail: EventDetail,
}

impl DriftEvent {
    pub fn is_drift(&self) -> bool {
        matches!(
            self.kind,
            EventKind::Drift | EventKind::DivergenceDrift | EventKind::MetricDrift
        )
    }
}

/// Outcome of driving DDM over a whole error stream.
#[derive(Debug, Clone)]
pub struct DdmRun {
    pub events: Vec<DriftEvent>,
    pub final_state: DdmState,
}

/// Feed an error stream through DDM, emitting a warning event at the start
/// of each warning episode and a drift event (with automatic reset) at
/// each drift. Replaying the same stream reproduces identical events.
pub fn run_ddm(errors: &[bool], min_samples: u64) -> DdmRun {
    let mut state = DdmState::new(min_samples);
    let mut events = Vec::new();
    let mut warned_this_episode = false;
    for (t, &is_error) in errors.iter().enumerate() {
        let index = (t + 1) as u64;
        let (next, status) = state.update(is_error);
        state = next;
        let detail = |reset: bool| EventDetail::Ddm {
            p_t: state.p_t,
            s_t: state.s_t,
            p_min: state.p_min,
            s_min: state.s_min,
            reset,
        };
        match status {
            DdmStatus::Stable => {
                warned_this_episode = false;
            }
            DdmStatus::Warning => {
                if !warned_this_episode {
                    events.push(DriftEvent {
                        index,
                        kind: EventKind::Warning,
                        detail: detail(false),
                    });
                    warned_this_episode = true;
                }
            }
            DdmStatus::Drift => {
                // a drift level implies the warning level; record the episode
                if !warned_this_episode {
                    events.push(DriftEvent {
                        index,
                        kind: EventKind::Warning,
                        detail: detail(false),
                    });
                }
                events.push(DriftEvent {
                    index,
                    kind: EventKind::Drift,
                    detail: detail(true),
                });
                state = DdmState::new(min_samples);
                warned_this_episode = false;
            }
        }
    }
    DdmRun {
        events,
        final_state: state,
    }
}

/// Distance measure used by the windowed monitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamMetric {
    Kl,
    Mmd,
    Lsdd,
}

impl StreamMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            StreamMetric::Kl => "kl",
            StreamMetric::Mmd => "mmd",
            StreamMetric::Lsdd => "lsdd",
        }
    }
}

/// Whether each window is compared against the first window or against the
/// rows immediately preceding it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselinePolicy {
    Fixed,
    Sliding,
}

#[derive(Debug, Clone)]
pub struct WindowConfig {
    pub window: usize,
    pub stride: usize,
    pub metric: StreamMetric,
    pub baseline: BaselinePolicy,
    pub alpha: f64,
    pub n_permutations: usize,
    pub seed: u64,
}

impl WindowConfig {
    pub fn new(window: usize, metric: StreamMetric) -> Self {
        WindowConfig {
            window,
            stride: window,
            metric,
            baseline: BaselinePolicy::Fixed,
            alpha: 0.05,
            n_permutations: 199,
            seed: 0,
        }
    }
}

/// Permutation-invariant center choice for the streaming LSDD statistic:
/// rows sorted lexicographically, then evenly thinned to at most `cap`.
fn deterministic_centers(pooled: &DMatrix<f64>, cap: usize) -> DMatrix<f64> {
    let mut rows: Vec<Vec<f64>> = (0..pooled.nrows())
        .map(|i| pooled.row(i).iter().copied().collect())
        .collect();
    rows.sort_unstable_by(|a, b| {
        for (x, y) in a.iter().zip(b.iter()) {
            match x.total_cmp(y) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        Ordering::Equal
    });
    let b = cap.min(rows.len()).max(1);
    let mut data = Vec::with_capacity(b * pooled.ncols());
    for i in 0..b {
        data.extend(&rows[i * rows.len() / b]);
    }
    DMatrix::from_row_slice(b, pooled.ncols(), &data)
}

fn stream_statistic(
    metric: StreamMetric,
) -> impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> Result<f64> {
    move |a: &DMatrix<f64>, b: &DMatrix<f64>| -> Result<f64> {
        match metric {
            StreamMetric::Kl => {
                // mean per-feature histogram KL; features constant across
                // both windows carry no distributional information and are
                // skipped
                let bins = default_bins(a.nrows() + b.nrows());
                let mut total = 0.0;
                let mut counted = 0usize;
                for j in 0..a.ncols() {
                    let col_a: Vec<f64> = a.column(j).iter().copied().collect();
                    let col_b: Vec<f64> = b.column(j).iter().copied().collect();
                    match shared_histogram(&col_a, &col_b, bins, 0.5) {
                        Ok(h) => {
                            total += kl_divergence(&h);
                            counted += 1;
                        }
                        Err(Error::DegenerateRange(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                Ok(if counted == 0 { 0.0 } else { total / counted as f64 })
            }
            StreamMetric::Mmd => {
                let pooled = vstack(a, b);
                match median_heuristic_bandwidth(&pooled) {
                    Ok(sigma) => mmd(a, b, &KernelSpec::new(sigma)?, MmdEstimator::Biased),
                    Err(Error::IdenticalPoints) => Ok(0.0),
                    Err(e) => Err(e),
                }
            }
            StreamMetric::Lsdd => {
                let pooled = vstack(a, b);
                match median_heuristic_bandwidth(&pooled) {
                    Ok(sigma) => {
                        let centers =
                            CenterSelection::Explicit(deterministic_centers(&pooled, 100));
                        Ok(lsdd(a, b, sigma, 0.1, &centers)?.value())
                    }
                    Err(Error::IdenticalPoints) => Ok(0.0),
                    Err(e) => Err(e),
                }
            }
        }
    }
}

/// Slide over a time-ordered feature stream and test each window against
/// the baseline with a permutation-calibrated distance.
///
/// The first `window` rows form the baseline. Tested window j (1-based)
/// starts at row `window + (j - 1) * stride`; with stride = window the
/// tested windows partition the remaining stream. Only full windows are
/// tested.
pub fn windowed_divergence_monitor(
    rows: &DMatrix<f64>,
    cfg: &WindowConfig,
) -> Result<Vec<DriftEvent>> {
    if cfg.window < 20 {
        return Err(Error::WindowTooSmall {
            needed: 20,
            got: cfg.window,
        });
    }
    if cfg.stride < 1 {
        return Err(Error::BadStride);
    }
    let n = rows.nrows();
    if n < 2 * cfg.window {
        return Err(Error::StreamTooShort {
            needed: 2 * cfg.window,
            got: n,
        });
    }

    let statistic = stream_statistic(cfg.metric);
    let fixed_baseline = rows.rows(0, cfg.window).into_owned();
    let mut events = Vec::new();
    let mut window_number = 0u64;
    let mut start = cfg.window;
    while start + cfg.window <= n {
        window_number += 1;
        let tested = rows.rows(start, cfg.window).into_owned();
        let baseline = match cfg.baseline {
            BaselinePolicy::Fixed => fixed_baseline.clone(),
            BaselinePolicy::Sliding => rows.rows(start - cfg.window, cfg.window).into_owned(),
        };
        let (statistic_value, p_value) = permutation_p_value(
            &statistic,
            &baseline,
            &tested,
            cfg.n_permutations,
            rng::subseed(cfg.seed, window_number),
        )?;
        if p_value < cfg.alpha {
            events.push(DriftEvent {
                index: window_number,
                kind: EventKind::DivergenceDrift,
                detail: EventDetail::Divergence {
                    metric: cfg.metric.as_str().to_string(),
                    statistic: statistic_value,
                    p_value,
                },
            });
        }
        start += cfg.stride;
    }
    Ok(events)
}

/// Performance metrics monitored over (prediction, outcome) windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerfMetric {
    ErrorRate,
    Auc,
    F1,
}

impl PerfMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            PerfMetric::ErrorRate => "error_rate",
            PerfMetric::Auc => "auc",
            PerfMetric::F1 => "f1",
        }
    }

    /// Fixed testing order for serial mode.
    pub const ORDER: [PerfMetric; 3] = [PerfMetric::ErrorRate, PerfMetric::Auc, PerfMetric::F1];
}

/// Parallel tests every metric each window; serial tests in fixed order
/// (error_rate, auc, f1) and stops at the first rejection per window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMode {
    Parallel,
    Serial,
}

#[derive(Debug, Clone)]
pub struct MultiMetricConfig {
    pub metrics: Vec<PerfMetric>,
    pub alpha: f64,
    pub correction: Correction,
    pub mode: TestMode,
    pub resamples: usize,
    pub seed: u64,
}

impl MultiMetricConfig {
    pub fn new(metrics: Vec<PerfMetric>) -> Self {
        MultiMetricConfig {
            metrics,
            alpha: 0.05,
            correction: Correction::Bonferroni,
            mode: TestMode::Parallel,
            resamples: 500,
            seed: 0,
        }
    }
}

/// A (window, metric) combination that could not be tested, e.g. AUC on a
/// single-class window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedMetric {
    pub window: u64,
    pub metric: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiMetricReport {
    pub events: Vec<DriftEvent>,
    pub skipped: Vec<SkippedMetric>,
    /// Per-metric threshold after correction.
    pub per_metric_alpha: f64,
}

fn binarize(v: f64) -> bool {
    v >= 0.5
}

fn window_error_rate(window: &[(f64, f64)]) -> f64 {
    let errors = window
        .iter()
        .filter(|(pred, outcome)| binarize(*pred) != binarize(*outcome))
        .count();
    errors as f64 / window.len() as f64
}

/// Rank-based AUC with half credit for ties; None when only one outcome
/// class is present.
fn window_auc(window: &[(f64, f64)]) -> Option<f64> {
    let positives: Vec<f64> = window
        .iter()
        .filter(|(_, o)| *o == 1.0)
        .map(|(p, _)| *p)
        .collect();
    let negatives: Vec<f64> = window
        .iter()
        .filter(|(_, o)| *o == 0.0)
        .map(|(p, _)| *p)
        .collect();
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let mut u = 0.0;
    for &p in &positives {
        for &n in &negatives {
            u += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    Some(u / (positives.len() as f64 * negatives.len() as f64))
}

/// F1 of predictions binarized at 0.5; None when there are no positives in
/// either predictions or outcomes (the score is undefined).
fn window_f1(window: &[(f64, f64)]) -> Option<f64> {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    for &(pred, outcome) in window {
        let p = binarize(pred);
        let o = outcome == 1.0;
        match (p, o) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            (false, false) => {}
        }
    }
    let denom = 2.0 * tp + fp + fn_;
    if denom == 0.0 {
        None
    } else {
        Some(2.0 * tp / denom)
    }
}

fn eval_metric(metric: PerfMetric, window: &[(f64, f64)]) -> Option<f64> {
    match metric {
        PerfMetric::ErrorRate => Some(window_error_rate(window)),
        PerfMetric::Auc => window_auc(window),
        PerfMetric::F1 => window_f1(window),
    }
}

/// Bootstrap p-value for a metric change between two windows: resample
/// within each window, count how often the resampled difference falls on
/// either side of zero, and invert the percentile interval.
fn bootstrap_change_p(
    metric: PerfMetric,
    baseline: &[(f64, f64)],
    current: &[(f64, f64)],
    resamples: usize,
    mut rng: rand_chacha::ChaCha8Rng,
) -> Option<f64> {
    use rand::Rng;
    let mut below_or_zero = 0usize;
    let mut above_or_zero = 0usize;
    let mut effective = 0usize;
    let mut base_buf = vec![(0.0, 0.0); baseline.len()];
    let mut cur_buf = vec![(0.0, 0.0); current.len()];
    for _ in 0..resamples {
        for slot in base_buf.iter_mut() {
            *slot = baseline[rng.gen_range(0..baseline.len())];
        }
        for slot in cur_buf.iter_mut() {
            *slot = current[rng.gen_range(0..current.len())];
        }
        let (Some(b), Some(c)) = (eval_metric(metric, &base_buf), eval_metric(metric, &cur_buf))
        else {
            continue;
        };
        let delta = c - b;
        effective += 1;
        if delta <= 0.0 {
            below_or_zero += 1;
        }
        if delta >= 0.0 {
            above_or_zero += 1;
        }
    }
    if effective < 50 {
        return None;
    }
    let tail = below_or_zero.min(above_or_zero);
    Some((2.0 * (1 + tail) as f64 / (effective + 1) as f64).min(1.0))
}

/// Test each window's metrics against the first (baseline) window.
///
/// Windows must hold at least 30 (prediction, outcome) pairs; AUC and F1
/// additionally require binary outcomes. Metrics undefined on a window are
/// skipped and recorded rather than failing the run.
pub fn multi_metric_monitor(
    windows: &[Vec<(f64, f64)>],
    cfg: &MultiMetricConfig,
) -> Result<MultiMetricReport> {
    if windows.len() < 2 {
        return Err(Error::StreamTooShort {
            needed: 2,
            got: windows.len(),
        });
    }
    if cfg.metrics.is_empty() {
        return Err(Error::InvalidOption("no metrics requested".into()));
    }
    for w in windows {
        if w.len() < 30 {
            return Err(Error::WindowTooSmall {
                needed: 30,
                got: w.len(),
            });
        }
    }
    let needs_binary = cfg
        .metrics
        .iter()
        .any(|m| matches!(m, PerfMetric::Auc | PerfMetric::F1));
    if needs_binary {
        for w in windows {
            if let Some(&(_, outcome)) = w.iter().find(|(_, o)| *o != 0.0 && *o != 1.0) {
                return Err(Error::NonBinaryOutcome {
                    metric: "auc/f1",
                    value: outcome,
                });
            }
        }
    }

    let ordered: Vec<PerfMetric> = PerfMetric::ORDER
        .iter()
        .copied()
        .filter(|m| cfg.metrics.contains(m))
        .collect();
    let per_metric_alpha = match cfg.correction {
        Correction::Bonferroni => cfg.alpha / ordered.len() as f64,
        Correction::None => cfg.alpha,
    };

    let baseline = &windows[0];
    let mut events = Vec::new();
    let mut skipped = Vec::new();
    for (w_idx, window) in windows.iter().enumerate().skip(1) {
        let window_number = w_idx as u64;
        for (m_rank, &metric) in ordered.iter().enumerate() {
            let base_value = eval_metric(metric, baseline);
            let cur_value = eval_metric(metric, window);
            let (Some(base_value), Some(cur_value)) = (base_value, cur_value) else {
                skipped.push(SkippedMetric {
                    window: window_number,
                    metric: metric.as_str().to_string(),
                    reason: "metric undefined on a single-class window".to_string(),
                });
                continue;
            };
            let rng = rng::stream_rng(
                cfg.seed,
                window_number * PerfMetric::ORDER.len() as u64 + m_rank as u64,
            );
            let Some(p_value) =
                bootstrap_change_p(metric, baseline, window, cfg.resamples, rng)
            else {
                skipped.push(SkippedMetric {
                    window: window_number,
                    metric: metric.as_str().to_string(),
                    reason: "metric undefined on most bootstrap resamples".to_string(),
                });
                continue;
            };
            if p_value < per_metric_alpha {
                events.push(DriftEvent {
                    index: window_number,
                    kind: EventKind::MetricDrift,
                    detail: EventDetail::Metric {
                        metric: metric.as_str().to_string(),
                        baseline: base_value,
                        current: cur_value,
                        p_value,
                    },
                });
                if cfg.mode == TestMode::Serial {
                    break;
                }
            }
        }
    }
    Ok(MultiMetricReport {
        events,
        skipped,
        per_metric_alpha,
    })
}

//! Histogram and Gaussian-kernel primitives behind the divergence measures.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Two probability vectors over shared bin edges, reference (`p`) and
/// current (`q`).
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramPair {
    edges: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    smoothing: f64,
}

impl HistogramPair {
    /// Build a pair, checking the invariants: strictly ascending edges,
    /// nonnegative entries, and both vectors summing to 1 within 1e-12.
    pub fn new(edges: Vec<f64>, p: Vec<f64>, q: Vec<f64>, smoothing: f64) -> Result<Self> {
        let bins = edges.len().saturating_sub(1);
        if bins < 1 || p.len() != bins || q.len() != bins {
            return Err(Error::InvalidHistogram(format!(
                "{} edges with {} and {} masses",
                edges.len(),
                p.len(),
                q.len()
            )));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidHistogram(
                "edges must be strictly ascending".into(),
            ));
        }
        if smoothing < 0.0 || !smoothing.is_finite() {
            return Err(Error::InvalidHistogram(format!(
                "smoothing must be a finite value >= 0, got {smoothing}"
            )));
        }
        for (name, v) in [("p", &p), ("q", &q)] {
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidHistogram(format!(
                    "{name} has a negative or non-finite entry"
                )));
            }
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidHistogram(format!(
                    "{name} sums to {total}, expected 1"
                )));
            }
        }
        Ok(HistogramPair {
            edges,
            p,
            q,
            smoothing,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn bins(&self) -> usize {
        self.p.len()
    }
}

/// Default bin count: ceil(sqrt(pooled size)) clamped to [8, 64].
pub fn default_bins(n_pooled: usize) -> usize {
    ((n_pooled as f64).sqrt().ceil() as usize).clamp(8, 64)
}

/// Histogram both samples over identical equal-width bins spanning the
/// pooled range.
///
/// Counts are Laplace-smoothed: mass_i = (count_i + smoothing) /
/// (n + bins * smoothing). With smoothing = 0 a bin empty on one side keeps
/// zero mass there, which is what lets KL report disjoint support.
pub fn shared_histogram(
    ref_col: &[f64],
    cur_col: &[f64],
    bins: usize,
    smoothing: f64,
) -> Result<HistogramPair> {
    if ref_col.is_empty() || cur_col.is_empty() {
        return Err(Error::EmptySample);
    }
    if bins < 2 {
        return Err(Error::TooFewBins(bins));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in ref_col.iter().chain(cur_col.iter()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi > lo) {
        return Err(Error::DegenerateRange(lo));
    }
    let width = (hi - lo) / bins as f64;
    let mut edges = Vec::with_capacity(bins + 1);
    for i in 0..=bins {
        edges.push(lo + width * i as f64);
    }
    edges[bins] = hi; // guard against float drift at the top edge

    let bin_of = |v: f64| -> usize { (((v - lo) / width) as usize).min(bins - 1) };
    let histogram = |col: &[f64]| -> Vec<f64> {
        let mut counts = vec![0.0_f64; bins];
        for &v in col {
            counts[bin_of(v)] += 1.0;
        }
        let total = col.len() as f64 + bins as f64 * smoothing;
        counts.iter().map(|c| (c + smoothing) / total).collect()
    };

    HistogramPair::new(edges, histogram(ref_col), histogram(cur_col), smoothing)
}

/// Gaussian kernel with fixed convention exp(-|a - b|^2 / (2 sigma^2)).
///
/// The convention is pinned here once: MMD and LSDD values are not
/// comparable across tools unless the kernel is identical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::NonPositiveBandwidth(bandwidth));
        }
        Ok(KernelSpec { bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Kernel value for a squared distance.
    pub fn eval_sq_dist(&self, sq_dist: f64) -> f64 {
        (-sq_dist / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }
}

pub(crate) fn sq_dist_rows(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..a.ncols() {
        let d = a[(i, c)] - b[(j, c)];
        acc += d * d;
    }
    acc
}

/// Pairwise kernel matrix: entry (i, j) = k(a_i, b_j).
pub fn gaussian_kernel_matrix(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    spec: &KernelSpec,
) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            left: a.ncols(),
            right: b.ncols(),
        });
    }
    let mut out = DMatrix::zeros(a.nrows(), b.nrows());
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            out[(i, j)] = spec.eval_sq_dist(sq_dist_rows(a, i, b, j));
        }
    }
    Ok(out)
}

/// Median of all pairwise Euclidean distances among distinct pairs; the
/// usual default bandwidth when nothing better is known.
///
/// A zero median falls back to the smallest nonzero distance. Errors when
/// fewer than two points are given or all points coincide.
pub fn median_heuristic_bandwidth(pooled: &DMatrix<f64>) -> Result<f64> {
    let n = pooled.nrows();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(sq_dist_rows(pooled, i, pooled, j).sqrt());
        }
    }
    dists.sort_unstable_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if median > 0.0 {
        return Ok(median);
    }
    match dists.iter().find(|d| **d > 0.0) {
        Some(d) => Ok(*d),
        None => Err(Error::IdenticalPoints),
    }
}

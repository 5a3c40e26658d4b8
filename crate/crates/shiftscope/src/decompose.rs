//! Decomposition of a model's performance gap between two datasets into
//! covariate-shift, concept-shift, and out-of-support components.
//!
//! The ingredients: conditional risks estimated by k-NN regression on each
//! sample's (features, loss) pairs, and a shared-support distribution S
//! built by trimming to a density-ratio band. Expectations of the risks
//! under P, Q, and S then split the gap into three additive terms:
//!
//! * covariate: E_S[R_p] - E_p[R_p] — the loss the reference model sees
//!   purely because the feature distribution moved within common support;
//! * concept:   E_S[R_q - R_p] — the loss change at fixed features;
//! * out-of-support: E_q[R_q] - E_S[R_q] — the loss attributable to
//!   regions the reference distribution never covered.
//!
//! The first and third terms are qualitatively similar for diagnostics, so
//! their sum is also reported as a combined support-related figure.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logistic::LogisticModel;
use crate::mat::vstack;

/// Which side a loss sample came from: P is the reference (training)
/// distribution, Q the current (deployment) one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    P,
    Q,
}

/// Per-row losses of a fixed model evaluated on one sample.
#[derive(Debug, Clone)]
pub struct LossSample {
    features: DMatrix<f64>,
    loss: Vec<f64>,
    origin: Origin,
}

impl LossSample {
    pub fn new(features: DMatrix<f64>, loss: Vec<f64>, origin: Origin) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::InvalidLossSample("no rows".into()));
        }
        if features.nrows() != loss.len() {
            return Err(Error::InvalidLossSample(format!(
                "{} rows but {} losses",
                features.nrows(),
                loss.len()
            )));
        }
        if loss.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidLossSample("non-finite loss".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidLossSample("non-finite feature".into()));
        }
        Ok(LossSample {
            features,
            loss,
            origin,
        })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn loss(&self) -> &[f64] {
        &self.loss
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn mean_loss(&self) -> f64 {
        self.loss.iter().sum::<f64>() / self.loss.len() as f64
    }

    fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }
}

/// k-NN regression estimate of the conditional risk R(x) = E[loss | X = x].
///
/// Evaluation is defined for every query point: the k nearest support
/// points always exist, with distance ties broken by row index so results
/// are deterministic.
#[derive(Debug, Clone)]
pub struct RiskEstimator {
    points: DMatrix<f64>,
    values: Vec<f64>,
    k: usize,
}

impl RiskEstimator {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Mean loss over the k nearest sample points in Euclidean distance.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.points.ncols(), "query dimension mismatch");
        let n = self.points.nrows();
        let mut order: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                let mut sq = 0.0;
                for c in 0..self.points.ncols() {
                    let d = x[c] - self.points[(i, c)];
                    sq += d * d;
                }
                (sq, i)
            })
            .collect();
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order[..self.k].iter().map(|&(_, i)| self.values[i]).sum::<f64>() / self.k as f64
    }
}

/// Fit the conditional-risk estimator for one loss sample.
pub fn estimate_conditional_risk(sample: &LossSample, k: usize) -> Result<RiskEstimator> {
    let n = sample.n_rows();
    if k < 1 || k > n {
        return Err(Error::BadNeighborCount { k, n });
    }
    Ok(RiskEstimator {
        points: sample.features.clone(),
        values: sample.loss.clone(),
        k,
    })
}

/// Default neighbor count: ceil(sqrt(n)).
pub fn default_k(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

/// Band of acceptable density ratios q(x)/p(x) for the common support.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RatioBounds {
    pub lower: f64,
    pub upper: f64,
}

impl RatioBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower < 1.0 && upper > 1.0) || !upper.is_finite() {
            return Err(Error::BadRatioBounds { lower, upper });
        }
        Ok(RatioBounds { lower, upper })
    }
}

/// The shared distribution S: per-row weights over the P sample (and,
/// symmetrically, the Q sample for diagnostics), uniform over the points
/// retained inside the density-ratio band.
#[derive(Debug, Clone)]
pub struct SharedSupportSpec {
    p_weights: Vec<f64>,
    q_weights: Vec<f64>,
    bounds: RatioBounds,
    p_retained: usize,
    q_retained: usize,
}

impl SharedSupportSpec {
    /// Weight of each P row under S; zero for trimmed rows. Sums to 1.
    pub fn p_weights(&self) -> &[f64] {
        &self.p_weights
    }

    /// Symmetric weights over the Q rows, for diagnostics.
    pub fn q_weights(&self) -> &[f64] {
        &self.q_weights
    }

    pub fn bounds(&self) -> RatioBounds {
        self.bounds
    }

    /// Effective sample sizes: retained row counts on each side.
    pub fn effective_sizes(&self) -> (usize, usize) {
        (self.p_retained, self.q_retained)
    }

    pub fn p_retention_fraction(&self) -> f64 {
        self.p_retained as f64 / self.p_weights.len() as f64
    }

    pub fn q_retention_fraction(&self) -> f64 {
        self.q_retained as f64 / self.q_weights.len() as f64
    }
}

/// Build S by the classifier trick: fit the logistic separator to
/// distinguish Q rows (label 1) from P rows (label 0); its odds, corrected
/// for class sizes, estimate the density ratio q(x)/p(x) pointwise. Points
/// with ratio inside [lower, upper] are retained and weighted uniformly.
///
/// Errors with [`Error::NoCommonSupport`] when either side retains nothing,
/// which callers should report as pure out-of-support shift.
pub fn shared_distribution(
    p_features: &DMatrix<f64>,
    q_features: &DMatrix<f64>,
    bounds: RatioBounds,
) -> Result<SharedSupportSpec> {
    if p_features.ncols() != q_features.ncols() {
        return Err(Error::DimensionMismatch {
            left: p_features.ncols(),
            right: q_features.ncols(),
        });
    }
    if p_features.nrows() == 0 || q_features.nrows() == 0 {
        return Err(Error::EmptySample);
    }

    let n_p = p_features.nrows();
    let n_q = q_features.nrows();
    let stacked = vstack(p_features, q_features);
    let mut labels = vec![0.0; n_p];
    labels.extend(std::iter::repeat(1.0).take(n_q));
    let model = LogisticModel::fit_default(&stacked, &labels);

    // odds(x) estimates q(x) n_q / (p(x) n_p); correct for class sizes
    let class_correction = n_p as f64 / n_q as f64;
    let ratio_at = |mat: &DMatrix<f64>, i: usize| -> f64 {
        let row: Vec<f64> = mat.row(i).iter().copied().collect();
        model.decision(&row).exp() * class_correction
    };

    let keep = |ratio: f64| ratio >= bounds.lower && ratio <= bounds.upper;
    let p_kept: Vec<bool> = (0..n_p).map(|i| keep(ratio_at(p_features, i))).collect();
    let q_kept: Vec<bool> = (0..n_q).map(|i| keep(ratio_at(q_features, i))).collect();
    let p_retained = p_kept.iter().filter(|k| **k).count();
    let q_retained = q_kept.iter().filter(|k| **k).count();
    if p_retained == 0 || q_retained == 0 {
        return Err(Error::NoCommonSupport);
    }

    let weights = |kept: &[bool], retained: usize| -> Vec<f64> {
        kept.iter()
            .map(|&k| if k { 1.0 / retained as f64 } else { 0.0 })
            .collect()
    };
    Ok(SharedSupportSpec {
        p_weights: weights(&p_kept, p_retained),
        q_weights: weights(&q_kept, q_retained),
        bounds,
        p_retained,
        q_retained,
    })
}

/// The decomposition result. The three terms sum to `total_gap` exactly by
/// construction; `raw_gap` is the plain mean-loss difference
/// mean(Q loss) - mean(P loss), reported so plug-in estimation error is
/// visible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub total_gap: f64,
    pub covariate_term: f64,
    pub concept_term: f64,
    pub oos_term: f64,
    /// covariate_term + oos_term: both reflect where mass moved rather
    /// than how the conditional relationship changed.
    pub support_related: f64,
    pub raw_gap: f64,
    pub k: usize,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    pub p_retention: f64,
    pub q_retention: f64,
    pub no_common_support: bool,
}

/// Estimate the three-term decomposition with k-NN conditional risks and
/// the given shared-support spec.
pub fn decompose_performance(
    p: &LossSample,
    q: &LossSample,
    spec: &SharedSupportSpec,
    k: usize,
) -> Result<DecompositionReport> {
    if p.features().ncols() != q.features().ncols() {
        return Err(Error::DimensionMismatch {
            left: p.features().ncols(),
            right: q.features().ncols(),
        });
    }
    if spec.p_weights().len() != p.n_rows() || spec.q_weights().len() != q.n_rows() {
        return Err(Error::InvalidLossSample(
            "shared-support spec does not match the samples it was built from".into(),
        ));
    }
    let risk_p = estimate_conditional_risk(p, k.min(p.n_rows()).max(1))?;
    let risk_q = estimate_conditional_risk(q, k.min(q.n_rows()).max(1))?;
    if k < 1 || k > p.n_rows() || k > q.n_rows() {
        return Err(Error::BadNeighborCount {
            k,
            n: p.n_rows().min(q.n_rows()),
        });
    }

    let mut e_p_rp = 0.0; // E_p[R_p]
    let mut e_s_rp = 0.0; // E_S[R_p]
    let mut e_s_rq = 0.0; // E_S[R_q]
    for i in 0..p.n_rows() {
        let x = p.row(i);
        let rp = risk_p.evaluate(&x);
        e_p_rp += rp / p.n_rows() as f64;
        let w = spec.p_weights()[i];
        if w > 0.0 {
            e_s_rp += w * rp;
            e_s_rq += w * risk_q.evaluate(&x);
        }
    }
    let mut e_q_rq = 0.0; // E_q[R_q]
    for i in 0..q.n_rows() {
        e_q_rq += risk_q.evaluate(&q.row(i)) / q.n_rows() as f64;
    }

    let covariate_term = e_s_rp - e_p_rp;
    let concept_term = e_s_rq - e_s_rp;
    let oos_term = e_q_rq - e_s_rq;
    Ok(DecompositionReport {
        total_gap: covariate_term + concept_term + oos_term,
        covariate_term,
        concept_term,
        oos_term,
        support_related: covariate_term + oos_term,
        raw_gap: q.mean_loss() - p.mean_loss(),
        k,
        ratio_lower: spec.bounds().lower,
        ratio_upper: spec.bounds().upper,
        p_retention: spec.p_retention_fraction(),
        q_retention: spec.q_retention_fraction(),
        no_common_support: false,
    })
}

/// Fallback report when the samples share no support: the whole plug-in
/// gap E_q[R_q] - E_p[R_p] is attributed to out-of-support shift.
pub fn decompose_out_of_support(
    p: &LossSample,
    q: &LossSample,
    bounds: RatioBounds,
    k: usize,
) -> Result<DecompositionReport> {
    if k < 1 || k > p.n_rows() || k > q.n_rows() {
        return Err(Error::BadNeighborCount {
            k,
            n: p.n_rows().min(q.n_rows()),
        });
    }
    let risk_p = estimate_conditional_risk(p, k)?;
    let risk_q = estimate_conditional_risk(q, k)?;
    let e_p_rp = (0..p.n_rows())
        .map(|i| risk_p.evaluate(&p.row(i)))
        .sum::<f64>()
        / p.n_rows() as f64;
    let e_q_rq = (0..q.n_rows())
        .map(|i| risk_q.evaluate(&q.row(i)))
        .sum::<f64>()
        / q.n_rows() as f64;
    let oos_term = e_q_rq - e_p_rp;
    Ok(DecompositionReport {
        total_gap: oos_term,
        covariate_term: 0.0,
        concept_term: 0.0,
        oos_term,
        support_related: oos_term,
        raw_gap: q.mean_loss() - p.mean_loss(),
        k,
        ratio_lower: bounds.lower,
        ratio_upper: bounds.upper,
        p_retention: 0.0,
        q_retention: 0.0,
        no_common_support: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_sample(n: usize, lo: f64, hi: f64, loss_fn: impl Fn(f64) -> f64) -> LossSample {
        let xs: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let losses: Vec<f64> = xs.iter().map(|&x| loss_fn(x)).collect();
        LossSample::new(DMatrix::from_row_slice(n, 1, &xs), losses, Origin::P).unwrap()
    }

    #[test]
    fn constant_losses_give_constant_risk() {
        let sample = grid_sample(50, 0.0, 1.0, |_| 3.5);
        let est = estimate_conditional_risk(&sample, 7).unwrap();
        for q in [-1.0, 0.0, 0.33, 2.0] {
            assert_eq!(est.evaluate(&[q]), 3.5);
        }
    }

    #[test]
    fn k1_at_a_sample_point_returns_its_own_loss() {
        let sample = grid_sample(10, 0.0, 9.0, |x| x * x);
        let est = estimate_conditional_risk(&sample, 1).unwrap();
        assert_eq!(est.evaluate(&[4.0]), 16.0);
    }

    #[test]
    fn knn_tracks_a_linear_loss_surface() {
        // losses = 2x on a 200-point grid, k = 5: interior error <= 0.1
        let sample = grid_sample(200, 0.0, 1.0, |x| 2.0 * x);
        let est = estimate_conditional_risk(&sample, 5).unwrap();
        for i in 5..195 {
            let x = i as f64 / 199.0;
            assert!(
                (est.evaluate(&[x]) - 2.0 * x).abs() <= 0.1,
                "error too large at {x}"
            );
        }
    }

    #[test]
    fn tie_breaking_is_by_row_index() {
        // two points equidistant from the query; k = 1 must take row 0
        let features = DMatrix::from_row_slice(2, 1, &[1.0, 3.0]);
        let sample = LossSample::new(features, vec![10.0, 20.0], Origin::P).unwrap();
        let est = estimate_conditional_risk(&sample, 1).unwrap();
        assert_eq!(est.evaluate(&[2.0]), 10.0);
    }

    #[test]
    fn bad_neighbor_counts_are_rejected() {
        let sample = grid_sample(5, 0.0, 1.0, |x| x);
        assert!(matches!(
            estimate_conditional_risk(&sample, 0),
            Err(Error::BadNeighborCount { .. })
        ));
        assert!(matches!(
            estimate_conditional_risk(&sample, 6),
            Err(Error::BadNeighborCount { .. })
        ));
    }

    #[test]
    fn identical_samples_retain_everything() {
        let xs: Vec<f64> = (0..60).map(|i| (i as f64) * 0.1 - 3.0).collect();
        let mat = DMatrix::from_row_slice(60, 1, &xs);
        let spec =
            shared_distribution(&mat, &mat, RatioBounds::new(0.1, 10.0).unwrap()).unwrap();
        assert_eq!(spec.effective_sizes(), (60, 60));
        assert!(spec.p_weights().iter().all(|w| (*w - 1.0 / 60.0).abs() < 1e-15));
        assert_relative_eq!(spec.p_weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn disjoint_clusters_have_no_common_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p: Vec<f64> = (0..50).map(|_| -10.0 + rng.gen_range(-0.5..0.5)).collect();
        let q: Vec<f64> = (0..50).map(|_| 10.0 + rng.gen_range(-0.5..0.5)).collect();
        let p = DMatrix::from_row_slice(50, 1, &p);
        let q = DMatrix::from_row_slice(50, 1, &q);
        assert!(matches!(
            shared_distribution(&p, &q, RatioBounds::new(0.1, 10.0).unwrap()),
            Err(Error::NoCommonSupport)
        ));
    }

    #[test]
    fn retained_mass_concentrates_where_densities_overlap() {
        // P ~ N(0,1), Q ~ N(2,1): the true ratio band (0.1, 10) is
        // x in [-0.15, 2.15], well inside [-1, 3]
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut good = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p_data: Vec<f64> = (0..300).map(|_| normal.sample(&mut rng)).collect();
            let q_data: Vec<f64> = (0..300).map(|_| normal.sample(&mut rng) + 2.0).collect();
            let p = DMatrix::from_row_slice(300, 1, &p_data);
            let q = DMatrix::from_row_slice(300, 1, &q_data);
            let spec =
                shared_distribution(&p, &q, RatioBounds::new(0.1, 10.0).unwrap()).unwrap();
            let in_band: f64 = (0..300)
                .filter(|&i| p_data[i] >= -1.0 && p_data[i] <= 3.0)
                .map(|i| spec.p_weights()[i])
                .sum();
            if in_band >= 0.9 {
                good += 1;
            }
        }
        assert!(good >= 18, "retained mass well-placed in only {good}/20 runs");
    }

    fn loss_sample_from(xs: &[f64], losses: &[f64], origin: Origin) -> LossSample {
        LossSample::new(
            DMatrix::from_row_slice(xs.len(), 1, xs),
            losses.to_vec(),
            origin,
        )
        .unwrap()
    }

    #[test]
    fn identical_samples_decompose_to_zero() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let losses: Vec<f64> = xs.iter().map(|x| x.sin().abs()).collect();
        let p = loss_sample_from(&xs, &losses, Origin::P);
        let q = loss_sample_from(&xs, &losses, Origin::Q);
        let spec =
            shared_distribution(p.features(), q.features(), RatioBounds::new(0.1, 10.0).unwrap())
                .unwrap();
        let report = decompose_performance(&p, &q, &spec, 5).unwrap();
        assert!(report.covariate_term.abs() <= 1e-10);
        assert!(report.concept_term.abs() <= 1e-10);
        assert!(report.oos_term.abs() <= 1e-10);
        assert!(report.total_gap.abs() <= 1e-10);
    }

    #[test]
    fn constant_loss_offset_is_pure_concept_shift() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let p_losses: Vec<f64> = xs.iter().map(|x| 0.5 + 0.1 * x).collect();
        let q_losses: Vec<f64> = p_losses.iter().map(|l| l + 1.0).collect();
        let p = loss_sample_from(&xs, &p_losses, Origin::P);
        let q = loss_sample_from(&xs, &q_losses, Origin::Q);
        let spec =
            shared_distribution(p.features(), q.features(), RatioBounds::new(0.1, 10.0).unwrap())
                .unwrap();
        let report = decompose_performance(&p, &q, &spec, 7).unwrap();
        assert!(report.covariate_term.abs() <= 1e-10);
        assert!(report.oos_term.abs() <= 1e-10);
        assert_relative_eq!(report.concept_term, 1.0, epsilon = 1e-10);
        assert_relative_eq!(report.total_gap, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn additivity_is_exact_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..25 {
            let n = rng.gen_range(30..80);
            let m = rng.gen_range(30..80);
            let draw = |rng: &mut ChaCha8Rng, n: usize, shift: f64| {
                let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0) + shift).collect();
                let losses: Vec<f64> = xs.iter().map(|x| (x * 1.7).cos() + 2.0).collect();
                (xs, losses)
            };
            let (px, pl) = draw(&mut rng, n, 0.0);
            let q_shift = rng.gen_range(0.0..1.0);
            let (qx, ql) = draw(&mut rng, m, q_shift);
            let p = loss_sample_from(&px, &pl, Origin::P);
            let q = loss_sample_from(&qx, &ql, Origin::Q);
            let spec = shared_distribution(
                p.features(),
                q.features(),
                RatioBounds::new(0.05, 20.0).unwrap(),
            )
            .unwrap();
            let report = decompose_performance(&p, &q, &spec, 5).unwrap();
            let sum = report.covariate_term + report.concept_term + report.oos_term;
            assert!(
                (sum - report.total_gap).abs() <= 1e-10,
                "terms {sum} vs total {}",
                report.total_gap
            );
        }
    }

    #[test]
    fn concept_shift_scenario_attributes_to_the_concept_term() {
        // y = x + noise under P, y = -x + noise under Q, same X ~ N(0,1);
        // squared loss of the line fitted on P
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(0.0, 1.0).unwrap();
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut dominant = 0;
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
            let n = 500;
            let xs: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let y_p: Vec<f64> = xs.iter().map(|x| x + noise.sample(&mut rng)).collect();
            let y_q: Vec<f64> = xs.iter().map(|x| -x + noise.sample(&mut rng)).collect();
            // OLS slope on P
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let sxy: f64 = xs.iter().zip(&y_p).map(|(x, y)| x * y).sum();
            let beta = sxy / sxx;
            let p_losses: Vec<f64> = xs
                .iter()
                .zip(&y_p)
                .map(|(x, y)| (beta * x - y) * (beta * x - y))
                .collect();
            let q_losses: Vec<f64> = xs
                .iter()
                .zip(&y_q)
                .map(|(x, y)| (beta * x - y) * (beta * x - y))
                .collect();
            let p = loss_sample_from(&xs, &p_losses, Origin::P);
            let q = loss_sample_from(&xs, &q_losses, Origin::Q);
            let spec = shared_distribution(
                p.features(),
                q.features(),
                RatioBounds::new(0.1, 10.0).unwrap(),
            )
            .unwrap();
            let report = decompose_performance(&p, &q, &spec, 20).unwrap();
            if report.concept_term.abs() >= 0.8 * report.total_gap.abs() {
                dominant += 1;
            }
        }
        assert!(dominant >= 4, "concept term dominant in only {dominant}/5 runs");
    }

    #[test]
    fn out_of_support_fallback_report() {
        let p = loss_sample_from(&[-10.0, -10.5, -9.5], &[1.0, 1.0, 1.0], Origin::P);
        let q = loss_sample_from(&[10.0, 10.5, 9.5], &[3.0, 3.0, 3.0], Origin::Q);
        let report =
            decompose_out_of_support(&p, &q, RatioBounds::new(0.1, 10.0).unwrap(), 2).unwrap();
        assert!(report.no_common_support);
        assert_eq!(report.covariate_term, 0.0);
        assert_eq!(report.concept_term, 0.0);
        assert_relative_eq!(report.oos_term, 2.0, epsilon = 1e-12);
        assert_relative_eq!(report.total_gap, report.oos_term);
    }

    #[test]
    fn ratio_bounds_validation() {
        assert!(RatioBounds::new(0.1, 10.0).is_ok());
        assert!(RatioBounds::new(0.0, 10.0).is_err());
        assert!(RatioBounds::new(1.5, 10.0).is_err());
        assert!(RatioBounds::new(0.1, 0.9).is_err());
        assert!(RatioBounds::new(0.1, f64::INFINITY).is_err());
    }
}

//! Distance measures between distributions: Kullback-Leibler divergence on
//! shared histograms, maximum mean discrepancy (Gretton et al. 2012), and
//! the least-squares density-difference estimator (Sugiyama et al. 2013).

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;

use crate::density::{sq_dist_rows, HistogramPair, KernelSpec};
use crate::error::{Error, Result};
use crate::rng;

/// KL(p || q) in nats over a shared-bin histogram pair.
///
/// Terms with p_i = 0 contribute nothing; a bin with p_i > 0 and q_i = 0
/// makes the divergence +infinity (events of one distribution outside the
/// support of the other). Any positive smoothing rules that case out.
pub fn kl_divergence(hist: &HistogramPair) -> f64 {
    let mut total = 0.0;
    for (&pi, &qi) in hist.p().iter().zip(hist.q()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return f64::INFINITY;
        }
        total += pi * (pi / qi).ln();
    }
    // Gibbs: the true value is nonnegative; absorb float dust only.
    if total < 0.0 && total > -1e-12 {
        0.0
    } else {
        total
    }
}

/// Which MMD estimator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmdEstimator {
    /// V-statistic including diagonal terms; reported as
    /// sqrt(max(MMD^2, 0)), always nonnegative.
    Biased,
    /// U-statistic excluding diagonals; reported as signed MMD^2 so
    /// permutation tests see the raw statistic.
    Unbiased,
}

/// Maximum mean discrepancy between two samples under a Gaussian kernel.
pub fn mmd(
    reference: &DMatrix<f64>,
    current: &DMatrix<f64>,
    spec: &KernelSpec,
    estimator: MmdEstimator,
) -> Result<f64> {
    if reference.ncols() != current.ncols() {
        return Err(Error::DimensionMismatch {
            left: reference.ncols(),
            right: current.ncols(),
        });
    }
    let n = reference.nrows();
    let m = current.nrows();
    let needed = match estimator {
        MmdEstimator::Biased => 1,
        MmdEstimator::Unbiased => 2,
    };
    if n < needed || m < needed {
        return Err(Error::TooFewSamples {
            estimator: match estimator {
                MmdEstimator::Biased => "biased MMD",
                MmdEstimator::Unbiased => "unbiased MMD",
            },
            needed,
            got: n.min(m),
        });
    }

    // Accumulation order (outer j, inner i) is mirrored by mmd_from_gram so
    // the two routes agree bit for bit.
    let mut sum_xx = 0.0;
    for j in 0..n {
        for i in 0..n {
            sum_xx += spec.eval_sq_dist(sq_dist_rows(reference, i, reference, j));
        }
    }
    let mut sum_yy = 0.0;
    for j in 0..m {
        for i in 0..m {
            sum_yy += spec.eval_sq_dist(sq_dist_rows(current, i, current, j));
        }
    }
    let mut sum_xy = 0.0;
    for j in 0..m {
        for i in 0..n {
            sum_xy += spec.eval_sq_dist(sq_dist_rows(reference, i, current, j));
        }
    }
    Ok(combine_mmd_sums(sum_xx, sum_yy, sum_xy, n, m, estimator))
}

fn combine_mmd_sums(
    sum_xx: f64,
    sum_yy: f64,
    sum_xy: f64,
    n: usize,
    m: usize,
    estimator: MmdEstimator,
) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    match estimator {
        MmdEstimator::Biased => {
            let mmd2 = sum_xx / (nf * nf) + sum_yy / (mf * mf) - 2.0 * sum_xy / (nf * mf);
            mmd2.max(0.0).sqrt()
        }
        MmdEstimator::Unbiased => {
            // Gaussian kernel has k(x, x) = 1, so the diagonal sums are n and m.
            (sum_xx - nf) / (nf * (nf - 1.0)) + (sum_yy - mf) / (mf * (mf - 1.0))
                - 2.0 * sum_xy / (nf * mf)
        }
    }
}

/// MMD computed from a precomputed pooled Gram matrix and two index sets.
///
/// Produces exactly the same value as [`mmd`] applied to the corresponding
/// row submatrices; the permutation harness uses this to avoid rebuilding
/// kernel matrices per permutation.
pub fn mmd_from_gram(
    gram: &DMatrix<f64>,
    ref_idx: &[usize],
    cur_idx: &[usize],
    estimator: MmdEstimator,
) -> f64 {
    let mut sum_xx = 0.0;
    for &j in ref_idx {
        for &i in ref_idx {
            sum_xx += gram[(i, j)];
        }
    }
    let mut sum_yy = 0.0;
    for &j in cur_idx {
        for &i in cur_idx {
            sum_yy += gram[(i, j)];
        }
    }
    let mut sum_xy = 0.0;
    for &j in cur_idx {
        for &i in ref_idx {
            sum_xy += gram[(i, j)];
        }
    }
    combine_mmd_sums(sum_xx, sum_yy, sum_xy, ref_idx.len(), cur_idx.len(), estimator)
}

/// How to choose the Gaussian basis centers for LSDD.
#[derive(Debug, Clone)]
pub enum CenterSelection {
    /// Sample up to `max_centers` points without replacement from the
    /// pooled reference + current rows, reproducibly from `seed`.
    PooledSample { max_centers: usize, seed: u64 },
    /// Use the given rows as centers.
    Explicit(DMatrix<f64>),
}

/// Default cap on the number of basis centers.
pub const DEFAULT_MAX_CENTERS: usize = 100;

/// Fitted least-squares density-difference model g(x) = sum_l theta_l
/// exp(-|x - c_l|^2 / (2 sigma^2)), approximating p(x) - q(x).
#[derive(Debug, Clone)]
pub struct LsddModel {
    centers: DMatrix<f64>,
    sigma: f64,
    lambda: f64,
    theta: DVector<f64>,
    value: f64,
}

impl LsddModel {
    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn coefficients(&self) -> &[f64] {
        self.theta.as_slice()
    }

    /// Estimated squared L2 distance between the densities,
    /// 2 theta'h - theta'H theta. Reported as computed: small negative
    /// values are possible at finite sample sizes and are informative.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Evaluate the density-difference estimate at a point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.centers.ncols(), "query dimension mismatch");
        let two_sigma_sq = 2.0 * self.sigma * self.sigma;
        let mut g = 0.0;
        for l in 0..self.centers.nrows() {
            let mut sq = 0.0;
            for c in 0..self.centers.ncols() {
                let d = x[c] - self.centers[(l, c)];
                sq += d * d;
            }
            g += self.theta[l] * (-sq / two_sigma_sq).exp();
        }
        g
    }
}

fn resolve_centers(
    reference: &DMatrix<f64>,
    current: &DMatrix<f64>,
    selection: &CenterSelection,
) -> Result<DMatrix<f64>> {
    match selection {
        CenterSelection::Explicit(c) => {
            if c.ncols() != reference.ncols() {
                return Err(Error::DimensionMismatch {
                    left: reference.ncols(),
                    right: c.ncols(),
                });
            }
            if c.nrows() == 0 {
                return Err(Error::EmptySample);
            }
            Ok(c.clone())
        }
        CenterSelection::PooledSample { max_centers, seed } => {
            let n = reference.nrows();
            let total = n + current.nrows();
            let b = (*max_centers).min(total).max(1);
            let mut picked: Vec<usize> = if b == total {
                (0..total).collect()
            } else {
                let mut rng = rng::stream_rng(*seed, 0);
                sample_indices(&mut rng, total, b).into_vec()
            };
            picked.sort_unstable();
            let d = reference.ncols();
            let mut data = Vec::with_capacity(b * d);
            for &idx in &picked {
                for c in 0..d {
                    let v = if idx < n {
                        reference[(idx, c)]
                    } else {
                        current[(idx - n, c)]
                    };
                    data.push(v);
                }
            }
            Ok(DMatrix::from_row_slice(b, d, &data))
        }
    }
}

/// Exact Gaussian-Gaussian integral matrix:
/// H[l, l'] = (pi sigma^2)^(d/2) exp(-|c_l - c_l'|^2 / (4 sigma^2)).
fn lsdd_gram(centers: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    let b = centers.nrows();
    let d = centers.ncols() as f64;
    let scale = (std::f64::consts::PI * sigma * sigma).powf(d / 2.0);
    let four_sigma_sq = 4.0 * sigma * sigma;
    let mut h = DMatrix::zeros(b, b);
    for j in 0..b {
        for i in 0..b {
            let sq = sq_dist_rows(centers, i, centers, j);
            h[(i, j)] = scale * (-sq / four_sigma_sq).exp();
        }
    }
    h
}

/// Basis design matrix: Phi[i, l] = exp(-|x_i - c_l|^2 / (2 sigma^2)).
fn lsdd_design(points: &DMatrix<f64>, centers: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    let two_sigma_sq = 2.0 * sigma * sigma;
    let mut phi = DMatrix::zeros(points.nrows(), centers.nrows());
    for l in 0..centers.nrows() {
        for i in 0..points.nrows() {
            let sq = sq_dist_rows(points, i, centers, l);
            phi[(i, l)] = (-sq / two_sigma_sq).exp();
        }
    }
    phi
}

fn column_means(phi: &DMatrix<f64>) -> DVector<f64> {
    let n = phi.nrows() as f64;
    DVector::from_iterator(phi.ncols(), phi.column_iter().map(|c| c.sum() / n))
}

fn solve_ridge(h: &DMatrix<f64>, lambda: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let mut system = h.clone();
    for i in 0..system.nrows() {
        system[(i, i)] += lambda;
    }
    match system.clone().cholesky() {
        Some(chol) => {
            if lambda == 0.0 {
                // Without ridge, numerically dependent basis functions show
                // up as a collapsed Cholesky pivot rather than an outright
                // factorization failure.
                let factor = chol.l();
                let mut min_pivot = f64::INFINITY;
                let mut max_pivot = 0.0_f64;
                for i in 0..factor.nrows() {
                    min_pivot = min_pivot.min(factor[(i, i)]);
                    max_pivot = max_pivot.max(factor[(i, i)]);
                }
                // an exactly singular system factors with a pivot at the
                // sqrt(machine epsilon) scale, so the cutoff sits above it
                if !(min_pivot > max_pivot * 1e-7) {
                    return Err(Error::SingularSystem);
                }
            }
            Ok(chol.solve(rhs))
        }
        None if lambda == 0.0 => Err(Error::SingularSystem),
        None => system.lu().solve(rhs).ok_or(Error::SingularSystem),
    }
}

/// Fit the LSDD model: closed-form theta = (H + lambda I)^-1 h with
/// h_l = mean_ref phi_l - mean_cur phi_l and H the exact Gaussian integral.
pub fn lsdd(
    reference: &DMatrix<f64>,
    current: &DMatrix<f64>,
    sigma: f64,
    lambda: f64,
    centers: &CenterSelection,
) -> Result<LsddModel> {
    if reference.ncols() != current.ncols() {
        return Err(Error::DimensionMismatch {
            left: reference.ncols(),
            right: current.ncols(),
        });
    }
    if reference.nrows() == 0 || current.nrows() == 0 {
        return Err(Error::EmptySample);
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveBandwidth(sigma));
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidOption(format!(
            "regularization must be >= 0, got {lambda}"
        )));
    }

    let centers = resolve_centers(reference, current, centers)?;
    let h_mat = lsdd_gram(&centers, sigma);
    let phi_ref = lsdd_design(reference, &centers, sigma);
    let phi_cur = lsdd_design(current, &centers, sigma);
    let h_vec = column_means(&phi_ref) - column_means(&phi_cur);
    let theta = solve_ridge(&h_mat, lambda, &h_vec)?;
    let value = 2.0 * theta.dot(&h_vec) - theta.dot(&(&h_mat * &theta));

    Ok(LsddModel {
        centers,
        sigma,
        lambda,
        theta,
        value,
    })
}

/// Pick (sigma, lambda) from grids by k-fold cross-validation on the
/// quadratic objective estimate 2 theta'h_holdout - theta'H theta (larger
/// is better). Ties break toward larger lambda, then larger sigma.
pub fn select_lsdd_hyperparams(
    reference: &DMatrix<f64>,
    current: &DMatrix<f64>,
    sigma_grid: &[f64],
    lambda_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if sigma_grid.is_empty() || lambda_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if folds < 2 {
        return Err(Error::InvalidOption(format!(
            "cross-validation needs folds >= 2, got {folds}"
        )));
    }
    let n = reference.nrows();
    let m = current.nrows();
    if n < folds || m < folds {
        return Err(Error::TooFewSamplesForFolds {
            folds,
            got: n.min(m),
        });
    }

    use rand::seq::SliceRandom;
    let mut ref_order: Vec<usize> = (0..n).collect();
    let mut cur_order: Vec<usize> = (0..m).collect();
    let mut shuffle_rng = rng::stream_rng(seed, 0);
    ref_order.shuffle(&mut shuffle_rng);
    cur_order.shuffle(&mut shuffle_rng);

    let take_rows = |src: &DMatrix<f64>, rows: &[usize]| -> DMatrix<f64> {
        let d = src.ncols();
        let mut data = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            for c in 0..d {
                data.push(src[(r, c)]);
            }
        }
        DMatrix::from_row_slice(rows.len(), d, &data)
    };

    let mut scores = vec![0.0_f64; sigma_grid.len() * lambda_grid.len()];
    for fold in 0..folds {
        let in_fold = |pos: usize| pos % folds == fold;
        let ref_hold: Vec<usize> = ref_order
            .iter()
            .enumerate()
            .filter(|(pos, _)| in_fold(*pos))
            .map(|(_, &r)| r)
            .collect();
        let ref_train: Vec<usize> = ref_order
            .iter()
            .enumerate()
            .filter(|(pos, _)| !in_fold(*pos))
            .map(|(_, &r)| r)
            .collect();
        let cur_hold: Vec<usize> = cur_order
            .iter()
            .enumerate()
            .filter(|(pos, _)| in_fold(*pos))
            .map(|(_, &r)| r)
            .collect();
        let cur_train: Vec<usize> = cur_order
            .iter()
            .enumerate()
            .filter(|(pos, _)| !in_fold(*pos))
            .map(|(_, &r)| r)
            .collect();

        let train_ref = take_rows(reference, &ref_train);
        let train_cur = take_rows(current, &cur_train);
        let hold_ref = take_rows(reference, &ref_hold);
        let hold_cur = take_rows(current, &cur_hold);

        let centers = resolve_centers(
            &train_ref,
            &train_cur,
            &CenterSelection::PooledSample {
                max_centers: DEFAULT_MAX_CENTERS,
                seed: rng::subseed(seed, fold as u64 + 1),
            },
        )?;

        for (si, &sigma) in sigma_grid.iter().enumerate() {
            if !(sigma > 0.0) {
                return Err(Error::NonPositiveBandwidth(sigma));
            }
            let h_mat = lsdd_gram(&centers, sigma);
            let h_train = column_means(&lsdd_design(&train_ref, &centers, sigma))
                - column_means(&lsdd_design(&train_cur, &centers, sigma));
            let h_hold = column_means(&lsdd_design(&hold_ref, &centers, sigma))
                - column_means(&lsdd_design(&hold_cur, &centers, sigma));
            for (li, &lambda) in lambda_grid.iter().enumerate() {
                let theta = solve_ridge(&h_mat, lambda, &h_train)?;
                let score = 2.0 * theta.dot(&h_hold) - theta.dot(&(&h_mat * &theta));
                scores[si * lambda_grid.len() + li] += score;
            }
        }
    }

    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (si, &sigma) in sigma_grid.iter().enumerate() {
        for (li, &lambda) in lambda_grid.iter().enumerate() {
            let score = scores[si * lambda_grid.len() + li] / folds as f64;
            let candidate = (score, lambda, sigma);
            if candidate.0 > best.0
                || (candidate.0 == best.0
                    && (candidate.1 > best.1 || (candidate.1 == best.1 && candidate.2 > best.2)))
            {
                best = candidate;
            }
        }
    }
    Ok((best.2, best.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::shared_histogram;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hist(p: &[f64], q: &[f64]) -> HistogramPair {
        let edges: Vec<f64> = (0..=p.len()).map(|i| i as f64).collect();
        HistogramPair::new(edges, p.to_vec(), q.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn kl_is_zero_for_identical_histograms() {
        assert_eq!(kl_divergence(&hist(&[0.3, 0.7], &[0.3, 0.7])), 0.0);
    }

    #[test]
    fn kl_hand_summation_both_directions() {
        // 0.5 ln 2 + 0.5 ln(2/3) and 0.25 ln(1/2) + 0.75 ln(3/2)
        let forward = kl_divergence(&hist(&[0.5, 0.5], &[0.25, 0.75]));
        let reverse = kl_divergence(&hist(&[0.25, 0.75], &[0.5, 0.5]));
        assert_relative_eq!(forward, 0.143841, epsilon = 1e-6);
        assert_relative_eq!(reverse, 0.130812, epsilon = 1e-6);
        assert!(forward != reverse, "KL is not symmetric");
    }

    #[test]
    fn kl_disjoint_support_is_infinite() {
        assert_eq!(kl_divergence(&hist(&[1.0, 0.0], &[0.0, 1.0])), f64::INFINITY);
    }

    #[test]
    fn kl_with_smoothing_is_finite() {
        let h = shared_histogram(&[0.0, 0.1, 0.2], &[10.0, 10.1], 8, 0.5).unwrap();
        assert!(kl_divergence(&h).is_finite());
    }

    #[test]
    fn kl_nonnegative_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let bins = rng.gen_range(2..12);
            let draw = |rng: &mut ChaCha8Rng| {
                let raw: Vec<f64> = (0..bins).map(|_| rng.gen_range(0.0..1.0) + 1e-9).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect::<Vec<_>>()
            };
            let p = draw(&mut rng);
            let q = draw(&mut rng);
            let edges: Vec<f64> = (0..=bins).map(|i| i as f64).collect();
            let h = HistogramPair::new(edges, p, q, 0.0).unwrap();
            assert!(kl_divergence(&h) >= 0.0);
        }
    }

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        let d = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        DMatrix::from_row_slice(rows.len(), d, &flat)
    }

    #[test]
    fn mmd_zero_for_identical_samples() {
        let a = mat(&[&[0.0, 1.0], &[2.0, -1.0], &[0.5, 0.5]]);
        let spec = KernelSpec::new(1.0).unwrap();
        let v = mmd(&a, &a, &spec, MmdEstimator::Biased).unwrap();
        assert!(v <= 1e-12, "got {v}");
    }

    #[test]
    fn mmd_single_point_hand_value() {
        // sqrt(2 - 2 exp(-1/2)) = 0.887095...
        let a = mat(&[&[0.0]]);
        let b = mat(&[&[1.0]]);
        let spec = KernelSpec::new(1.0).unwrap();
        let v = mmd(&a, &b, &spec, MmdEstimator::Biased).unwrap();
        assert_relative_eq!(v, (2.0 - 2.0 * (-0.5_f64).exp()).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(v, 0.887095, epsilon = 1e-6);
    }

    #[test]
    fn mmd_is_symmetric_in_its_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data_a: Vec<f64> = (0..60).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let data_b: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..3.0)).collect();
        let a = DMatrix::from_row_slice(20, 3, &data_a);
        let b = DMatrix::from_row_slice(20, 3, &data_b);
        let spec = KernelSpec::new(1.5).unwrap();
        for est in [MmdEstimator::Biased, MmdEstimator::Unbiased] {
            let ab = mmd(&a, &b, &spec, est).unwrap();
            let ba = mmd(&b, &a, &spec, est).unwrap();
            assert_relative_eq!(ab, ba, epsilon = 1e-14);
        }
        let biased = mmd(&a, &b, &spec, MmdEstimator::Biased).unwrap();
        assert!(biased >= 0.0);
    }

    #[test]
    fn mmd_gram_route_matches_direct_route_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..24).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let pool = DMatrix::from_row_slice(12, 2, &data);
        let spec = KernelSpec::new(0.8).unwrap();
        let gram = crate::density::gaussian_kernel_matrix(&pool, &pool, &spec).unwrap();

        let ref_idx: Vec<usize> = vec![0, 3, 5, 7, 8];
        let cur_idx: Vec<usize> = vec![1, 2, 4, 6, 9, 10, 11];
        let take = |idx: &[usize]| {
            let mut flat = Vec::new();
            for &i in idx {
                flat.extend(pool.row(i).iter().copied());
            }
            DMatrix::from_row_slice(idx.len(), 2, &flat)
        };
        for est in [MmdEstimator::Biased, MmdEstimator::Unbiased] {
            let direct = mmd(&take(&ref_idx), &take(&cur_idx), &spec, est).unwrap();
            let via_gram = mmd_from_gram(&gram, &ref_idx, &cur_idx, est);
            assert_eq!(direct.to_bits(), via_gram.to_bits());
        }
    }

    #[test]
    fn mmd_rejects_dimension_mismatch() {
        let a = mat(&[&[0.0, 1.0]]);
        let b = mat(&[&[0.0]]);
        let spec = KernelSpec::new(1.0).unwrap();
        assert!(mmd(&a, &b, &spec, MmdEstimator::Biased).is_err());
    }

    #[test]
    fn lsdd_identical_samples_give_zero() {
        let a = mat(&[&[-1.0], &[0.0], &[1.0]]);
        let model = lsdd(
            &a,
            &a,
            1.0,
            0.1,
            &CenterSelection::PooledSample {
                max_centers: DEFAULT_MAX_CENTERS,
                seed: 0,
            },
        )
        .unwrap();
        assert!(model.value().abs() <= 1e-12);
        assert!(model.coefficients().iter().all(|t| t.abs() <= 1e-12));
    }

    /// Gradient-descent minimizer of the quadrature-discretized objective
    /// sum_x g(x)^2 dx - 2 theta'h + lambda |theta|^2 on a 1-D grid.
    /// Independent of the closed-form solve path.
    fn quadrature_gd_oracle(
        reference: &DMatrix<f64>,
        current: &DMatrix<f64>,
        centers: &DMatrix<f64>,
        sigma: f64,
        lambda: f64,
    ) -> Vec<f64> {
        let b = centers.nrows();
        let step_x = 0.001;
        let grid: Vec<f64> = {
            let mut g = Vec::new();
            let mut x = -6.0;
            while x <= 6.0 + 1e-12 {
                g.push(x);
                x += step_x;
            }
            g
        };
        // basis values at grid points
        let phi_at = |x: f64, l: usize| {
            let d = x - centers[(l, 0)];
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        };
        // h_l from sample means (same definition as the estimator's h)
        let mut h = vec![0.0; b];
        for l in 0..b {
            let mean_ref: f64 = (0..reference.nrows())
                .map(|i| phi_at(reference[(i, 0)], l))
                .sum::<f64>()
                / reference.nrows() as f64;
            let mean_cur: f64 = (0..current.nrows())
                .map(|i| phi_at(current[(i, 0)], l))
                .sum::<f64>()
                / current.nrows() as f64;
            h[l] = mean_ref - mean_cur;
        }
        // quadrature H
        let mut hq = vec![vec![0.0; b]; b];
        for (li, row) in hq.iter_mut().enumerate() {
            for (lj, entry) in row.iter_mut().enumerate() {
                *entry = grid
                    .iter()
                    .map(|&x| phi_at(x, li) * phi_at(x, lj) * step_x)
                    .sum();
            }
        }
        // gradient descent on theta'Hq theta - 2 theta'h + lambda theta'theta
        let mut theta = vec![0.0; b];
        let lr = 0.05;
        for _ in 0..60_000 {
            for l in 0..b {
                let mut grad = -2.0 * h[l] + 2.0 * lambda * theta[l];
                for j in 0..b {
                    grad += 2.0 * hq[l][j] * theta[j];
                }
                theta[l] -= lr * grad;
            }
        }
        theta
    }

    #[test]
    fn lsdd_closed_form_matches_quadrature_gradient_descent() {
        let reference = mat(&[&[-1.0], &[0.0], &[1.0]]);
        let current = mat(&[&[0.0]]);
        let centers = mat(&[&[-1.0], &[0.0], &[1.0], &[0.0]]);
        // duplicate center makes H singular at lambda = 0; with ridge it is fine
        let model = lsdd(
            &reference,
            &current,
            1.0,
            0.1,
            &CenterSelection::Explicit(centers.clone()),
        )
        .unwrap();
        let oracle = quadrature_gd_oracle(&reference, &current, &centers, 1.0, 0.1);
        for (a, b) in model.coefficients().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-3, "closed form {a} vs oracle {b}");
        }
    }

    #[test]
    fn lsdd_normal_equations_residual_is_tiny() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..20 {
            let n = rng.gen_range(5..40);
            let m = rng.gen_range(5..40);
            let d = rng.gen_range(1..4);
            let fill = |rows: usize, rng: &mut ChaCha8Rng| {
                let flat: Vec<f64> = (0..rows * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                DMatrix::from_row_slice(rows, d, &flat)
            };
            let a = fill(n, &mut rng);
            let b = fill(m, &mut rng);
            let model = lsdd(
                &a,
                &b,
                1.0,
                0.05,
                &CenterSelection::PooledSample {
                    max_centers: 30,
                    seed: trial,
                },
            )
            .unwrap();
            let h_mat = lsdd_gram(model.centers(), model.sigma());
            let phi_a = lsdd_design(&a, model.centers(), model.sigma());
            let phi_b = lsdd_design(&b, model.centers(), model.sigma());
            let h_vec = column_means(&phi_a) - column_means(&phi_b);
            let theta = DVector::from_column_slice(model.coefficients());
            let mut residual = &h_mat * &theta - &h_vec;
            residual += model.lambda() * &theta;
            let max_resid = residual.iter().cloned().fold(0.0_f64, |a, v| a.max(v.abs()));
            assert!(max_resid <= 1e-10, "residual {max_resid}");
        }
    }

    #[test]
    fn lsdd_value_is_symmetric_under_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let fill = |rows: usize, rng: &mut ChaCha8Rng| {
                let flat: Vec<f64> = (0..rows * 2).map(|_| rng.gen_range(-2.0..2.0)).collect();
                DMatrix::from_row_slice(rows, 2, &flat)
            };
            let a = fill(12, &mut rng);
            let b = fill(9, &mut rng);
            let centers = fill(15, &mut rng);
            let fwd = lsdd(&a, &b, 0.9, 0.05, &CenterSelection::Explicit(centers.clone())).unwrap();
            let rev = lsdd(&b, &a, 0.9, 0.05, &CenterSelection::Explicit(centers)).unwrap();
            assert!((fwd.value() - rev.value()).abs() <= 1e-10);
            // g flips sign under the swap
            let x = [0.3, -0.4];
            assert_relative_eq!(fwd.evaluate(&x), -rev.evaluate(&x), epsilon = 1e-10);
        }
    }

    #[test]
    fn lsdd_singular_without_ridge_is_reported() {
        // duplicated centers make H exactly singular
        let a = mat(&[&[0.0], &[1.0]]);
        let centers = mat(&[&[0.5], &[0.5]]);
        let err = lsdd(&a, &a, 1.0, 0.0, &CenterSelection::Explicit(centers));
        assert!(matches!(err, Err(Error::SingularSystem)));
    }

    #[test]
    fn lsdd_value_grows_with_shift_magnitude() {
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(0.0, 1.0).unwrap();
        let deltas = [0.0, 0.5, 1.0, 2.0];
        let mut medians = Vec::new();
        for &delta in &deltas {
            let mut values = Vec::new();
            for seed in 0..20u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let reference: Vec<f64> = (0..200).map(|_| normal.sample(&mut rng)).collect();
                let current: Vec<f64> =
                    (0..200).map(|_| normal.sample(&mut rng) + delta).collect();
                let a = DMatrix::from_row_slice(200, 1, &reference);
                let b = DMatrix::from_row_slice(200, 1, &current);
                let model = lsdd(
                    &a,
                    &b,
                    1.0,
                    0.1,
                    &CenterSelection::PooledSample {
                        max_centers: DEFAULT_MAX_CENTERS,
                        seed,
                    },
                )
                .unwrap();
                values.push(model.value());
            }
            values.sort_unstable_by(f64::total_cmp);
            medians.push(0.5 * (values[9] + values[10]));
        }
        for w in medians.windows(2) {
            assert!(w[0] < w[1], "medians not increasing: {medians:?}");
        }
    }

    #[test]
    fn hyperparam_selection_single_point_grid_is_forced() {
        let a = mat(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        let b = mat(&[&[0.5], &[1.5], &[2.5], &[3.5]]);
        let (sigma, lambda) =
            select_lsdd_hyperparams(&a, &b, &[0.7], &[0.3], 2, 42).unwrap();
        assert_eq!((sigma, lambda), (0.7, 0.3));
    }

    #[test]
    fn hyperparam_selection_is_deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let flat: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = DMatrix::from_row_slice(40, 1, &flat);
        let grids: (&[f64], &[f64]) = (&[0.5, 1.0, 2.0], &[1e-3, 1e-2, 1e-1, 1.0]);
        let first = select_lsdd_hyperparams(&a, &a, grids.0, grids.1, 4, 7).unwrap();
        let second = select_lsdd_hyperparams(&a, &a, grids.0, grids.1, 4, 7).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn hyperparam_selection_close_to_best_on_replication() {
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(0.0, 1.0).unwrap();
        let sigma_grid = [0.5, 1.0, 2.0];
        let lambda_grid = [1e-3, 1e-2, 1e-1, 1.0];

        let sample_pair = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let reference: Vec<f64> = (0..200).map(|_| normal.sample(&mut rng)).collect();
            let current: Vec<f64> = (0..200).map(|_| normal.sample(&mut rng) + 1.0).collect();
            (
                DMatrix::from_row_slice(200, 1, &reference),
                DMatrix::from_row_slice(200, 1, &current),
            )
        };
        let (train_ref, train_cur) = sample_pair(100);
        let (sigma, lambda) =
            select_lsdd_hyperparams(&train_ref, &train_cur, &sigma_grid, &lambda_grid, 5, 3)
                .unwrap();

        // fresh replication: evaluate every grid point with shared centers
        let (rep_ref, rep_cur) = sample_pair(200);
        let centers = CenterSelection::PooledSample {
            max_centers: DEFAULT_MAX_CENTERS,
            seed: 17,
        };
        let value_at = |s: f64, l: f64| {
            lsdd(&rep_ref, &rep_cur, s, l, &centers).unwrap().value()
        };
        let selected = value_at(sigma, lambda);
        let best = sigma_grid
            .iter()
            .flat_map(|&s| lambda_grid.iter().map(move |&l| value_at(s, l)))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            selected >= 0.9 * best,
            "selected ({sigma}, {lambda}) scores {selected}, best {best}"
        );
    }
}


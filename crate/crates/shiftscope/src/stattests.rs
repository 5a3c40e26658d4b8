//! Formal two-sample tests, the permutation harness that calibrates the
//! kernel statistics, and the per-feature battery used for covariate and
//! label shift.

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::SplitPair;
use crate::density::{gaussian_kernel_matrix, KernelSpec};
use crate::divergence::{lsdd, mmd_from_gram, CenterSelection, LsddModel, MmdEstimator};
use crate::error::{Error, Result};
use crate::logistic::LogisticModel;
use crate::mat::{take_rows, vstack};
use crate::rng;

/// Which procedure produced a [`TestResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    Ks,
    Classifier,
    PermutationMmd,
    PermutationLsdd,
}

/// Outcome of a two-sample hypothesis test. `reject` is `p_value < alpha`
/// at the alpha the test was configured with.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_ref: usize,
    pub n_cur: usize,
    pub method: TestMethod,
    pub reject: bool,
}

/// Multiple-testing correction for the feature battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    Bonferroni,
    None,
}

/// Two-sample Kolmogorov-Smirnov statistic: sup_t |F_x(t) - F_y(t)| over
/// the pooled sample points.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        if diff > d {
            d = diff;
        }
    }
    Ok(d)
}

/// Asymptotic two-sided KS p-value:
/// p = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 ne D^2), ne = nm / (n + m).
///
/// Terms are accumulated in consecutive (+,-) pairs, which are positive and
/// decreasing, and truncated once a term drops below 1e-12.
pub(crate) fn ks_p_value(d: f64, n: usize, m: usize) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let t = ne * d * d;
    if t < 1.6e-3 {
        // lambda below ~0.04: the survival function is 1 to double precision
        return 1.0;
    }
    let mut sum = 0.0;
    let mut k = 1.0_f64;
    loop {
        let odd = (-2.0 * (2.0 * k - 1.0) * (2.0 * k - 1.0) * t).exp();
        let even = (-2.0 * (2.0 * k) * (2.0 * k) * t).exp();
        sum += odd - even;
        if odd < 1e-12 || k > 50_000.0 {
            break;
        }
        k += 1.0;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64], alpha: f64) -> Result<TestResult> {
    let d = ks_statistic(x, y)?;
    let p = ks_p_value(d, x.len(), y.len());
    Ok(TestResult {
        statistic: d,
        p_value: p,
        n_ref: x.len(),
        n_cur: y.len(),
        method: TestMethod::Ks,
        reject: p < alpha,
    })
}

/// Exact upper tail of Bin(n, 1/2): P(X >= c).
pub(crate) fn binomial_tail_upper(n: u64, c: u64) -> f64 {
    if c == 0 {
        return 1.0;
    }
    if c > n {
        return 0.0;
    }
    let mut ln_choose = 0.0;
    for j in 1..=c {
        ln_choose += ((n - c + j) as f64).ln() - (j as f64).ln();
    }
    let mut term = (ln_choose - n as f64 * std::f64::consts::LN_2).exp();
    let mut sum = term;
    for k in c..n {
        term *= (n - k) as f64 / (k + 1) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum.min(1.0)
}

fn pick_rows(total: usize, count: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    if count >= total {
        (0..total).collect()
    } else {
        let mut picked = sample_indices(rng, total, count).into_vec();
        picked.sort_unstable();
        picked
    }
}

/// Classifier two-sample test: can a logistic separator tell reference
/// rows from current rows better than chance?
///
/// Classes are balanced by downsampling the larger side to the smaller, so
/// the holdout null is exactly Bin(n_holdout, 1/2); the p-value is its
/// one-sided tail at the observed number of correct predictions.
pub fn classifier_two_sample_test(
    reference: &DMatrix<f64>,
    current: &DMatrix<f64>,
    holdout_frac: f64,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    if reference.ncols() != current.ncols() {
        return Err(Error::DimensionMismatch {
            left: reference.ncols(),
            right: current.ncols(),
        });
    }
    let (n_ref, n_cur) = (reference.nrows(), current.nrows());
    if n_ref < 10 || n_cur < 10 {
        return Err(Error::TooFewSamples {
            estimator: "classifier test",
            needed: 10,
            got: n_ref.min(n_cur),
        });
    }
    if !(holdout_frac > 0.0 && holdout_frac < 1.0) {
        return Err(Error::BadHoldoutFraction(holdout_frac));
    }

    let per_class = n_ref.min(n_cur);
    let mut rng = rng::stream_rng(seed, 0);
    let mut ref_rows = pick_rows(n_ref, per_class, &mut rng);
    let mut cur_rows = pick_rows(n_cur, per_class, &mut rng);
    ref_rows.shuffle(&mut rng);
    cur_rows.shuffle(&mut rng);

    let holdout_per_class = ((per_class as f64) * holdout_frac).round() as usize;
    let holdout_total = 2 * holdout_per_class;
    if holdout_total < 10 {
        return Err(Error::HoldoutTooSmall {
            needed: 10,
            got: holdout_total,
        });
    }
    if holdout_per_class >= per_class {
        return Err(Error::BadHoldoutFraction(holdout_frac));
    }

    let train_per_class = per_class - holdout_per_class;
    let d = reference.ncols();
    let mut train_data = Vec::with_capacity(2 * train_per_class * d);
    let mut train_labels = Vec::with_capacity(2 * train_per_class);
    for &r in &ref_rows[holdout_per_class..] {
        train_data.extend(reference.row(r).iter().copied());
        train_labels.push(0.0);
    }
    for &r in &cur_rows[holdout_per_class..] {
        train_data.extend(current.row(r).iter().copied());
        train_labels.push(1.0);
    }
    let train = DMatrix::from_row_slice(2 * train_per_class, d, &train_data);
    let model = LogisticModel::fit_default(&train, &train_labels);

    let mut correct = 0u64;
    let mut row_buf = vec![0.0; d];
    let mut score = |mat: &DMatrix<f64>, r: usize, label: bool, correct: &mut u64| {
        for (c, slot) in row_buf.iter_mut().enumerate() {
            *slot = mat[(r, c)];
        }
        if model.predict(&row_buf) == label {
            *correct += 1;
        }
    };
    for &r in &ref_rows[..holdout_per_class] {
        score(reference, r, false, &mut correct);
    }
    for &r in &cur_rows[..holdout_per_class] {
        score(current, r, true, &mut correct);
    }

    let accuracy = correct as f64 / holdout_total as f64;
    let p = binomial_tail_upper(holdout_total as u64, correct);
    Ok(TestResult {
        statistic: accuracy,
        p_value: p,
        n_ref,
        n_cur,
        method: TestMethod::Classifier,
        reject: p < alpha,
    })
}

/// Re-split the pooled row indices into sizes (n_ref, rest) for permutation
/// `perm_index`. Reproducible from (seed, perm_index) alone.
pub(crate) fn permuted_split(
    total: usize,
    n_ref: usize,
    seed: u64,
    perm_index: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..total).collect();
    let mut rng = rng::stream_rng(seed, perm_index);
    idx.shuffle(&mut rng);
    let cur = idx.split_off(n_ref);
    (idx, cur)
}

fn add_one_p(count_at_least: usize, n_perm: usize) -> f64 {
    (1 + count_at_least) as f64 / (n_perm + 1) as f64
}

/// Core permutation routine: returns (observed statistic, p-value) with the
/// add-one convention p = (1 + #{perm stat >= observed}) / (n_perm + 1).
pub(crate) fn permutation_p_value<F>(
    statistic: &F,
    reference: &DMatrix<f64>,
    current: &DMatrix<f64>,
    n_perm: usize,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&DMatrix<f64>, &DMatrix<f64>) -> Result<f64>,
{
    let observed = statistic(reference, current)?;
    let pool = vstack(reference, current);
    let n_ref = reference.nrows();
    let mut at_least = 0usize;
    for i in 1..=n_perm {
        let (ref_idx, cur_idx) = permuted_split(pool.nrows(), n_ref, seed, i as u64);
        let a = take_rows(&pool, &ref_idx);
        let b = take_rows(&pool, &cur_idx);
        if statistic(&a, &b)? >= observed {
            at_least += 1;
        }
    }
    Ok((observed, add_one_p(at_least, n_perm)))
}

/// Calibrate an arbitrary two-sample statistic by permutation.
///
/// Larger statistics must indicate more separation. A failure of the
/// statistic on any permutation aborts the test with that error.
pub fn permutation_test<F>(
    statistic: F,
    reference: &DMatrix<f64>,
    current: &DMatrix<f64>,
    n_perm: usize,
    seed: u64,
    alpha: f64,
    method: TestMethod,
) -> Result<TestResult>
where
    F: Fn(&DMatrix<f64>, &DMatrix<f64>) -> Result<f64>,
{
    if n_perm < 99 {
        return Err(Error::TooFewPermutations(n_perm));
    }
    let (observed, p) = permutation_p_value(&statistic, reference, current, n_perm, seed)?;
    Ok(TestResult {
        statistic: observed,
        p_value: p,
        n_ref: reference.nrows(),
        n_cur: current.nrows(),
        method,
        reject: p < alpha,
    })
}

/// MMD permutation test sharing one pooled Gram matrix across permutations.
///
/// Produces the same splits and the same p-value as [`permutation_test`]
/// with an [`crate::divergence::mmd`] statistic; it only avoids rebuilding
/// kernel matrices per permutation.
pub fn mmd_permutation_test(
    reference: &DMatrix<f64>,
    current: &DMatrix<f64>,
    spec: &KernelSpec,
    estimator: MmdEstimator,
    n_perm: usize,
    seed: u64,
    alpha: f64,
) -> Result<TestResult> {
    if n_perm < 99 {
        return Err(Error::TooFewPermutations(n_perm));
    }
    let n_ref = reference.nrows();
    let pool = vstack(reference, current);
    let gram = gaussian_kernel_matrix(&pool, &pool, spec)?;
    let ref_idx: Vec<usize> = (0..n_ref).collect();
    let cur_idx: Vec<usize> = (n_ref..pool.nrows()).collect();
    let observed = mmd_from_gram(&gram, &ref_idx, &cur_idx, estimator);

    let mut at_least = 0usize;
    for i in 1..=n_perm {
        let (ri, ci) = permuted_split(pool.nrows(), n_ref, seed, i as u64);
        if mmd_from_gram(&gram, &ri, &ci, estimator) >= observed {
            at_least += 1;
        }
    }
    let p = add_one_p(at_least, n_perm);
    Ok(TestResult {
        statistic: observed,
        p_value: p,
        n_ref,
        n_cur: current.nrows(),
        method: TestMethod::PermutationMmd,
        reject: p < alpha,
    })
}

/// LSDD permutation test with basis, bandwidth, and regularization held
/// fixed across permutations. Returns the test alongside the fitted model
/// on the observed split.
pub fn lsdd_permutation_test(
    reference: &DMatrix<f64>,
    current: &DMatrix<f64>,
    sigma: f64,
    lambda: f64,
    centers: &CenterSelection,
    n_perm: usize,
    seed: u64,
    alpha: f64,
) -> Result<(TestResult, LsddModel)> {
    if n_perm < 99 {
        return Err(Error::TooFewPermutations(n_perm));
    }
    let model = lsdd(reference, current, sigma, lambda, centers)?;
    let fixed_centers = CenterSelection::Explicit(model.centers().clone());
    let observed = model.value();

    let pool = vstack(reference, current);
    let n_ref = reference.nrows();
    let statistic = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> Result<f64> {
        Ok(lsdd(a, b, sigma, lambda, &fixed_centers)?.value())
    };
    let mut at_least = 0usize;
    for i in 1..=n_perm {
        let (ri, ci) = permuted_split(pool.nrows(), n_ref, seed, i as u64);
        let a = take_rows(&pool, &ri);
        let b = take_rows(&pool, &ci);
        if statistic(&a, &b)? >= observed {
            at_least += 1;
        }
    }
    let p = add_one_p(at_least, n_perm);
    Ok((
        TestResult {
            statistic: observed,
            p_value: p,
            n_ref,
            n_cur: current.nrows(),
            method: TestMethod::PermutationLsdd,
            reject: p < alpha,
        },
        model,
    ))
}

/// One feature's battery entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureTest {
    pub feature: String,
    pub result: TestResult,
}

/// Result of running the KS battery across features (and optionally the
/// label column).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryResult {
    pub per_feature: Vec<FeatureTest>,
    pub label: Option<TestResult>,
    /// True when any feature test rejects.
    pub covariate_shift: bool,
    /// Present when the label was tested; true when it rejects.
    pub label_shift: Option<bool>,
    /// The per-test threshold actually applied after correction.
    pub per_test_alpha: f64,
}

/// Run the KS test on every feature column (and the label column when
/// `include_label`), under the chosen multiple-testing correction.
///
/// With Bonferroni the per-test threshold is alpha / k where k counts all
/// tests run in the battery, label included when requested.
pub fn feature_battery(
    pair: &SplitPair,
    alpha: f64,
    correction: Correction,
    include_label: bool,
) -> Result<BatteryResult> {
    if include_label && pair.reference.label().is_none() {
        return Err(Error::MissingColumn("label".into()));
    }
    let d = pair.n_features();
    let k = d + usize::from(include_label);
    let per_test_alpha = match correction {
        Correction::Bonferroni => alpha / k as f64,
        Correction::None => alpha,
    };

    let mut per_feature = Vec::with_capacity(d);
    for j in 0..d {
        let result = ks_two_sample(
            &pair.reference.column(j),
            &pair.current.column(j),
            per_test_alpha,
        )?;
        per_feature.push(FeatureTest {
            feature: pair.feature_names()[j].clone(),
            result,
        });
    }
    let label = if include_label {
        Some(ks_two_sample(
            pair.reference.label().unwrap(),
            pair.current.label().unwrap(),
            per_test_alpha,
        )?)
    } else {
        None
    };

    let covariate_shift = per_feature.iter().any(|f| f.result.reject);
    let label_shift = label.map(|l| l.reject);
    Ok(BatteryResult {
        per_feature,
        label,
        covariate_shift,
        label_shift,
        per_test_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, SourceTag};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(nm) double-loop ECDF comparison, independent of the merge scan.
    fn ks_brute_force(x: &[f64], y: &[f64]) -> f64 {
        let mut d = 0.0_f64;
        for &t in x.iter().chain(y.iter()) {
            let fx = x.iter().filter(|v| **v <= t).count() as f64 / x.len() as f64;
            let fy = y.iter().filter(|v| **v <= t).count() as f64 / y.len() as f64;
            let diff = (fx - fy).abs();
            if diff > d {
                d = diff;
            }
        }
        d
    }

    #[test]
    fn ks_identical_samples() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);
    }

    #[test]
    fn ks_disjoint_supports() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], 0.05).unwrap();
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn ks_interleaved_hand_case() {
        assert_eq!(ks_statistic(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.5);
    }

    #[test]
    fn ks_empty_sample_is_an_error() {
        assert!(ks_statistic(&[], &[1.0]).is_err());
    }

    #[test]
    fn ks_p_value_series_hand_check() {
        // at ne * D^2 = 1: 2(e^-2 - e^-8 + e^-18 - ...) = 0.2699996717...
        let p = ks_p_value(0.1, 200, 200); // ne = 100, t = 1
        assert_relative_eq!(p, 0.2699996717, epsilon = 1e-9);
    }

    #[test]
    fn ks_statistic_invariant_under_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..40).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..3.0)).collect();
        let tx: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let ty: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        assert_eq!(
            ks_statistic(&x, &y).unwrap(),
            ks_statistic(&tx, &ty).unwrap()
        );
    }

    proptest! {
        #[test]
        fn ks_matches_brute_force_exactly(
            x in proptest::collection::vec(-10.0..10.0f64, 1..50),
            y in proptest::collection::vec(-10.0..10.0f64, 1..50),
        ) {
            prop_assert_eq!(ks_statistic(&x, &y).unwrap(), ks_brute_force(&x, &y));
        }

        #[test]
        fn permutation_p_values_lie_on_the_add_one_lattice(seed in 0u64..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a_data: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b_data: Vec<f64> = (0..10).map(|_| rng.gen_range(-0.5..1.5)).collect();
            let a = DMatrix::from_row_slice(12, 1, &a_data);
            let b = DMatrix::from_row_slice(10, 1, &b_data);
            let spec = KernelSpec::new(1.0).unwrap();
            let r = mmd_permutation_test(&a, &b, &spec, MmdEstimator::Biased, 99, seed, 0.05).unwrap();
            let scaled = r.p_value * 100.0;
            prop_assert!((scaled - scaled.round()).abs() < 1e-9);
            prop_assert!(r.p_value >= 1.0 / 100.0 && r.p_value <= 1.0);
        }
    }

    #[test]
    fn binomial_tail_hand_values() {
        assert_eq!(binomial_tail_upper(3, 0), 1.0);
        assert_relative_eq!(binomial_tail_upper(3, 2), 0.5, epsilon = 1e-12);
        assert_relative_eq!(binomial_tail_upper(3, 3), 0.125, epsilon = 1e-12);
        assert_eq!(binomial_tail_upper(3, 4), 0.0);
        // symmetry check at n = 10: P(X >= 5) = (1 + P(X = 5)) / 2 + ...
        let p5 = binomial_tail_upper(10, 5);
        let pmf5 = 252.0 / 1024.0;
        assert_relative_eq!(p5, 0.5 + pmf5 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn permutation_floor_when_observed_exceeds_all() {
        let a = DMatrix::from_row_slice(6, 1, &[0.0, 0.1, -0.1, 0.05, -0.05, 0.0]);
        let b = DMatrix::from_row_slice(6, 1, &[10.0, 10.1, 9.9, 10.05, 9.95, 10.0]);
        let spec = KernelSpec::new(1.0).unwrap();
        let r = mmd_permutation_test(&a, &b, &spec, MmdEstimator::Biased, 199, 7, 0.05).unwrap();
        assert_relative_eq!(r.p_value, 1.0 / 200.0, epsilon = 1e-12);
        assert!(r.reject);
    }

    #[test]
    fn permutation_identical_inputs_give_p_one() {
        let a = DMatrix::from_row_slice(5, 1, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let spec = KernelSpec::new(1.0).unwrap();
        let r = mmd_permutation_test(&a, &a, &spec, MmdEstimator::Biased, 99, 0, 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn gram_fast_path_equals_generic_harness() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a_data: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b_data: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let a = DMatrix::from_row_slice(10, 2, &a_data);
        let b = DMatrix::from_row_slice(8, 2, &b_data);
        let spec = KernelSpec::new(0.9).unwrap();

        let fast =
            mmd_permutation_test(&a, &b, &spec, MmdEstimator::Biased, 99, 5, 0.05).unwrap();
        let generic = permutation_test(
            |x, y| crate::divergence::mmd(x, y, &spec, MmdEstimator::Biased),
            &a,
            &b,
            99,
            5,
            0.05,
            TestMethod::PermutationMmd,
        )
        .unwrap();
        assert_eq!(fast.statistic.to_bits(), generic.statistic.to_bits());
        assert_eq!(fast.p_value.to_bits(), generic.p_value.to_bits());
    }

    #[test]
    fn lsdd_fast_path_equals_generic_harness() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a_data: Vec<f64> = (0..14).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b_data: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..2.0)).collect();
        let a = DMatrix::from_row_slice(14, 1, &a_data);
        let b = DMatrix::from_row_slice(12, 1, &b_data);
        let selection = CenterSelection::PooledSample {
            max_centers: 100,
            seed: 2,
        };

        let (fast, model) =
            lsdd_permutation_test(&a, &b, 1.0, 0.1, &selection, 99, 11, 0.05).unwrap();
        let fixed = CenterSelection::Explicit(model.centers().clone());
        let generic = permutation_test(
            |x, y| Ok(lsdd(x, y, 1.0, 0.1, &fixed)?.value()),
            &a,
            &b,
            99,
            11,
            0.05,
            TestMethod::PermutationLsdd,
        )
        .unwrap();
        assert_eq!(fast.statistic.to_bits(), generic.statistic.to_bits());
        assert_eq!(fast.p_value.to_bits(), generic.p_value.to_bits());
    }

    #[test]
    fn too_few_permutations_is_an_error() {
        let a = DMatrix::from_row_slice(5, 1, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let spec = KernelSpec::new(1.0).unwrap();
        assert!(matches!(
            mmd_permutation_test(&a, &a, &spec, MmdEstimator::Biased, 50, 0, 0.05),
            Err(Error::TooFewPermutations(50))
        ));
    }

    fn gaussian_matrix(n: usize, shift: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(shift, 1.0).unwrap();
        let data: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
        DMatrix::from_row_slice(n, 1, &data)
    }

    #[test]
    fn classifier_is_deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = gaussian_matrix(40, 0.0, &mut rng);
        let b = gaussian_matrix(55, 0.4, &mut rng);
        let r1 = classifier_two_sample_test(&a, &b, 0.3, 0.05, 9).unwrap();
        let r2 = classifier_two_sample_test(&a, &b, 0.3, 0.05, 9).unwrap();
        assert_eq!(r1.statistic.to_bits(), r2.statistic.to_bits());
        assert_eq!(r1.p_value.to_bits(), r2.p_value.to_bits());
    }

    #[test]
    fn classifier_separable_clusters_reject() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = gaussian_matrix(200, 0.0, &mut rng);
        let b = gaussian_matrix(200, 10.0, &mut rng);
        let r = classifier_two_sample_test(&a, &b, 0.3, 0.05, 1).unwrap();
        assert!(r.statistic >= 0.95, "accuracy {}", r.statistic);
        assert!(r.reject);
    }

    #[test]
    fn classifier_rejects_tiny_samples() {
        let a = DMatrix::from_row_slice(5, 1, &[0.0; 5]);
        assert!(matches!(
            classifier_two_sample_test(&a, &a, 0.3, 0.05, 0),
            Err(Error::TooFewSamples { .. })
        ));
    }

    fn pair_with_features(cols_ref: Vec<Vec<f64>>, cols_cur: Vec<Vec<f64>>) -> SplitPair {
        let names: Vec<String> = (0..cols_ref.len()).map(|j| format!("f{j}")).collect();
        let build = |cols: &[Vec<f64>], tag| {
            let n = cols[0].len();
            let mut data = Vec::new();
            for row in 0..n {
                for col in cols {
                    data.push(col[row]);
                }
            }
            Dataset::new(
                DMatrix::from_row_slice(n, cols.len(), &data),
                names.clone(),
                None,
                tag,
            )
            .unwrap()
        };
        SplitPair::new(
            build(&cols_ref, SourceTag::Reference),
            build(&cols_cur, SourceTag::Current),
        )
        .unwrap()
    }

    #[test]
    fn battery_identical_pair_never_rejects() {
        let col: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let pair = pair_with_features(vec![col.clone(), col.clone()], vec![col.clone(), col]);
        let r = feature_battery(&pair, 0.05, Correction::Bonferroni, false).unwrap();
        assert!(!r.covariate_shift);
        assert!(r.per_feature.iter().all(|f| !f.result.reject));
    }

    #[test]
    fn battery_bonferroni_threshold_arithmetic() {
        let col: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let cols: Vec<Vec<f64>> = (0..10).map(|_| col.clone()).collect();
        let pair = pair_with_features(cols.clone(), cols);
        let r = feature_battery(&pair, 0.05, Correction::Bonferroni, false).unwrap();
        assert_relative_eq!(r.per_test_alpha, 0.005, epsilon = 1e-15);
        let r = feature_battery(&pair, 0.05, Correction::None, false).unwrap();
        assert_relative_eq!(r.per_test_alpha, 0.05, epsilon = 1e-15);
    }

    #[test]
    fn battery_flags_only_the_shifted_feature() {
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut hits = 0;
        let mut clean = 0;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let make_col =
                |rng: &mut ChaCha8Rng, shift: f64| -> Vec<f64> {
                    (0..500).map(|_| normal.sample(rng) + shift).collect()
                };
            let ref_cols: Vec<Vec<f64>> = (0..10).map(|_| make_col(&mut rng, 0.0)).collect();
            let cur_cols: Vec<Vec<f64>> = (0..10)
                .map(|j| make_col(&mut rng, if j == 3 { 3.0 } else { 0.0 }))
                .collect();
            let pair = pair_with_features(ref_cols, cur_cols);
            let r = feature_battery(&pair, 0.05, Correction::Bonferroni, false).unwrap();
            if r.per_feature[3].result.reject {
                hits += 1;
            }
            if r
                .per_feature
                .iter()
                .enumerate()
                .all(|(j, f)| j == 3 || !f.result.reject)
            {
                clean += 1;
            }
        }
        assert!(hits >= 9, "shifted feature flagged in only {hits}/10 runs");
        assert!(clean >= 9, "false flags in {} of 10 runs", 10 - clean);
    }

    #[test]
    fn battery_label_shift_flag() {
        let features: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let build = |label_shift: f64, tag| {
            Dataset::new(
                DMatrix::from_row_slice(40, 1, &features),
                vec!["x".into()],
                Some((0..40).map(|i| i as f64 + label_shift).collect()),
                tag,
            )
            .unwrap()
        };
        let pair = SplitPair::new(
            build(0.0, SourceTag::Reference),
            build(100.0, SourceTag::Current),
        )
        .unwrap();
        let r = feature_battery(&pair, 0.05, Correction::Bonferroni, true).unwrap();
        assert!(!r.covariate_shift);
        assert_eq!(r.label_shift, Some(true));
        assert_eq!(r.label.unwrap().statistic, 1.0);
    }
}

//! Plot-data generation: PCA projections of the pooled pair and per-series
//! ECDF step points. This module renders nothing; it emits coordinates for
//! external plotting tools.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dataset::{SourceTag, SplitPair};
use crate::error::{Error, Result};
use crate::mat::vstack;

/// One projected sample point with its source tag.
#[derive(Debug, Clone)]
pub struct ProjectedPoint {
    pub coords: Vec<f64>,
    pub source: SourceTag,
}

/// PCA of the pooled reference + current sample.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// c x d matrix with orthonormal component rows.
    pub components: DMatrix<f64>,
    /// Eigenvalues of the pooled covariance, nonincreasing, clamped at 0.
    pub explained_variance: Vec<f64>,
    /// All points, reference rows first, projected into the c components.
    pub coordinates: Vec<ProjectedPoint>,
}

/// Fit PCA on the pooled pair by eigendecomposition of the covariance and
/// project both datasets into one shared basis.
///
/// Sign convention: each component's entry of largest magnitude is made
/// positive, so repeated runs produce identical output.
pub fn pca_project(pair: &SplitPair, components: usize) -> Result<ProjectionResult> {
    let d = pair.n_features();
    if components > d {
        return Err(Error::TooManyComponents {
            requested: components,
            available: d,
        });
    }
    if components == 0 {
        return Err(Error::TooManyComponents {
            requested: 0,
            available: d,
        });
    }
    let pooled = vstack(pair.reference.features(), pair.current.features());
    let n = pooled.nrows();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }

    let means = DVector::from_iterator(d, (0..d).map(|j| pooled.column(j).sum() / n as f64));
    let mut centered = pooled;
    for j in 0..d {
        for i in 0..n {
            centered[(i, j)] -= means[j];
        }
    }
    let covariance = centered.transpose() * &centered / (n as f64 - 1.0);
    let eigen = SymmetricEigen::new(covariance);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_unstable_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let mut basis = DMatrix::zeros(components, d);
    let mut explained = Vec::with_capacity(components);
    for (row, &src) in order.iter().take(components).enumerate() {
        let mut v: Vec<f64> = eigen.eigenvectors.column(src).iter().copied().collect();
        let dominant = v
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                a.abs().total_cmp(&b.abs()).then(ib.cmp(ia))
            })
            .map(|(i, _)| i)
            .unwrap();
        if v[dominant] < 0.0 {
            for entry in v.iter_mut() {
                *entry = -*entry;
            }
        }
        for (col, &entry) in v.iter().enumerate() {
            basis[(row, col)] = entry;
        }
        explained.push(eigen.eigenvalues[src].max(0.0));
    }

    let projected = &centered * basis.transpose();
    let n_ref = pair.reference.n_rows();
    let coordinates = (0..n)
        .map(|i| ProjectedPoint {
            coords: projected.row(i).iter().copied().collect(),
            source: if i < n_ref {
                SourceTag::Reference
            } else {
                SourceTag::Current
            },
        })
        .collect();

    Ok(ProjectionResult {
        components: basis,
        explained_variance: explained,
        coordinates,
    })
}

/// ECDF step points of a series: sorted unique values t with
/// F(t) = #(x <= t) / n. F is nondecreasing and ends at 1.
pub fn ecdf(series: &[f64]) -> Result<Vec<(f64, f64)>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut sorted = series.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == v => last.1 = f,
            _ => points.push((v, f)),
        }
    }
    Ok(points)
}

//! Small row-selection helpers shared by the resampling code.

use nalgebra::DMatrix;

/// Copy the given rows (in order) into a new matrix.
pub(crate) fn take_rows(src: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let d = src.ncols();
    let mut data = Vec::with_capacity(rows.len() * d);
    for &r in rows {
        for c in 0..d {
            data.push(src[(r, c)]);
        }
    }
    DMatrix::from_row_slice(rows.len(), d, &data)
}

/// Stack two matrices with equal column counts, `a` on top.
pub(crate) fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.ncols(), b.ncols());
    let d = a.ncols();
    let mut data = Vec::with_capacity((a.nrows() + b.nrows()) * d);
    for i in 0..a.nrows() {
        for c in 0..d {
            data.push(a[(i, c)]);
        }
    }
    for i in 0..b.nrows() {
        for c in 0..d {
            data.push(b[(i, c)]);
        }
    }
    DMatrix::from_row_slice(a.nrows() + b.nrows(), d, &data)
}

//! Row access to a flattened layer matrix.
//!
//! Probes only ever touch the sampled rows of a layer, so they read through
//! [`RowSource`] and materialize exactly the rows (and columns) they need in
//! the computation precision.

use ndarray::{Array2, ArrayView2};

use crate::scalar::Real;

pub trait RowSource: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;

    /// Writes row `row` into `out` (length `n_cols`).
    fn copy_row<F: Real>(&self, row: usize, out: &mut [F]);

    /// Writes the selected columns of row `row` into `out` (length `cols.len()`).
    fn copy_row_columns<F: Real>(&self, row: usize, cols: &[usize], out: &mut [F]) {
        let mut full = vec![F::zero(); self.n_cols()];
        self.copy_row(row, &mut full);
        for (o, &c) in out.iter_mut().zip(cols) {
            *o = full[c];
        }
    }
}

impl<S: Real> RowSource for ArrayView2<'_, S> {
    fn n_rows(&self) -> usize {
        self.nrows()
    }

    fn n_cols(&self) -> usize {
        self.ncols()
    }

    fn copy_row<F: Real>(&self, row: usize, out: &mut [F]) {
        for (o, &v) in out.iter_mut().zip(self.row(row)) {
            *o = v.cast();
        }
    }

    fn copy_row_columns<F: Real>(&self, row: usize, cols: &[usize], out: &mut [F]) {
        let r = self.row(row);
        for (o, &c) in out.iter_mut().zip(cols) {
            *o = r[c].cast();
        }
    }
}

impl<S: Real> RowSource for Array2<S> {
    fn n_rows(&self) -> usize {
        self.nrows()
    }

    fn n_cols(&self) -> usize {
        self.ncols()
    }

    fn copy_row<F: Real>(&self, row: usize, out: &mut [F]) {
        self.view().copy_row(row, out)
    }

    fn copy_row_columns<F: Real>(&self, row: usize, cols: &[usize], out: &mut [F]) {
        self.view().copy_row_columns(row, cols, out)
    }
}

/// Materializes `rows × all columns`.
pub fn gather_rows<F: Real, R: RowSource + ?Sized>(src: &R, rows: &[usize]) -> Array2<F> {
    let mut out = Array2::zeros((rows.len(), src.n_cols()));
    for (mut dst, &r) in out.rows_mut().into_iter().zip(rows) {
        src.copy_row(r, dst.as_slice_mut().expect("fresh array is contiguous"));
    }
    out
}

/// Materializes `rows × cols`.
pub fn gather_submatrix<F: Real, R: RowSource + ?Sized>(src: &R, rows: &[usize], cols: &[usize]) -> Array2<F> {
    let mut out = Array2::zeros((rows.len(), cols.len()));
    for (mut dst, &r) in out.rows_mut().into_iter().zip(rows) {
        src.copy_row_columns(r, cols, dst.as_slice_mut().expect("fresh array is contiguous"));
    }
    out
}

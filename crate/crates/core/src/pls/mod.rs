//! Single-response partial least squares fitted with NIPALS.
//!
//! The centered (and by default unit-variance) predictors `X_c` and response
//! `y_c` are factored as
//!
//! ```text
//! X_c = T Pᵀ + E        y_c = T q + f
//! ```
//!
//! one component at a time. Each step takes the weight `w = Eᵀu / ‖Eᵀu‖`,
//! the score `t = E w`, the loadings `p = Eᵀt / tᵀt`, `q = fᵀt / tᵀt`, and
//! deflates `E ← E − t pᵀ`, `f ← f − t q`. The rotation `W* = W (PᵀW)⁻¹`
//! maps new centered rows straight to scores.

mod io;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::tensor::RowSource;

/// Default number of extracted components.
pub const DEFAULT_COMPONENTS: usize = 8;

/// Columns whose standard deviation falls below this are centered but not scaled.
const MIN_SCALE: f64 = 1e-12;

/// Rows projected per batch when reading from a [`RowSource`].
const PROJECT_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct PlsParams<F> {
    components: usize,
    scale: bool,
    tolerance: F,
    max_iter: usize,
    collapse_tolerance: F,
    keep_residuals: bool,
}

impl<F: Real> PlsParams<F> {
    pub fn new(components: usize) -> Self {
        Self {
            components,
            scale: true,
            tolerance: F::of(1e-10),
            max_iter: 500,
            collapse_tolerance: F::of(1e-10),
            keep_residuals: false,
        }
    }

    /// Scale predictors to unit standard deviation (default on).
    pub fn scale(mut self, scale: bool) -> Self {
        self.scale = scale;
        self
    }

    /// Inner-loop convergence threshold on `‖w_new − w_old‖`.
    pub fn tolerance(mut self, tolerance: F) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn max_iterations(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// Fitting stops once `‖Eᵀf‖` drops below this fraction of `‖X_cᵀy_c‖`.
    pub fn collapse_tolerance(mut self, tol: F) -> Self {
        self.collapse_tolerance = tol;
        self
    }

    /// Retain the final residuals `E` and `f` in the model.
    pub fn keep_residuals(mut self, keep: bool) -> Self {
        self.keep_residuals = keep;
        self
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn fit(&self, x: ArrayView2<F>, y: ArrayView1<F>) -> Result<PlsModel<F>> {
        self.fit_owned(x.to_owned(), y)
    }

    /// Fits on an owned matrix, reusing its buffer for the deflated residual.
    pub fn fit_owned(&self, mut x: Array2<F>, y: ArrayView1<F>) -> Result<PlsModel<F>> {
        let (n, m) = x.dim();
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 samples, got {n}")));
        }
        if m < 1 {
            return Err(Error::Parameter("need at least one predictor column".into()));
        }
        if y.len() != n {
            return Err(Error::Parameter(format!(
                "response has {} entries for {n} samples",
                y.len()
            )));
        }
        let k = self.components;
        if k < 1 || k > (n - 1).min(m) {
            return Err(Error::Parameter(format!(
                "components must lie in [1, {}], got {k}",
                (n - 1).min(m)
            )));
        }
        if y.iter().all(|&v| v == y[0]) {
            return Err(Error::DegenerateLabels);
        }

        let (x_mean, x_scale) = standardize(&mut x, self.scale);
        if x_scale.iter().all(|&s| s == F::one()) && column_spread_is_zero(&x) {
            return Err(Error::DegenerateData("all predictor columns are constant".into()));
        }
        let y_mean = y.sum() / F::of(n as f64);
        let mut f = y.mapv(|v| v - y_mean);
        let mut e = x;

        let mut weights = Vec::with_capacity(k);
        let mut scores = Vec::with_capacity(k);
        let mut loadings = Vec::with_capacity(k);
        let mut q = Vec::with_capacity(k);

        let mut cross = transpose_times(&e, f.view());
        let initial = norm(cross.view());
        if !(initial > F::zero()) {
            return Err(Error::DegenerateData(
                "predictors carry no covariance with the response".into(),
            ));
        }

        for _ in 0..k {
            if norm(cross.view()) <= self.collapse_tolerance * initial {
                break;
            }
            let (w, t) = self.inner_loop(&e, &f, cross.view())?;
            let tt = t.dot(&t);
            if !(tt > F::zero()) {
                break;
            }
            let p = transpose_times(&e, t.view()) / tt;
            let qi = f.dot(&t) / tt;

            // E ← E − t pᵀ ; f ← f − t q
            for (mut row, &ti) in e.rows_mut().into_iter().zip(t.iter()) {
                row.scaled_add(-ti, &p);
            }
            f.scaled_add(-qi, &t);
            cross = transpose_times(&e, f.view());

            weights.push(w);
            scores.push(t);
            loadings.push(p);
            q.push(qi);
        }

        let kc = weights.len();
        let weights = stack_columns(m, &weights);
        let loadings = stack_columns(m, &loadings);
        let scores = stack_columns(n, &scores);
        let q = Array1::from(q);

        // W* = W (PᵀW)⁻¹
        let ptw = loadings.t().dot(&weights);
        let inv = linalg::solve(ptw.view(), Array2::eye(kc).view())?;
        let rotation = weights.dot(&inv);

        let residuals = self.keep_residuals.then(|| Residuals { x: e, y: f });

        Ok(PlsModel {
            requested_components: k,
            weights,
            loadings,
            y_loadings: q,
            scores,
            x_mean,
            x_scale,
            y_mean,
            rotation,
            residuals,
        })
    }

    /// NIPALS inner loop started from `u = f`, whose first weight is `Eᵀf / ‖Eᵀf‖`.
    fn inner_loop(&self, e: &Array2<F>, f: &Array1<F>, cross_f: ArrayView1<F>) -> Result<(Array1<F>, Array1<F>)> {
        let mut u = f.clone();
        let mut etu = cross_f.to_owned();
        let mut w_old: Option<Array1<F>> = None;
        for _ in 0..self.max_iter.max(1) {
            let nrm = norm(etu.view());
            if !(nrm > F::zero()) {
                return Err(Error::DegenerateData("zero weight vector".into()));
            }
            let w = &etu / nrm;
            let t = e.dot(&w);
            let ft = f.dot(&t);
            let sign = if ft < F::zero() { -F::one() } else { F::one() };
            let u_next = f * sign;

            let converged = match &w_old {
                Some(prev) => norm((&w - prev).view()) < self.tolerance,
                None => false,
            };
            // The update is a pure function of u: an unchanged u reproduces w exactly.
            if converged || u_next == u {
                return Ok((w, t));
            }
            w_old = Some(w);
            u = u_next;
            etu = transpose_times(e, u.view());
        }
        let w = w_old.expect("at least one iteration");
        let t = e.dot(&w);
        Ok((w, t))
    }
}

/// Fits `k` components with default preprocessing.
pub fn fit_pls1<F: Real>(x: ArrayView2<F>, y: ArrayView1<F>, k: usize) -> Result<PlsModel<F>> {
    PlsParams::new(k).fit(x, y)
}

/// Final deflated residuals of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals<F> {
    pub x: Array2<F>,
    pub y: Array1<F>,
}

/// A fitted single-response PLS projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsModel<F> {
    requested_components: usize,
    weights: Array2<F>,
    loadings: Array2<F>,
    y_loadings: Array1<F>,
    scores: Array2<F>,
    x_mean: Array1<F>,
    x_scale: Array1<F>,
    y_mean: F,
    rotation: Array2<F>,
    residuals: Option<Residuals<F>>,
}

impl<F: Real> PlsModel<F> {
    pub fn requested_components(&self) -> usize {
        self.requested_components
    }

    /// Number of components actually extracted (≤ requested).
    pub fn converged_components(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.weights.nrows()
    }

    /// `W`, m×k, unit-norm columns.
    pub fn weights(&self) -> &Array2<F> {
        &self.weights
    }

    /// `P`, m×k.
    pub fn loadings(&self) -> &Array2<F> {
        &self.loadings
    }

    /// `q`, length k.
    pub fn y_loadings(&self) -> &Array1<F> {
        &self.y_loadings
    }

    /// `T`, n×k training scores.
    pub fn scores(&self) -> &Array2<F> {
        &self.scores
    }

    pub fn x_mean(&self) -> &Array1<F> {
        &self.x_mean
    }

    pub fn x_scale(&self) -> &Array1<F> {
        &self.x_scale
    }

    pub fn y_mean(&self) -> F {
        self.y_mean
    }

    /// `W* = W (PᵀW)⁻¹`, m×k.
    pub fn rotation(&self) -> &Array2<F> {
        &self.rotation
    }

    pub fn residuals(&self) -> Option<&Residuals<F>> {
        self.residuals.as_ref()
    }

    /// Centers and scales `x` with the training statistics.
    pub fn preprocess(&self, x: ArrayView2<F>) -> Result<Array2<F>> {
        self.check_columns(x.ncols())?;
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            self.standardize_row(row.as_slice_mut().expect("owned rows are contiguous"));
        }
        Ok(out)
    }

    /// Scores of new rows: `((x − mean) / scale) · W*`.
    pub fn project(&self, x: ArrayView2<F>) -> Result<Array2<F>> {
        self.check_columns(x.ncols())?;
        let rows: Vec<usize> = (0..x.nrows()).collect();
        Ok(self.project_rows(&x, &rows))
    }

    /// Projects selected rows of a layer, reading them in small batches.
    pub fn project_source<R: RowSource + ?Sized>(&self, src: &R, rows: &[usize]) -> Result<Array2<F>> {
        self.check_columns(src.n_cols())?;
        Ok(self.project_rows(src, rows))
    }

    /// Projects the given columns of selected rows; `cols` defines the model's features.
    pub fn project_source_columns<R: RowSource + ?Sized>(
        &self,
        src: &R,
        rows: &[usize],
        cols: &[usize],
    ) -> Result<Array2<F>> {
        self.check_columns(cols.len())?;
        let kc = self.converged_components();
        let mut out = Array2::zeros((rows.len(), kc));
        let mut buf = vec![F::zero(); cols.len()];
        for (i, &r) in rows.iter().enumerate() {
            src.copy_row_columns(r, cols, &mut buf);
            self.project_row_into(&mut buf, out.row_mut(i).as_slice_mut().expect("contiguous"));
        }
        Ok(out)
    }

    /// Fitted response `ŷ = project(x) · q + ȳ`.
    pub fn predict_regression(&self, x: ArrayView2<F>) -> Result<Array1<F>> {
        let z = self.project(x)?;
        Ok(z.dot(&self.y_loadings) + self.y_mean)
    }

    fn project_rows<R: RowSource + ?Sized>(&self, src: &R, rows: &[usize]) -> Array2<F> {
        let kc = self.converged_components();
        let m = self.n_features();
        let mut out = Array2::zeros((rows.len(), kc));
        let mut buf = vec![F::zero(); m];
        for (chunk_idx, chunk) in rows.chunks(PROJECT_CHUNK).enumerate() {
            for (i, &r) in chunk.iter().enumerate() {
                src.copy_row(r, &mut buf);
                let row = chunk_idx * PROJECT_CHUNK + i;
                self.project_row_into(&mut buf, out.row_mut(row).as_slice_mut().expect("contiguous"));
            }
        }
        out
    }

    fn project_row_into(&self, row: &mut [F], out: &mut [F]) {
        self.standardize_row(row);
        out.iter_mut().for_each(|v| *v = F::zero());
        for (&xv, wrow) in row.iter().zip(self.rotation.rows()) {
            if xv == F::zero() {
                continue;
            }
            for (o, &wv) in out.iter_mut().zip(wrow.iter()) {
                *o += xv * wv;
            }
        }
    }

    fn standardize_row(&self, row: &mut [F]) {
        for ((v, &mu), &sd) in row.iter_mut().zip(self.x_mean.iter()).zip(self.x_scale.iter()) {
            *v = (*v - mu) / sd;
        }
    }

    fn check_columns(&self, m: usize) -> Result<()> {
        if m != self.n_features() {
            return Err(Error::Parameter(format!(
                "model expects {} columns, got {m}",
                self.n_features()
            )));
        }
        Ok(())
    }
}

/// Centers columns in place and optionally scales them to unit sample std.
fn standardize<F: Real>(x: &mut Array2<F>, scale: bool) -> (Array1<F>, Array1<F>) {
    let n = x.nrows();
    let m = x.ncols();
    let mut mean = Array1::<F>::zeros(m);
    for row in x.rows() {
        mean += &row;
    }
    mean /= F::of(n as f64);
    for mut row in x.rows_mut() {
        row -= &mean;
    }
    let mut sd = Array1::<F>::ones(m);
    if scale {
        let mut ss = Array1::<F>::zeros(m);
        for row in x.rows() {
            ss.zip_mut_with(&row, |acc, &v| *acc += v * v);
        }
        let denom = F::of((n - 1) as f64);
        let floor = F::of(MIN_SCALE);
        sd = ss.mapv(|s| {
            let v = (s / denom).sqrt();
            if v < floor {
                F::one()
            } else {
                v
            }
        });
        for mut row in x.rows_mut() {
            row /= &sd;
        }
    }
    (mean, sd)
}

fn column_spread_is_zero<F: Real>(x: &Array2<F>) -> bool {
    let floor = F::of(MIN_SCALE);
    let n = F::of((x.nrows() - 1) as f64);
    x.axis_iter(Axis(1))
        .all(|col| (col.dot(&col) / n).sqrt() < floor)
}

/// `Eᵀv`, accumulated row by row so that access stays contiguous.
fn transpose_times<F: Real>(e: &Array2<F>, v: ArrayView1<F>) -> Array1<F> {
    let mut out = Array1::zeros(e.ncols());
    for (row, &vi) in e.rows().into_iter().zip(v.iter()) {
        if vi != F::zero() {
            out.scaled_add(vi, &row);
        }
    }
    out
}

fn norm<F: Real>(v: ArrayView1<F>) -> F {
    v.dot(&v).sqrt()
}

fn stack_columns<F: Real>(rows: usize, cols: &[Array1<F>]) -> Array2<F> {
    let mut out = Array2::zeros((rows, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        out.slice_mut(s![.., j]).assign(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn perfect_single_predictor() {
        let y = array![1.0f64, 0.0, 1.0, 1.0, 0.0];
        let yc = &y - y.mean().unwrap();
        let x = yc.clone().insert_axis(Axis(1));
        let model = PlsParams::new(1)
            .scale(false)
            .keep_residuals(true)
            .fit(x.view(), y.view())
            .unwrap();
        assert_eq!(model.weights()[[0, 0]], 1.0);
        let t = model.scores().column(0).to_owned();
        for (a, b) in t.iter().zip(yc.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(model.residuals().unwrap().y.iter().all(|v| v.abs() < 1e-15));
        let yhat = model.predict_regression(x.view()).unwrap();
        for (a, b) in yhat.iter().zip(y.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn first_weight_is_normalized_cross_product() {
        // X_c = X, y_c = (½, −½, ½, −½), so X_cᵀy_c = (1, 2).
        let x = array![[1.0f64, 0.0], [-1.0, 0.0], [0.0, 2.0], [0.0, -2.0]];
        let y = array![1.0, 0.0, 1.0, 0.0];
        let model = PlsParams::new(1).scale(false).fit(x.view(), y.view()).unwrap();
        let w = model.weights().column(0);
        let norm = 5.0f64.sqrt();
        assert!((w[0] - 1.0 / norm).abs() < 1e-15 && (w[1] - 2.0 / norm).abs() < 1e-15);
    }

    #[test]
    fn project_of_mean_row_is_zero() {
        let x = array![[1.0f64, 2.0, 0.5], [2.0, 0.0, 1.5], [0.0, 1.0, 3.0], [3.0, 5.0, 1.0]];
        let y = array![1.0, 0.0, 0.0, 1.0];
        let model = fit_pls1(x.view(), y.view(), 2).unwrap();
        let mean_row = model.x_mean().clone().insert_axis(Axis(0));
        let z = model.project(mean_row.view()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-14));
        let yhat = model.predict_regression(mean_row.view()).unwrap();
        assert!((yhat[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn parameter_and_label_errors() {
        let x = array![[1.0, 2.0], [2.0, 1.0], [0.0, 0.5]];
        let y = array![1.0, 0.0, 1.0];
        assert!(matches!(fit_pls1(x.view(), y.view(), 3), Err(Error::Parameter(_))));
        assert!(matches!(fit_pls1(x.view(), y.view(), 0), Err(Error::Parameter(_))));
        let flat = array![1.0, 1.0, 1.0];
        assert!(matches!(fit_pls1(x.view(), flat.view(), 1), Err(Error::DegenerateLabels)));
        let constant = Array2::from_elem((3, 2), 4.0);
        assert!(matches!(
            fit_pls1(constant.view(), y.view(), 1),
            Err(Error::DegenerateData(_))
        ));
        let model = fit_pls1(x.view(), y.view(), 1).unwrap();
        assert!(model.project(Array2::zeros((1, 3)).view()).is_err());
    }

    #[test]
    fn stops_early_on_rank_deficient_input() {
        // Two latent directions copied into four columns.
        let a = array![1.0, -0.5, 2.0, 0.3, -1.2, 0.8];
        let b = array![0.2, 1.0, -0.7, 1.5, 0.1, -0.4];
        let mut x = Array2::zeros((6, 4));
        x.column_mut(0).assign(&a);
        x.column_mut(1).assign(&b);
        x.column_mut(2).assign(&(&a * 2.0 + &b));
        x.column_mut(3).assign(&(&b - &a));
        let y = array![1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let model = PlsParams::new(4).scale(false).fit(x.view(), y.view()).unwrap();
        assert_eq!(model.requested_components(), 4);
        assert_eq!(model.converged_components(), 2);
    }

    #[test]
    fn works_in_single_precision() {
        let x = array![[1.0f32, 2.0, 0.5], [2.0, 0.0, 1.5], [0.0, 1.0, 3.0], [3.0, 5.0, 1.0], [1.0, 1.0, 1.0]];
        let y = array![1.0f32, 0.0, 0.0, 1.0, 1.0];
        let model = fit_pls1(x.view(), y.view(), 2).unwrap();
        let z = model.project(x.view()).unwrap();
        for (a, b) in z.iter().zip(model.scores().iter()) {
            assert!((a - b).abs() < 1e-4);
        }
    }
}

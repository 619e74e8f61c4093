//! Two-class quadratic discriminant analysis.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Default relative covariance regularization.
pub const DEFAULT_REG: f64 = 1e-6;

/// Absolute floor added to the covariance diagonal.
const RIDGE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassGaussian<F> {
    pub mean: Array1<F>,
    /// Regularized covariance.
    pub covariance: Array2<F>,
    /// Lower Cholesky factor of `covariance`.
    pub cholesky: Array2<F>,
    pub log_det: F,
    pub log_prior: F,
}

impl<F: Real> ClassGaussian<F> {
    fn fit(rows: &[ArrayView1<F>], n_total: usize, reg: F) -> Result<Self> {
        let d = rows[0].len();
        let nc = rows.len();
        let mut mean = Array1::<F>::zeros(d);
        for r in rows {
            mean += r;
        }
        mean /= F::of(nc as f64);
        let mut cov = Array2::<F>::zeros((d, d));
        for r in rows {
            let diff = r - &mean;
            for i in 0..d {
                for j in 0..=i {
                    cov[[i, j]] += diff[i] * diff[j];
                }
            }
        }
        let denom = F::of(nc.saturating_sub(1).max(1) as f64);
        for i in 0..d {
            for j in 0..=i {
                let v = cov[[i, j]] / denom;
                cov[[i, j]] = v;
                cov[[j, i]] = v;
            }
        }
        let trace: F = (0..d).map(|i| cov[[i, i]]).sum();
        let lambda = reg * trace / F::of(d as f64) + F::of(RIDGE_FLOOR);
        for i in 0..d {
            cov[[i, i]] += lambda;
        }
        let chol = linalg::cholesky(cov.view())?;
        let log_det = F::of(2.0) * (0..d).map(|i| chol[[i, i]].ln()).sum::<F>();
        Ok(Self {
            mean,
            covariance: cov,
            cholesky: chol,
            log_det,
            log_prior: (F::of(nc as f64) / F::of(n_total as f64)).ln(),
        })
    }

    /// `log π − ½ log|Σ| − ½ (z−μ)ᵀ Σ⁻¹ (z−μ)`.
    pub fn discriminant(&self, z: ArrayView1<F>) -> F {
        let diff = &z - &self.mean;
        let sol = linalg::forward_substitute(self.cholesky.view(), diff.view());
        let half = F::of(0.5);
        self.log_prior - half * self.log_det - half * sol.dot(&sol)
    }
}

/// Gaussian class-conditional model for labels {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct QdaModel<F> {
    pub classes: [ClassGaussian<F>; 2],
}

pub fn fit_qda<F: Real>(z: ArrayView2<F>, y: &[u8], reg: F) -> Result<QdaModel<F>> {
    let (n, d) = z.dim();
    if y.len() != n {
        return Err(Error::Parameter(format!("{} labels for {n} rows", y.len())));
    }
    if d < 1 {
        return Err(Error::Parameter("QDA needs at least one input dimension".into()));
    }
    if reg < F::zero() {
        return Err(Error::Parameter(format!("regularization must be >= 0, got {reg}")));
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::Parameter(format!("non-binary label {bad}")));
    }
    let neg: Vec<_> = z.rows().into_iter().zip(y).filter(|(_, &l)| l == 0).map(|(r, _)| r).collect();
    let pos: Vec<_> = z.rows().into_iter().zip(y).filter(|(_, &l)| l == 1).map(|(r, _)| r).collect();
    if neg.is_empty() || pos.is_empty() {
        return Err(Error::DegenerateLabels);
    }
    Ok(QdaModel {
        classes: [ClassGaussian::fit(&neg, n, reg)?, ClassGaussian::fit(&pos, n, reg)?],
    })
}

impl<F: Real> QdaModel<F> {
    pub fn dims(&self) -> usize {
        self.classes[0].mean.len()
    }

    /// `g₁(z) − g₀(z)`; positive means class 1.
    pub fn decision(&self, z: ArrayView1<F>) -> F {
        self.classes[1].discriminant(z) - self.classes[0].discriminant(z)
    }

    pub fn predict(&self, z: ArrayView2<F>) -> Result<Vec<u8>> {
        if z.ncols() != self.dims() {
            return Err(Error::Parameter(format!(
                "model has {} dims, input has {}",
                self.dims(),
                z.ncols()
            )));
        }
        // Exact ties go to class 0.
        Ok(z.rows()
            .into_iter()
            .map(|r| u8::from(self.decision(r) > F::zero()))
            .collect())
    }
}

pub fn accuracy(pred: &[u8], truth: &[u8]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Parameter(format!(
            "length mismatch: {} predictions, {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Parameter("accuracy of an empty set".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

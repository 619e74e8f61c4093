//! Small dense solvers for the k×k and d×d systems that appear in PLS and QDA.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves `A X = B` by LU with partial pivoting.
pub fn solve<F: Real>(a: ArrayView2<F>, b: ArrayView2<F>) -> Result<Array2<F>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "solve needs a square matrix");
    assert_eq!(n, b.nrows(), "right-hand side row mismatch");
    let mut lu = a.to_owned();
    let mut x = b.to_owned();
    let scale = lu.iter().fold(F::zero(), |m, v| m.max(v.abs()));
    let tiny = scale * F::epsilon() * F::of(n.max(1) as f64);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                lu[[i, col]]
                    .abs()
                    .partial_cmp(&lu[[j, col]].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if !(lu[[pivot, col]].abs() > tiny) {
            return Err(Error::Conditioning(format!(
                "singular {n}x{n} system (pivot {} at column {col})",
                lu[[pivot, col]]
            )));
        }
        if pivot != col {
            for k in 0..n {
                lu.swap([pivot, k], [col, k]);
            }
            for k in 0..x.ncols() {
                x.swap([pivot, k], [col, k]);
            }
        }
        let d = lu[[col, col]];
        for row in col + 1..n {
            let factor = lu[[row, col]] / d;
            if factor == F::zero() {
                continue;
            }
            for k in col..n {
                let v = lu[[col, k]];
                lu[[row, k]] -= factor * v;
            }
            for k in 0..x.ncols() {
                let v = x[[col, k]];
                x[[row, k]] -= factor * v;
            }
        }
    }
    for col in (0..n).rev() {
        let d = lu[[col, col]];
        for k in 0..x.ncols() {
            let mut acc = x[[col, k]];
            for j in col + 1..n {
                acc -= lu[[col, j]] * x[[j, k]];
            }
            x[[col, k]] = acc / d;
        }
    }
    Ok(x)
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<F: Real>(a: ArrayView2<F>) -> Result<Array2<F>> {
    let n = a.nrows();
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a[[i, j]];
            for k in 0..j {
                acc -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if !(acc > F::zero()) {
                    return Err(Error::Conditioning(format!(
                        "matrix is not positive definite (pivot {acc} at {i})"
                    )));
                }
                l[[i, i]] = acc.sqrt();
            } else {
                l[[i, j]] = acc / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `L z = b` for lower-triangular `L`.
pub fn forward_substitute<F: Real>(l: ArrayView2<F>, b: ArrayView1<F>) -> Array1<F> {
    let n = l.nrows();
    let mut z = Array1::zeros(n);
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[[i, k]] * z[k];
        }
        z[i] = acc / l[[i, i]];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_with_pivoting() {
        let a = array![[0.0, 2.0], [1.0, 1.0]];
        let b = array![[4.0], [3.0]];
        let x = solve(a.view(), b.view()).unwrap();
        assert!((x[[0, 0]] - 1.0f64).abs() < 1e-14);
        assert!((x[[1, 0]] - 2.0f64).abs() < 1e-14);
    }

    #[test]
    fn singular_system_is_conditioning_error() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        let err = solve(a.view(), Array2::<f64>::eye(2).view()).unwrap_err();
        assert!(matches!(err, Error::Conditioning(_)));
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = array![[4.0f64, 2.0, 0.4], [2.0, 3.0, 0.5], [0.4, 0.5, 1.0]];
        let l = cholesky(a.view()).unwrap();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12f64);
        }
        let z = forward_substitute(l.view(), array![1.0, 2.0, 3.0].view());
        let lz = l.dot(&z);
        assert!((lz[2] - 3.0f64).abs() < 1e-12);
        assert!(cholesky(array![[1.0, 2.0], [2.0, 1.0]].view()).is_err());
    }
}

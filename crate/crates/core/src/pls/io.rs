//! JSON sidecar plus one NPY file per fitted matrix.

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Ix1, Ix2};
use serde::{Deserialize, Serialize};

use super::PlsModel;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::npy::{read_npy, write_array_nd};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    n_samples: usize,
    n_features: usize,
    requested_components: usize,
    converged_components: usize,
    y_mean: f64,
    dtype: String,
    files: Files,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Files {
    weights: String,
    loadings: String,
    y_loadings: String,
    scores: String,
    x_mean: String,
    x_scale: String,
    rotation: String,
}

impl<F: Real> PlsModel<F> {
    /// Writes `<stem>.json` and `<stem>.<matrix>.npy` files into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
        let dir = dir.as_ref();
        let name = |part: &str| format!("{stem}.{part}.npy");
        let files = Files {
            weights: name("W"),
            loadings: name("P"),
            y_loadings: name("q"),
            scores: name("T"),
            x_mean: name("x_mean"),
            x_scale: name("x_scale"),
            rotation: name("W_star"),
        };
        write_array_nd(dir.join(&files.weights), &self.weights.clone().into_dyn())?;
        write_array_nd(dir.join(&files.loadings), &self.loadings.clone().into_dyn())?;
        write_array_nd(dir.join(&files.y_loadings), &self.y_loadings.clone().into_dyn())?;
        write_array_nd(dir.join(&files.scores), &self.scores.clone().into_dyn())?;
        write_array_nd(dir.join(&files.x_mean), &self.x_mean.clone().into_dyn())?;
        write_array_nd(dir.join(&files.x_scale), &self.x_scale.clone().into_dyn())?;
        write_array_nd(dir.join(&files.rotation), &self.rotation.clone().into_dyn())?;

        let sidecar = Sidecar {
            n_samples: self.scores.nrows(),
            n_features: self.n_features(),
            requested_components: self.requested_components,
            converged_components: self.converged_components(),
            y_mean: self.y_mean.as_f64(),
            dtype: F::DESCR.to_string(),
            files,
        };
        let path = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&sidecar)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(sidecar_path: impl AsRef<Path>) -> Result<Self> {
        let path = sidecar_path.as_ref();
        let dir = path.parent().unwrap_or(Path::new("."));
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let sc: Sidecar = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;

        let matrix = |file: &str, rows: usize, cols: usize| -> Result<Array2<F>> {
            let a = read_npy(dir.join(file))?.into_real::<F>();
            let a = a
                .into_dimensionality::<Ix2>()
                .map_err(|e| Error::Format(format!("{file}: {e}")))?;
            if a.dim() != (rows, cols) {
                return Err(Error::Format(format!(
                    "{file}: shape {:?}, expected ({rows}, {cols})",
                    a.dim()
                )));
            }
            Ok(a)
        };
        let vector = |file: &str, len: usize| -> Result<Array1<F>> {
            let a = read_npy(dir.join(file))?.into_real::<F>();
            let a = a
                .into_dimensionality::<Ix1>()
                .map_err(|e| Error::Format(format!("{file}: {e}")))?;
            if a.len() != len {
                return Err(Error::Format(format!("{file}: length {}, expected {len}", a.len())));
            }
            Ok(a)
        };
        let (n, m, k) = (sc.n_samples, sc.n_features, sc.converged_components);
        Ok(PlsModel {
            requested_components: sc.requested_components,
            weights: matrix(&sc.files.weights, m, k)?,
            loadings: matrix(&sc.files.loadings, m, k)?,
            y_loadings: vector(&sc.files.y_loadings, k)?,
            scores: matrix(&sc.files.scores, n, k)?,
            x_mean: vector(&sc.files.x_mean, m)?,
            x_scale: vector(&sc.files.x_scale, m)?,
            y_mean: F::of(sc.y_mean),
            rotation: matrix(&sc.files.rotation, m, k)?,
            residuals: None,
        })
    }
}

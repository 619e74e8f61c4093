use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensor::layout::{read_layer, AnyTensor};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub index: usize,
    pub name: String,
    pub file: PathBuf,
    pub shape: Vec<usize>,
}

/// Index of the per-layer array files of one activation export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub n_samples: usize,
    pub layers: Vec<LayerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<PathBuf>,
    /// Directory that relative paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// SHA-256 of the manifest bytes as read; not serialized.
    #[serde(skip)]
    pub digest: String,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Manifest = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.digest = hex::encode(Sha256::digest(&bytes));
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        for pair in self.layers.windows(2) {
            if pair[0].index >= pair[1].index {
                return Err(Error::Format(format!(
                    "layers must be sorted by strictly increasing index ({} then {})",
                    pair[0].index, pair[1].index
                )));
            }
        }
        for layer in &self.layers {
            let ok_rank = layer.shape.len() == 2 || layer.shape.len() == 4;
            if !ok_rank || layer.shape.contains(&0) {
                return Err(Error::Format(format!(
                    "layer `{}` has invalid shape {:?}",
                    layer.name, layer.shape
                )));
            }
            if layer.shape[0] != self.n_samples {
                return Err(Error::Format(format!(
                    "layer `{}` has {} samples, manifest declares {}",
                    layer.name, layer.shape[0], self.n_samples
                )));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        if rel.is_absolute() {
            rel.to_path_buf()
        } else {
            self.base_dir.join(rel)
        }
    }

    pub fn images_path(&self) -> Option<PathBuf> {
        self.images.as_deref().map(|p| self.resolve(p))
    }

    /// Reads one layer and checks it against the declared shape.
    pub fn read_layer(&self, layer: &LayerEntry) -> Result<AnyTensor> {
        let tensor = read_layer(self.resolve(&layer.file), &layer.name, layer.index)?;
        if tensor.shape() != layer.shape.as_slice() {
            return Err(Error::Format(format!(
                "layer `{}`: file shape {:?} differs from manifest shape {:?}",
                layer.name,
                tensor.shape(),
                layer.shape
            )));
        }
        Ok(tensor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let src = r#"{ "n_samples": 4, "layers": [
            { "index": 0, "name": "conv1", "file": "conv1.npy", "shape": [4, 2, 2, 3] },
            { "index": 1, "name": "fc", "file": "fc.npy", "shape": [4, 10] } ] }"#;
        let m: Manifest = serde_json::from_str(src).unwrap();
        m.validate().unwrap();
        assert!(m.images.is_none());
    }

    #[test]
    fn rejects_unsorted_and_mismatched() {
        let unsorted = r#"{ "n_samples": 4, "layers": [
            { "index": 1, "name": "a", "file": "a.npy", "shape": [4, 2] },
            { "index": 0, "name": "b", "file": "b.npy", "shape": [4, 2] } ] }"#;
        let m: Manifest = serde_json::from_str(unsorted).unwrap();
        assert!(m.validate().is_err());
        let mismatch = r#"{ "n_samples": 5, "layers": [
            { "index": 0, "name": "a", "file": "a.npy", "shape": [4, 2] } ] }"#;
        let m: Manifest = serde_json::from_str(mismatch).unwrap();
        assert!(m.validate().is_err());
    }
}

//! Planted-attribute fixtures.
//!
//! Every activation is an independent standard normal except one planted
//! neuron, which takes `snr·(2·label − 1) + ε`. The planted neuron's
//! one-dimensional Bayes accuracy is therefore `Φ(snr)`.

use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayD, IxDyn};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{seeded_rng, write_labels, ActivationTensor, AttributeLabels, LayerEntry, Manifest, NeuronIndexMap, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthLayer {
    pub name: String,
    /// Per-sample shape: `[H, W, C]` or `[D]`.
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedUnit {
    /// Position of the layer in `layers`.
    pub layer: usize,
    /// `[h, w, c]` for spatial layers, `[d]` for flat ones.
    pub coords: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub layers: Vec<SynthLayer>,
    pub planted: PlantedUnit,
    pub snr: f64,
    #[serde(default = "default_attribute")]
    pub attribute: String,
    /// Side length of optional grayscale images; positives carry a bright square.
    #[serde(default)]
    pub image_size: Option<usize>,
}

fn default_attribute() -> String {
    "Planted".to_string()
}

/// Name of the extra balanced attribute that is independent of every activation.
pub const RANDOM_ATTRIBUTE: &str = "Random";

impl SynthSpec {
    /// Three layers, one of them `7×7×64`, with the signal in layer 1.
    pub fn standard(n_samples: usize, snr: f64) -> Self {
        Self {
            n_samples,
            layers: vec![
                SynthLayer { name: "conv_a".into(), shape: vec![8, 8, 16] },
                SynthLayer { name: "conv_b".into(), shape: vec![4, 4, 32] },
                SynthLayer { name: "conv_c".into(), shape: vec![7, 7, 64] },
            ],
            planted: PlantedUnit { layer: 1, coords: vec![2, 1, 5] },
            snr,
            attribute: default_attribute(),
            image_size: None,
        }
    }

    fn layer_map(layer: &SynthLayer) -> Result<NeuronIndexMap> {
        match *layer.shape.as_slice() {
            [h, w, c] if h > 0 && w > 0 && c > 0 => Ok(NeuronIndexMap::spatial(h, w, c)),
            [d] if d > 0 => Ok(NeuronIndexMap::flat(d)),
            ref other => Err(Error::Parameter(format!(
                "layer `{}` has invalid shape {other:?}",
                layer.name
            ))),
        }
    }

    /// Flat column index of the planted neuron inside its layer.
    pub fn planted_neuron(&self) -> Result<usize> {
        let layer = self.layers.get(self.planted.layer).ok_or(Error::Index {
            index: self.planted.layer,
            bound: self.layers.len(),
        })?;
        let map = Self::layer_map(layer)?;
        match (map.is_spatial(), self.planted.coords.as_slice()) {
            (true, &[h, w, c]) => map.index(h, w, c),
            (false, &[d]) if d < map.len() => Ok(d),
            (false, &[d]) => Err(Error::Index { index: d, bound: map.len() }),
            _ => Err(Error::Parameter(format!(
                "planted coordinates {:?} do not match layer shape {:?}",
                self.planted.coords, layer.shape
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::Parameter("need at least 2 samples".into()));
        }
        if !self.snr.is_finite() {
            return Err(Error::Parameter("snr must be finite".into()));
        }
        if self.attribute == RANDOM_ATTRIBUTE {
            return Err(Error::Parameter(format!("attribute name `{RANDOM_ATTRIBUTE}` is reserved")));
        }
        for layer in &self.layers {
            Self::layer_map(layer)?;
        }
        self.planted_neuron().map(|_| ())
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub manifest: PathBuf,
    pub labels: PathBuf,
    pub images: Option<PathBuf>,
    pub planted_neuron: usize,
}

fn balanced_column(n: usize, rng: &mut SeededRng) -> Vec<u8> {
    let mut col: Vec<u8> = (0..n).map(|i| u8::from(i < n / 2)).collect();
    col.shuffle(rng);
    col
}

/// Writes `manifest.json`, `labels.csv`, one `.npy` per layer and optionally `images.npy`.
pub fn synth_generate(spec: &SynthSpec, seed: u64, out_dir: impl AsRef<Path>) -> Result<SynthOutput> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let n = spec.n_samples;
    let planted_neuron = spec.planted_neuron()?;
    let mut rng = seeded_rng(seed);

    let target = balanced_column(n, &mut rng);
    let random = balanced_column(n, &mut rng);
    let sample_ids: Vec<String> = (0..n).map(|i| format!("s{i:06}")).collect();
    let mut values = Array2::zeros((n, 2));
    for i in 0..n {
        values[[i, 0]] = target[i];
        values[[i, 1]] = random[i];
    }
    let labels = AttributeLabels::new(
        sample_ids,
        vec![spec.attribute.clone(), RANDOM_ATTRIBUTE.to_string()],
        values,
    )?;
    let labels_path = out_dir.join("labels.csv");
    write_labels(&labels_path, &labels)?;

    let mut entries = Vec::with_capacity(spec.layers.len());
    for (depth, layer) in spec.layers.iter().enumerate() {
        let m: usize = layer.shape.iter().product();
        let mut data: Vec<f32> = Vec::with_capacity(n * m);
        for _ in 0..n * m {
            data.push(rng.sample::<f32, _>(StandardNormal));
        }
        if depth == spec.planted.layer {
            let s = spec.snr as f32;
            for (i, &label) in target.iter().enumerate() {
                let cell = &mut data[i * m + planted_neuron];
                *cell += s * (2.0 * f32::from(label) - 1.0);
            }
        }
        let mut shape = vec![n];
        shape.extend(&layer.shape);
        let file = format!("layer{depth:02}_{}.npy", layer.name);
        ActivationTensor::from_shape_vec(layer.name.clone(), depth, &shape, data)?.write(out_dir.join(&file))?;
        entries.push(LayerEntry {
            index: depth,
            name: layer.name.clone(),
            file: PathBuf::from(file),
            shape,
        });
    }

    let images = match spec.image_size {
        Some(size) if size > 0 => {
            let mut img = ArrayD::<f32>::zeros(IxDyn(&[n, size, size]));
            let (lo, hi) = (size / 4, size - size / 4);
            for i in 0..n {
                for r in 0..size {
                    for c in 0..size {
                        let noise: f32 = rng.sample(StandardNormal);
                        let square = target[i] == 1 && (lo..hi).contains(&r) && (lo..hi).contains(&c);
                        let base = if square { 200.0 } else { 80.0 };
                        img[[i, r, c]] = (base + 20.0 * noise).clamp(0.0, 255.0);
                    }
                }
            }
            let path = out_dir.join("images.npy");
            crate::tensor::npy::write_array_nd(&path, &img)?;
            Some(path)
        }
        _ => None,
    };

    let manifest = Manifest {
        n_samples: n,
        layers: entries,
        images: images.as_ref().map(|_| PathBuf::from("images.npy")),
        base_dir: out_dir.to_path_buf(),
        digest: String::new(),
    };
    let manifest_path = out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;

    Ok(SynthOutput {
        manifest: manifest_path,
        labels: labels_path,
        images,
        planted_neuron,
    })
}

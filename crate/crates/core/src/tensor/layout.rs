use std::path::Path;

use ndarray::{ArrayD, ArrayView2, IxDyn};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::npy::{self, NpyArray};

/// One layer's outputs for a batch, shaped `(N, H, W, C)` or `(N, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTensor<S> {
    pub layer_id: String,
    pub depth_index: usize,
    data: ArrayD<S>,
}

impl<S: Real> ActivationTensor<S> {
    pub fn new(layer_id: impl Into<String>, depth_index: usize, data: ArrayD<S>) -> Result<Self> {
        let shape = data.shape();
        if shape.len() != 2 && shape.len() != 4 {
            return Err(Error::Format(format!(
                "activation tensors must be 2-D or 4-D, got shape {shape:?}"
            )));
        }
        if shape.contains(&0) {
            return Err(Error::Format(format!("zero-sized dimension in shape {shape:?}")));
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(Self {
            layer_id: layer_id.into(),
            depth_index,
            data,
        })
    }

    pub fn from_shape_vec(
        layer_id: impl Into<String>,
        depth_index: usize,
        shape: &[usize],
        values: Vec<S>,
    ) -> Result<Self> {
        let data = ArrayD::from_shape_vec(IxDyn(shape), values)
            .map_err(|e| Error::Format(format!("shape {shape:?}: {e}")))?;
        Self::new(layer_id, depth_index, data)
    }

    pub fn shape(&self) -> &[usize] {
        self.data.shape()
    }

    pub fn n_samples(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn data(&self) -> &ArrayD<S> {
        &self.data
    }

    pub fn index_map(&self) -> NeuronIndexMap {
        match *self.shape() {
            [_, h, w, c] => NeuronIndexMap::spatial(h, w, c),
            [_, d] => NeuronIndexMap::flat(d),
            _ => unreachable!("shape validated at construction"),
        }
    }

    /// Views the tensor as an `N × m` matrix without copying.
    ///
    /// Column `j` holds neuron `(h, w, c)` with `j = (h·W + w)·C + c`.
    pub fn flatten(&self) -> (ArrayView2<'_, S>, NeuronIndexMap) {
        let map = self.index_map();
        let view = self
            .data
            .view()
            .into_shape_with_order((self.n_samples(), map.len()))
            .expect("standard layout is always reshapeable");
        (view, map)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let slice = self.data.as_slice().expect("standard layout");
        npy::write_npy(path, self.shape(), slice)
    }
}

/// A tensor read from disk, in its stored precision.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTensor {
    F32(ActivationTensor<f32>),
    F64(ActivationTensor<f64>),
}

impl AnyTensor {
    pub fn shape(&self) -> &[usize] {
        match self {
            AnyTensor::F32(t) => t.shape(),
            AnyTensor::F64(t) => t.shape(),
        }
    }

    pub fn layer_id(&self) -> &str {
        match self {
            AnyTensor::F32(t) => &t.layer_id,
            AnyTensor::F64(t) => &t.layer_id,
        }
    }

    pub fn index_map(&self) -> NeuronIndexMap {
        match self {
            AnyTensor::F32(t) => t.index_map(),
            AnyTensor::F64(t) => t.index_map(),
        }
    }
}

/// Reads an activation tensor. The layer id defaults to the file stem.
pub fn read_array(path: impl AsRef<Path>) -> Result<AnyTensor> {
    let path = path.as_ref();
    let layer_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_layer(path, layer_id, 0)
}

pub fn read_layer(path: impl AsRef<Path>, layer_id: impl Into<String>, depth_index: usize) -> Result<AnyTensor> {
    let layer_id = layer_id.into();
    Ok(match npy::read_npy(path)? {
        NpyArray::F32(a) => AnyTensor::F32(ActivationTensor::new(layer_id, depth_index, a)?),
        NpyArray::F64(a) => AnyTensor::F64(ActivationTensor::new(layer_id, depth_index, a)?),
    })
}

pub fn write_array<S: Real>(path: impl AsRef<Path>, tensor: &ActivationTensor<S>) -> Result<()> {
    tensor.write(path)
}

/// Maps flat neuron indices to `(h, w, c)` coordinates, channels fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronIndexMap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    spatial: bool,
}

impl NeuronIndexMap {
    pub fn spatial(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            spatial: true,
        }
    }

    /// Identity map of a fully-connected layer with `d` outputs.
    pub fn flat(d: usize) -> Self {
        Self {
            height: 1,
            width: 1,
            channels: d,
            spatial: false,
        }
    }

    pub fn is_spatial(&self) -> bool {
        self.spatial
    }

    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, h: usize, w: usize, c: usize) -> Result<usize> {
        if h >= self.height {
            return Err(Error::Index { index: h, bound: self.height });
        }
        if w >= self.width {
            return Err(Error::Index { index: w, bound: self.width });
        }
        if c >= self.channels {
            return Err(Error::Index { index: c, bound: self.channels });
        }
        Ok((h * self.width + w) * self.channels + c)
    }

    pub fn coords(&self, j: usize) -> Result<(usize, usize, usize)> {
        if j >= self.len() {
            return Err(Error::Index { index: j, bound: self.len() });
        }
        let c = j % self.channels;
        let hw = j / self.channels;
        Ok((hw / self.width, hw % self.width, c))
    }

    /// Columns belonging to channel `c`, ascending.
    pub fn channel_columns(&self, c: usize) -> Result<Vec<usize>> {
        if !self.spatial {
            return Err(Error::UnsupportedStructure(
                "flat layers have no channel structure".into(),
            ));
        }
        channel_columns(c, self)
    }
}

/// Returns the `H·W` flat indices `(h·W + w)·C + c` of channel `c`.
pub fn channel_columns(c: usize, map: &NeuronIndexMap) -> Result<Vec<usize>> {
    if c >= map.channels {
        return Err(Error::Index { index: c, bound: map.channels });
    }
    Ok((0..map.height * map.width).map(|s| s * map.channels + c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_shape_arithmetic() {
        let t = ActivationTensor::from_shape_vec("l", 0, &[2, 2, 2, 3], (0..24).map(|v| v as f32).collect())
            .unwrap();
        let (x, map) = t.flatten();
        assert_eq!(x.dim(), (2, 12));
        assert_eq!(map.len(), 12);
        // sample 1, neuron (h=1, w=0, c=1) is element [1,1,0,1]
        let j = map.index(1, 0, 1).unwrap();
        assert_eq!(x[[1, j]], t.data()[[1, 1, 0, 1]]);
    }

    #[test]
    fn index_formula_example() {
        let map = NeuronIndexMap::spatial(2, 2, 3);
        assert_eq!(map.coords(7).unwrap(), (1, 0, 1));
        assert!(map.coords(12).is_err());
    }

    #[test]
    fn flat_input_is_identity() {
        let t = ActivationTensor::from_shape_vec("fc", 3, &[5, 64], vec![0.5f64; 320]).unwrap();
        let (x, map) = t.flatten();
        assert_eq!(x.dim(), (5, 64));
        assert!(!map.is_spatial());
        assert_eq!(map.coords(17).unwrap(), (0, 0, 17));
    }

    #[test]
    fn channel_columns_examples() {
        assert_eq!(channel_columns(2, &NeuronIndexMap::spatial(1, 1, 4)).unwrap(), vec![2]);
        assert_eq!(
            channel_columns(1, &NeuronIndexMap::spatial(2, 2, 3)).unwrap(),
            vec![1, 4, 7, 10]
        );
        assert!(matches!(
            channel_columns(3, &NeuronIndexMap::spatial(2, 2, 3)),
            Err(Error::Index { index: 3, bound: 3 })
        ));
        assert!(NeuronIndexMap::flat(8).channel_columns(0).is_err());
    }

    #[test]
    fn rejects_bad_ranks_and_zero_dims() {
        assert!(ActivationTensor::from_shape_vec("x", 0, &[2, 3, 4], vec![0.0f32; 24]).is_err());
        assert!(ActivationTensor::<f32>::from_shape_vec("x", 0, &[0, 3], vec![]).is_err());
    }
}

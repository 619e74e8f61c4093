//! Activation tensors, label tables, manifests, and balanced sampling.

pub mod labels;
pub mod layout;
pub mod manifest;
pub mod npy;
pub mod rows;
pub mod sampling;

pub use labels::{load_labels, parse_labels, write_labels, AttributeLabels};
pub use layout::{channel_columns, read_array, read_layer, write_array, ActivationTensor, AnyTensor, NeuronIndexMap};
pub use manifest::{LayerEntry, Manifest};
pub use npy::{read_npy, read_npy_from, write_npy, write_npy_to, NpyArray};
pub use rows::{gather_rows, gather_submatrix, RowSource};
pub use sampling::{balanced_sample, balanced_split, seeded_rng, SampleSplit, SeededRng};

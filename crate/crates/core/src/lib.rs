//! Probing hidden-layer activations for binary attributes.
//!
//! Each layer is flattened to an `N × m` matrix, a single-response PLS
//! projection is fitted per attribute, neurons and channels are ranked by
//! Variable Importance in Projection, and two-class QDA classifiers measure
//! how well the full layer, its top units, and individual neurons predict the
//! attribute.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the precision used by the pipeline.

// Negated float comparisons below deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod pls;
pub mod probe;
pub mod qda;
pub mod scalar;
pub mod tensor;
pub mod vip;

pub use error::{Error, Result};
pub use pls::{fit_pls1, PlsModel, PlsParams};
pub use probe::{ProbeConfig, ProbeReport};
pub use qda::{accuracy, fit_qda, QdaModel};
pub use scalar::Real;
pub use tensor::{ActivationTensor, AttributeLabels, Manifest, NeuronIndexMap, SampleSplit};
pub use vip::{channel_scores, top_k, vip_scores, VipReport};

/// Precision used for fitting by the probing pipeline.
pub type Scalar = f64;

pub type PlsModel64 = PlsModel<f64>;
pub type PlsModel32 = PlsModel<f32>;
pub type QdaModel64 = QdaModel<f64>;
pub type QdaModel32 = QdaModel<f32>;
pub type ActivationTensor32 = ActivationTensor<f32>;
pub type ActivationTensor64 = ActivationTensor<f64>;

//! Variable Importance in Projection and top-k unit selection.
//!
//! `VIP(j) = sqrt( m · Σ_i SS_i (w_ij / ‖w_i‖)² / Σ_i SS_i )` with
//! `SS_i = q_i² t_iᵀt_i`, the response variance explained by component `i`.
//! Squares of the scores sum to `m`.

use std::cmp::Ordering;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pls::PlsModel;
use crate::scalar::Real;
use crate::tensor::NeuronIndexMap;

/// Default number of selected neurons/channels.
pub const DEFAULT_TOP_K: usize = 8;

/// Explained sum of squares `q_i² t_iᵀt_i` per component.
pub fn explained_ss<F: Real>(model: &PlsModel<F>) -> Array1<F> {
    let t = model.scores();
    model
        .y_loadings()
        .iter()
        .zip(t.columns())
        .map(|(&q, col)| q * q * col.dot(&col))
        .collect()
}

pub fn vip_scores<F: Real>(model: &PlsModel<F>) -> Result<Array1<F>> {
    if model.converged_components() == 0 {
        return Err(Error::DegenerateModel("no fitted components".into()));
    }
    let ss = explained_ss(model);
    let total: F = ss.sum();
    if !(total > F::zero()) {
        return Err(Error::DegenerateModel("components explain no response variance".into()));
    }
    let w = model.weights();
    let m = w.nrows();
    let mut acc = Array1::<F>::zeros(m);
    for (col, &ssi) in w.columns().into_iter().zip(ss.iter()) {
        let norm_sq = col.dot(&col);
        let coef = ssi / total;
        acc.zip_mut_with(&col, |a, &wij| *a += coef * wij * wij / norm_sq);
    }
    let mf = F::of(m as f64);
    Ok(acc.mapv(|a| (mf * a).sqrt()))
}

/// Mean neuron score of each channel.
pub fn channel_scores<F: Real>(neuron_scores: &[F], map: &NeuronIndexMap) -> Result<Vec<F>> {
    if neuron_scores.len() != map.len() {
        return Err(Error::Parameter(format!(
            "{} scores for a layer of {} neurons",
            neuron_scores.len(),
            map.len()
        )));
    }
    let c = map.channels;
    let per_channel = F::of((map.height * map.width) as f64);
    let mut sums = vec![F::zero(); c];
    for (j, &s) in neuron_scores.iter().enumerate() {
        sums[j % c] += s;
    }
    Ok(sums.into_iter().map(|s| s / per_channel).collect())
}

/// Indices of the `k` largest scores, descending, ties by ascending index.
pub fn top_k<F: Real>(scores: &[F], k: usize) -> Result<Vec<usize>> {
    if k < 1 || k > scores.len() {
        return Err(Error::Parameter(format!(
            "top-k needs 1 <= k <= {}, got {k}",
            scores.len()
        )));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let cmp = |a: &usize, b: &usize| {
        scores[*b]
            .partial_cmp(&scores[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    if k < scores.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    Ok(idx)
}

/// Per-layer VIP summary for one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VipReport {
    pub layer_id: String,
    pub neuron_scores: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_scores: Option<Vec<f64>>,
    pub ss: Vec<f64>,
    pub top_neurons: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_channels: Option<Vec<usize>>,
}

impl VipReport {
    /// Scores a fitted layer model; `k` is clamped to the number of units.
    pub fn build<F: Real>(layer_id: &str, model: &PlsModel<F>, map: &NeuronIndexMap, k: usize) -> Result<Self> {
        let scores = vip_scores(model)?;
        let scores = scores.as_slice().expect("fresh array").to_vec();
        let top_neurons = top_k(&scores, k.min(scores.len()))?;
        let (channel_scores, top_channels) = if map.is_spatial() {
            let ch = channel_scores(&scores, map)?;
            let top = top_k(&ch, k.min(ch.len()))?;
            (Some(ch.iter().map(|v| v.as_f64()).collect()), Some(top))
        } else {
            (None, None)
        };
        Ok(Self {
            layer_id: layer_id.to_string(),
            neuron_scores: scores.iter().map(|v| v.as_f64()).collect(),
            channel_scores,
            ss: explained_ss(model).iter().map(|v| v.as_f64()).collect(),
            top_neurons,
            top_channels,
        })
    }
}

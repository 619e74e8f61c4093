//! Probes of a single layer for a single attribute.
//!
//! Every fit sees only training rows; validation rows are read afterwards
//! and only through the fitted statistics.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ProbeConfig;
use crate::error::{Error, Result};
use crate::pls::{PlsModel, PlsParams};
use crate::qda::{accuracy, fit_qda};
use crate::tensor::{gather_rows, gather_submatrix, seeded_rng, NeuronIndexMap, RowSource, SampleSplit};
use crate::vip::{top_k, VipReport};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronScore {
    pub index: usize,
    /// `[h, w, c]`; flat layers report `[0, 0, index]`.
    pub coords: [usize; 3],
    pub vip: f64,
    /// Validation accuracy of a QDA on this neuron alone.
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScore {
    pub channel: usize,
    pub vip: f64,
    /// Validation accuracy of PLS + QDA on this channel alone.
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub neuron: usize,
    pub vip: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerResult {
    pub layer_id: String,
    pub depth_index: usize,
    /// Per-sample shape, without the batch dimension.
    pub shape: Vec<usize>,
    pub converged_components: usize,
    pub acc_full: f64,
    pub acc_top_neurons: f64,
    /// Absent for flat layers.
    pub acc_top_channels: Option<f64>,
    pub top_neurons: Vec<NeuronScore>,
    pub top_channels: Vec<ChannelScore>,
    pub sweep: Vec<SweepEntry>,
}

fn labels_at(labels: &[u8], rows: &[usize]) -> Vec<u8> {
    rows.iter().map(|&r| labels[r]).collect()
}

fn check_split<R: RowSource + ?Sized>(src: &R, split: &SampleSplit, labels: &[u8]) -> Result<()> {
    if labels.len() != src.n_rows() {
        return Err(Error::Parameter(format!(
            "{} labels for a layer of {} samples",
            labels.len(),
            src.n_rows()
        )));
    }
    let n = src.n_rows();
    if let Some(&bad) = split
        .train_indices
        .iter()
        .chain(&split.val_indices)
        .find(|&&i| i >= n)
    {
        return Err(Error::Index { index: bad, bound: n });
    }
    if split.val_indices.is_empty() {
        return Err(Error::Parameter("empty validation split".into()));
    }
    Ok(())
}

fn response(labels: &[u8]) -> Array1<Scalar> {
    labels.iter().map(|&v| Scalar::from(v)).collect()
}

/// Component count that fits the training matrix.
fn clamp_components(requested: usize, n_train: usize, m: usize) -> usize {
    requested.min(n_train.saturating_sub(1)).min(m).max(1)
}

fn pls_params(cfg: &ProbeConfig, n_train: usize, m: usize) -> PlsParams<Scalar> {
    PlsParams::new(clamp_components(cfg.components, n_train, m)).scale(cfg.scale_features)
}

/// Fits PLS on the training rows of the full layer, then QDA on the scores.
pub fn probe_layer<R: RowSource + ?Sized>(
    src: &R,
    split: &SampleSplit,
    labels: &[u8],
    cfg: &ProbeConfig,
) -> Result<(PlsModel<Scalar>, f64)> {
    check_split(src, split, labels)?;
    let y_train = labels_at(labels, &split.train_indices);
    let x_train: Array2<Scalar> = gather_rows(src, &split.train_indices);
    let model = pls_params(cfg, x_train.nrows(), x_train.ncols()).fit_owned(x_train, response(&y_train).view())?;
    let qda = fit_qda(model.scores().view(), &y_train, cfg.qda_reg)?;
    let z_val = model.project_source(src, &split.val_indices)?;
    let acc = accuracy(&qda.predict(z_val.view())?, &labels_at(labels, &split.val_indices))?;
    Ok((model, acc))
}

/// QDA directly on a fixed set of neuron columns.
pub fn probe_neurons<R: RowSource + ?Sized>(
    src: &R,
    split: &SampleSplit,
    labels: &[u8],
    neurons: &[usize],
    cfg: &ProbeConfig,
) -> Result<f64> {
    check_split(src, split, labels)?;
    check_columns(src, neurons)?;
    let train: Array2<Scalar> = gather_submatrix(src, &split.train_indices, neurons);
    let val: Array2<Scalar> = gather_submatrix(src, &split.val_indices, neurons);
    let qda = fit_qda(train.view(), &labels_at(labels, &split.train_indices), cfg.qda_reg)?;
    accuracy(&qda.predict(val.view())?, &labels_at(labels, &split.val_indices))
}

/// QDA on the layer's `top_k_units` highest-VIP neurons.
pub fn probe_top_neurons<R: RowSource + ?Sized>(
    src: &R,
    split: &SampleSplit,
    labels: &[u8],
    vip: &VipReport,
    cfg: &ProbeConfig,
) -> Result<f64> {
    let k = cfg.top_k_units.min(vip.neuron_scores.len());
    let top = top_k(&vip.neuron_scores, k)?;
    probe_neurons(src, split, labels, &top, cfg)
}

/// PLS + QDA on the concatenated columns of the given channels.
pub fn probe_channels<R: RowSource + ?Sized>(
    src: &R,
    map: &NeuronIndexMap,
    split: &SampleSplit,
    labels: &[u8],
    channels: &[usize],
    cfg: &ProbeConfig,
) -> Result<f64> {
    check_split(src, split, labels)?;
    let mut cols = Vec::with_capacity(channels.len() * map.height * map.width);
    for &c in channels {
        cols.extend(map.channel_columns(c)?);
    }
    check_columns(src, &cols)?;
    let y_train = labels_at(labels, &split.train_indices);
    let x_train: Array2<Scalar> = gather_submatrix(src, &split.train_indices, &cols);
    let model = pls_params(cfg, x_train.nrows(), x_train.ncols()).fit_owned(x_train, response(&y_train).view())?;
    let qda = fit_qda(model.scores().view(), &y_train, cfg.qda_reg)?;
    let z_val = model.project_source_columns(src, &split.val_indices, &cols)?;
    accuracy(&qda.predict(z_val.view())?, &labels_at(labels, &split.val_indices))
}

/// PLS + QDA restricted to the `top_k_units` highest-scoring channels.
pub fn probe_top_channels<R: RowSource + ?Sized>(
    src: &R,
    map: &NeuronIndexMap,
    split: &SampleSplit,
    labels: &[u8],
    vip: &VipReport,
    cfg: &ProbeConfig,
) -> Result<f64> {
    let scores = vip
        .channel_scores
        .as_ref()
        .filter(|_| map.is_spatial())
        .ok_or_else(|| Error::UnsupportedStructure("channel probe on a flat layer".into()))?;
    let top = top_k(scores, cfg.top_k_units.min(scores.len()))?;
    probe_channels(src, map, split, labels, &top, cfg)
}

/// Validation accuracy of a one-dimensional QDA for each listed neuron.
pub fn single_neuron_accuracies<R: RowSource + ?Sized>(
    src: &R,
    split: &SampleSplit,
    labels: &[u8],
    neurons: &[usize],
    cfg: &ProbeConfig,
) -> Result<Vec<f64>> {
    check_split(src, split, labels)?;
    check_columns(src, neurons)?;
    let train: Array2<Scalar> = gather_submatrix(src, &split.train_indices, neurons);
    let val: Array2<Scalar> = gather_submatrix(src, &split.val_indices, neurons);
    let y_train = labels_at(labels, &split.train_indices);
    let y_val = labels_at(labels, &split.val_indices);
    (0..neurons.len())
        .map(|j| {
            let tr = train.column(j).to_owned().insert_axis(ndarray::Axis(1));
            let va = val.column(j).to_owned().insert_axis(ndarray::Axis(1));
            let qda = fit_qda(tr.view(), &y_train, cfg.qda_reg)?;
            accuracy(&qda.predict(va.view())?, &y_val)
        })
        .collect()
}

/// Chooses up to `size` neurons spread over the VIP range.
///
/// Neurons are ranked by VIP and cut into `size` equal-count strata; one
/// neuron is drawn uniformly from each stratum, except that the first stratum
/// always contributes the global maximum. Layers with at most `size` neurons
/// are used whole.
pub fn sweep_neurons(vip: &[f64], size: usize, seed: u64) -> Result<Vec<usize>> {
    let m = vip.len();
    let ranked = top_k(vip, m)?;
    if m <= size {
        return Ok(ranked);
    }
    let mut rng = seeded_rng(seed);
    let mut chosen = Vec::with_capacity(size);
    for s in 0..size {
        let lo = s * m / size;
        let hi = (s + 1) * m / size;
        let pick = if s == 0 { lo } else { rng.random_range(lo..hi) };
        chosen.push(ranked[pick]);
    }
    Ok(chosen)
}

/// Single-neuron accuracies for a VIP-stratified neuron sample, sorted by VIP descending.
pub fn single_neuron_sweep<R: RowSource + ?Sized>(
    src: &R,
    split: &SampleSplit,
    labels: &[u8],
    vip: &[f64],
    cfg: &ProbeConfig,
    seed: u64,
) -> Result<Vec<SweepEntry>> {
    if vip.len() != src.n_cols() {
        return Err(Error::Parameter(format!(
            "{} VIP scores for {} columns",
            vip.len(),
            src.n_cols()
        )));
    }
    let mut neurons = sweep_neurons(vip, cfg.sweep_size, seed)?;
    neurons.sort_by(|&a, &b| vip[b].total_cmp(&vip[a]).then(a.cmp(&b)));
    let accs = single_neuron_accuracies(src, split, labels, &neurons, cfg)?;
    Ok(neurons
        .into_iter()
        .zip(accs)
        .map(|(neuron, accuracy)| SweepEntry {
            neuron,
            vip: vip[neuron],
            accuracy,
        })
        .collect())
}

/// Seed of the sweep sample for a given layer.
pub fn layer_seed(seed: u64, depth_index: usize) -> u64 {
    seed ^ (depth_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fits the full-layer model and returns it with its VIP report and accuracy.
pub fn fit_and_score<R: RowSource + ?Sized>(
    src: &R,
    map: &NeuronIndexMap,
    layer_id: &str,
    split: &SampleSplit,
    labels: &[u8],
    cfg: &ProbeConfig,
) -> Result<(PlsModel<Scalar>, VipReport, f64)> {
    if map.len() != src.n_cols() {
        return Err(Error::Parameter(format!(
            "index map covers {} neurons, layer has {}",
            map.len(),
            src.n_cols()
        )));
    }
    let (model, acc_full) = probe_layer(src, split, labels, cfg)?;
    let vip = VipReport::build(layer_id, &model, map, cfg.top_k_units)?;
    Ok((model, vip, acc_full))
}

/// Runs every probe of one layer for one attribute.
pub fn analyze_layer<R: RowSource + ?Sized>(
    src: &R,
    map: &NeuronIndexMap,
    layer_id: &str,
    depth_index: usize,
    split: &SampleSplit,
    labels: &[u8],
    cfg: &ProbeConfig,
) -> Result<LayerResult> {
    let (model, vip, acc_full) = fit_and_score(src, map, layer_id, split, labels, cfg)?;

    let acc_top_neurons = probe_neurons(src, split, labels, &vip.top_neurons, cfg)?;
    let neuron_accs = single_neuron_accuracies(src, split, labels, &vip.top_neurons, cfg)?;
    let top_neurons = vip
        .top_neurons
        .iter()
        .zip(neuron_accs)
        .map(|(&j, accuracy)| {
            let (h, w, c) = map.coords(j)?;
            Ok(NeuronScore {
                index: j,
                coords: [h, w, c],
                vip: vip.neuron_scores[j],
                accuracy,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (acc_top_channels, top_channels) = match (&vip.top_channels, &vip.channel_scores) {
        (Some(top), Some(scores)) if map.is_spatial() => {
            let acc = probe_channels(src, map, split, labels, top, cfg)?;
            let per_channel = top
                .iter()
                .map(|&c| {
                    Ok(ChannelScore {
                        channel: c,
                        vip: scores[c],
                        accuracy: probe_channels(src, map, split, labels, &[c], cfg)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (Some(acc), per_channel)
        }
        _ => (None, Vec::new()),
    };

    let sweep = single_neuron_sweep(
        src,
        split,
        labels,
        &vip.neuron_scores,
        cfg,
        layer_seed(cfg.seed, depth_index),
    )?;

    Ok(LayerResult {
        layer_id: layer_id.to_string(),
        depth_index,
        shape: per_sample_shape(map),
        converged_components: model.converged_components(),
        acc_full,
        acc_top_neurons,
        acc_top_channels,
        top_neurons,
        top_channels,
        sweep,
    })
}

pub(crate) fn per_sample_shape(map: &NeuronIndexMap) -> Vec<usize> {
    if map.is_spatial() {
        vec![map.height, map.width, map.channels]
    } else {
        vec![map.channels]
    }
}

fn check_columns<R: RowSource + ?Sized>(src: &R, cols: &[usize]) -> Result<()> {
    if cols.is_empty() {
        return Err(Error::Parameter("no columns selected".into()));
    }
    match cols.iter().find(|&&c| c >= src.n_cols()) {
        Some(&c) => Err(Error::Index { index: c, bound: src.n_cols() }),
        None => Ok(()),
    }
}

/// One column of the layer, all samples, as `f64`.
pub fn neuron_activations<R: RowSource + ?Sized>(src: &R, neuron: usize) -> Result<Vec<f64>> {
    check_columns(src, &[neuron])?;
    let rows: Vec<usize> = (0..src.n_rows()).collect();
    let col: Array2<f64> = gather_submatrix(src, &rows, &[neuron]);
    Ok(col.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_clamps_to_layer_size() {
        let vip: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let chosen = sweep_neurons(&vip, 50, 1).unwrap();
        assert_eq!(chosen, (0..10).rev().collect::<Vec<_>>());
    }

    #[test]
    fn sweep_includes_maximum_and_one_per_stratum() {
        let vip: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let chosen = sweep_neurons(&vip, 50, 9).unwrap();
        assert_eq!(chosen.len(), 50);
        let argmax = (0..1000).max_by(|&a, &b| vip[a].total_cmp(&vip[b])).unwrap();
        assert_eq!(chosen[0], argmax);
        // stratum s holds ranks [20s, 20s+20)
        let ranked = top_k(&vip, 1000).unwrap();
        for (s, n) in chosen.iter().enumerate() {
            let rank = ranked.iter().position(|r| r == n).unwrap();
            assert_eq!(rank / 20, s);
        }
        assert_eq!(chosen, sweep_neurons(&vip, 50, 9).unwrap());
        assert_ne!(chosen, sweep_neurons(&vip, 50, 10).unwrap());
    }

    #[test]
    fn component_clamp() {
        assert_eq!(clamp_components(8, 2048, 4), 4);
        assert_eq!(clamp_components(8, 4, 100), 3);
        assert_eq!(clamp_components(8, 2048, 100), 8);
    }
}

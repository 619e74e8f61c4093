//! Averaging of reports from independent runs of the same attribute.

use serde::{Deserialize, Serialize};

use super::report::ProbeReport;
use crate::error::{Error, Result};

/// Mean and sample standard deviation (zero for a single run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedLayer {
    pub layer_id: String,
    pub depth_index: usize,
    pub acc_full: Stat,
    pub acc_top_neurons: Stat,
    pub acc_top_channels: Option<Stat>,
    /// Single-neuron accuracy by VIP rank within each run's sweep.
    pub sweep_by_rank: Vec<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedReport {
    pub attribute: String,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub manifests: Vec<String>,
    pub layers: Vec<MergedLayer>,
}

/// Layers are matched by `depth_index`; every report must list the same depths and layer ids.
pub fn merge_reports(reports: &[ProbeReport]) -> Result<MergedReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Parameter("nothing to merge".into()))?;
    for r in &reports[1..] {
        if r.attribute != first.attribute {
            return Err(Error::Parameter(format!(
                "cannot merge attribute `{}` with `{}`",
                r.attribute, first.attribute
            )));
        }
        let same = r.layers.len() == first.layers.len()
            && r
                .layers
                .iter()
                .zip(&first.layers)
                .all(|(a, b)| a.depth_index == b.depth_index && a.layer_id == b.layer_id);
        if !same {
            return Err(Error::Parameter("reports list different layers".into()));
        }
    }

    let mut layers = Vec::with_capacity(first.layers.len());
    for (li, base) in first.layers.iter().enumerate() {
        let col = |f: &dyn Fn(&ProbeReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
        let chans: Vec<f64> = reports.iter().filter_map(|r| r.layers[li].acc_top_channels).collect();
        let ranks = reports.iter().map(|r| r.layers[li].sweep.len()).max().unwrap_or(0);
        let sweep_by_rank = (0..ranks)
            .filter_map(|k| {
                let accs: Vec<f64> = reports
                    .iter()
                    .filter_map(|r| r.layers[li].sweep.get(k).map(|s| s.accuracy))
                    .collect();
                Stat::of(&accs)
            })
            .collect();
        layers.push(MergedLayer {
            layer_id: base.layer_id.clone(),
            depth_index: base.depth_index,
            acc_full: Stat::of(&col(&|r| r.layers[li].acc_full)).expect("non-empty"),
            acc_top_neurons: Stat::of(&col(&|r| r.layers[li].acc_top_neurons)).expect("non-empty"),
            acc_top_channels: Stat::of(&chans),
            sweep_by_rank,
        });
    }
    Ok(MergedReport {
        attribute: first.attribute.clone(),
        runs: reports.len(),
        seeds: reports.iter().map(|r| r.provenance.seed).collect(),
        manifests: reports.iter().map(|r| r.provenance.manifest_sha256.clone()).collect(),
        layers,
    })
}

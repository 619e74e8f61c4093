use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ProbeConfig;
use super::layer::LayerResult;
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub tool_version: String,
    pub manifest_sha256: String,
}

/// The best-performing unit of one kind across all layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestUnit {
    pub layer_id: String,
    pub depth_index: usize,
    /// Channel or neuron index; absent for the whole-layer entry.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<usize>,
    pub accuracy: f64,
}

/// Best layer, filter, and neuron by validation accuracy.
///
/// Filter and neuron candidates are each layer's top-k VIP units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestUnits {
    pub layer: Option<BestUnit>,
    pub filter: Option<BestUnit>,
    pub neuron: Option<BestUnit>,
}

impl BestUnits {
    pub fn from_layers(layers: &[LayerResult]) -> Self {
        fn keep(best: &mut Option<BestUnit>, cand: BestUnit) {
            if best.as_ref().is_none_or(|b| cand.accuracy > b.accuracy) {
                *best = Some(cand);
            }
        }
        let mut out = BestUnits {
            layer: None,
            filter: None,
            neuron: None,
        };
        for l in layers {
            keep(
                &mut out.layer,
                BestUnit {
                    layer_id: l.layer_id.clone(),
                    depth_index: l.depth_index,
                    unit: None,
                    accuracy: l.acc_full,
                },
            );
            for c in &l.top_channels {
                keep(
                    &mut out.filter,
                    BestUnit {
                        layer_id: l.layer_id.clone(),
                        depth_index: l.depth_index,
                        unit: Some(c.channel),
                        accuracy: c.accuracy,
                    },
                );
            }
            for n in &l.top_neurons {
                keep(
                    &mut out.neuron,
                    BestUnit {
                        layer_id: l.layer_id.clone(),
                        depth_index: l.depth_index,
                        unit: Some(n.index),
                        accuracy: n.accuracy,
                    },
                );
            }
        }
        out
    }
}

/// Accuracy-vs-depth results for one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub attribute: String,
    pub config: ProbeConfig,
    pub layers: Vec<LayerResult>,
    pub best: BestUnits,
    pub provenance: Provenance,
}

impl ProbeReport {
    pub fn new(attribute: &str, config: ProbeConfig, layers: Vec<LayerResult>, manifest_sha256: &str) -> Self {
        Self {
            attribute: attribute.to_string(),
            best: BestUnits::from_layers(&layers),
            provenance: Provenance {
                seed: config.seed,
                tool_version: TOOL_VERSION.to_string(),
                manifest_sha256: manifest_sha256.to_string(),
            },
            config,
            layers,
        }
    }

    /// Depth order, one entry per layer, list lengths consistent with the config.
    pub fn check_structure(&self) -> Result<()> {
        for pair in self.layers.windows(2) {
            if pair[0].depth_index >= pair[1].depth_index {
                return Err(Error::Format("layers out of depth order".into()));
            }
        }
        for l in &self.layers {
            let m: usize = l.shape.iter().product();
            let accs = [Some(l.acc_full), Some(l.acc_top_neurons), l.acc_top_channels];
            if accs.iter().flatten().any(|a| !(0.0..=1.0).contains(a)) {
                return Err(Error::Format(format!("layer `{}`: accuracy outside [0, 1]", l.layer_id)));
            }
            if l.top_neurons.len() != self.config.top_k_units.min(m) {
                return Err(Error::Format(format!("layer `{}`: wrong top-neuron count", l.layer_id)));
            }
            if l.sweep.len() != self.config.sweep_size.min(m) {
                return Err(Error::Format(format!("layer `{}`: wrong sweep length", l.layer_id)));
            }
            let channels = if l.shape.len() == 3 { l.shape[2] } else { 0 };
            if l.top_channels.len() != self.config.top_k_units.min(channels) {
                return Err(Error::Format(format!("layer `{}`: wrong top-channel count", l.layer_id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// `depth_index,layer_id,acc_full,acc_top_channels,acc_top_neurons`, one row per layer.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("depth_index,layer_id,acc_full,acc_top_channels,acc_top_neurons\n");
        for l in &self.layers {
            let ch = l.acc_top_channels.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                l.depth_index, l.layer_id, l.acc_full, ch, l.acc_top_neurons
            );
        }
        out
    }

    /// Writes `<attr>.json` and `<attr>.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        let json = dir.join(format!("{}.json", self.attribute));
        let csv = dir.join(format!("{}.csv", self.attribute));
        std::fs::write(&json, self.to_json()?).map_err(|e| Error::io(&json, e))?;
        std::fs::write(&csv, self.summary_csv()).map_err(|e| Error::io(&csv, e))?;
        Ok((json, csv))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::layer::{ChannelScore, NeuronScore};

    fn layer(depth: usize, full: f64, chan: f64, neuron: f64) -> LayerResult {
        LayerResult {
            layer_id: format!("l{depth}"),
            depth_index: depth,
            shape: vec![1, 1, 2],
            converged_components: 1,
            acc_full: full,
            acc_top_neurons: neuron,
            acc_top_channels: Some(chan),
            top_neurons: vec![NeuronScore { index: 1, coords: [0, 0, 1], vip: 1.2, accuracy: neuron }],
            top_channels: vec![ChannelScore { channel: 0, vip: 1.1, accuracy: chan }],
            sweep: vec![],
        }
    }

    #[test]
    fn best_units_pick_first_maximum() {
        let layers = vec![layer(0, 0.7, 0.6, 0.9), layer(1, 0.8, 0.6, 0.5), layer(2, 0.8, 0.65, 0.5)];
        let best = BestUnits::from_layers(&layers);
        assert_eq!(best.layer.unwrap().depth_index, 1);
        assert_eq!(best.filter.unwrap().depth_index, 2);
        let n = best.neuron.unwrap();
        assert_eq!((n.depth_index, n.unit), (0, Some(1)));
    }

    #[test]
    fn csv_has_blank_for_flat_layers() {
        let mut flat = layer(1, 0.5, 0.0, 0.5);
        flat.acc_top_channels = None;
        let cfg = ProbeConfig::default();
        let r = ProbeReport::new("A", cfg, vec![layer(0, 0.75, 0.5, 0.25), flat], "00");
        let csv = r.summary_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[1], "0,l0,0.75,0.5,0.25");
        assert_eq!(lines[2], "1,l1,0.5,,0.5");
    }
}

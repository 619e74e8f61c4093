//! Layer probing: PLS projection, QDA classification, VIP-restricted probes and sweeps.

pub mod composite;
pub mod config;
pub mod layer;
pub mod merge;
pub mod report;
pub mod run;
pub mod synth;

pub use composite::{composite_faces, write_composites, write_png};
pub use config::ProbeConfig;
pub use layer::{
    analyze_layer, fit_and_score, layer_seed, probe_channels, probe_layer, probe_neurons, probe_top_channels,
    probe_top_neurons, single_neuron_accuracies, single_neuron_sweep, sweep_neurons, ChannelScore, LayerResult,
    NeuronScore, SweepEntry,
};
pub use merge::{merge_reports, MergedLayer, MergedReport, Stat};
pub use report::{BestUnit, BestUnits, ProbeReport, Provenance, TOOL_VERSION};
pub use run::{map_layers, run_probe, run_sweep, run_vip, AttributeOutcome, AttributeTask, LayerJob, LayerSweep};
pub use synth::{synth_generate, PlantedUnit, SynthLayer, SynthOutput, SynthSpec, RANDOM_ATTRIBUTE};

//! Manifest-level orchestration.
//!
//! Layers are handed to a bounded pool of worker threads; each worker reads
//! one layer, runs every attribute on it, and drops it before taking the next,
//! so at most `workers` layers are resident at once. Results are stored by
//! (attribute, layer position) and therefore independent of completion order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::ProbeConfig;
use super::layer::{analyze_layer, fit_and_score, layer_seed, single_neuron_sweep, LayerResult, SweepEntry};
use super::report::ProbeReport;
use crate::error::{Error, Result};
use crate::tensor::{balanced_split, AnyTensor, AttributeLabels, LayerEntry, Manifest, NeuronIndexMap, RowSource, SampleSplit};
use crate::vip::VipReport;

/// A computation applied to every layer of a manifest.
pub trait LayerJob: Sync {
    type Output: Send;

    fn run<R: RowSource>(&self, entry: &LayerEntry, src: &R, map: &NeuronIndexMap) -> Self::Output;

    /// Output recorded when the layer itself cannot be read.
    fn failed(&self, entry: &LayerEntry, err: Error) -> Self::Output;
}

/// Runs `job` on every manifest layer with at most `workers` threads; output is in manifest order.
pub fn map_layers<J: LayerJob>(manifest: &Manifest, workers: usize, job: &J) -> Vec<J::Output> {
    let n = manifest.layers.len();
    let slots: Vec<Mutex<Option<J::Output>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= n {
            break;
        }
        let entry = &manifest.layers[i];
        let out = match manifest.read_layer(entry) {
            Ok(AnyTensor::F32(t)) => {
                let (x, map) = t.flatten();
                job.run(entry, &x, &map)
            }
            Ok(AnyTensor::F64(t)) => {
                let (x, map) = t.flatten();
                job.run(entry, &x, &map)
            }
            Err(e) => job.failed(entry, e),
        };
        *slots[i].lock().expect("poisoned slot") = Some(out);
    };
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("poisoned slot").expect("every layer visited"))
        .collect()
}

/// One attribute's label column and its balanced split.
#[derive(Debug, Clone)]
pub struct AttributeTask {
    pub name: String,
    pub labels: Vec<u8>,
    pub split: SampleSplit,
}

impl AttributeTask {
    pub fn prepare(labels: &AttributeLabels, name: &str, cfg: &ProbeConfig) -> Result<Self> {
        let column = labels.column(name)?;
        let split = balanced_split(&column, cfg.n_train, cfg.n_val, cfg.seed)?;
        Ok(Self {
            name: name.to_string(),
            labels: column,
            split,
        })
    }
}

fn check_alignment(manifest: &Manifest, labels: &AttributeLabels) -> Result<()> {
    if labels.len() != manifest.n_samples {
        return Err(Error::Format(format!(
            "labels have {} rows, manifest declares {} samples",
            labels.len(),
            manifest.n_samples
        )));
    }
    Ok(())
}

struct ProbeJob<'a> {
    tasks: &'a [AttributeTask],
    cfg: &'a ProbeConfig,
}

impl LayerJob for ProbeJob<'_> {
    type Output = Vec<Result<LayerResult>>;

    fn run<R: RowSource>(&self, entry: &LayerEntry, src: &R, map: &NeuronIndexMap) -> Self::Output {
        self.tasks
            .iter()
            .map(|t| analyze_layer(src, map, &entry.name, entry.index, &t.split, &t.labels, self.cfg))
            .collect()
    }

    fn failed(&self, entry: &LayerEntry, err: Error) -> Self::Output {
        let msg = format!("layer `{}`: {err}", entry.name);
        self.tasks
            .iter()
            .map(|_| Err(Error::Format(msg.clone())))
            .collect()
    }
}

/// Outcome of probing one attribute; failures do not affect other attributes.
#[derive(Debug)]
pub struct AttributeOutcome {
    pub attribute: String,
    pub report: Result<ProbeReport>,
}

/// Full protocol: one balanced split per attribute, every layer, every probe.
pub fn run_probe(
    manifest: &Manifest,
    labels: &AttributeLabels,
    attrs: &[String],
    cfg: &ProbeConfig,
    workers: usize,
) -> Result<Vec<AttributeOutcome>> {
    cfg.validate()?;
    check_alignment(manifest, labels)?;

    let mut outcomes: Vec<Option<AttributeOutcome>> = Vec::with_capacity(attrs.len());
    let mut tasks = Vec::new();
    let mut task_slot = Vec::new();
    for (i, name) in attrs.iter().enumerate() {
        match AttributeTask::prepare(labels, name, cfg) {
            Ok(t) => {
                tasks.push(t);
                task_slot.push(i);
                outcomes.push(None);
            }
            Err(e) => outcomes.push(Some(AttributeOutcome {
                attribute: name.clone(),
                report: Err(e),
            })),
        }
    }

    let per_layer = if tasks.is_empty() {
        Vec::new()
    } else {
        map_layers(manifest, workers, &ProbeJob { tasks: &tasks, cfg })
    };

    let mut by_task: Vec<Vec<Result<LayerResult>>> = tasks.iter().map(|_| Vec::new()).collect();
    for layer in per_layer {
        for (t, r) in layer.into_iter().enumerate() {
            by_task[t].push(r);
        }
    }
    for ((task, results), slot) in tasks.iter().zip(by_task).zip(task_slot) {
        let report = results
            .into_iter()
            .collect::<Result<Vec<_>>>()
            .map(|layers| ProbeReport::new(&task.name, cfg.clone(), layers, &manifest.digest));
        outcomes[slot] = Some(AttributeOutcome {
            attribute: task.name.clone(),
            report,
        });
    }
    Ok(outcomes.into_iter().map(|o| o.expect("filled")).collect())
}

struct VipJob<'a> {
    task: &'a AttributeTask,
    cfg: &'a ProbeConfig,
}

impl LayerJob for VipJob<'_> {
    type Output = Result<VipReport>;

    fn run<R: RowSource>(&self, entry: &LayerEntry, src: &R, map: &NeuronIndexMap) -> Self::Output {
        let (_, vip, _) = fit_and_score(src, map, &entry.name, &self.task.split, &self.task.labels, self.cfg)?;
        Ok(vip)
    }

    fn failed(&self, _: &LayerEntry, err: Error) -> Self::Output {
        Err(err)
    }
}

/// VIP reports for every layer, fitted on the attribute's training split.
pub fn run_vip(
    manifest: &Manifest,
    labels: &AttributeLabels,
    attr: &str,
    cfg: &ProbeConfig,
    workers: usize,
) -> Result<Vec<VipReport>> {
    cfg.validate()?;
    check_alignment(manifest, labels)?;
    let task = AttributeTask::prepare(labels, attr, cfg)?;
    map_layers(manifest, workers, &VipJob { task: &task, cfg }).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSweep {
    pub layer_id: String,
    pub depth_index: usize,
    pub sweep: Vec<SweepEntry>,
}

struct SweepJob<'a> {
    task: &'a AttributeTask,
    cfg: &'a ProbeConfig,
}

impl LayerJob for SweepJob<'_> {
    type Output = Result<LayerSweep>;

    fn run<R: RowSource>(&self, entry: &LayerEntry, src: &R, map: &NeuronIndexMap) -> Self::Output {
        let (_, vip, _) = fit_and_score(src, map, &entry.name, &self.task.split, &self.task.labels, self.cfg)?;
        let sweep = single_neuron_sweep(
            src,
            &self.task.split,
            &self.task.labels,
            &vip.neuron_scores,
            self.cfg,
            layer_seed(self.cfg.seed, entry.index),
        )?;
        Ok(LayerSweep {
            layer_id: entry.name.clone(),
            depth_index: entry.index,
            sweep,
        })
    }

    fn failed(&self, _: &LayerEntry, err: Error) -> Self::Output {
        Err(err)
    }
}

/// Single-neuron sweeps for every layer.
pub fn run_sweep(
    manifest: &Manifest,
    labels: &AttributeLabels,
    attr: &str,
    cfg: &ProbeConfig,
    workers: usize,
) -> Result<Vec<LayerSweep>> {
    cfg.validate()?;
    check_alignment(manifest, labels)?;
    let task = AttributeTask::prepare(labels, attr, cfg)?;
    map_layers(manifest, workers, &SweepJob { task: &task, cfg }).into_iter().collect()
}

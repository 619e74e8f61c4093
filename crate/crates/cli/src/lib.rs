//! Argument parsing and subcommand dispatch for the `probelens` binary.
//!
//! Settings resolve as command-line flag, then `--config` JSON file, then
//! built-in default. The worker count additionally falls back to
//! `PROBELENS_WORKERS` before the default of one worker per logical core.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use probelens::probe::{
    merge_reports, run_probe, run_sweep, run_vip, synth_generate, write_composites, ProbeConfig, ProbeReport,
    SynthSpec,
};
use probelens::tensor::{load_labels, Manifest};

pub const WORKERS_ENV: &str = "PROBELENS_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "probelens", version, about = "Probe layer activations for binary attributes with PLS, VIP and QDA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline: full-layer, top-unit and single-neuron probes for every layer.
    Probe(RunArgs),
    /// VIP scores per layer, written as `vip_<attr>_<layer>.json`.
    Vip(RunArgs),
    /// Single-neuron sweep per layer, written as `sweep_<attr>.json`.
    Sweep(RunArgs),
    /// Mean images of the highest- and lowest-activating samples of a neuron.
    Composite(CompositeArgs),
    /// Generate a synthetic planted-attribute manifest.
    Synth(SynthArgs),
    /// Average reports of the same attribute from several runs.
    Merge(MergeArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    /// PLS components.
    #[arg(long)]
    pub components: Option<usize>,
    /// Training samples per attribute (even).
    #[arg(long = "train")]
    pub n_train: Option<usize>,
    /// Validation samples per attribute (even).
    #[arg(long = "val")]
    pub n_val: Option<usize>,
    /// Neurons and channels kept by the top-unit probes.
    #[arg(long = "top-k")]
    pub top_k_units: Option<usize>,
    #[arg(long)]
    pub sweep_size: Option<usize>,
    #[arg(long)]
    pub composite_n: Option<usize>,
    #[arg(long)]
    pub qda_reg: Option<f64>,
    /// Center only; do not scale columns to unit variance.
    #[arg(long)]
    pub no_scale: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Attribute column; repeat for several.
    #[arg(long = "attr")]
    pub attributes: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with any of the settings above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct CompositeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Layer name as listed in the manifest.
    #[arg(long)]
    pub layer: String,
    /// Flat neuron index; repeat for several. Defaults to the layer's top VIP neurons.
    #[arg(long = "neuron")]
    pub neurons: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// JSON fixture description; replaces the built-in three-layer fixture.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 8192)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 5.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write `images.npy` with this side length.
    #[arg(long)]
    pub image_size: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct MergeArgs {
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Report JSON files of one attribute.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

/// Settings accepted in a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub manifest: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub attributes: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub components: Option<usize>,
    pub n_train: Option<usize>,
    pub n_val: Option<usize>,
    pub top_k_units: Option<usize>,
    pub sweep_size: Option<usize>,
    pub composite_n: Option<usize>,
    pub qda_reg: Option<f64>,
    pub scale_features: Option<bool>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage("E_CONFIG", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage("E_CONFIG", format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings of a probing subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub manifest: PathBuf,
    pub labels: Option<PathBuf>,
    pub attributes: Vec<String>,
    pub out: PathBuf,
    pub workers: usize,
    pub probe: ProbeConfig,
}

/// Error with its exit status and greppable code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit: i32,
}

impl CliError {
    pub fn usage(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), exit: 2 }
    }

    pub fn runtime(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), exit: 1 }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error[{}]: {one_line}", self.code)
    }
}

impl From<probelens::Error> for CliError {
    fn from(e: probelens::Error) -> Self {
        Self::runtime(e.code(), e.to_string())
    }
}

fn default_workers(env: Option<&str>) -> Result<usize, CliError> {
    if let Some(v) = env {
        return match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::usage("E_USAGE", format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Resolves flags, config file, environment and defaults.
///
/// `needs_labels` and `needs_attr` state what the subcommand requires.
pub fn resolve(
    common: &Common,
    file: &FileConfig,
    env_workers: Option<&str>,
    needs_labels: bool,
    needs_attr: bool,
) -> Result<CliConfig, CliError> {
    let o = &common.overrides;
    let d = ProbeConfig::default();
    let probe = ProbeConfig {
        components: o.components.or(file.components).unwrap_or(d.components),
        n_train: o.n_train.or(file.n_train).unwrap_or(d.n_train),
        n_val: o.n_val.or(file.n_val).unwrap_or(d.n_val),
        top_k_units: o.top_k_units.or(file.top_k_units).unwrap_or(d.top_k_units),
        sweep_size: o.sweep_size.or(file.sweep_size).unwrap_or(d.sweep_size),
        composite_n: o.composite_n.or(file.composite_n).unwrap_or(d.composite_n),
        qda_reg: o.qda_reg.or(file.qda_reg).unwrap_or(d.qda_reg),
        scale_features: if o.no_scale { false } else { file.scale_features.unwrap_or(d.scale_features) },
        seed: o.seed.or(file.seed).unwrap_or(d.seed),
    };
    probe.validate().map_err(|e| CliError::usage("E_USAGE", e.to_string()))?;

    let workers = match common.workers.or(file.workers) {
        Some(0) => return Err(CliError::usage("E_USAGE", "--workers must be >= 1")),
        Some(n) => n,
        None => default_workers(env_workers)?,
    };

    let manifest = common
        .manifest
        .clone()
        .or_else(|| file.manifest.clone())
        .ok_or_else(|| CliError::usage("E_USAGE", "missing required --manifest"))?;
    let labels = common.labels.clone().or_else(|| file.labels.clone());
    if needs_labels && labels.is_none() {
        return Err(CliError::usage("E_USAGE", "missing required --labels"));
    }
    let attributes = if common.attributes.is_empty() {
        file.attributes.clone().unwrap_or_default()
    } else {
        common.attributes.clone()
    };
    if needs_attr && attributes.is_empty() {
        return Err(CliError::usage("E_USAGE", "missing required --attr"));
    }
    let out = common
        .out
        .clone()
        .or_else(|| file.out.clone())
        .ok_or_else(|| CliError::usage("E_USAGE", "missing required --out"))?;

    for path in std::iter::once(&manifest).chain(labels.as_ref()) {
        if !path.is_file() {
            return Err(CliError::usage("E_USAGE", format!("{}: no such file", path.display())));
        }
    }

    Ok(CliConfig { manifest, labels, attributes, out, workers, probe })
}

fn resolve_common(common: &Common, needs_labels: bool, needs_attr: bool) -> Result<CliConfig, CliError> {
    let file = match &common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let env = std::env::var(WORKERS_ENV).ok();
    resolve(common, &file, env.as_deref(), needs_labels, needs_attr)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::runtime("E_IO", format!("{}: {e}", dir.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::runtime("E_JSON", e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::runtime("E_IO", format!("{}: {e}", path.display())))
}

fn load_inputs(cfg: &CliConfig) -> Result<(Manifest, probelens::AttributeLabels), CliError> {
    let manifest = Manifest::load(&cfg.manifest)?;
    let labels = load_labels(cfg.labels.as_ref().expect("labels resolved"))?;
    Ok((manifest, labels))
}

fn cmd_probe(args: &RunArgs) -> Result<(), CliError> {
    let cfg = resolve_common(&args.common, true, true)?;
    let (manifest, labels) = load_inputs(&cfg)?;
    create_dir(&cfg.out)?;
    let outcomes = run_probe(&manifest, &labels, &cfg.attributes, &cfg.probe, cfg.workers)?;
    let mut first_err = None;
    for o in outcomes {
        match o.report.and_then(|r| r.check_structure().map(|_| r)) {
            Ok(report) => {
                let (json, _) = report.write(&cfg.out)?;
                println!("{}", json.display());
            }
            Err(e) => {
                let err = CliError::from(e);
                eprintln!("{}", CliError { message: format!("attribute `{}`: {}", o.attribute, err.message), ..err.clone() });
                first_err.get_or_insert(err);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn cmd_vip(args: &RunArgs) -> Result<(), CliError> {
    let cfg = resolve_common(&args.common, true, true)?;
    let (manifest, labels) = load_inputs(&cfg)?;
    create_dir(&cfg.out)?;
    for attr in &cfg.attributes {
        for report in run_vip(&manifest, &labels, attr, &cfg.probe, cfg.workers)? {
            let path = cfg.out.join(format!("vip_{attr}_{}.json", report.layer_id));
            write_json(&path, &report)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn cmd_sweep(args: &RunArgs) -> Result<(), CliError> {
    let cfg = resolve_common(&args.common, true, true)?;
    let (manifest, labels) = load_inputs(&cfg)?;
    create_dir(&cfg.out)?;
    for attr in &cfg.attributes {
        let sweeps = run_sweep(&manifest, &labels, attr, &cfg.probe, cfg.workers)?;
        let path = cfg.out.join(format!("sweep_{attr}.json"));
        write_json(&path, &sweeps)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_composite(args: &CompositeArgs) -> Result<(), CliError> {
    let needs_vip = args.neurons.is_empty();
    let cfg = resolve_common(&args.common, needs_vip, needs_vip)?;
    let manifest = Manifest::load(&cfg.manifest)?;
    create_dir(&cfg.out)?;
    let attrs = if cfg.attributes.is_empty() { vec!["neuron".to_string()] } else { cfg.attributes.clone() };
    for attr in &attrs {
        let neurons = if needs_vip {
            let labels = load_labels(cfg.labels.as_ref().expect("labels resolved"))?;
            let reports = run_vip(&manifest, &labels, attr, &cfg.probe, cfg.workers)?;
            reports
                .into_iter()
                .find(|r| r.layer_id == args.layer)
                .ok_or_else(|| CliError::usage("E_USAGE", format!("no layer named `{}`", args.layer)))?
                .top_neurons
        } else {
            args.neurons.clone()
        };
        for path in write_composites(&manifest, &args.layer, &neurons, cfg.probe.composite_n, attr, &cfg.out)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::usage("E_CONFIG", format!("{}: {e}", p.display())))?;
            serde_json::from_str::<SynthSpec>(&text)
                .map_err(|e| CliError::usage("E_CONFIG", format!("{}: {e}", p.display())))?
        }
        None => SynthSpec::standard(args.n_samples, args.snr),
    };
    if args.image_size.is_some() {
        spec.image_size = args.image_size;
    }
    spec.validate().map_err(|e| CliError::usage("E_USAGE", e.to_string()))?;
    let out = synth_generate(&spec, args.seed, &args.out)?;
    println!("{}", out.manifest.display());
    Ok(())
}

fn cmd_merge(args: &MergeArgs) -> Result<(), CliError> {
    let reports = args
        .reports
        .iter()
        .map(ProbeReport::load)
        .collect::<Result<Vec<_>, _>>()?;
    let merged = merge_reports(&reports)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_json(&args.out, &merged)?;
    println!("{}", args.out.display());
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Probe(a) => cmd_probe(a),
        Command::Vip(a) => cmd_vip(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Composite(a) => cmd_composite(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Merge(a) => cmd_merge(a),
    }
}

/// Parses `argv`; help and version requests are returned as `Ok(Err(text))`.
pub fn parse_args<I, T>(argv: I) -> Result<Result<Cli, String>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::error::ErrorKind;
    match Cli::try_parse_from(argv) {
        Ok(cli) => Ok(Ok(cli)),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => Ok(Err(e.to_string())),
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            Err(CliError::usage("E_USAGE", "missing subcommand; run `probelens --help`"))
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            Err(CliError::usage("E_USAGE", first.trim_start_matches("error: ")))
        }
    }
}

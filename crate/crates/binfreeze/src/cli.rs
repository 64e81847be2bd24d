//! Command-line surface: `train`, `eval`, `sweep`, `blockade`, `plot`.
//!
//! Configuration is a flat `key=value` file (UTF-8, `#` comments). Every key
//! has a default; a config file overrides defaults and command-line flags
//! override the file. The fully resolved config is printed at startup and
//! written next to the outputs, and reproduces the run exactly.
//!
//! Exit codes: 0 success, 2 configuration/contract error, 3 data or format
//! error, 4 numerical abort.

use crate::data::{self, DatasetKind, Splits};
use crate::error::{Error, Result};
use crate::masking::ScheduleKind;
use crate::metrics::{self, SweepRow};
use crate::model::{ArchFamily, ArchSpec, Model, Profile, QuantMode};
use crate::plot;
use crate::progression::{blockade_probe, UnitOrdering};
use crate::rng::sweep_seed;
use crate::snapshot::{self, Flavor};
use crate::train::{evaluate, run_training, AugmentSpec, Recipe, TrainSetup};
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const DATA_DIR_ENV: &str = "BINFREEZE_DATA_DIR";

/// Full run configuration. Defaults are the desk-scale recipe: an 8-block
/// width-128 MLP on the synthetic glyphs, cubic schedule, refresh 100,
/// lr 0.1 Nesterov SGD, 40 epochs with a 4-epoch window per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    pub data_dir: Option<PathBuf>,
    /// Seed for generating the synthetic dataset (kept apart from `seed` so
    /// sweeps with derived run seeds still share identical data).
    pub data_seed: u64,
    /// Cap on training samples (0 = all available).
    pub train_limit: usize,
    pub test_limit: usize,
    pub arch: ArchFamily,
    pub depth: usize,
    pub width: usize,
    pub mode: QuantMode,
    pub ordering: UnitOrdering,
    pub schedule: ScheduleKind,
    pub refresh: usize,
    pub epochs_per_unit: usize,
    pub lr: f32,
    pub momentum: f32,
    pub nesterov: bool,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub augment_pad: usize,
    pub flip: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            dataset: DatasetKind::Synth,
            data_dir: None,
            data_seed: 1234,
            train_limit: 3072,
            test_limit: 750,
            arch: ArchFamily::Mlp,
            depth: 8,
            width: 128,
            mode: QuantMode::StomppBnn,
            ordering: UnitOrdering::ForwardLayerwise,
            schedule: ScheduleKind::Cubic,
            refresh: 100,
            epochs_per_unit: 4,
            lr: 0.1,
            momentum: 0.9,
            nesterov: true,
            batch: 192,
            epochs: 40,
            seed: 0,
            augment_pad: 2,
            flip: 0.0,
            out_dir: PathBuf::from("out"),
        }
    }
}

pub const CONFIG_KEYS: [&str; 22] = [
    "dataset",
    "data_dir",
    "data_seed",
    "train_limit",
    "test_limit",
    "arch",
    "depth",
    "width",
    "mode",
    "ordering",
    "schedule",
    "refresh",
    "epochs_per_unit",
    "lr",
    "momentum",
    "nesterov",
    "batch",
    "epochs",
    "seed",
    "augment_pad",
    "flip",
    "out_dir",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("config key {}: cannot parse '{}'", key, value)))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!(
            "config key {}: expected true/false, got '{}'",
            key, value
        ))),
    }
}

impl RunConfig {
    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = DatasetKind::parse(value)?,
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "data_seed" => self.data_seed = parse_num(key, value)?,
            "train_limit" => self.train_limit = parse_num(key, value)?,
            "test_limit" => self.test_limit = parse_num(key, value)?,
            "arch" => self.arch = ArchFamily::parse(value)?,
            "depth" => self.depth = parse_num(key, value)?,
            "width" => self.width = parse_num(key, value)?,
            "mode" => self.mode = QuantMode::parse(value)?,
            "ordering" => self.ordering = UnitOrdering::parse(value)?,
            "schedule" => self.schedule = ScheduleKind::parse(value)?,
            "refresh" => self.refresh = parse_num(key, value)?,
            "epochs_per_unit" => self.epochs_per_unit = parse_num(key, value)?,
            "lr" => self.lr = parse_num(key, value)?,
            "momentum" => self.momentum = parse_num(key, value)?,
            "nesterov" => self.nesterov = parse_bool(key, value)?,
            "batch" => self.batch = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "augment_pad" => self.augment_pad = parse_num(key, value)?,
            "flip" => self.flip = parse_num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => {
                return Err(Error::Config(format!(
                    "unknown config key '{}' (known keys: {})",
                    key,
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses a flat key=value config file body; `#` starts a comment.
    /// Unknown and duplicated keys are rejected.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "config line {}: expected key=value, got '{}'",
                    i + 1,
                    line
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if let Some(k) = CONFIG_KEYS.iter().find(|&&k| k == key) {
                if seen.contains(k) {
                    return Err(Error::Config(format!(
                        "config line {}: duplicate key '{}'",
                        i + 1,
                        key
                    )));
                }
                seen.push(k);
            }
            self.set(key, value)
                .map_err(|e| Error::Config(format!("config line {}: {}", i + 1, e)))?;
        }
        Ok(())
    }

    /// The resolved data root: explicit key, then $BINFREEZE_DATA_DIR, then
    /// the current directory.
    pub fn data_root(&self) -> PathBuf {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// Canonical text form; parsing it back reproduces this config exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dataset={}", self.dataset.name());
        let _ = writeln!(out, "data_dir={}", self.data_root().display());
        let _ = writeln!(out, "data_seed={}", self.data_seed);
        let _ = writeln!(out, "train_limit={}", self.train_limit);
        let _ = writeln!(out, "test_limit={}", self.test_limit);
        let _ = writeln!(out, "arch={}", self.arch.name());
        let _ = writeln!(out, "depth={}", self.depth);
        let _ = writeln!(out, "width={}", self.width);
        let _ = writeln!(out, "mode={}", self.mode.name());
        let _ = writeln!(out, "ordering={}", self.ordering.name());
        let _ = writeln!(out, "schedule={}", self.schedule.name());
        let _ = writeln!(out, "refresh={}", self.refresh);
        let _ = writeln!(out, "epochs_per_unit={}", self.epochs_per_unit);
        let _ = writeln!(out, "lr={}", self.lr);
        let _ = writeln!(out, "momentum={}", self.momentum);
        let _ = writeln!(out, "nesterov={}", self.nesterov);
        let _ = writeln!(out, "batch={}", self.batch);
        let _ = writeln!(out, "epochs={}", self.epochs);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "augment_pad={}", self.augment_pad);
        let _ = writeln!(out, "flip={}", self.flip);
        let _ = writeln!(out, "out_dir={}", self.out_dir.display());
        out
    }

    pub fn arch_spec(&self) -> ArchSpec {
        ArchSpec {
            family: self.arch,
            depth: self.depth,
            width: self.width,
            input: self.dataset.input_dims(),
            classes: 10,
        }
    }

    pub fn train_setup(&self) -> TrainSetup {
        TrainSetup {
            arch: self.arch_spec(),
            mode: self.mode,
            ordering: self.ordering,
            schedule: self.schedule,
            refresh_r: self.refresh,
            epochs_per_unit: self.epochs_per_unit,
            recipe: Recipe {
                lr: self.lr,
                momentum: self.momentum,
                nesterov: self.nesterov,
                batch: self.batch,
                epochs: self.epochs,
                seed: self.seed,
            },
            augment: AugmentSpec {
                pad: self.augment_pad,
                flip_prob: self.flip,
            },
        }
    }

    pub fn load_data(&self) -> Result<Splits> {
        let mut splits = match self.dataset {
            DatasetKind::Synth => {
                if self.train_limit == 0 || self.test_limit == 0 {
                    return Err(Error::Config(
                        "synth dataset needs train_limit and test_limit >= 1".into(),
                    ));
                }
                data::synth_splits(self.train_limit, self.test_limit, self.data_seed)
            }
            DatasetKind::DigitsIdx | DatasetKind::MnistIdx => {
                data::load_mnist(&self.data_root())?
            }
            DatasetKind::CifarBin => data::load_cifar10(&self.data_root())?,
        };
        if self.train_limit > 0 {
            splits.train.truncate(self.train_limit);
        }
        if self.test_limit > 0 {
            splits.test.truncate(self.test_limit);
        }
        Ok(splits)
    }
}

/// Builds a config from defaults, an optional file, then flag overrides.
pub fn resolve_config(file: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {}", path.display(), e))
        })?;
        cfg.apply_file(&text)?;
    }
    for (key, value) in overrides {
        cfg.set(key, value)?;
    }
    Ok(cfg)
}

// ---------------------------------------------------------------- clap

#[derive(Parser, Debug)]
#[command(
    name = "binfreeze",
    about = "Progressive-freezing trainer for binary neural networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// One optional flag per config key; flags override the config file.
#[derive(Args, Debug, Default)]
#[command(rename_all = "snake_case")]
struct Overrides {
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_dir: Option<String>,
    #[arg(long)]
    data_seed: Option<String>,
    #[arg(long)]
    train_limit: Option<String>,
    #[arg(long)]
    test_limit: Option<String>,
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    ordering: Option<String>,
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    refresh: Option<String>,
    #[arg(long)]
    epochs_per_unit: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    momentum: Option<String>,
    #[arg(long)]
    nesterov: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    augment_pad: Option<String>,
    #[arg(long)]
    flip: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(String, String)> {
        let fields: [(&str, &Option<String>); 22] = [
            ("dataset", &self.dataset),
            ("data_dir", &self.data_dir),
            ("data_seed", &self.data_seed),
            ("train_limit", &self.train_limit),
            ("test_limit", &self.test_limit),
            ("arch", &self.arch),
            ("depth", &self.depth),
            ("width", &self.width),
            ("mode", &self.mode),
            ("ordering", &self.ordering),
            ("schedule", &self.schedule),
            ("refresh", &self.refresh),
            ("epochs_per_unit", &self.epochs_per_unit),
            ("lr", &self.lr),
            ("momentum", &self.momentum),
            ("nesterov", &self.nesterov),
            ("batch", &self.batch),
            ("epochs", &self.epochs),
            ("seed", &self.seed),
            ("augment_pad", &self.augment_pad),
            ("flip", &self.flip),
            ("out_dir", &self.out_dir),
        ];
        fields
            .iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Train a model and write metrics, snapshot, and resolved config.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        ov: Overrides,
    },
    /// Evaluate a snapshot on the configured dataset's test split.
    Eval {
        /// Snapshot file to load.
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        ov: Overrides,
    },
    /// Run one config across an axis of values with derived seeds.
    Sweep {
        /// Axis to vary: schedule, refresh, lr, epochs, or ordering.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long)]
        values: String,
        /// Independent repetitions per value (seeds derive from both).
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        ov: Overrides,
    },
    /// Report the zero-gradient fraction per unit over a freeze timeline.
    Blockade {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        ov: Overrides,
    },
    /// Render SVG plots from metrics or sweep CSV files.
    Plot {
        /// curves (one SVG per metrics CSV) or sweep-heat (one grid SVG).
        #[arg(long)]
        kind: String,
        /// Output directory for the SVG files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Input CSV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

/// Parses the command line, dispatches, and maps errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Train { config, ov } => resolve_config(config.as_deref(), &ov.pairs())
            .and_then(|cfg| cmd_train(&cfg, true).map(|_| ())),
        Cmd::Eval {
            snapshot,
            config,
            ov,
        } => resolve_config(config.as_deref(), &ov.pairs())
            .and_then(|cfg| cmd_eval(&cfg, &snapshot)),
        Cmd::Sweep {
            axis,
            values,
            reps,
            config,
            ov,
        } => resolve_config(config.as_deref(), &ov.pairs())
            .and_then(|cfg| cmd_sweep(&cfg, &axis, &values, reps)),
        Cmd::Blockade { config, ov } => resolve_config(config.as_deref(), &ov.pairs())
            .and_then(|cfg| cmd_blockade(&cfg)),
        Cmd::Plot { kind, out, inputs } => cmd_plot(&kind, &out, &inputs),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    }
}

/// Trains per config; writes resolved.cfg, metrics.csv, timings.csv, and a
/// deploy snapshot.bnfz into the output directory. Returns the final row.
pub fn cmd_train(cfg: &RunConfig, verbose: bool) -> Result<crate::metrics::MetricsRow> {
    if verbose {
        println!("config precedence: defaults < file < flags");
        print!("{}", cfg.to_text());
    }
    let data = cfg.load_data()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("resolved.cfg"), cfg.to_text())?;
    let setup = cfg.train_setup();
    let outcome = run_training(&setup, &data)?;
    std::fs::write(
        cfg.out_dir.join("metrics.csv"),
        metrics::write_metrics_csv(&outcome.rows),
    )?;
    std::fs::write(
        cfg.out_dir.join("timings.csv"),
        metrics::write_timings_csv(&outcome.timings),
    )?;
    snapshot::save(&cfg.out_dir.join("snapshot.bnfz"), &outcome.model, Flavor::Deploy)?;
    let last = outcome.rows.last().expect("epochs >= 1").clone();
    println!(
        "run complete: epoch {} train_loss {:.4} proxy_test {:.4} deploy_test {:.4} -> {}",
        last.epoch,
        last.train_loss,
        last.proxy_test,
        last.deploy_test,
        cfg.out_dir.display()
    );
    Ok(last)
}

fn cmd_eval(cfg: &RunConfig, snapshot_path: &Path) -> Result<()> {
    let (mut model, flavor) = snapshot::load(snapshot_path)?;
    let data = cfg.load_data()?;
    let dims = cfg.dataset.input_dims();
    if model.arch.input != dims {
        return Err(Error::Config(format!(
            "snapshot expects input {:?} but dataset {} provides {:?}",
            model.arch.input,
            cfg.dataset.name(),
            dims
        )));
    }
    let proxy = evaluate(&mut model, &data.test, &data.stats, cfg.batch, Profile::EvalProxy)?;
    let deploy = evaluate(&mut model, &data.test, &data.stats, cfg.batch, Profile::Deploy)?;
    println!(
        "snapshot {} ({:?}): proxy_test {:.4} deploy_test {:.4} over {} samples",
        snapshot_path.display(),
        flavor,
        proxy,
        deploy,
        data.test.len()
    );
    Ok(())
}

const SWEEP_AXES: [&str; 5] = ["schedule", "refresh", "lr", "epochs", "ordering"];

/// Validates one axis value by parsing it as the target key would.
fn check_axis_value(axis: &str, value: &str) -> Result<()> {
    let mut probe = RunConfig::default();
    probe.set(axis, value)
}

fn cmd_sweep(base: &RunConfig, axis: &str, values: &str, reps: u64) -> Result<()> {
    if !SWEEP_AXES.contains(&axis) {
        return Err(Error::Config(format!(
            "unknown sweep axis '{}' (expected one of {})",
            axis,
            SWEEP_AXES.join(", ")
        )));
    }
    let values: Vec<&str> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if reps == 0 {
        return Err(Error::Config("sweep needs reps >= 1".into()));
    }
    // reject every invalid value before any run starts
    let bad: Vec<String> = values
        .iter()
        .filter_map(|v| check_axis_value(axis, v).err().map(|e| format!("{}: {}", v, e)))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Config(format!(
            "invalid sweep values rejected before running: {}",
            bad.join("; ")
        )));
    }

    std::fs::create_dir_all(&base.out_dir)?;
    let mut summary = Vec::new();
    for value in &values {
        for rep in 0..reps {
            let mut cfg = base.clone();
            cfg.set(axis, value)?;
            cfg.seed = sweep_seed(base.seed.wrapping_add(rep), value);
            cfg.out_dir = base
                .out_dir
                .join(format!("{}_{}_s{}", axis, value.replace('.', "p"), cfg.seed));
            println!(
                "sweep {}={} rep {} seed {} -> {}",
                axis,
                value,
                rep,
                cfg.seed,
                cfg.out_dir.display()
            );
            let last = cmd_train(&cfg, false)?;
            summary.push(SweepRow {
                axis: axis.to_string(),
                value: value.to_string(),
                seed: cfg.seed,
                proxy_test: last.proxy_test,
                deploy_test: last.deploy_test,
            });
        }
    }
    let path = base.out_dir.join("summary.csv");
    std::fs::write(&path, metrics::write_sweep_csv(&summary))?;
    println!("sweep summary -> {}", path.display());
    Ok(())
}

pub const BLOCKADE_HEADER: &str = "stage,unit,zero_grad,total,fraction";

/// For each stage of the configured ordering (stage s = the first s units of
/// the freeze order fully committed), runs the zero-gradient probe on one
/// normalized training batch and emits a CSV table.
fn cmd_blockade(cfg: &RunConfig) -> Result<()> {
    let data = cfg.load_data()?;
    let n = data.train.len().clamp(2, 64);
    let idx: Vec<usize> = (0..n).collect();
    let (mut images, labels) = data::gather(&data.train, &idx);
    data::normalize(&mut images, &data.stats);

    let mut model = Model::build(cfg.arch_spec(), cfg.mode, cfg.seed)?;
    let units = model.scheduled_units();
    if !model.has_masks() {
        return Err(Error::Config(format!(
            "mode {} has no freeze masks to probe",
            cfg.mode.name()
        )));
    }
    let stages: Vec<usize> = match cfg.ordering {
        UnitOrdering::Global => vec![0, units],
        _ => (0..=units).collect(),
    };
    let mut out = String::from(BLOCKADE_HEADER);
    out.push('\n');
    for &s in &stages {
        for (i, b) in model.blocks.iter_mut().enumerate() {
            let pos = match cfg.ordering {
                UnitOrdering::ForwardLayerwise => i,
                UnitOrdering::ReverseLayerwise => units - 1 - i,
                UnitOrdering::Global => 0,
            };
            let committed = match cfg.ordering {
                UnitOrdering::Global => s == units,
                _ => pos < s,
            };
            if let Some(m) = &mut b.w_mask {
                m.set_all(committed);
            }
            if let Some(m) = &mut b.a_mask {
                m.set_all(committed);
            }
        }
        let report = blockade_probe(&model, &images, &labels)?;
        for u in &report.per_unit {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6}",
                s,
                u.unit,
                u.zero_grad,
                u.total,
                u.fraction()
            );
        }
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("blockade.csv");
    std::fs::write(&path, &out)?;
    print!("{}", out);
    println!("blockade table -> {}", path.display());
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".to_string())
}

fn cmd_plot(kind: &str, out: &Path, inputs: &[PathBuf]) -> Result<()> {
    match kind {
        "curves" => {
            std::fs::create_dir_all(out)?;
            for input in inputs {
                let text = std::fs::read_to_string(input).map_err(|e| {
                    Error::Format(format!("cannot read {}: {}", input.display(), e))
                })?;
                let rows = metrics::read_metrics_csv(&text)?;
                let svg = plot::render_curves(&rows, &stem(input))?;
                let target = out.join(format!("{}.svg", stem(input)));
                std::fs::write(&target, svg)?;
                println!("{} -> {}", input.display(), target.display());
            }
            Ok(())
        }
        "sweep-heat" => {
            let mut grids = Vec::new();
            for input in inputs {
                let text = std::fs::read_to_string(input).map_err(|e| {
                    Error::Format(format!("cannot read {}: {}", input.display(), e))
                })?;
                grids.push((stem(input), metrics::read_sweep_csv(&text)?));
            }
            let svg = plot::render_heat(&grids)?;
            std::fs::create_dir_all(out)?;
            let target = out.join("sweep_heat.svg");
            std::fs::write(&target, svg)?;
            println!("sweep heat -> {}", target.display());
            Ok(())
        }
        _ => Err(Error::Config(format!(
            "unknown plot kind '{}' (expected curves or sweep-heat)",
            kind
        ))),
    }
}

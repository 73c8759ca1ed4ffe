//! `dmm` — batch front end: generate data, train, evaluate, run the
//! variant grid, compare weighting schemes, and emit curve files.
//!
//! Every run writes all artifacts under one output directory (`--out`, or
//! the `DMM_OUT` environment variable as the default root) including a
//! `manifest.txt` with the fully resolved configuration; re-running the same
//! command with `--config <manifest>` reproduces the artifacts byte for
//! byte. Exit codes: 0 success, 2 usage or configuration error, 1 runtime
//! failure, with a single-line `error: ...` message on stderr.

mod config;
mod curves;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dmm_core::checkpoint::{load_checkpoint, save_checkpoint, DecisionState};
use dmm_core::data::{generate_synthetic, load_dataset, save_dataset, SynthConfig};
use dmm_core::eval::{compare_schemes, evaluate};
use dmm_core::logging::{
    write_eval_report, write_loss_curve, write_lr_events, write_scheduler_trace,
    write_scheme_comparison,
};
use dmm_core::network::{AttributeGroup, BackboneConfig, HeadConfig, NetworkConfig};
use dmm_core::trainer::{
    ablation_variants, run_ablation_suite, run_training, PlateauMetric, TrainConfig,
    ValidationSource,
};

use config::{write_manifest, Settings};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

#[derive(Parser)]
#[command(name = "dmm", version, about = "Multi-task multi-label training engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Output directory; falls back to $DMM_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value config file; its entries override flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset directory produced by gen-data.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<u64>,
    #[arg(long)]
    update_interval: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    base_lr: Option<f64>,
    #[arg(long)]
    lr_decay_factor: Option<f64>,
    #[arg(long)]
    plateau_patience: Option<u32>,
    /// joint | mean-fac
    #[arg(long)]
    plateau_metric: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    use_fld: Option<bool>,
    #[arg(long)]
    use_dynamic_weights: Option<bool>,
    #[arg(long)]
    use_adaptive_threshold: Option<bool>,
    #[arg(long)]
    use_grouping: Option<bool>,
    /// val | train
    #[arg(long)]
    validation_source: Option<String>,
    /// Positive number, or "none" to disable the weight cap.
    #[arg(long)]
    lambda_cap: Option<String>,
    #[arg(long)]
    freeze_backbone: Option<bool>,
    /// Backbone block output channels, e.g. 8,16,32.
    #[arg(long)]
    backbone_channels: Option<String>,
    #[arg(long)]
    conv_kernel: Option<usize>,
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    objective_hidden: Option<usize>,
    #[arg(long)]
    subjective_hidden1: Option<usize>,
    #[arg(long)]
    subjective_hidden2: Option<usize>,
    #[arg(long)]
    fld_hidden: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    GenData {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        num_train: Option<usize>,
        #[arg(long)]
        num_val: Option<usize>,
        #[arg(long)]
        num_test: Option<usize>,
        #[arg(long)]
        image_size: Option<usize>,
        #[arg(long)]
        landmarks: Option<usize>,
        /// Comma-separated attribute names.
        #[arg(long)]
        attribute_names: Option<String>,
        /// Comma-separated group tags (objective|subjective), one per attribute.
        #[arg(long)]
        attribute_groups: Option<String>,
        /// Comma-separated per-attribute positive rates in (0, 1).
        #[arg(long)]
        positive_rates: Option<String>,
        /// Comma-separated per-attribute difficulties >= 0.
        #[arg(long)]
        difficulties: Option<String>,
    },
    /// Train a model and write checkpoint + log CSV files.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Evaluate a checkpoint on a dataset split.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// train | val | test
        #[arg(long)]
        split: Option<String>,
        /// Evaluate at this fixed threshold instead of the checkpoint's.
        #[arg(long)]
        fixed_tau: Option<f64>,
    },
    /// Train and evaluate the seven-variant grid.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Train the weighting schemes across seeds and tabulate accuracy.
    CompareSchemes {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Comma-separated seeds, e.g. 0,1,2,3,4.
        #[arg(long)]
        seeds: Option<String>,
        /// Comma-separated scheme names from {uniform, dynamic}.
        #[arg(long)]
        schemes: Option<String>,
    },
    /// Emit per-quantity curve CSV/SVG files from a scheduler trace.
    PlotCurves {
        #[command(flatten)]
        common: CommonArgs,
        /// Path to a trace.csv written by train.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenData {
            common,
            seed,
            num_train,
            num_val,
            num_test,
            image_size,
            landmarks,
            attribute_names,
            attribute_groups,
            positive_rates,
            difficulties,
        } => {
            let mut settings = Settings::default();
            settings.set_opt("seed", seed);
            settings.set_opt("num-train", num_train);
            settings.set_opt("num-val", num_val);
            settings.set_opt("num-test", num_test);
            settings.set_opt("image-size", image_size);
            settings.set_opt("landmarks", landmarks);
            settings.set_opt("attribute-names", attribute_names);
            settings.set_opt("attribute-groups", attribute_groups);
            settings.set_opt("positive-rates", positive_rates);
            settings.set_opt("difficulties", difficulties);
            if let Some(path) = &common.config {
                settings.apply_file(path, GEN_KEYS)?;
            }
            cmd_gen_data(&settings, &resolve_out(&common)?)
        }
        Command::Train { common, train } => {
            let settings = train_settings(&train, &common, TRAIN_KEYS)?;
            cmd_train(&settings, &resolve_out(&common)?)
        }
        Command::Eval {
            common,
            checkpoint,
            data,
            split,
            fixed_tau,
        } => {
            let mut settings = Settings::default();
            settings.set_opt("checkpoint", checkpoint.map(display_path));
            settings.set_opt("data", data.map(display_path));
            settings.set_opt("split", split);
            settings.set_opt("fixed-tau", fixed_tau);
            if let Some(path) = &common.config {
                settings.apply_file(path, EVAL_KEYS)?;
            }
            cmd_eval(&settings, &resolve_out(&common)?)
        }
        Command::Ablate { common, train } => {
            let settings = train_settings(&train, &common, TRAIN_KEYS)?;
            cmd_ablate(&settings, &resolve_out(&common)?)
        }
        Command::CompareSchemes {
            common,
            train,
            seeds,
            schemes,
        } => {
            let mut settings = train_settings_no_file(&train);
            settings.set_opt("seeds", seeds);
            settings.set_opt("schemes", schemes);
            if let Some(path) = &common.config {
                settings.apply_file(path, COMPARE_KEYS)?;
            }
            cmd_compare(&settings, &resolve_out(&common)?)
        }
        Command::PlotCurves { common, trace } => {
            let mut settings = Settings::default();
            settings.set_opt("trace", trace.map(display_path));
            if let Some(path) = &common.config {
                settings.apply_file(path, PLOT_KEYS)?;
            }
            cmd_plot(&settings, &resolve_out(&common)?)
        }
    }
}

fn display_path(p: PathBuf) -> String {
    p.display().to_string()
}

fn resolve_out(common: &CommonArgs) -> Result<PathBuf, CliError> {
    let out = match &common.out {
        Some(path) => path.clone(),
        None => match std::env::var_os("DMM_OUT") {
            Some(root) => PathBuf::from(root),
            None => return Err(CliError::usage("missing --out (or set DMM_OUT)")),
        },
    };
    fs::create_dir_all(&out)
        .map_err(|e| CliError::runtime(format!("create {}: {e}", out.display())))?;
    Ok(out)
}

const GEN_KEYS: &[&str] = &[
    "seed",
    "num-train",
    "num-val",
    "num-test",
    "image-size",
    "landmarks",
    "attribute-names",
    "attribute-groups",
    "positive-rates",
    "difficulties",
];

const TRAIN_KEYS: &[&str] = &[
    "data",
    "seed",
    "max-iterations",
    "update-interval",
    "batch-size",
    "base-lr",
    "lr-decay-factor",
    "plateau-patience",
    "plateau-metric",
    "beta",
    "gamma",
    "momentum",
    "use-fld",
    "use-dynamic-weights",
    "use-adaptive-threshold",
    "use-grouping",
    "validation-source",
    "lambda-cap",
    "freeze-backbone",
    "backbone-channels",
    "conv-kernel",
    "pool-size",
    "objective-hidden",
    "subjective-hidden1",
    "subjective-hidden2",
    "fld-hidden",
];

const EVAL_KEYS: &[&str] = &["checkpoint", "data", "split", "fixed-tau"];

const COMPARE_KEYS: &[&str] = &[
    "data",
    "seed",
    "max-iterations",
    "update-interval",
    "batch-size",
    "base-lr",
    "lr-decay-factor",
    "plateau-patience",
    "plateau-metric",
    "beta",
    "gamma",
    "momentum",
    "use-fld",
    "use-dynamic-weights",
    "use-adaptive-threshold",
    "use-grouping",
    "validation-source",
    "lambda-cap",
    "freeze-backbone",
    "backbone-channels",
    "conv-kernel",
    "pool-size",
    "objective-hidden",
    "subjective-hidden1",
    "subjective-hidden2",
    "fld-hidden",
    "seeds",
    "schemes",
];

const PLOT_KEYS: &[&str] = &["trace"];

fn train_settings_no_file(args: &TrainArgs) -> Settings {
    let mut s = Settings::default();
    s.set_opt("data", args.data.clone().map(display_path));
    s.set_opt("seed", args.seed);
    s.set_opt("max-iterations", args.max_iterations);
    s.set_opt("update-interval", args.update_interval);
    s.set_opt("batch-size", args.batch_size);
    s.set_opt("base-lr", args.base_lr);
    s.set_opt("lr-decay-factor", args.lr_decay_factor);
    s.set_opt("plateau-patience", args.plateau_patience);
    s.set_opt("plateau-metric", args.plateau_metric.clone());
    s.set_opt("beta", args.beta);
    s.set_opt("gamma", args.gamma);
    s.set_opt("momentum", args.momentum);
    s.set_opt("use-fld", args.use_fld);
    s.set_opt("use-dynamic-weights", args.use_dynamic_weights);
    s.set_opt("use-adaptive-threshold", args.use_adaptive_threshold);
    s.set_opt("use-grouping", args.use_grouping);
    s.set_opt("validation-source", args.validation_source.clone());
    s.set_opt("lambda-cap", args.lambda_cap.clone());
    s.set_opt("freeze-backbone", args.freeze_backbone);
    s.set_opt("backbone-channels", args.backbone_channels.clone());
    s.set_opt("conv-kernel", args.conv_kernel);
    s.set_opt("pool-size", args.pool_size);
    s.set_opt("objective-hidden", args.objective_hidden);
    s.set_opt("subjective-hidden1", args.subjective_hidden1);
    s.set_opt("subjective-hidden2", args.subjective_hidden2);
    s.set_opt("fld-hidden", args.fld_hidden);
    s
}

fn train_settings(
    args: &TrainArgs,
    common: &CommonArgs,
    known: &[&str],
) -> Result<Settings, CliError> {
    let mut settings = train_settings_no_file(args);
    if let Some(path) = &common.config {
        settings.apply_file(path, known)?;
    }
    Ok(settings)
}

fn resolve_synth(settings: &Settings) -> Result<SynthConfig, CliError> {
    let defaults = SynthConfig::default();
    let names: Vec<String> = settings
        .parse_list("attribute-names")?
        .unwrap_or(defaults.names);
    let groups = match settings.get("attribute-groups") {
        None if names.len() == defaults.groups.len() => defaults.groups,
        None => {
            return Err(CliError::usage(
                "attribute-groups is required when attribute-names changes the attribute count",
            ))
        }
        Some(raw) => raw
            .split(',')
            .map(|tok| match tok.trim() {
                "objective" => Ok(AttributeGroup::Objective),
                "subjective" => Ok(AttributeGroup::Subjective),
                other => Err(CliError::usage(format!("bad group tag {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    let positive_rates = settings
        .parse_list("positive-rates")?
        .unwrap_or(defaults.positive_rates);
    let difficulties = settings
        .parse_list("difficulties")?
        .unwrap_or(defaults.difficulties);
    Ok(SynthConfig {
        names,
        groups,
        positive_rates,
        difficulties,
        image_size: settings.parse_or("image-size", defaults.image_size)?,
        landmark_count: settings.parse_or("landmarks", defaults.landmark_count)?,
        train: settings.parse_or("num-train", defaults.train)?,
        val: settings.parse_or("num-val", defaults.val)?,
        test: settings.parse_or("num-test", defaults.test)?,
        seed: settings.parse_or("seed", defaults.seed)?,
    })
}

fn dump_synth(config: &SynthConfig) -> Settings {
    let mut s = Settings::default();
    s.set("seed", config.seed);
    s.set("num-train", config.train);
    s.set("num-val", config.val);
    s.set("num-test", config.test);
    s.set("image-size", config.image_size);
    s.set("landmarks", config.landmark_count);
    s.set("attribute-names", config.names.join(","));
    s.set(
        "attribute-groups",
        config
            .groups
            .iter()
            .map(|g| match g {
                AttributeGroup::Objective => "objective",
                AttributeGroup::Subjective => "subjective",
            })
            .collect::<Vec<_>>()
            .join(","),
    );
    s.set("positive-rates", join_floats(&config.positive_rates));
    s.set("difficulties", join_floats(&config.difficulties));
    s
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn resolve_train(settings: &Settings) -> Result<(TrainConfig, NetworkConfig, String), CliError> {
    let data = settings.require("data")?.to_string();
    let defaults = TrainConfig::default();
    let plateau_metric = match settings.get("plateau-metric") {
        None | Some("joint") => PlateauMetric::JointLoss,
        Some("mean-fac") => PlateauMetric::MeanFacLoss,
        Some(other) => {
            return Err(CliError::usage(format!(
                "plateau-metric must be joint or mean-fac, got {other:?}"
            )))
        }
    };
    let validation_source = match settings.get("validation-source") {
        None | Some("val") => ValidationSource::ValSplit,
        Some("train") => ValidationSource::TrainSplit,
        Some(other) => {
            return Err(CliError::usage(format!(
                "validation-source must be val or train, got {other:?}"
            )))
        }
    };
    let lambda_cap = match settings.get("lambda-cap") {
        None | Some("none") => None,
        Some(raw) => Some(
            raw.parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad lambda-cap {raw:?}")))?,
        ),
    };
    let config = TrainConfig {
        max_iterations: settings.parse_or("max-iterations", defaults.max_iterations)?,
        update_interval: settings.parse_or("update-interval", defaults.update_interval)?,
        batch_size: settings.parse_or("batch-size", defaults.batch_size)?,
        base_lr: settings.parse_or("base-lr", defaults.base_lr)?,
        lr_decay_factor: settings.parse_or("lr-decay-factor", defaults.lr_decay_factor)?,
        plateau_patience: settings.parse_or("plateau-patience", defaults.plateau_patience)?,
        plateau_metric,
        beta: settings.parse_or("beta", defaults.beta)?,
        gamma: settings.parse_or("gamma", defaults.gamma)?,
        momentum: settings.parse_or("momentum", defaults.momentum)?,
        seed: settings.parse_or("seed", defaults.seed)?,
        use_fld: settings.parse_bool_or("use-fld", defaults.use_fld)?,
        use_dynamic_weights: settings
            .parse_bool_or("use-dynamic-weights", defaults.use_dynamic_weights)?,
        use_adaptive_threshold: settings
            .parse_bool_or("use-adaptive-threshold", defaults.use_adaptive_threshold)?,
        use_grouping: settings.parse_bool_or("use-grouping", defaults.use_grouping)?,
        validation_source,
        lambda_cap,
        freeze_backbone: settings.parse_bool_or("freeze-backbone", defaults.freeze_backbone)?,
    };

    let net_defaults = NetworkConfig::default();
    let desk_heads = HeadConfig::desk_scale();
    let net_config = NetworkConfig {
        backbone: BackboneConfig {
            in_channels: net_defaults.backbone.in_channels,
            block_channels: settings
                .parse_list("backbone-channels")?
                .unwrap_or(net_defaults.backbone.block_channels),
            conv_kernel: settings.parse_or("conv-kernel", net_defaults.backbone.conv_kernel)?,
            pool_size: settings.parse_or("pool-size", net_defaults.backbone.pool_size)?,
        },
        heads: HeadConfig {
            objective_hidden: settings
                .parse_or("objective-hidden", desk_heads.objective_hidden)?,
            subjective_hidden: (
                settings.parse_or("subjective-hidden1", desk_heads.subjective_hidden.0)?,
                settings.parse_or("subjective-hidden2", desk_heads.subjective_hidden.1)?,
            ),
            fld_hidden: settings.parse_or("fld-hidden", desk_heads.fld_hidden)?,
        },
        grouped: config.use_grouping,
    };
    Ok((config, net_config, data))
}

fn dump_train(config: &TrainConfig, net: &NetworkConfig, data: &str) -> Settings {
    let mut s = Settings::default();
    s.set("data", data);
    s.set("seed", config.seed);
    s.set("max-iterations", config.max_iterations);
    s.set("update-interval", config.update_interval);
    s.set("batch-size", config.batch_size);
    s.set("base-lr", config.base_lr);
    s.set("lr-decay-factor", config.lr_decay_factor);
    s.set("plateau-patience", config.plateau_patience);
    s.set(
        "plateau-metric",
        match config.plateau_metric {
            PlateauMetric::JointLoss => "joint",
            PlateauMetric::MeanFacLoss => "mean-fac",
        },
    );
    s.set("beta", config.beta);
    s.set("gamma", config.gamma);
    s.set("momentum", config.momentum);
    s.set("use-fld", config.use_fld);
    s.set("use-dynamic-weights", config.use_dynamic_weights);
    s.set("use-adaptive-threshold", config.use_adaptive_threshold);
    s.set("use-grouping", config.use_grouping);
    s.set(
        "validation-source",
        match config.validation_source {
            ValidationSource::ValSplit => "val",
            ValidationSource::TrainSplit => "train",
        },
    );
    s.set(
        "lambda-cap",
        config
            .lambda_cap
            .map(|v| v.to_string())
            .unwrap_or_else(|| "none".to_string()),
    );
    s.set("freeze-backbone", config.freeze_backbone);
    s.set(
        "backbone-channels",
        net.backbone
            .block_channels
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    s.set("conv-kernel", net.backbone.conv_kernel);
    s.set("pool-size", net.backbone.pool_size);
    s.set("objective-hidden", net.heads.objective_hidden);
    s.set("subjective-hidden1", net.heads.subjective_hidden.0);
    s.set("subjective-hidden2", net.heads.subjective_hidden.1);
    s.set("fld-hidden", net.heads.fld_hidden);
    s
}

fn cmd_gen_data(settings: &Settings, out: &Path) -> Result<(), CliError> {
    let config = resolve_synth(settings)?;
    let data = generate_synthetic(&config).map_err(|e| CliError::usage(e.to_string()))?;
    save_dataset(out, &data).map_err(|e| CliError::runtime(e.to_string()))?;
    write_manifest(
        out,
        "gen-data",
        &dump_synth(&config),
        &[
            ("groups", "attribute_groups.txt"),
            ("train", "train"),
            ("val", "val"),
            ("test", "test"),
        ],
    )?;
    println!(
        "generated {} train / {} val / {} test samples in {}",
        config.train,
        config.val,
        config.test,
        out.display()
    );
    Ok(())
}

fn cmd_train(settings: &Settings, out: &Path) -> Result<(), CliError> {
    let (config, net_config, data_path) = resolve_train(settings)?;
    let data = load_dataset(Path::new(&data_path)).map_err(|e| CliError::usage(e.to_string()))?;
    let model = run_training(&data, &config, &net_config)
        .map_err(|e| CliError::runtime(e.to_string()))?;

    let ckpt = out.join("checkpoint.bin");
    save_checkpoint(
        &ckpt,
        &model.network,
        &DecisionState::from_scheduler(&model.scheduler),
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;
    write_scheduler_trace(&out.join("trace.csv"), &model.log)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write_loss_curve(&out.join("loss.csv"), &model.log.loss_curve)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write_lr_events(&out.join("lr_events.csv"), &model.log.lr_events)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write_manifest(
        out,
        "train",
        &dump_train(&config, &net_config, &data_path),
        &[
            ("checkpoint", "checkpoint.bin"),
            ("trace", "trace.csv"),
            ("loss", "loss.csv"),
            ("lr-events", "lr_events.csv"),
        ],
    )?;
    println!(
        "trained {} iterations ({} scheduler passes); checkpoint at {}",
        config.max_iterations,
        model.log.scheduler_updates.len(),
        ckpt.display()
    );
    Ok(())
}

fn cmd_eval(settings: &Settings, out: &Path) -> Result<(), CliError> {
    let ckpt_path = settings.require("checkpoint")?.to_string();
    let data_path = settings.require("data")?.to_string();
    let split = settings.get("split").unwrap_or("test").to_string();

    let (net, decision) =
        load_checkpoint(Path::new(&ckpt_path)).map_err(|e| CliError::usage(e.to_string()))?;
    let data = load_dataset(Path::new(&data_path)).map_err(|e| CliError::usage(e.to_string()))?;
    if net.spec() != &data.spec {
        return Err(CliError::usage(
            "checkpoint attributes do not match the dataset".to_string(),
        ));
    }
    let samples = match split.as_str() {
        "train" => &data.train,
        "val" => &data.val,
        "test" => &data.test,
        other => {
            return Err(CliError::usage(format!(
                "split must be train, val or test, got {other:?}"
            )))
        }
    };
    let tau: Vec<f64> = match settings.parse::<f64>("fixed-tau")? {
        Some(v) => vec![v; data.spec.len()],
        None => decision.tau.clone(),
    };
    let report = evaluate(&net, samples, &tau).map_err(|e| CliError::runtime(e.to_string()))?;
    write_eval_report(&out.join("eval.csv"), &report)
        .map_err(|e| CliError::runtime(e.to_string()))?;

    let mut manifest = Settings::default();
    manifest.set("checkpoint", &ckpt_path);
    manifest.set("data", &data_path);
    manifest.set("split", &split);
    if let Some(v) = settings.get("fixed-tau") {
        manifest.set("fixed-tau", v);
    }
    write_manifest(out, "eval", &manifest, &[("report", "eval.csv")])?;
    println!("mean accuracy {:.4} on {} ({} samples)", report.mean_accuracy, split, samples.len());
    Ok(())
}

fn cmd_ablate(settings: &Settings, out: &Path) -> Result<(), CliError> {
    let (config, net_config, data_path) = resolve_train(settings)?;
    let data = load_dataset(Path::new(&data_path)).map_err(|e| CliError::usage(e.to_string()))?;
    let rows = run_ablation_suite(&data, &config, &net_config)
        .map_err(|e| CliError::runtime(e.to_string()))?;

    // flag matrix of the seven variants
    let mut matrix = String::from("variant,fld,dw,at,ag\n");
    for v in ablation_variants() {
        let _ = writeln!(
            matrix,
            "{},{},{},{},{}",
            v.name,
            v.use_fld as u8,
            v.use_dynamic_weights as u8,
            v.use_adaptive_threshold as u8,
            v.use_grouping as u8
        );
    }
    fs::write(out.join("variants.csv"), matrix)
        .map_err(|e| CliError::runtime(format!("write variants.csv: {e}")))?;

    let mut table = String::from("variant,attribute,accuracy\n");
    for row in &rows {
        for (name, acc) in data.spec.names().iter().zip(&row.per_attribute_accuracy) {
            let _ = writeln!(table, "{},{},{}", row.variant, name, acc);
        }
        let _ = writeln!(table, "{},mean,{}", row.variant, row.mean_accuracy);
    }
    fs::write(out.join("ablation.csv"), table)
        .map_err(|e| CliError::runtime(format!("write ablation.csv: {e}")))?;

    write_manifest(
        out,
        "ablate",
        &dump_train(&config, &net_config, &data_path),
        &[("variants", "variants.csv"), ("table", "ablation.csv")],
    )?;
    for row in &rows {
        println!("{:<12} mean accuracy {:.4}", row.variant, row.mean_accuracy);
    }
    Ok(())
}

fn cmd_compare(settings: &Settings, out: &Path) -> Result<(), CliError> {
    let (config, net_config, data_path) = resolve_train(settings)?;
    let data = load_dataset(Path::new(&data_path)).map_err(|e| CliError::usage(e.to_string()))?;
    let seeds: Vec<u64> = settings
        .parse_list("seeds")?
        .unwrap_or_else(|| vec![0, 1, 2, 3, 4]);
    let scheme_names: Vec<String> = settings
        .parse_list("schemes")?
        .unwrap_or_else(|| vec!["uniform".to_string(), "dynamic".to_string()]);
    let schemes: Vec<(String, TrainConfig)> = scheme_names
        .iter()
        .map(|name| match name.as_str() {
            "uniform" => Ok((
                name.clone(),
                TrainConfig {
                    use_dynamic_weights: false,
                    ..config.clone()
                },
            )),
            "dynamic" => Ok((
                name.clone(),
                TrainConfig {
                    use_dynamic_weights: true,
                    ..config.clone()
                },
            )),
            other => Err(CliError::usage(format!(
                "scheme must be uniform or dynamic, got {other:?}"
            ))),
        })
        .collect::<Result<_, _>>()?;

    let rows = compare_schemes(&data, &schemes, &net_config, &seeds)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write_scheme_comparison(&out.join("comparison.csv"), &rows)
        .map_err(|e| CliError::runtime(e.to_string()))?;

    let mut manifest = dump_train(&config, &net_config, &data_path);
    manifest.set(
        "seeds",
        seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
    );
    manifest.set("schemes", scheme_names.join(","));
    write_manifest(out, "compare-schemes", &manifest, &[("table", "comparison.csv")])?;
    for row in &rows {
        println!("{:<10} seed {:<3} mean accuracy {:.4}", row.scheme, row.seed, row.mean_accuracy);
    }
    Ok(())
}

fn cmd_plot(settings: &Settings, out: &Path) -> Result<(), CliError> {
    let trace = settings.require("trace")?.to_string();
    if !Path::new(&trace).exists() {
        return Err(CliError::usage(format!("trace file {trace:?} does not exist")));
    }
    let written = curves::plot_curves(Path::new(&trace), out)?;
    let mut manifest = Settings::default();
    manifest.set("trace", &trace);
    let artifact_pairs: Vec<(&str, &str)> = written.iter().map(|w| ("curve", w.as_str())).collect();
    write_manifest(out, "plot-curves", &manifest, &artifact_pairs)?;
    println!("wrote {} curve files to {}", written.len(), out.display());
    Ok(())
}
